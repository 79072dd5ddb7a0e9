//! Speckle amplitude models and goodness-of-fit measures.

pub mod bessel;
mod gof;
mod nakagami;
pub mod optimize;
mod riig;

pub use gof::{
    kl_divergence, kl_divergence_grid, ks_statistic, ks_statistic_sorted, pp_slope, pp_transform,
    Histogram, KlMode, KL_BINS,
};
pub use nakagami::{
    fit_nakagami, nakagami_cdf, nakagami_pdf, nakagami_sample, NakagamiParams, MIN_SHAPE,
};
pub(crate) use riig::moment_delta;
pub use riig::{
    fit_riig, fit_riig_detailed, riig_cdf, riig_cdf_sorted, riig_ln_pdf, riig_log_likelihood,
    riig_moment_estimate, riig_pdf, riig_sample, RiIGFit, RiIGParams, ALPHA_BOUNDS, BETA_FRACTION,
    DELTA_BOUNDS, MIN_FIT_SAMPLES,
};
