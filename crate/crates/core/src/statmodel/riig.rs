//! Rician inverse Gaussian (RiIG) amplitude model.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bessel::{k0_scaled, ln_i0, ln_k3_2};
use super::optimize::{nelder_mead, NelderMeadOptions};
use crate::error::{Error, Result};

pub const ALPHA_BOUNDS: (f64, f64) = (1e-3, 1e3);
pub const DELTA_BOUNDS: (f64, f64) = (1e-3, 1e3);
/// |beta| is kept at or below this fraction of alpha during fitting.
pub const BETA_FRACTION: f64 = 0.95;

/// Minimum sample count accepted by the fitters.
pub const MIN_FIT_SAMPLES: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiIGParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl RiIGParams {
    pub fn new(alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        let p = Self { alpha, beta, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha.is_finite()
            && self.beta.is_finite()
            && self.delta.is_finite()
            && self.alpha > 0.0
            && self.delta > 0.0
            && self.alpha * self.alpha > self.beta * self.beta;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "RiIG needs alpha > 0, delta > 0, |beta| < alpha; got {self:?}"
            )))
        }
    }

    pub fn gamma(&self) -> f64 {
        (self.alpha * self.alpha - self.beta * self.beta).sqrt()
    }

    /// E[R^2] = E[beta^2 z^2 + 2z] with z ~ IG(delta/gamma, delta^2).
    pub fn second_moment(&self) -> f64 {
        let mu = self.delta / self.gamma();
        let ez2 = mu * mu + mu.powi(3) / (self.delta * self.delta);
        self.beta * self.beta * ez2 + 2.0 * mu
    }
}

/// Precomputed parameter-only terms of the log-density.
#[derive(Clone, Copy, Debug)]
struct LogDensity {
    p: RiIGParams,
    constant: f64,
}

impl LogDensity {
    fn new(p: RiIGParams) -> Self {
        let constant =
            0.5 * (2.0 / PI).ln() + 1.5 * p.alpha.ln() + p.delta.ln() + p.delta * p.gamma();
        Self { p, constant }
    }

    /// ln(pdf(r) / r); finite at r = 0.
    #[inline]
    fn ln_over_r(&self, r: f64) -> f64 {
        let s2 = self.p.delta * self.p.delta + r * r;
        let z = self.p.alpha * s2.sqrt();
        self.constant - 0.75 * s2.ln() + ln_k3_2(z) + ln_i0(self.p.beta * r)
    }

    #[inline]
    fn pdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else {
            r * self.ln_over_r(r).exp()
        }
    }
}

/// RiIG density at amplitude `r`.
pub fn riig_pdf(r: f64, p: &RiIGParams) -> Result<f64> {
    p.validate()?;
    if !(r >= 0.0) {
        return Err(Error::InvalidInput(format!("amplitude must be >= 0, got {r}")));
    }
    Ok(LogDensity::new(*p).pdf(r))
}

/// ln of the RiIG density (`-inf` at r = 0).
pub fn riig_ln_pdf(r: f64, p: &RiIGParams) -> Result<f64> {
    p.validate()?;
    if !(r >= 0.0) {
        return Err(Error::InvalidInput(format!("amplitude must be >= 0, got {r}")));
    }
    Ok(r.ln() + LogDensity::new(*p).ln_over_r(r))
}

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
const GL_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gl8(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for (x, w) in GL_X.iter().zip(&GL_W) {
        s += w * (f(m - h * x) + f(m + h * x));
    }
    s * h
}

/// Cumulative integrals of the density at ascending points.
struct CdfIntegrator {
    dens: LogDensity,
    /// Panel width away from the origin.
    panel: f64,
    /// Below `knee` the density can vary on the scale of delta.
    knee: f64,
    fine_panel: f64,
}

impl CdfIntegrator {
    fn new(p: RiIGParams) -> Self {
        let scale = p.second_moment().sqrt();
        let panel = scale / 32.0;
        Self {
            dens: LogDensity::new(p),
            panel,
            knee: 8.0 * p.delta,
            fine_panel: panel.min(p.delta / 4.0),
        }
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        if a < self.knee && b > self.knee {
            return self.integrate(a, self.knee) + self.integrate(self.knee, b);
        }
        let panel = if b <= self.knee { self.fine_panel } else { self.panel };
        let pieces = ((b - a) / panel).ceil().clamp(1.0, 1e6) as usize;
        let h = (b - a) / pieces as f64;
        (0..pieces)
            .map(|i| {
                let lo = a + i as f64 * h;
                gl8(|r| self.dens.pdf(r), lo, lo + h)
            })
            .sum()
    }
}

/// RiIG cumulative distribution at `x` by composite Gauss-Legendre quadrature.
pub fn riig_cdf(x: f64, p: &RiIGParams) -> Result<f64> {
    p.validate()?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(CdfIntegrator::new(*p).integrate(0.0, x).clamp(0.0, 1.0))
}

/// Cdf at every point of an ascending slice, integrating between neighbours.
pub fn riig_cdf_sorted(sorted: &[f64], p: &RiIGParams) -> Result<Vec<f64>> {
    p.validate()?;
    let integ = CdfIntegrator::new(*p);
    let mut out = Vec::with_capacity(sorted.len());
    let (mut prev, mut acc) = (0.0f64, 0.0f64);
    for &x in sorted {
        if x < prev {
            return Err(Error::InvalidInput("cdf points must be ascending".into()));
        }
        if x > 0.0 {
            acc += integ.integrate(prev.max(0.0), x);
            prev = x;
        }
        out.push(acc.clamp(0.0, 1.0));
    }
    Ok(out)
}

/// Draw `n` amplitudes: z ~ IG(delta/gamma, delta^2), then a Rician amplitude
/// with in-phase mean beta z and per-component variance z.
pub fn riig_sample(p: &RiIGParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ig = InverseGaussian::new(p.delta / p.gamma(), p.delta * p.delta)
        .map_err(|e| Error::InvalidParams(format!("inverse Gaussian: {e}")))?;
    Ok((0..n)
        .map(|_| {
            let z: f64 = ig.sample(&mut rng);
            let sz = z.sqrt();
            let n1: f64 = StandardNormal.sample(&mut rng);
            let n2: f64 = StandardNormal.sample(&mut rng);
            (p.beta * z + sz * n1).hypot(sz * n2)
        })
        .collect())
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
        return Err(Error::InvalidInput(
            "amplitude samples must be finite and >= 0".into(),
        ));
    }
    Ok(())
}

/// E[R]^2 / E[R^2] for beta = 0 as a function of u = delta * gamma.
fn mean_ratio(u: f64) -> f64 {
    let k = k0_scaled(u);
    0.5 * u * k * k
}

const U_RANGE: (f64, f64) = (1e-6, 1e3);

/// Solve `mean_ratio(u) = target` for u by bisection on ln u.
fn solve_shape(target: f64) -> f64 {
    let (lo, hi) = (U_RANGE.0.ln(), U_RANGE.1.ln());
    if target <= mean_ratio(U_RANGE.0) {
        return U_RANGE.0;
    }
    if target >= mean_ratio(U_RANGE.1) {
        return U_RANGE.1;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if mean_ratio(m.exp()) < target {
            a = m;
        } else {
            b = m;
        }
    }
    (0.5 * (a + b)).exp()
}

fn clamp_params(alpha: f64, beta: f64, delta: f64) -> RiIGParams {
    let alpha = alpha.clamp(ALPHA_BOUNDS.0, ALPHA_BOUNDS.1);
    let delta = delta.clamp(DELTA_BOUNDS.0, DELTA_BOUNDS.1);
    let lim = BETA_FRACTION * alpha;
    RiIGParams {
        alpha,
        beta: beta.clamp(-lim, lim),
        delta,
    }
}

/// Moment initializer with beta = 0 from the sample mean and mean square.
///
/// With beta = 0 the mixing variable z ~ IG(delta/gamma, delta^2) gives
/// E[R^2] = 2 delta/gamma and E[R]^2 / E[R^2] = (u/2) (e^u K0(u))^2 for
/// u = delta gamma; the ratio is solved for u, then delta = sqrt(u E[R^2] / 2).
pub fn riig_moment_estimate(samples: &[f64]) -> Result<RiIGParams> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    let n = samples.len() as f64;
    let m1 = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|r| r * r).sum::<f64>() / n;
    moment_estimate_from(m1, m2)
}

/// Same as [`riig_moment_estimate`] from precomputed E[R] and E[R^2].
pub(crate) fn moment_estimate_from(m1: f64, m2: f64) -> Result<RiIGParams> {
    let ratio = moment_ratio(m1, m2)?;
    let u = solve_shape(ratio.min(FRAC_PI_4));
    let delta = (0.5 * u * m2).sqrt();
    Ok(clamp_params(u / delta, 0.0, delta))
}

/// Moment-matched delta, or `None` when the amplitudes look Rayleigh
/// (E[R]^2 / E[R^2] beyond what any RiIG member with beta = 0 reaches).
pub(crate) fn moment_delta(m1: f64, m2: f64) -> Option<f64> {
    let ratio = moment_ratio(m1, m2).ok()?;
    if ratio >= mean_ratio(U_RANGE.1) {
        return None;
    }
    moment_estimate_from(m1, m2).ok().map(|p| p.delta)
}

fn moment_ratio(m1: f64, m2: f64) -> Result<f64> {
    if !(m2 > 0.0) || !(m1 > 0.0) {
        return Err(Error::DegenerateSample);
    }
    let ratio = m1 * m1 / m2;
    // Constant amplitudes give a ratio of 1.
    if ratio >= 1.0 - 1e-12 {
        return Err(Error::DegenerateSample);
    }
    Ok(ratio)
}

/// Result of [`fit_riig_detailed`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiIGFit {
    pub params: RiIGParams,
    /// Log-likelihood at `params`; `-inf` if any sample is exactly zero.
    pub log_likelihood: f64,
    pub initial: RiIGParams,
    pub initial_log_likelihood: f64,
    pub iterations: usize,
}

/// Sum of ln(pdf(r)/r) over samples, deterministic chunked parallel sum.
fn ln_lik_over_r(samples: &[f64], p: RiIGParams) -> f64 {
    let d = LogDensity::new(p);
    let parts: Vec<f64> = samples
        .par_chunks(4096)
        .map(|c| c.iter().map(|&r| d.ln_over_r(r)).sum::<f64>())
        .collect();
    parts.iter().sum()
}

/// Map unconstrained coordinates to bounded parameters.
fn from_coords(x: &[f64]) -> RiIGParams {
    let alpha = x[0].exp().clamp(ALPHA_BOUNDS.0, ALPHA_BOUNDS.1);
    let delta = x[2].exp().clamp(DELTA_BOUNDS.0, DELTA_BOUNDS.1);
    RiIGParams {
        alpha,
        beta: BETA_FRACTION * alpha * x[1].tanh(),
        delta,
    }
}

fn to_coords(p: &RiIGParams) -> [f64; 3] {
    let t = (p.beta / (BETA_FRACTION * p.alpha)).clamp(-0.999_999, 0.999_999);
    [p.alpha.ln(), t.atanh(), p.delta.ln()]
}

/// Maximum-likelihood fit started from the moment initializer.
pub fn fit_riig_detailed(samples: &[f64]) -> Result<RiIGFit> {
    check_samples(samples)?;
    let first = samples[0];
    if samples.iter().all(|&r| r == first) {
        return Err(Error::DegenerateSample);
    }
    let initial = riig_moment_estimate(samples)?;
    let ln_r: f64 = samples.iter().map(|r| r.ln()).sum();
    let objective = |x: &[f64]| -ln_lik_over_r(samples, from_coords(x));
    let x0 = to_coords(&initial);
    let f0 = objective(&x0);
    let min = nelder_mead(
        objective,
        &x0,
        &NelderMeadOptions {
            step: 0.3,
            max_iter: 1500,
            f_tol: 1e-9 * f0.abs().max(1.0),
            x_tol: 1e-7,
        },
    );
    let (params, f) = if min.f <= f0 {
        (from_coords(&min.x), min.f)
    } else {
        (from_coords(&x0), f0)
    };
    Ok(RiIGFit {
        params,
        log_likelihood: ln_r - f,
        initial: from_coords(&x0),
        initial_log_likelihood: ln_r - f0,
        iterations: min.iterations,
    })
}

/// Maximum-likelihood RiIG parameters.
pub fn fit_riig(samples: &[f64]) -> Result<RiIGParams> {
    fit_riig_detailed(samples).map(|f| f.params)
}

/// Log-likelihood of `samples` under `p`.
pub fn riig_log_likelihood(samples: &[f64], p: &RiIGParams) -> Result<f64> {
    p.validate()?;
    Ok(samples.iter().map(|r| r.ln()).sum::<f64>() + ln_lik_over_r(samples, *p))
}
