//! Goodness-of-fit measures: KS distance, pp-plot slope and KL divergence.

use std::f64::consts::FRAC_2_PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of histogram bins used by the KL measure.
pub const KL_BINS: usize = 256;

fn sorted_copy(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("at least one sample is required".into()));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("samples contain NaN".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Sup-distance between the empirical step cdf of `samples` and `cdf`.
///
/// At each distinct sample value v the empirical cdf jumps from the count
/// strictly below v to the count at or below v; the model is compared with
/// the lower level at its left limit F(v-) and with the upper level at F(v).
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let s = sorted_copy(samples)?;
    let n = s.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < s.len() {
        let v = s[i];
        let mut j = i;
        while j < s.len() && s[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        d = d.max((cdf(v.next_down()) - below).abs());
        d = d.max((cdf(v) - upto).abs());
        i = j;
    }
    Ok(d.min(1.0))
}

/// KS distance for a continuous model, given ascending samples and the model
/// cdf at each of them.
pub fn ks_statistic_sorted(sorted: &[f64], cdf_at: &[f64]) -> Result<f64> {
    if sorted.is_empty() || sorted.len() != cdf_at.len() {
        return Err(Error::InvalidInput(
            "need matching, non-empty sample and cdf slices".into(),
        ));
    }
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let f = cdf_at[i];
        d = d.max((f - i as f64 / n).abs()).max((f - j as f64 / n).abs());
        i = j;
    }
    Ok(d.min(1.0))
}

/// Arcsine variance-stabilizing transform (2/pi) asin(sqrt(F)).
pub fn pp_transform(f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidInput(format!(
            "probability must lie in [0, 1], got {f}"
        )));
    }
    Ok(FRAC_2_PI * f.sqrt().asin())
}

/// Least-squares slope of the transformed empirical cdf against the
/// transformed model cdf at the sorted sample points.
///
/// `cdf_at[i]` is the model cdf at the i-th smallest sample; the empirical
/// cdf there is (i + 1) / n.
pub fn pp_slope(cdf_at: &[f64]) -> Result<f64> {
    let n = cdf_at.len();
    if n < 2 {
        return Err(Error::InvalidInput("pp slope needs at least 2 points".into()));
    }
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for (i, &f) in cdf_at.iter().enumerate() {
        xs.push(pp_transform(f.clamp(0.0, 1.0))?);
        ys.push(pp_transform((i + 1) as f64 / n as f64)?);
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateSample);
    }
    Ok(sxy / sxx)
}

/// Equal-width histogram normalized to a density on [lo, hi].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub density: Vec<f64>,
}

impl Histogram {
    /// `bins` equal bins spanning [0, max sample]; the maximum falls in the last bin.
    pub fn of_amplitudes(samples: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidInput("histogram needs at least one bin".into()));
        }
        let s = sorted_copy(samples)?;
        if s[0] < 0.0 {
            return Err(Error::InvalidInput("amplitudes must be >= 0".into()));
        }
        let hi = s[s.len() - 1];
        if !(hi > 0.0) || !hi.is_finite() {
            return Err(Error::DegenerateSample);
        }
        let width = hi / bins as f64;
        let mut counts = vec![0usize; bins];
        for v in &s {
            let k = ((v / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let scale = 1.0 / (s.len() as f64 * width);
        Ok(Self {
            lo: 0.0,
            width,
            density: counts.iter().map(|&c| c as f64 * scale).collect(),
        })
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.density.len()).map(|k| self.lo + (k as f64 + 0.5) * self.width)
    }
}

/// Handling of bins where the model density vanishes but the data does not.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum KlMode {
    #[default]
    Strict,
    /// Model densities below this value are raised to it.
    Floor(f64),
}

/// Riemann-sum KL divergence in bits between two densities on a common grid.
pub fn kl_divergence_grid(p_emp: &[f64], p_model: &[f64], width: f64, mode: KlMode) -> Result<f64> {
    if p_emp.len() != p_model.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} empirical bins vs {} model values",
            p_emp.len(),
            p_model.len()
        )));
    }
    if !(width > 0.0) {
        return Err(Error::InvalidInput("bin width must be positive".into()));
    }
    let mut sum = 0.0;
    for (bin, (&pe, &pm)) in p_emp.iter().zip(p_model).enumerate() {
        if pe < 0.0 || pm < 0.0 || !pe.is_finite() || pm.is_nan() {
            return Err(Error::InvalidInput(format!("invalid density in bin {bin}")));
        }
        if pe == 0.0 {
            continue;
        }
        let pm = match mode {
            KlMode::Strict if pm == 0.0 => return Err(Error::AbsoluteContinuity { bin }),
            KlMode::Strict => pm,
            KlMode::Floor(eps) => pm.max(eps),
        };
        sum += pe * (pe / pm).log2() * width;
    }
    Ok(sum)
}

/// KL divergence of a histogram density against a model density evaluated at
/// the bin centres.
pub fn kl_divergence(hist: &Histogram, model: impl Fn(f64) -> f64, mode: KlMode) -> Result<f64> {
    let pm: Vec<f64> = hist.centers().map(model).collect();
    kl_divergence_grid(&hist.density, &pm, hist.width, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_ks() {
        let d = ks_statistic(&[1.0], |x| if x >= 1.0 { 0.3 } else { 0.3 * x }).unwrap();
        assert!((d - 0.7).abs() < 1e-12);
    }

    #[test]
    fn ks_of_step_model_is_zero() {
        let xs = [1.0, 2.0, 2.0, 5.0];
        let step = |x: f64| xs.iter().filter(|&&s| s <= x).count() as f64 / 4.0;
        assert_eq!(ks_statistic(&xs, step).unwrap(), 0.0);
    }

    #[test]
    fn ks_ties_use_full_jump() {
        // Uniform model, three tied samples at 0.5: jump 0 -> 1 at 0.5.
        let d = ks_statistic(&[0.5, 0.5, 0.5], |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        let fast = ks_statistic_sorted(&[0.5, 0.5, 0.5], &[0.5, 0.5, 0.5]).unwrap();
        assert!((fast - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pp_transform_values() {
        assert_eq!(pp_transform(0.0).unwrap(), 0.0);
        assert!((pp_transform(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((pp_transform(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((pp_transform(0.25).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(pp_transform(1.1).is_err() && pp_transform(-0.1).is_err());
    }

    #[test]
    fn perfect_pp_plot_has_unit_slope() {
        let n = 50;
        let cdf: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        assert!((pp_slope(&cdf).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_against_uniform_is_one_bit() {
        let kl = kl_divergence_grid(&[2.0, 0.0], &[1.0, 1.0], 0.5, KlMode::Strict).unwrap();
        assert!((kl - 1.0).abs() < 1e-15);
    }

    #[test]
    fn absolute_continuity() {
        let e = kl_divergence_grid(&[1.0, 1.0], &[2.0, 0.0], 0.5, KlMode::Strict);
        assert!(matches!(e, Err(Error::AbsoluteContinuity { bin: 1 })));
        let f = kl_divergence_grid(&[1.0, 1.0], &[2.0, 0.0], 0.5, KlMode::Floor(1e-12)).unwrap();
        assert!(f.is_finite() && f > 0.0);
    }

    #[test]
    fn histogram_is_a_density() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let h = Histogram::of_amplitudes(&xs, KL_BINS).unwrap();
        let total: f64 = h.density.iter().sum::<f64>() * h.width;
        assert!((total - 1.0).abs() < 1e-12);
        assert!(Histogram::of_amplitudes(&[0.0; 5], 8).is_err());
    }
}
