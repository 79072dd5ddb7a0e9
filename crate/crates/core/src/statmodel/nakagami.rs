//! Nakagami-m amplitude model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use super::riig::MIN_FIT_SAMPLES;
use crate::error::{Error, Result};

/// Smallest shape the moment fit will report.
pub const MIN_SHAPE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NakagamiParams {
    /// Shape m.
    pub m: f64,
    /// Spread Omega = E[R^2].
    pub omega: f64,
}

impl NakagamiParams {
    pub fn new(m: f64, omega: f64) -> Result<Self> {
        let p = Self { m, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m.is_finite() && self.omega.is_finite() && self.m >= MIN_SHAPE && self.omega > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "Nakagami needs m >= 0.5, omega > 0; got {self:?}"
            )))
        }
    }
}

pub fn nakagami_pdf(r: f64, p: &NakagamiParams) -> Result<f64> {
    p.validate()?;
    if !(r >= 0.0) {
        return Err(Error::InvalidInput(format!("amplitude must be >= 0, got {r}")));
    }
    if r == 0.0 {
        return Ok(if p.m == MIN_SHAPE {
            (2.0 / (std::f64::consts::PI * p.omega)).sqrt()
        } else {
            0.0
        });
    }
    let m = p.m;
    let ln = std::f64::consts::LN_2 + m * (m / p.omega).ln() - ln_gamma(m)
        + (2.0 * m - 1.0) * r.ln()
        - m * r * r / p.omega;
    Ok(ln.exp())
}

pub fn nakagami_cdf(r: f64, p: &NakagamiParams) -> Result<f64> {
    p.validate()?;
    if r <= 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_lr(p.m, p.m * r * r / p.omega))
}

/// R = sqrt(G) with G ~ Gamma(m, Omega/m).
pub fn nakagami_sample(p: &NakagamiParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Gamma::new(p.m, p.omega / p.m)
        .map_err(|e| Error::InvalidParams(format!("gamma: {e}")))?;
    Ok((0..n).map(|_| g.sample(&mut rng).sqrt()).collect())
}

/// Inverse-normalized-variance moment fit:
/// Omega = E[R^2], m = Omega^2 / Var(R^2), clamped below at 0.5.
pub fn fit_nakagami(samples: &[f64]) -> Result<NakagamiParams> {
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
    let n = samples.len() as f64;
    let omega = samples.iter().map(|r| r * r).sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|r| (r * r - omega).powi(2))
        .sum::<f64>()
        / n;
    if !(omega > 0.0) || !(var > 0.0) {
        return Err(Error::DegenerateSample);
    }
    NakagamiParams::new((omega * omega / var).max(MIN_SHAPE), omega)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rayleigh_special_case() {
        // m = 1 is Rayleigh with sigma^2 = Omega / 2.
        let p = NakagamiParams::new(1.0, 2.0).unwrap();
        for r in [0.1, 0.8, 2.3] {
            let want = r * (-r * r / 2.0f64).exp();
            assert!((nakagami_pdf(r, &p).unwrap() - want).abs() < 1e-13);
            let cdf = 1.0 - (-r * r / 2.0f64).exp();
            assert!((nakagami_cdf(r, &p).unwrap() - cdf).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_recovers_parameters() {
        let p = NakagamiParams::new(2.5, 3.0).unwrap();
        let x = nakagami_sample(&p, 20000, 11).unwrap();
        let f = fit_nakagami(&x).unwrap();
        assert!((f.m - 2.5).abs() < 0.15, "{f:?}");
        assert!((f.omega - 3.0).abs() < 0.06, "{f:?}");
    }

    #[test]
    fn degenerate_and_invalid() {
        assert!(matches!(fit_nakagami(&[1.0; 40]), Err(Error::DegenerateSample)));
        assert!(fit_nakagami(&[[1.0; 40], [-1.0; 40]].concat()).is_err());
        assert!(NakagamiParams::new(0.4, 1.0).is_err());
    }
}
