//! Filter taps for the pyramid and the fan filter bank.

use serde::{Deserialize, Serialize};

/// Filter pair used by the Laplacian pyramid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PyramidFilters {
    /// CDF 9/7 biorthogonal pair.
    #[default]
    Cdf97,
    /// Daubechies-4 orthonormal lowpass; synthesis is the adjoint of analysis,
    /// which makes the pyramid a tight frame.
    Orthogonal,
}

/// Taps with the index of the zero-lag tap: `out[n] = sum_k f[k] x[n - off + k]`.
#[derive(Clone, Debug)]
pub(crate) struct Taps {
    pub f: Vec<f64>,
    pub off: i64,
}

impl PyramidFilters {
    pub(crate) fn analysis(self) -> Taps {
        match self {
            PyramidFilters::Cdf97 => Taps {
                f: symmetric(&[
                    0.852_698_679_009_40,
                    0.377_402_855_612_65,
                    -0.110_624_404_418_42,
                    -0.023_849_465_019_380,
                    0.037_828_455_506_995,
                ]),
                off: 4,
            },
            PyramidFilters::Orthogonal => Taps {
                // Reversed so that the pass computes sum_k h[k] x[n - k].
                f: daub4().into_iter().rev().collect(),
                off: 3,
            },
        }
    }

    pub(crate) fn synthesis(self) -> Taps {
        match self {
            PyramidFilters::Cdf97 => Taps {
                f: symmetric(&[
                    0.788_485_616_405_66,
                    0.418_092_273_222_21,
                    -0.040_689_417_609_558,
                    -0.064_538_882_628_938,
                ]),
                off: 3,
            },
            // Adjoint of the analysis pass: sum_k h[k] y[n + k].
            PyramidFilters::Orthogonal => Taps { f: daub4(), off: 0 },
        }
    }
}

/// Expand `[c0, c1, ..., cm]` to the symmetric `[cm, ..., c1, c0, c1, ..., cm]`.
fn symmetric(half: &[f64]) -> Vec<f64> {
    half.iter()
        .rev()
        .chain(half.iter().skip(1))
        .copied()
        .collect()
}

fn daub4() -> Vec<f64> {
    let s3 = 3f64.sqrt();
    let d = 4.0 * 2f64.sqrt();
    vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
}

/// 12-tap ladder filter of the fan filter bank, modulated by (-1)^n.
pub(crate) fn ladder_filter() -> Vec<f64> {
    let v = [0.6300, -0.1930, 0.0972, -0.0526, 0.0272, -0.0144];
    let mut f: Vec<f64> = v.iter().rev().chain(v.iter()).copied().collect();
    for t in f.iter_mut().step_by(2) {
        *t = -*t;
    }
    f
}
