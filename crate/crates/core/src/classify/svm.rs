use log::warn;

use super::dataset::{sign, Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::features::Label;

pub const DEFAULT_C: f64 = 1.0;
/// Stopping tolerance on the maximal KKT violation pair.
pub const SVM_TOLERANCE: f64 = 1e-6;
const TAU: f64 = 1e-12;

/// Linear soft-margin SVM on z-scored features. Decision value
/// `w . z(x) + b`; positive means malignant.
#[derive(Clone, Debug)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub alphas: Vec<f64>,
    pub iterations: usize,
    /// Primal minus dual objective at the returned solution.
    pub duality_gap: f64,
    scaler: Standardizer,
}

impl SvmModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        let z = self.scaler.transform(row);
        z.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.bias
    }

    pub fn predict(&self, row: &[f64]) -> Label {
        if self.decision(row) > 0.0 {
            Label::Malignant
        } else {
            Label::Benign
        }
    }

    /// Indices of training points with non-zero multipliers.
    pub fn support_vectors(&self) -> Vec<usize> {
        (0..self.alphas.len()).filter(|&i| self.alphas[i] > 0.0).collect()
    }
}

/// SMO with second-order working-set selection on the dual
/// min 1/2 a'Qa - e'a, 0 <= a <= C, y'a = 0.
pub fn svm_train(train: &Dataset, c: f64) -> Result<SvmModel> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidInput(format!("SVM C must be positive, got {c}")));
    }
    if train.count(Label::Malignant) == 0 || train.count(Label::Benign) == 0 {
        return Err(Error::InvalidInput("SVM training needs both classes".into()));
    }
    let scaler = Standardizer::fit(train.rows());
    let x = scaler.transform_all(train.rows());
    let y: Vec<f64> = train.labels().iter().map(|&l| sign(l)).collect();
    let n = x.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| dot(&x[i], &x[j])).collect())
        .collect();

    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let max_iter = (100 * n).max(10_000_000);
    let mut iter = 0;
    loop {
        // i: maximal violator in I_up.
        let (mut gmax, mut i) = (f64::NEG_INFINITY, usize::MAX);
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && -y[t] * g[t] >= gmax {
                gmax = -y[t] * g[t];
                i = t;
            }
        }
        let (mut gmax2, mut j, mut best) = (f64::NEG_INFINITY, usize::MAX, f64::INFINITY);
        if i != usize::MAX {
            for t in 0..n {
                let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
                if !in_low {
                    continue;
                }
                let v = y[t] * g[t];
                gmax2 = gmax2.max(v);
                let diff = gmax + v;
                if diff > 0.0 {
                    let mut quad = k[i][i] + k[t][t] - 2.0 * k[i][t];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -diff * diff / quad;
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax + gmax2 < SVM_TOLERANCE {
            break;
        }
        if iter >= max_iter {
            warn!("SMO stopped at {iter} iterations with violation {}", gmax + gmax2);
            break;
        }
        iter += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * k[i][j];
        if y[i] != y[j] {
            let mut quad = k[i][i] + k[j][j] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = ai - aj;
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k[i][i] + k[j][j] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = ai + aj;
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            g[t] += y[t] * (y[i] * k[i][t] * di + y[j] * k[j][t] * dj);
        }
    }

    // Bias from free multipliers, else the midpoint of the feasible interval.
    let (mut ub, mut lb, mut sum, mut free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * g[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };

    let d = x.first().map_or(0, Vec::len);
    let mut w = vec![0.0; d];
    for t in 0..n {
        if alpha[t] > 0.0 {
            for (wj, xj) in w.iter_mut().zip(&x[t]) {
                *wj += alpha[t] * y[t] * xj;
            }
        }
    }
    let ww = dot(&w, &w);
    let hinge: f64 = (0..n)
        .map(|t| (1.0 - y[t] * (dot(&w, &x[t]) - rho)).max(0.0))
        .sum();
    let duality_gap = (0.5 * ww + c * hinge) - (alpha.iter().sum::<f64>() - 0.5 * ww);
    Ok(SvmModel {
        weights: w,
        bias: -rho,
        alphas: alpha,
        iterations: iter,
        duality_gap,
        scaler,
    })
}
