use log::debug;

use super::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::features::Label;

/// Columns whose pairwise |correlation| reaches this are treated as redundant.
pub const REDUNDANCY_LIMIT: f64 = 0.95;

/// Pearson correlation of two z-scored columns; 0 when either is constant.
fn corr_z(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let c = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / n;
    if c.is_finite() {
        c.clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

fn zscore(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    if s > 0.0 {
        v.iter().map(|x| (x - m) / s).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// Absolute point-biserial correlation of every column with the label.
pub fn label_correlations(data: &Dataset) -> Vec<f64> {
    let y: Vec<f64> = data
        .labels()
        .iter()
        .map(|&l| if l == Label::Malignant { 1.0 } else { 0.0 })
        .collect();
    let yz = zscore(&y);
    let z = Standardizer::fit(data.rows()).transform_all(data.rows());
    (0..data.n_features())
        .map(|j| {
            let col: Vec<f64> = z.iter().map(|r| r[j]).collect();
            corr_z(&col, &yz).abs()
        })
        .collect()
}

/// Rank columns by |correlation| with the label and greedily keep those not
/// redundant with an already kept column. Returns at most `k` indices in rank
/// order; fewer when the non-redundant pool is smaller.
pub fn select_features(data: &Dataset, k: usize) -> Result<(Dataset, Vec<usize>)> {
    let d = data.n_features();
    if k == 0 || k > d {
        return Err(Error::InvalidInput(format!(
            "feature count k = {k} outside 1..={d}"
        )));
    }
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot select features on an empty dataset".into()));
    }
    let score = label_correlations(data);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));

    let z = Standardizer::fit(data.rows()).transform_all(data.rows());
    let col = |j: usize| -> Vec<f64> { z.iter().map(|r| r[j]).collect() };
    let mut kept: Vec<usize> = Vec::with_capacity(k);
    let mut kept_cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in order {
        if kept.len() == k {
            break;
        }
        let c = col(j);
        if kept_cols.iter().all(|o| corr_z(&c, o).abs() < REDUNDANCY_LIMIT) {
            kept.push(j);
            kept_cols.push(c);
        }
    }
    if kept.len() < k {
        debug!("only {} non-redundant features available for k = {k}", kept.len());
    }
    Ok((data.project(&kept), kept))
}
