use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::metrics::ConfusionMatrix;
use super::select::select_features;
use super::{ClassifierConfig, Model};
use crate::error::{Error, Result};
use crate::features::Label;

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_SELECTED: usize = 30;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CvMode {
    /// Seeded stratified assignment.
    #[default]
    Stratified,
    /// Contiguous blocks of the input order.
    Sequential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    pub mode: CvMode,
    /// Features kept per training fold; capped at the column count.
    pub selected: usize,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            seed: 0,
            mode: CvMode::Stratified,
            selected: DEFAULT_SELECTED,
        }
    }
}

/// Test-fold index of every case.
pub fn assign_folds(labels: &[Label], folds: usize, seed: u64, mode: CvMode) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    let n = labels.len();
    if n < folds {
        return Err(Error::InvalidInput(format!("{n} cases cannot fill {folds} folds")));
    }
    let mut out = vec![0; n];
    match mode {
        CvMode::Sequential => {
            for (i, f) in out.iter_mut().enumerate() {
                *f = i * folds / n;
            }
        }
        CvMode::Stratified => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut next = 0;
            for class in [Label::Malignant, Label::Benign] {
                let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
                if idx.len() < folds {
                    return Err(Error::InvalidInput(format!(
                        "class {class} has {} cases, fewer than {folds} folds",
                        idx.len()
                    )));
                }
                idx.shuffle(&mut rng);
                // Continue the round robin across classes so fold sizes stay balanced.
                for i in idx {
                    out[i] = next;
                    next = (next + 1) % folds;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub confusion: ConfusionMatrix,
    /// Prediction for every case, in dataset order.
    pub predictions: Vec<Label>,
    /// Column indices chosen on each training fold.
    pub fold_features: Vec<Vec<usize>>,
}

/// Pooled k-fold evaluation. Feature selection and standardization are fitted
/// on each training fold only.
pub fn cross_validate(data: &Dataset, config: &ClassifierConfig, opts: &CvOptions) -> Result<CvResult> {
    let fold_of = assign_folds(data.labels(), opts.folds, opts.seed, opts.mode)?;
    let k = opts.selected.min(data.n_features()).max(1);
    let per_fold: Vec<Result<(Vec<(usize, Label)>, Vec<usize>)>> = (0..opts.folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..data.len()).filter(|&i| fold_of[i] != f).collect();
            let test: Vec<usize> = (0..data.len()).filter(|&i| fold_of[i] == f).collect();
            let (train_set, cols) = select_features(&data.subset(&train), k)?;
            let model = Model::fit(config, &train_set)?;
            let preds = test
                .iter()
                .map(|&i| {
                    let row: Vec<f64> = cols.iter().map(|&j| data.row(i)[j]).collect();
                    (i, model.predict(&row))
                })
                .collect();
            Ok((preds, cols))
        })
        .collect();

    let mut predictions = vec![Label::Unknown; data.len()];
    let mut confusion = ConfusionMatrix::default();
    let mut fold_features = Vec::with_capacity(opts.folds);
    for r in per_fold {
        let (preds, cols) = r?;
        for (i, p) in preds {
            predictions[i] = p;
            confusion.record(data.labels()[i], p);
        }
        fold_features.push(cols);
    }
    Ok(CvResult {
        confusion,
        predictions,
        fold_features,
    })
}
