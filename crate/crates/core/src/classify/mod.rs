//! Feature selection, KNN / linear SVM / CART classifiers, cross-validation
//! and confusion-matrix metrics.

mod cv;
mod dataset;
mod knn;
mod metrics;
mod select;
mod svm;
mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use cv::{assign_folds, cross_validate, CvMode, CvOptions, CvResult, DEFAULT_FOLDS, DEFAULT_SELECTED};
pub use dataset::{Dataset, Standardizer};
pub use knn::{knn_classify, KnnModel, DEFAULT_K};
pub use metrics::{metrics, ConfusionMatrix, Metrics};
pub use select::{label_correlations, select_features, REDUNDANCY_LIMIT};
pub use svm::{svm_train, SvmModel, DEFAULT_C, SVM_TOLERANCE};
pub use tree::{tree_train, TreeModel, TreeNode, DEFAULT_MAX_DEPTH, MIN_SPLIT};

use crate::error::Result;
use crate::features::Label;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierConfig {
    Svm { c: f64 },
    Knn { k: usize },
    Tree { max_depth: usize },
}

impl ClassifierConfig {
    /// SVM, KNN and tree with default hyperparameters.
    pub fn defaults() -> Vec<ClassifierConfig> {
        vec![
            ClassifierConfig::Svm { c: DEFAULT_C },
            ClassifierConfig::Knn { k: DEFAULT_K },
            ClassifierConfig::Tree {
                max_depth: DEFAULT_MAX_DEPTH,
            },
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierConfig::Svm { .. } => "svm",
            ClassifierConfig::Knn { .. } => "knn",
            ClassifierConfig::Tree { .. } => "tree",
        }
    }
}

impl fmt::Display for ClassifierConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifierConfig::Svm { c } => write!(f, "svm(C={c})"),
            ClassifierConfig::Knn { k } => write!(f, "knn(k={k})"),
            ClassifierConfig::Tree { max_depth } => write!(f, "tree(depth={max_depth})"),
        }
    }
}

/// A trained classifier of any supported kind.
#[derive(Clone, Debug)]
pub enum Model {
    Svm(SvmModel),
    Knn(KnnModel),
    Tree(TreeModel),
}

impl Model {
    pub fn fit(config: &ClassifierConfig, train: &Dataset) -> Result<Model> {
        Ok(match *config {
            ClassifierConfig::Svm { c } => Model::Svm(svm_train(train, c)?),
            // Small training folds cannot support the requested k.
            ClassifierConfig::Knn { k } => Model::Knn(KnnModel::fit(train, k.min(train.len()))?),
            ClassifierConfig::Tree { max_depth } => Model::Tree(tree_train(train, max_depth)?),
        })
    }

    pub fn predict(&self, row: &[f64]) -> Label {
        match self {
            Model::Svm(m) => m.predict(row),
            Model::Knn(m) => m.predict(row),
            Model::Tree(m) => m.predict(row),
        }
    }
}

/// Cross-validated outcome of one classifier, as written to the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub classifier: ClassifierConfig,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    /// Features chosen by the selection rule on the full dataset.
    pub selected_features: Vec<String>,
    pub fold_features: Vec<Vec<String>>,
}

/// Cross-validate every configured classifier on `data`.
pub fn evaluate(data: &Dataset, configs: &[ClassifierConfig], opts: &CvOptions) -> Result<Vec<ClassifierReport>> {
    let k = opts.selected.min(data.n_features()).max(1);
    let (_, full) = select_features(data, k)?;
    let names = |cols: &[usize]| -> Vec<String> {
        cols.iter().map(|&j| data.feature_names()[j].clone()).collect()
    };
    configs
        .iter()
        .map(|c| {
            let r = cross_validate(data, c, opts)?;
            Ok(ClassifierReport {
                classifier: *c,
                confusion: r.confusion,
                metrics: metrics(&r.confusion),
                selected_features: names(&full),
                fold_features: r.fold_features.iter().map(|f| names(f)).collect(),
            })
        })
        .collect()
}
