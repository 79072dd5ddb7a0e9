use crate::error::{Error, Result};
use crate::features::{FeatureVector, Label};

/// Labelled feature matrix, one row per case.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    rows: Vec<Vec<f64>>,
    labels: Vec<Label>,
    feature_names: Vec<String>,
    case_ids: Vec<String>,
}

impl Dataset {
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<Label>,
        feature_names: Vec<String>,
        case_ids: Vec<String>,
    ) -> Result<Self> {
        if rows.len() != labels.len() || rows.len() != case_ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows, {} labels, {} case ids",
                rows.len(),
                labels.len(),
                case_ids.len()
            )));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != feature_names.len() {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} values for {} features",
                    r.len(),
                    feature_names.len()
                )));
            }
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite value in case {}, feature {}",
                    case_ids[i], feature_names[j]
                )));
            }
        }
        if let Some(i) = labels.iter().position(|&l| l == Label::Unknown) {
            return Err(Error::InvalidInput(format!(
                "case {} has no benign/malignant label",
                case_ids[i]
            )));
        }
        Ok(Self {
            rows,
            labels,
            feature_names,
            case_ids,
        })
    }

    /// Build from extracted feature vectors sharing the column list `names`.
    pub fn from_features(names: &[String], vectors: &[FeatureVector]) -> Result<Self> {
        Self::new(
            vectors.iter().map(|v| v.values.clone()).collect(),
            vectors.iter().map(|v| v.label).collect(),
            names.to_vec(),
            vectors.iter().map(|v| v.case_id.clone()).collect(),
        )
    }

    /// Dataset with generic column names f0, f1, ... and case ids case0, case1, ...
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let ids = (0..rows.len()).map(|i| format!("case{i}")).collect();
        Self::new(rows, labels, (0..d).map(|j| format!("f{j}")).collect(), ids)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn case_ids(&self) -> &[String] {
        &self.case_ids
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Rows `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            case_ids: idx.iter().map(|&i| self.case_ids[i].clone()).collect(),
        }
    }

    /// Columns `cols`, in that order.
    pub fn project(&self, cols: &[usize]) -> Dataset {
        Dataset {
            rows: self
                .rows
                .iter()
                .map(|r| cols.iter().map(|&j| r[j]).collect())
                .collect(),
            labels: self.labels.clone(),
            feature_names: cols.iter().map(|&j| self.feature_names[j].clone()).collect(),
            case_ids: self.case_ids.clone(),
        }
    }
}

/// Per-column z-scoring with population statistics. Constant columns map to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in std.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        std.iter_mut().for_each(|s| *s = (*s / n).sqrt());
        Self { mean, std }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

/// +1 for malignant, -1 otherwise.
pub(crate) fn sign(l: Label) -> f64 {
    if l == Label::Malignant {
        1.0
    } else {
        -1.0
    }
}
