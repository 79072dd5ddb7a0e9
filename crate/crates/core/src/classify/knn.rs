use super::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::features::Label;

pub const DEFAULT_K: usize = 5;

#[derive(Clone, Debug)]
pub struct KnnModel {
    k: usize,
    scaler: Standardizer,
    points: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl KnnModel {
    pub fn fit(train: &Dataset, k: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidInput("KNN needs a non-empty training set".into()));
        }
        if k == 0 || k > train.len() {
            return Err(Error::InvalidInput(format!(
                "KNN k = {k} outside 1..={}",
                train.len()
            )));
        }
        let scaler = Standardizer::fit(train.rows());
        Ok(Self {
            k,
            points: scaler.transform_all(train.rows()),
            scaler,
            labels: train.labels().to_vec(),
        })
    }

    /// Majority label of the k nearest training points (Euclidean distance
    /// on z-scored features). A tied vote goes to the nearest neighbour.
    pub fn predict(&self, row: &[f64]) -> Label {
        let q = self.scaler.transform(row);
        let mut d: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let near = &d[..self.k];
        let m = near.iter().filter(|(_, i)| self.labels[*i] == Label::Malignant).count();
        let b = self.k - m;
        match m.cmp(&b) {
            std::cmp::Ordering::Greater => Label::Malignant,
            std::cmp::Ordering::Less => Label::Benign,
            std::cmp::Ordering::Equal => self.labels[near[0].1],
        }
    }
}

/// One-shot KNN prediction for a single query row.
pub fn knn_classify(train: &Dataset, row: &[f64], k: usize) -> Result<Label> {
    Ok(KnnModel::fit(train, k)?.predict(row))
}
