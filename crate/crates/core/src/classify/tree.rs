use crate::error::{Error, Result};
use crate::features::Label;

use super::dataset::Dataset;

pub const DEFAULT_MAX_DEPTH: usize = 5;
/// Nodes with fewer samples than this become leaves.
pub const MIN_SPLIT: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Leaf {
        label: Label,
        benign: usize,
        malignant: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        /// Rows with value <= threshold.
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeModel {
    pub root: TreeNode,
}

impl TreeModel {
    pub fn predict(&self, row: &[f64]) -> Label {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }
}

fn gini(b: usize, m: usize) -> f64 {
    let n = (b + m) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (pb, pm) = (b as f64 / n, m as f64 / n);
    1.0 - pb * pb - pm * pm
}

fn leaf(b: usize, m: usize) -> TreeNode {
    // Ties go to the positive class.
    let label = if m >= b { Label::Malignant } else { Label::Benign };
    TreeNode::Leaf {
        label,
        benign: b,
        malignant: m,
    }
}

/// CART with Gini impurity and axis-aligned splits at midpoints between
/// consecutive distinct values.
pub fn tree_train(train: &Dataset, max_depth: usize) -> Result<TreeModel> {
    if train.is_empty() {
        return Err(Error::InvalidInput("tree training needs data".into()));
    }
    let idx: Vec<usize> = (0..train.len()).collect();
    Ok(TreeModel {
        root: grow(train, &idx, max_depth),
    })
}

fn grow(data: &Dataset, idx: &[usize], depth_left: usize) -> TreeNode {
    let labels = data.labels();
    let m = idx.iter().filter(|&&i| labels[i] == Label::Malignant).count();
    let b = idx.len() - m;
    if depth_left == 0 || m == 0 || b == 0 || idx.len() < MIN_SPLIT {
        return leaf(b, m);
    }
    let parent = gini(b, m);
    let n = idx.len() as f64;
    // (impurity decrease, feature, threshold)
    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted: Vec<(f64, bool)> = Vec::with_capacity(idx.len());
    for f in 0..data.n_features() {
        sorted.clear();
        sorted.extend(idx.iter().map(|&i| (data.row(i)[f], labels[i] == Label::Malignant)));
        sorted.sort_by(|a, c| a.0.total_cmp(&c.0));
        let (mut lb, mut lm) = (0usize, 0usize);
        for s in 0..sorted.len() - 1 {
            if sorted[s].1 {
                lm += 1;
            } else {
                lb += 1;
            }
            if sorted[s].0 == sorted[s + 1].0 {
                continue;
            }
            let nl = (lb + lm) as f64;
            let child = nl / n * gini(lb, lm) + (n - nl) / n * gini(b - lb, m - lm);
            let gain = parent - child;
            if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g + 1e-12) {
                let mut t = 0.5 * (sorted[s].0 + sorted[s + 1].0);
                if t >= sorted[s + 1].0 {
                    t = sorted[s].0;
                }
                best = Some((gain, f, t));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return leaf(b, m);
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| data.row(i)[feature] <= threshold);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(grow(data, &l, depth_left - 1)),
        right: Box::new(grow(data, &r, depth_left - 1)),
    }
}
