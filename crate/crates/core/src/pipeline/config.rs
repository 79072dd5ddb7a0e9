use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{ClassifierConfig, CvMode, CvOptions, DEFAULT_C, DEFAULT_FOLDS, DEFAULT_K, DEFAULT_MAX_DEPTH, DEFAULT_SELECTED};
use crate::contourlet::PyramidFilters;
use crate::error::{Error, Result};
use crate::features::{FeatureOptions, SubAxis};
use crate::imagecore::Despeckle;
use crate::parametric::{CpOptions, MapModel, DEFAULT_WINDOW};

pub const DEFAULT_SPEC: [usize; 4] = [8, 8, 16, 32];
/// Smallest working side for the contourlet transform.
pub const MIN_SIDE: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DespeckleMethod {
    #[default]
    Lee,
    Median,
    None,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    #[default]
    Riig,
    Nakagami,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Svm,
    Knn,
    Tree,
}

/// Run configuration, read from a flat TOML file. Relative paths are resolved
/// against the directory holding the file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset_root: PathBuf,
    /// CSV with columns id,label. Without it labels come from benign/ and
    /// malignant/ folders.
    pub labels: Option<PathBuf>,
    pub masks: Option<PathBuf>,
    pub output: PathBuf,

    pub despeckle: DespeckleMethod,
    pub despeckle_window: usize,
    pub directions: Vec<usize>,
    pub filters: PyramidFilters,
    pub window: usize,
    pub model: ModelTag,
    pub full_mle: bool,

    pub bmode_block: bool,
    pub psd_axis: SubAxis,
    pub band_width: usize,
    pub margin_search: usize,
    pub ar_order: usize,

    pub classifiers: Vec<ClassifierKind>,
    pub svm_c: f64,
    pub knn_k: usize,
    pub tree_depth: usize,
    pub folds: usize,
    pub cv_mode: CvMode,
    pub selected_features: usize,

    pub seed: u64,
    /// 0 uses every available core.
    pub workers: usize,
    /// Write false-colour PNGs of every CP and WCP map.
    pub render_maps: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let f = FeatureOptions::default();
        Self {
            dataset_root: PathBuf::from("data"),
            labels: None,
            masks: None,
            output: PathBuf::from("out"),
            despeckle: DespeckleMethod::Lee,
            despeckle_window: 7,
            directions: DEFAULT_SPEC.to_vec(),
            filters: PyramidFilters::Cdf97,
            window: DEFAULT_WINDOW,
            model: ModelTag::Riig,
            full_mle: false,
            bmode_block: false,
            psd_axis: f.psd_axis,
            band_width: f.band_width,
            margin_search: f.margin_search,
            ar_order: f.ar_order,
            classifiers: vec![ClassifierKind::Svm, ClassifierKind::Knn, ClassifierKind::Tree],
            svm_c: DEFAULT_C,
            knn_k: DEFAULT_K,
            tree_depth: DEFAULT_MAX_DEPTH,
            folds: DEFAULT_FOLDS,
            cv_mode: CvMode::Stratified,
            selected_features: DEFAULT_SELECTED,
            seed: 0,
            workers: 0,
            render_maps: false,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parse `path` and resolve its relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        c.resolve_paths(base);
        Ok(c)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset_root);
        fix(&mut self.output);
        if let Some(p) = self.labels.as_mut() {
            fix(p);
        }
        if let Some(p) = self.masks.as_mut() {
            fix(p);
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Check values and referenced input paths.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.window == 0 || self.window % 2 == 0 {
            problems.push(format!("window must be odd, got {}", self.window));
        }
        if self.directions.len() < 4 {
            problems.push(format!(
                "directions needs at least 4 pyramid levels, got {:?}",
                self.directions
            ));
        }
        if self.despeckle != DespeckleMethod::None && (self.despeckle_window == 0 || self.despeckle_window % 2 == 0) {
            problems.push(format!("despeckle_window must be odd, got {}", self.despeckle_window));
        }
        if self.folds < 2 {
            problems.push(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.selected_features == 0 {
            problems.push("selected_features must be positive".into());
        }
        if self.classifiers.is_empty() {
            problems.push("no classifier configured".into());
        }
        if !(self.svm_c > 0.0) {
            problems.push(format!("svm_c must be positive, got {}", self.svm_c));
        }
        if self.knn_k == 0 {
            problems.push("knn_k must be positive".into());
        }
        if self.band_width == 0 {
            problems.push("band_width must be positive".into());
        }
        if !self.dataset_root.is_dir() {
            problems.push(format!("dataset root {} is not a directory", self.dataset_root.display()));
        }
        if let Some(p) = &self.labels {
            if !p.is_file() {
                problems.push(format!("labels file {} does not exist", p.display()));
            }
        }
        if let Some(p) = &self.masks {
            if !p.is_dir() {
                problems.push(format!("mask folder {} is not a directory", p.display()));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn despeckle_method(&self) -> Despeckle {
        match self.despeckle {
            DespeckleMethod::Lee => Despeckle::Lee {
                window: self.despeckle_window,
            },
            DespeckleMethod::Median => Despeckle::Median {
                window: self.despeckle_window,
            },
            DespeckleMethod::None => Despeckle::Passthrough,
        }
    }

    pub fn cp_options(&self) -> CpOptions {
        CpOptions {
            window: self.window,
            model: match self.model {
                ModelTag::Riig => MapModel::RiigDelta,
                ModelTag::Nakagami => MapModel::NakagamiM,
            },
            full_mle: self.full_mle,
        }
    }

    pub fn feature_options(&self) -> FeatureOptions {
        FeatureOptions {
            band_width: self.band_width,
            margin_search: self.margin_search,
            ar_order: self.ar_order,
            psd_axis: self.psd_axis,
            ..FeatureOptions::default()
        }
    }

    pub fn classifier_configs(&self) -> Vec<ClassifierConfig> {
        self.classifiers
            .iter()
            .map(|k| match k {
                ClassifierKind::Svm => ClassifierConfig::Svm { c: self.svm_c },
                ClassifierKind::Knn => ClassifierConfig::Knn { k: self.knn_k },
                ClassifierKind::Tree => ClassifierConfig::Tree {
                    max_depth: self.tree_depth,
                },
            })
            .collect()
    }

    pub fn cv_options(&self) -> CvOptions {
        CvOptions {
            folds: self.folds,
            seed: self.seed,
            mode: self.cv_mode,
            selected: self.selected_features,
        }
    }
}
