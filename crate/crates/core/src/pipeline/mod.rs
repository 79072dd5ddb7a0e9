//! Batch orchestration: ingest, per-case processing, feature table,
//! cross-validated classification and the run report.

mod config;
mod ingest;
mod phantom;
mod render;

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ClassifierKind, DespeckleMethod, ModelTag, PipelineConfig, DEFAULT_SPEC, MIN_SIDE};
pub use ingest::{ingest, manifest_csv, parse_label, CaseEntry};
pub use phantom::{generate_phantom, phantom_case, write_phantom_set, PhantomCase, PhantomSpec};
pub use render::{false_color, render_map};

use crate::classify::{evaluate, ClassifierReport, CvOptions, Dataset};
use crate::contourlet::{contourlet_decompose_with, select_named_subbands, ContourletOptions, NamedSubbandSet, SubbandKey};
use crate::error::{Error, Result};
use crate::features::{extract_all, feature_names, read_feature_csv, write_feature_csv, FeatureVector, Label};
use crate::imagecore::{despeckle, load_image, load_mask, normalize, save_image, save_mask, write_raster, ImageGrid, ValueDomain};
use crate::parametric::{cp_image_with, wcp_image, ParametricMap};
use crate::segmentation::{segment, LesionRegion};

pub const FEATURES_FILE: &str = "features.csv";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.csv";

/// How far [`process_case`] goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Segment,
    Transform,
    Features,
}

/// Everything computed for one case, up to the requested stage.
#[derive(Clone, Debug)]
pub struct CaseArtifacts {
    pub entry: CaseEntry,
    pub normalized: ImageGrid,
    pub region: LesionRegion,
    pub subbands: Option<NamedSubbandSet>,
    pub cp: Vec<ParametricMap>,
    pub wcp: Vec<ImageGrid>,
    pub features: Option<FeatureVector>,
}

/// Despeckle, then normalize to [0, 255].
pub fn preprocess(img: &ImageGrid, config: &PipelineConfig) -> Result<ImageGrid> {
    normalize(&despeckle(img, config.despeckle_method())?)
}

/// Lesion region from a supplied mask, or by segmenting `normalized`.
pub fn lesion_region(normalized: &ImageGrid, mask: Option<&Path>) -> Result<LesionRegion> {
    match mask {
        Some(p) => {
            let m = load_mask(p)?;
            if (m.width(), m.height()) != (normalized.width(), normalized.height()) {
                return Err(Error::DimensionMismatch(format!(
                    "mask {} is {}x{}, image is {}x{}",
                    p.display(),
                    m.width(),
                    m.height(),
                    normalized.width(),
                    normalized.height()
                )));
            }
            LesionRegion::from_mask(&m)
        }
        None => segment(normalized),
    }
}

/// Contourlet decomposition and the six named subbands.
pub fn transform(normalized: &ImageGrid, config: &PipelineConfig) -> Result<NamedSubbandSet> {
    let opts = ContourletOptions {
        filters: config.filters,
        min_side: MIN_SIDE,
    };
    select_named_subbands(&contourlet_decompose_with(normalized, &config.directions, &opts)?)
}

/// CP and WCP grids for every named subband, in key order.
pub fn parametric_maps(subbands: &NamedSubbandSet, config: &PipelineConfig) -> Result<(Vec<ParametricMap>, Vec<ImageGrid>)> {
    let opts = config.cp_options();
    let mut cps = Vec::with_capacity(6);
    let mut wcps = Vec::with_capacity(6);
    for key in SubbandKey::ALL {
        let band = &subbands.get(key).grid;
        let cp = cp_image_with(band, &opts)?;
        wcps.push(wcp_image(&cp, band)?);
        cps.push(cp);
    }
    Ok((cps, wcps))
}

pub fn process_case(entry: &CaseEntry, config: &PipelineConfig, stage: Stage) -> Result<CaseArtifacts> {
    let raw = load_image(&entry.image)?;
    let normalized = preprocess(&raw, config)?;
    let region = lesion_region(&normalized, entry.mask.as_deref())?;
    let mut out = CaseArtifacts {
        entry: entry.clone(),
        normalized,
        region,
        subbands: None,
        cp: Vec::new(),
        wcp: Vec::new(),
        features: None,
    };
    if stage == Stage::Segment {
        return Ok(out);
    }
    let subbands = transform(&out.normalized, config)?;
    let (cp, wcp) = parametric_maps(&subbands, config)?;
    if stage == Stage::Features {
        let bmode = config.bmode_block.then_some(&out.normalized);
        out.features = Some(extract_all(
            &entry.case_id,
            entry.label,
            &out.region,
            &subbands,
            &wcp,
            bmode,
            &config.feature_options(),
        )?);
    }
    out.subbands = Some(subbands);
    out.cp = cp;
    out.wcp = wcp;
    Ok(out)
}

fn case_dir(config: &PipelineConfig, id: &str) -> PathBuf {
    config.output.join("cases").join(id)
}

/// Persist the intermediate images and rasters of one case.
pub fn write_case_artifacts(a: &CaseArtifacts, config: &PipelineConfig) -> Result<()> {
    let dir = case_dir(config, &a.entry.case_id);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    save_image(&a.normalized, &dir.join("normalized.png"))?;
    save_mask(&a.region.mask, &dir.join("mask.png"))?;
    let region = serde_json::json!({
        "ellipse": a.region.ellipse,
        "area": a.region.mask.count(),
        "boundary_length": a.region.boundary.len(),
    });
    write_text(&dir.join("region.json"), &(serde_json::to_string_pretty(&region).unwrap() + "\n"))?;
    if let Some(sb) = &a.subbands {
        for (i, key) in SubbandKey::ALL.iter().enumerate() {
            write_raster(&sb.get(*key).grid, &dir.join(format!("subband_{key}.wcpg")))?;
            if let Some(cp) = a.cp.get(i) {
                write_raster(&cp.grid, &dir.join(format!("cp_{key}.wcpg")))?;
            }
            if let Some(w) = a.wcp.get(i) {
                write_raster(w, &dir.join(format!("wcp_{key}.wcpg")))?;
            }
        }
    }
    if config.render_maps {
        let maps = config.output.join("maps");
        for (i, key) in SubbandKey::ALL.iter().enumerate() {
            if let Some(cp) = a.cp.get(i) {
                render_map(&cp.grid, &maps.join(format!("{}_cp_{key}.png", a.entry.case_id)))?;
            }
            if let Some(w) = a.wcp.get(i) {
                render_map(w, &maps.join(format!("{}_wcp_{key}.png", a.entry.case_id)))?;
            }
        }
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(p) = path.parent() {
        fs::create_dir_all(p).map_err(|e| Error::io(p, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub case_id: String,
    pub error: String,
}

/// Run `f` on a pool of `workers` threads (0 = all cores).
fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Process every case to `stage`, writing artifacts. Results keep manifest
/// order; failed cases are returned separately.
pub fn run_cases(
    cases: &[CaseEntry],
    config: &PipelineConfig,
    stage: Stage,
) -> Result<(Vec<CaseArtifacts>, Vec<CaseFailure>)> {
    let results: Vec<Result<CaseArtifacts>> = with_pool(config.workers, || {
        cases
            .par_iter()
            .map(|c| {
                let a = process_case(c, config, stage)?;
                write_case_artifacts(&a, config)?;
                Ok(a)
            })
            .collect()
    })?;
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (c, r) in cases.iter().zip(results) {
        match r {
            Ok(a) => ok.push(a),
            Err(e) => {
                warn!("case {} failed: {e}", c.case_id);
                failures.push(CaseFailure {
                    case_id: c.case_id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    info!("{stage:?}: {} of {} cases succeeded", ok.len(), cases.len());
    Ok((ok, failures))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub seed: u64,
    pub cases: usize,
    pub succeeded: usize,
    pub failures: Vec<CaseFailure>,
    pub feature_count: usize,
    /// Cross-validation settings actually used.
    pub cv: Option<CvOptions>,
    pub classifiers: Vec<ClassifierReport>,
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Cross-validate the configured classifiers. Folds shrink to the smaller
/// class count when needed; classification is skipped below two per class.
pub fn classify_table(
    names: &[String],
    rows: &[FeatureVector],
    config: &PipelineConfig,
    notes: &mut Vec<String>,
) -> Result<(Option<CvOptions>, Vec<ClassifierReport>)> {
    let labelled: Vec<FeatureVector> = rows.iter().filter(|r| r.label != Label::Unknown).cloned().collect();
    if labelled.len() < rows.len() {
        notes.push(format!("{} unlabelled rows left out of classification", rows.len() - labelled.len()));
    }
    let data = Dataset::from_features(names, &labelled)?;
    let smaller = data.count(Label::Malignant).min(data.count(Label::Benign));
    let mut cv = config.cv_options();
    if smaller < 2 {
        notes.push(format!("classification skipped: smaller class has {smaller} case(s)"));
        return Ok((None, Vec::new()));
    }
    if smaller < cv.folds {
        notes.push(format!("folds reduced from {} to {smaller} (smaller class size)", cv.folds));
        cv.folds = smaller;
    }
    let reports = evaluate(&data, &config.classifier_configs(), &cv)?;
    for r in &reports {
        info!(
            "{}: accuracy {:.4}, confusion tp={} fn={} fp={} tn={}",
            r.classifier,
            r.metrics.accuracy.unwrap_or(f64::NAN),
            r.confusion.tp,
            r.confusion.fn_,
            r.confusion.fp,
            r.confusion.tn
        );
    }
    Ok((Some(cv), reports))
}

/// Full pipeline: ingest, per-case features, feature CSV, cross-validation
/// and report. Writes features.csv, report.json and manifest.csv.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    config.validate()?;
    let cases = ingest(config)?;
    fs::create_dir_all(&config.output).map_err(|e| Error::io(&config.output, e))?;
    write_text(&config.output.join(MANIFEST_FILE), &manifest_csv(&cases))?;
    let (done, failures) = run_cases(&cases, config, Stage::Features)?;
    let names = feature_names(config.bmode_block);
    let rows: Vec<FeatureVector> = done.into_iter().filter_map(|a| a.features).collect();
    write_text(&config.output.join(FEATURES_FILE), &write_feature_csv(&names, &rows)?)?;

    let mut notes = Vec::new();
    let (cv, classifiers) = if rows.is_empty() {
        notes.push("no case produced features".into());
        (None, Vec::new())
    } else {
        classify_table(&names, &rows, config, &mut notes)?
    };
    let report = RunReport {
        config: config.clone(),
        seed: config.seed,
        cases: cases.len(),
        succeeded: rows.len(),
        failures,
        feature_count: names.len(),
        cv,
        classifiers,
        notes,
    };
    write_text(&config.output.join(REPORT_FILE), &report.to_json())?;
    Ok(report)
}

/// Classification alone, from an existing feature CSV.
pub fn classify_features_file(path: &Path, config: &PipelineConfig) -> Result<RunReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (names, rows) = read_feature_csv(&text)?;
    let mut notes = Vec::new();
    let (cv, classifiers) = classify_table(&names, &rows, config, &mut notes)?;
    let report = RunReport {
        config: config.clone(),
        seed: config.seed,
        cases: rows.len(),
        succeeded: rows.len(),
        failures: Vec::new(),
        feature_count: names.len(),
        cv,
        classifiers,
        notes,
    };
    write_text(&config.output.join(REPORT_FILE), &report.to_json())?;
    Ok(report)
}

/// Render every WCPG raster under `dir` (recursively) to a PNG next to it.
pub fn render_rasters(dir: &Path) -> Result<usize> {
    let mut count = 0;
    let mut stack = vec![dir.to_path_buf()];
    let mut files = Vec::new();
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let p = e.map_err(|e| Error::io(&d, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "wcpg") {
                files.push(p);
            }
        }
    }
    files.sort();
    for p in files {
        let g = crate::imagecore::read_raster(&p, ValueDomain::Coefficient)?;
        render_map(&g, &p.with_extension("png"))?;
        count += 1;
    }
    Ok(count)
}
