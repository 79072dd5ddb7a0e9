use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::features::Label;

const IMAGE_EXTENSIONS: [&str; 2] = ["png", "bmp"];
const MASK_SUFFIX: &str = "_mask";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseEntry {
    pub case_id: String,
    pub image: PathBuf,
    pub mask: Option<PathBuf>,
    pub label: Label,
}

fn is_image(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// benign / malignant only, case-insensitive.
pub fn parse_label(s: &str) -> Option<Label> {
    match s.trim().to_ascii_lowercase().as_str() {
        "benign" => Some(Label::Benign),
        "malignant" => Some(Label::Malignant),
        _ => None,
    }
}

fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image(p))
        .collect();
    out.sort();
    Ok(out)
}

/// Mask for `id` inside `dir`: `<id>.png`, `<id>_mask.png` or the bmp forms.
fn find_mask(dir: &Path, id: &str) -> Option<PathBuf> {
    [id.to_string(), format!("{id}{MASK_SUFFIX}")]
        .iter()
        .flat_map(|s| IMAGE_EXTENSIONS.iter().map(move |e| dir.join(format!("{s}.{e}"))))
        .find(|p| p.is_file())
}

/// Image for a manifest id: the id itself if it names a file, else `<id>.png`
/// or `<id>.bmp`, looked up under the root and its benign/ and malignant/ folders.
fn find_image(root: &Path, id: &str) -> Option<PathBuf> {
    let dirs = [root.to_path_buf(), root.join("benign"), root.join("malignant")];
    for d in &dirs {
        let direct = d.join(id);
        if direct.is_file() && is_image(&direct) {
            return Some(direct);
        }
        for e in IMAGE_EXTENSIONS {
            let p = d.join(format!("{id}.{e}"));
            if p.is_file() {
                return Some(p);
            }
        }
    }
    None
}

/// Build the case list from a labels CSV or the benign/ + malignant/ layout.
pub fn ingest(config: &PipelineConfig) -> Result<Vec<CaseEntry>> {
    let mut problems = Vec::new();
    let mut cases = match &config.labels {
        Some(csv) => from_manifest(&config.dataset_root, csv, &mut problems)?,
        None => from_folders(&config.dataset_root, &mut problems)?,
    };
    if let Some(dir) = &config.masks {
        for c in &mut cases {
            if c.mask.is_none() {
                c.mask = find_mask(dir, &c.case_id);
            }
        }
    }
    let mut seen = BTreeMap::new();
    for c in &cases {
        if let Some(prev) = seen.insert(c.case_id.clone(), c.image.clone()) {
            problems.push(format!(
                "duplicate case id {}: {} and {}",
                c.case_id,
                prev.display(),
                c.image.display()
            ));
        }
    }
    if !problems.is_empty() {
        return Err(Error::Ingest(problems));
    }
    if cases.is_empty() {
        return Err(Error::Ingest(vec![format!(
            "no cases found under {}",
            config.dataset_root.display()
        )]));
    }
    let m = cases.iter().filter(|c| c.label == Label::Malignant).count();
    let masks = cases.iter().filter(|c| c.mask.is_some()).count();
    info!(
        "ingested {} cases ({} benign, {m} malignant, {masks} with masks)",
        cases.len(),
        cases.len() - m
    );
    Ok(cases)
}

fn from_folders(root: &Path, problems: &mut Vec<String>) -> Result<Vec<CaseEntry>> {
    let mut cases = Vec::new();
    let mut found_any = false;
    let mut entries: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    for dir in entries {
        let Some(label) = dir.file_name().and_then(|n| n.to_str()).and_then(parse_label) else {
            continue;
        };
        found_any = true;
        let files = sorted_files(&dir)?;
        for f in &files {
            let id = stem(f);
            // Masks stored next to their image as <id>_mask.png.
            if id.ends_with(MASK_SUFFIX) {
                continue;
            }
            let mask = files
                .iter()
                .find(|m| stem(m) == format!("{id}{MASK_SUFFIX}"))
                .cloned();
            cases.push(CaseEntry {
                case_id: id,
                image: f.clone(),
                mask,
                label,
            });
        }
    }
    if !found_any {
        problems.push(format!(
            "{} has no benign/ or malignant/ folder and no labels file was given",
            root.display()
        ));
    }
    Ok(cases)
}

fn from_manifest(root: &Path, csv: &Path, problems: &mut Vec<String>) -> Result<Vec<CaseEntry>> {
    let text = fs::read_to_string(csv).map_err(|e| Error::io(csv, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        problems.push(format!("{} is empty", csv.display()));
        return Ok(Vec::new());
    };
    let cols: Vec<String> = header.split(',').map(|s| s.trim().to_ascii_lowercase()).collect();
    let (Some(id_col), Some(label_col)) = (
        cols.iter().position(|c| c == "id"),
        cols.iter().position(|c| c == "label"),
    ) else {
        problems.push(format!("{} needs id and label columns", csv.display()));
        return Ok(Vec::new());
    };
    let mut cases = Vec::new();
    for (n, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let (Some(id), Some(raw)) = (cells.get(id_col), cells.get(label_col)) else {
            problems.push(format!("{}:{}: too few columns", csv.display(), n + 1));
            continue;
        };
        let Some(label) = parse_label(raw) else {
            problems.push(format!("{}:{}: unknown label {raw:?} for {id}", csv.display(), n + 1));
            continue;
        };
        let Some(image) = find_image(root, id) else {
            problems.push(format!(
                "{}:{}: missing image for {id} under {}",
                csv.display(),
                n + 1,
                root.display()
            ));
            continue;
        };
        let case_id = stem(Path::new(id));
        let mask = image.parent().and_then(|d| {
            let p = find_mask(d, &format!("{case_id}{MASK_SUFFIX}"));
            p.filter(|p| p != &image)
        });
        cases.push(CaseEntry {
            case_id,
            image,
            mask,
            label,
        });
    }
    Ok(cases)
}

/// Manifest as CSV: case_id,label,image,mask.
pub fn manifest_csv(cases: &[CaseEntry]) -> String {
    let mut out = String::from("case_id,label,image,mask\n");
    for c in cases {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.case_id,
            c.label,
            c.image.display(),
            c.mask.as_ref().map(|m| m.display().to_string()).unwrap_or_default()
        ));
    }
    out
}
