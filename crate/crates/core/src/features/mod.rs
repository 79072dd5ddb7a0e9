//! Per-case feature extraction over the six named WCP subbands.

mod echo;
mod psd;
mod shape;

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

pub use echo::{echo_ratio_features, texture_std, EchoRatios};
pub use psd::{
    ar_spectrum, prominent_peaks, psd_peaks, psd_peaks_of_signal, sample_segment, sub_axis_segment,
    yule_walker, SubAxis, DEFAULT_AR_ORDER, NO_PEAK, PEAK_PROMINENCE_DB, PSD_POINTS,
};
pub use shape::{
    boundary_bands, echo_pattern_class, echo_pattern_class_padded, ellipse_geometry, ellipse_outline,
    lesion_boundary_class, margin_class, orientation_class, shape_class, taller_than_wide,
    EllipseGeometry, DEFAULT_BAND_WIDTH, MARGIN_SEARCH,
};

use crate::contourlet::{NamedSubbandSet, SubbandKey};
use crate::error::{Error, Result};
use crate::imagecore::{BinaryMask, ImageGrid};
use crate::parametric::roi_to_subband;
use crate::segmentation::{LesionRegion, TiltedEllipse};
use crate::statmodel::{
    fit_riig, kl_divergence, ks_statistic_sorted, pp_slope, riig_cdf_sorted, riig_pdf, Histogram,
    KlMode, KL_BINS, MIN_FIT_SAMPLES,
};

/// Scalar names of one feature block, in column order.
pub const FEATURE_NAMES: [&str; 22] = [
    "Hypo_echo",
    "MicroLb_echo",
    "Homo_echo",
    "Hetero_echo",
    "TW_shape",
    "MicroCal_echo",
    "T_x",
    "S_c",
    "O_c",
    "M_c",
    "L_c",
    "E_pc",
    "R_ellipse",
    "P_ellipse",
    "A_r",
    "CP_ellipse",
    "PSD_peak1",
    "PSD_peak2",
    "PSD_peak3",
    "klv",
    "pp_slope",
    "klb",
];

pub const BLOCK_LEN: usize = FEATURE_NAMES.len();

/// Prefix of the optional block computed on the B-mode image itself.
pub const BMODE_BLOCK: &str = "BMODE";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Malignant,
    Unknown,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Malignant => "malignant",
            Label::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "benign" | "b" | "0" => Ok(Label::Benign),
            "malignant" | "m" | "1" => Ok(Label::Malignant),
            "unknown" | "" => Ok(Label::Unknown),
            other => Err(Error::InvalidInput(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitQuality {
    pub klv: f64,
    pub pp_slope: f64,
    pub klb: f64,
}

/// RiIG fit to the ROI magnitudes, then KS distance, pp-plot slope and KL
/// divergence of the fit.
pub fn fit_quality_features(img: &ImageGrid, roi: &BinaryMask) -> Result<FitQuality> {
    let v = echo::roi_values(img, roi)?;
    fit_quality_of(&v, KlMode::Strict)
}

pub(crate) fn fit_quality_of(values: &[f64], mode: KlMode) -> Result<FitQuality> {
    if values.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "fit quality needs at least {MIN_FIT_SAMPLES} ROI pixels, got {}",
            values.len()
        )));
    }
    let mut amp: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let p = fit_riig(&amp)?;
    amp.sort_by(f64::total_cmp);
    let cdf = riig_cdf_sorted(&amp, &p)?;
    let hist = Histogram::of_amplitudes(&amp, KL_BINS)?;
    let klb = kl_divergence(&hist, |r| riig_pdf(r, &p).unwrap_or(0.0), mode)?;
    Ok(FitQuality {
        klv: ks_statistic_sorted(&amp, &cdf)?,
        pp_slope: pp_slope(&cdf)?,
        klb: klb.max(0.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureOptions {
    /// Width of the inner/outer boundary bands.
    pub band_width: usize,
    pub margin_search: usize,
    pub ar_order: usize,
    pub psd_axis: SubAxis,
    /// Resampled ROIs are dilated until they hold at least this many pixels.
    pub min_roi_pixels: usize,
    /// Model-density floor for the KL measure on subband data.
    pub kl_floor: f64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            band_width: DEFAULT_BAND_WIDTH,
            margin_search: MARGIN_SEARCH,
            ar_order: DEFAULT_AR_ORDER,
            psd_axis: SubAxis::Vertical,
            min_roi_pixels: MIN_FIT_SAMPLES,
            kl_floor: 1e-300,
        }
    }
}

/// Features that depend only on the lesion outline and its ellipse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    pub tw_shape: f64,
    pub s_c: f64,
    pub o_c: f64,
    pub m_c: f64,
    pub ellipse: EllipseGeometry,
}

pub fn geometric_features(region: &LesionRegion, opts: &FeatureOptions) -> Result<Geometry> {
    let e = &region.ellipse;
    let outline = ellipse_outline(e, region.mask.width(), region.mask.height())?;
    let m_c = match margin_class(&region.boundary, &outline, opts.margin_search) {
        Ok(v) => v,
        Err(Error::BoundaryTooFar) => {
            warn!("no boundary pixel within {} px of the ellipse; M_c set to 0", opts.margin_search);
            0.0
        }
        Err(e) => return Err(e),
    };
    Ok(Geometry {
        tw_shape: taller_than_wide(e),
        s_c: shape_class(&region.boundary, e)?,
        o_c: orientation_class(e.theta),
        m_c,
        ellipse: ellipse_geometry(e),
    })
}

/// Grow a mask by 3x3 dilation until it has `min` pixels or fills the grid.
pub fn grow_roi(mask: &BinaryMask, min: usize) -> BinaryMask {
    let total = mask.width() * mask.height();
    let mut m = mask.clone();
    while m.count() < min.min(total) {
        m = m.dilate();
    }
    m
}

/// PSD peaks along the ellipse sub-axis, with endpoints scaled from B-mode
/// coordinates onto `grid`.
fn psd_on_grid(grid: &ImageGrid, e: &TiltedEllipse, sx: f64, sy: f64, opts: &FeatureOptions) -> [f64; 3] {
    let (p, q) = sub_axis_segment(e, opts.psd_axis);
    let (p, q) = ((p.0 * sx, p.1 * sy), (q.0 * sx, q.1 * sy));
    let samples = sample_segment(grid, p, q);
    let mut order = opts.ar_order;
    if samples.len() < 2 * order {
        order = samples.len() / 2;
    }
    if order < 2 {
        return [NO_PEAK; 3];
    }
    psd_peaks_of_signal(&samples, order).unwrap_or([NO_PEAK; 3])
}

/// One 22-scalar block: intensity features on `grid` inside `roi`, geometry
/// replicated from the B-mode region. `sx`, `sy` map B-mode coordinates onto
/// the grid.
pub fn block_features(
    grid: &ImageGrid,
    roi: &BinaryMask,
    geometry: &Geometry,
    ellipse: &TiltedEllipse,
    (sx, sy): (f64, f64),
    opts: &FeatureOptions,
) -> Result<[f64; BLOCK_LEN]> {
    let roi = grow_roi(roi, opts.min_roi_pixels);
    let values = echo::roi_values(grid, &roi)?;
    let echo = echo::echo_ratios_of(&values);
    let t_x = echo::sample_std(&values)?;
    let l_c = match lesion_boundary_class(grid, &roi, opts.band_width) {
        Ok(v) => v,
        Err(Error::InvalidInput(_)) => {
            warn!("empty boundary band on a {}x{} grid; L_c set to 0", grid.width(), grid.height());
            0.0
        }
        Err(e) => return Err(e),
    };
    let e_pc = echo_pattern_class_padded(grid, &roi)?;
    let psd = psd_on_grid(grid, ellipse, sx, sy, opts);
    let fq = fit_quality_of(&values, KlMode::Floor(opts.kl_floor))?;
    let g = geometry;
    Ok([
        echo.hypo,
        echo.micro_lobulation,
        echo.homogeneous,
        echo.heterogeneous,
        g.tw_shape,
        echo.micro_calcification,
        t_x,
        g.s_c,
        g.o_c,
        g.m_c,
        l_c,
        e_pc,
        g.ellipse.radius,
        g.ellipse.perimeter,
        g.ellipse.area,
        g.ellipse.compactness,
        psd[0],
        psd[1],
        psd[2],
        fq.klv,
        fq.pp_slope,
        fq.klb,
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub case_id: String,
    pub values: Vec<f64>,
    pub label: Label,
}

/// Column names for the six subband blocks, plus the B-mode block if asked.
pub fn feature_names(with_bmode: bool) -> Vec<String> {
    let mut prefixes: Vec<&str> = SubbandKey::ALL.iter().map(|k| k.as_str()).collect();
    if with_bmode {
        prefixes.push(BMODE_BLOCK);
    }
    prefixes
        .iter()
        .flat_map(|p| FEATURE_NAMES.iter().map(move |n| format!("{p}.{n}")))
        .collect()
}

/// Feature blocks for the six named subbands, each computed on its WCP grid.
/// `wcps` follows [`SubbandKey::ALL`] order. With `bmode`, a seventh block is
/// computed on that image with the unscaled mask.
pub fn extract_all(
    case_id: &str,
    label: Label,
    region: &LesionRegion,
    subbands: &NamedSubbandSet,
    wcps: &[ImageGrid],
    bmode: Option<&ImageGrid>,
    opts: &FeatureOptions,
) -> Result<FeatureVector> {
    if wcps.len() != SubbandKey::ALL.len() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} WCP grids, got {}",
            SubbandKey::ALL.len(),
            wcps.len()
        )));
    }
    let geometry = geometric_features(region, opts)?;
    let side = subbands.source_side();
    let padded = region.mask.pad_to(side, side)?;
    let mut values = Vec::with_capacity(BLOCK_LEN * 7);
    for (key, wcp) in SubbandKey::ALL.iter().zip(wcps) {
        let band = subbands.get(*key);
        if band.grid.shape() != wcp.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{key}: WCP {:?} vs subband {:?}",
                wcp.shape(),
                band.grid.shape()
            )));
        }
        let roi = roi_to_subband(&padded, wcp.width(), wcp.height())?;
        let scale = (wcp.width() as f64 / side as f64, wcp.height() as f64 / side as f64);
        values.extend(block_features(wcp, &roi, &geometry, &region.ellipse, scale, opts)?);
    }
    if let Some(img) = bmode {
        values.extend(block_features(img, &region.mask, &geometry, &region.ellipse, (1.0, 1.0), opts)?);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "case {case_id}: non-finite feature {}",
            feature_names(bmode.is_some())[i]
        )));
    }
    Ok(FeatureVector {
        case_id: case_id.to_string(),
        values,
        label,
    })
}

fn fmt_value(v: f64) -> String {
    // Shortest representation that round-trips exactly.
    format!("{v:?}")
}

/// Feature table as CSV: feature columns, then case_id and label.
pub fn write_feature_csv(names: &[String], rows: &[FeatureVector]) -> Result<String> {
    let mut out = String::new();
    for n in names {
        out.push_str(n);
        out.push(',');
    }
    out.push_str("case_id,label\n");
    for r in rows {
        if r.values.len() != names.len() {
            return Err(Error::DimensionMismatch(format!(
                "case {} has {} values for {} columns",
                r.case_id,
                r.values.len(),
                names.len()
            )));
        }
        if r.case_id.contains([',', '\n', '"']) {
            return Err(Error::InvalidInput(format!("case id {:?} is not CSV-safe", r.case_id)));
        }
        for v in &r.values {
            out.push_str(&fmt_value(*v));
            out.push(',');
        }
        out.push_str(&r.case_id);
        out.push(',');
        out.push_str(r.label.as_str());
        out.push('\n');
    }
    Ok(out)
}

/// Parse a table written by [`write_feature_csv`].
pub fn read_feature_csv(text: &str) -> Result<(Vec<String>, Vec<FeatureVector>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("feature CSV is empty".into()))?
        .split(',')
        .collect();
    let n = header.len();
    if n < 2 || header[n - 2] != "case_id" || header[n - 1] != "label" {
        return Err(Error::InvalidInput(
            "feature CSV must end with case_id,label columns".into(),
        ));
    }
    let names: Vec<String> = header[..n - 2].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n {
            return Err(Error::InvalidInput(format!(
                "row {} has {} cells, expected {n}",
                i + 1,
                cells.len()
            )));
        }
        let values = cells[..n - 2]
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("row {}: {c:?}: {e}", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(FeatureVector {
            case_id: cells[n - 2].to_string(),
            values,
            label: cells[n - 1].parse()?,
        });
    }
    Ok((names, rows))
}
