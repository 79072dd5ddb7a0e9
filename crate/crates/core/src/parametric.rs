//! Sliding-window contourlet parametric (CP) maps and their weighted (WCP) form.

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{BinaryMask, ImageGrid, ValueDomain, WindowStats};
use crate::statmodel::{
    fit_nakagami, fit_riig, moment_delta, riig_moment_estimate, MIN_SHAPE,
};

pub const DEFAULT_WINDOW: usize = 13;

/// Value written when neither the window nor the whole grid supports a fit.
const LAST_RESORT: f64 = 1.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapModel {
    /// RiIG dispersion delta.
    #[default]
    RiigDelta,
    /// Nakagami shape m.
    NakagamiM,
}

impl MapModel {
    pub fn as_str(self) -> &'static str {
        match self {
            MapModel::RiigDelta => "riig-delta",
            MapModel::NakagamiM => "nakagami-m",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpOptions {
    pub window: usize,
    pub model: MapModel,
    /// Refine every RiIG window by maximum likelihood instead of the moment
    /// estimate alone.
    pub full_mle: bool,
}

impl Default for CpOptions {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            model: MapModel::RiigDelta,
            full_mle: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParametricMap {
    pub grid: ImageGrid,
    pub model: MapModel,
    pub window: usize,
    /// Windows that fell back to the whole-grid estimate.
    pub fallbacks: usize,
}

/// Whole-grid estimate used for windows whose own fit is degenerate.
fn global_estimate(amp: &[f64], model: MapModel) -> f64 {
    let v = match model {
        MapModel::RiigDelta => fit_riig(amp)
            .or_else(|_| riig_moment_estimate(amp))
            .map(|p| p.delta),
        MapModel::NakagamiM => fit_nakagami(amp).map(|p| p.m),
    };
    v.unwrap_or(LAST_RESORT)
}

/// Relative variance below which a window is treated as constant.
const FLAT: f64 = 1e-12;

/// Map of a local model parameter over `subband`, one window per pixel with
/// replicate padding. Fits use coefficient magnitudes.
pub fn cp_image(subband: &ImageGrid, window: usize, model: MapModel) -> Result<ParametricMap> {
    cp_image_with(
        subband,
        &CpOptions {
            window,
            model,
            ..Default::default()
        },
    )
}

pub fn cp_image_with(subband: &ImageGrid, opts: &CpOptions) -> Result<ParametricMap> {
    let window = opts.window;
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "CP window must be odd, got {window}"
        )));
    }
    let (w, h) = (subband.width(), subband.height());
    let amp = subband.map(ValueDomain::Coefficient, f64::abs)?;
    let global = global_estimate(amp.data(), opts.model);

    // Nakagami needs moments of r^2, RiIG moments of r.
    let stats = match opts.model {
        MapModel::RiigDelta => WindowStats::new(&amp, window),
        MapModel::NakagamiM => {
            WindowStats::new(&amp.map(ValueDomain::Coefficient, |v| v * v)?, window)
        }
    };
    let half = (window / 2) as isize;

    let rows: Vec<(Vec<f64>, usize)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut row = Vec::with_capacity(w);
            let mut fallbacks = 0;
            let mut buf = Vec::new();
            for x in 0..w {
                let (mean, var) = stats.at(x, y);
                let second = var + mean * mean;
                let est = if !(var > FLAT * second) {
                    None
                } else {
                    match opts.model {
                        MapModel::RiigDelta if opts.full_mle => {
                            buf.clear();
                            for dy in -half..=half {
                                for dx in -half..=half {
                                    buf.push(amp.get_clamped(x as isize + dx, y as isize + dy));
                                }
                            }
                            fit_riig(&buf).ok().map(|p| p.delta)
                        }
                        MapModel::RiigDelta => moment_delta(mean, second),
                        // mean = E[r^2], var = Var(r^2).
                        MapModel::NakagamiM => Some((mean * mean / var).max(MIN_SHAPE)),
                    }
                };
                let v = match est {
                    Some(v) if v.is_finite() && v > 0.0 => v,
                    _ => {
                        fallbacks += 1;
                        global
                    }
                };
                row.push(v);
            }
            (row, fallbacks)
        })
        .collect();

    let fallbacks = rows.iter().map(|r| r.1).sum();
    if fallbacks > 0 {
        debug!(
            "cp map {}x{}: {fallbacks} windows fell back to the grid estimate {global:.4}",
            w, h
        );
    }
    let data: Vec<f64> = rows.into_iter().flat_map(|r| r.0).collect();
    Ok(ParametricMap {
        grid: ImageGrid::new(w, h, data, ValueDomain::ParameterMap)?,
        model: opts.model,
        window,
        fallbacks,
    })
}

/// Elementwise product of a CP map with its subband.
pub fn wcp_image(cp: &ParametricMap, subband: &ImageGrid) -> Result<ImageGrid> {
    weight(&cp.grid, subband)
}

/// Elementwise product of two equally sized grids.
pub fn weight(map: &ImageGrid, subband: &ImageGrid) -> Result<ImageGrid> {
    if map.shape() != subband.shape() {
        return Err(Error::DimensionMismatch(format!(
            "map {:?} vs subband {:?}",
            map.shape(),
            subband.shape()
        )));
    }
    let data = map
        .data()
        .iter()
        .zip(subband.data())
        .map(|(a, b)| a * b)
        .collect();
    ImageGrid::new(subband.width(), subband.height(), data, ValueDomain::Coefficient)
}

/// Nearest-neighbour resample of a mask onto a `width` x `height` grid.
/// Never returns an empty mask for a non-empty input: the resampled centroid
/// pixel is forced on.
pub fn roi_to_subband(mask: &BinaryMask, width: usize, height: usize) -> Result<BinaryMask> {
    let (cx, cy) = mask
        .centroid()
        .ok_or_else(|| Error::InvalidInput("ROI mask is empty".into()))?;
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("subband dimensions must be positive".into()));
    }
    let sx = mask.width() as f64 / width as f64;
    let sy = mask.height() as f64 / height as f64;
    let src = |i: usize, scale: f64, n: usize| (((i as f64 + 0.5) * scale) as usize).min(n - 1);
    let mut out = BinaryMask::from_fn(width, height, |x, y| {
        mask.get(src(x, sx, mask.width()), src(y, sy, mask.height()))
    })?;
    if out.is_blank() {
        let x = (((cx + 0.5) / sx) as usize).min(width - 1);
        let y = (((cy + 0.5) / sy) as usize).min(height - 1);
        out.set(x, y, true);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> ImageGrid {
        ImageGrid::from_fn(w, h, ValueDomain::Coefficient, f).unwrap()
    }

    #[test]
    fn constant_grid_falls_back_everywhere() {
        let g = grid(20, 10, |_, _| 3.0);
        let m = cp_image(&g, 5, MapModel::RiigDelta).unwrap();
        assert_eq!(m.fallbacks, 200);
        assert!(m.grid.data().iter().all(|&v| v == LAST_RESORT));
    }

    #[test]
    fn even_window_rejected() {
        assert!(cp_image(&grid(8, 8, |x, _| x as f64), 4, MapModel::RiigDelta).is_err());
    }

    #[test]
    fn window_may_exceed_small_grids() {
        let g = grid(16, 2, |x, y| ((x * 7 + y * 3) % 5) as f64 - 2.0);
        let m = cp_image(&g, 13, MapModel::NakagamiM).unwrap();
        assert_eq!(m.grid.shape(), (2, 16));
        assert!(m.grid.data().iter().all(|&v| v >= MIN_SHAPE));
    }

    #[test]
    fn roi_identity_and_centroid_guarantee() {
        let mask = BinaryMask::from_fn(9, 7, |x, y| (2..6).contains(&x) && (1..4).contains(&y)).unwrap();
        assert_eq!(roi_to_subband(&mask, 9, 7).unwrap(), mask);
        let mut dot = BinaryMask::empty(64, 64).unwrap();
        dot.set(33, 34, true);
        let small = roi_to_subband(&dot, 4, 4).unwrap();
        assert_eq!(small.count(), 1);
        assert!(small.get(2, 2));
        assert!(roi_to_subband(&BinaryMask::empty(4, 4).unwrap(), 2, 2).is_err());
    }
}
