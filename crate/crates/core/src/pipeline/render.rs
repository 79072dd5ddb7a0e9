use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::imagecore::ImageGrid;

/// Colour stops from low to high: dark blue, cyan, yellow, dark red.
const STOPS: [(f64, [f64; 3]); 5] = [
    (0.0, [0.0, 0.0, 0.5]),
    (0.3, [0.0, 0.6, 1.0]),
    (0.5, [0.3, 1.0, 0.7]),
    (0.75, [1.0, 0.9, 0.0]),
    (1.0, [0.5, 0.0, 0.0]),
];

fn colour(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let i = STOPS.iter().rposition(|s| s.0 <= t).unwrap_or(0).min(STOPS.len() - 2);
    let (t0, c0) = STOPS[i];
    let (t1, c1) = STOPS[i + 1];
    let f = (t - t0) / (t1 - t0);
    let mut out = [0u8; 3];
    for k in 0..3 {
        out[k] = ((c0[k] + f * (c1[k] - c0[k])) * 255.0).round() as u8;
    }
    out
}

/// Value range between the 1st and 99th percentiles, so isolated extremes do
/// not wash out the map.
fn display_range(grid: &ImageGrid) -> (f64, f64) {
    let mut v: Vec<f64> = grid.data().iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return (0.0, 1.0);
    }
    v.sort_by(f64::total_cmp);
    let at = |q: f64| v[((v.len() - 1) as f64 * q).round() as usize];
    (at(0.01), at(0.99))
}

/// Map a grid to colour, each pixel scaled up by `zoom` for small subbands.
pub fn false_color(grid: &ImageGrid, zoom: usize) -> RgbImage {
    let zoom = zoom.max(1);
    let (lo, hi) = display_range(grid);
    let span = if hi > lo { hi - lo } else { 1.0 };
    RgbImage::from_fn(
        (grid.width() * zoom) as u32,
        (grid.height() * zoom) as u32,
        |x, y| {
            let v = grid.get(x as usize / zoom, y as usize / zoom);
            Rgb(colour((v - lo) / span))
        },
    )
}

/// Write a false-colour PNG, zooming small grids to at least 128 pixels on
/// their short side.
pub fn render_map(grid: &ImageGrid, path: &Path) -> Result<()> {
    let short = grid.width().min(grid.height()).max(1);
    let zoom = 128usize.div_ceil(short).min(64);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    false_color(grid, zoom).save(path).map_err(|e| Error::UnreadableFile {
        path: path.to_path_buf(),
        reason: format!("cannot write image: {e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::ValueDomain;

    #[test]
    fn endpoints_use_end_stops() {
        assert_eq!(colour(0.0), [0, 0, 128]);
        assert_eq!(colour(1.0), [128, 0, 0]);
        assert_eq!(colour(7.0), colour(1.0));
    }

    #[test]
    fn zoom_scales_dimensions() {
        let g = ImageGrid::from_fn(3, 2, ValueDomain::ParameterMap, |x, y| (x + y) as f64).unwrap();
        let img = false_color(&g, 4);
        assert_eq!(img.dimensions(), (12, 8));
        assert_eq!(img.get_pixel(0, 0), img.get_pixel(3, 3));
    }
}
