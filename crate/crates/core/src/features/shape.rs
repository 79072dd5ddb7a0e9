//! Boundary, margin and ellipse-derived features.

use std::collections::VecDeque;
use std::f64::consts::PI;

use log::debug;

use crate::error::{Error, Result};
use crate::imagecore::{BinaryMask, ImageGrid};
use crate::segmentation::TiltedEllipse;

/// |major - minor| / 100 with full axis lengths 2a and 2b.
pub fn taller_than_wide(e: &TiltedEllipse) -> f64 {
    (2.0 * e.a - 2.0 * e.b).abs() / 100.0
}

/// Mean distance between each boundary pixel and the point where the ray from
/// the ellipse centre through that pixel crosses the ellipse.
pub fn shape_class(boundary: &[(usize, usize)], e: &TiltedEllipse) -> Result<f64> {
    if boundary.is_empty() {
        return Err(Error::InvalidInput("boundary is empty".into()));
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for &(x, y) in boundary {
        let (dx, dy) = (x as f64 - e.x0, y as f64 - e.y0);
        let r = dx.hypot(dy);
        if r == 0.0 {
            debug!("boundary pixel ({x},{y}) sits on the ellipse centre; skipped");
            continue;
        }
        sum += (r - e.radius_at(dy.atan2(dx))).abs();
        n += 1;
    }
    if n == 0 {
        return Err(Error::DegenerateRegion);
    }
    Ok(sum / n as f64)
}

/// Fold an angle in [0, 2 pi) into [0, pi/2].
pub fn orientation_class(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t <= PI / 2.0 {
        t
    } else if t <= PI {
        PI - t
    } else if t <= 1.5 * PI {
        t - PI
    } else {
        2.0 * PI - t
    }
}

/// Rasterized outline of an ellipse on a `width` x `height` grid: pixels
/// inside the ellipse with a 4-neighbour outside it.
pub fn ellipse_outline(e: &TiltedEllipse, width: usize, height: usize) -> Result<BinaryMask> {
    let phi = e.a_angle();
    let (c, s) = (phi.cos(), phi.sin());
    let inside = |x: isize, y: isize| {
        let (dx, dy) = (x as f64 - e.x0, y as f64 - e.y0);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / e.a).powi(2) + (v / e.b).powi(2) <= 1.0
    };
    BinaryMask::from_fn(width, height, |x, y| {
        let (x, y) = (x as isize, y as isize);
        inside(x, y)
            && [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .any(|(dx, dy)| !inside(x + dx, y + dy))
    })
}

pub const MARGIN_SEARCH: usize = 13;

const RAYS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// For each boundary pixel, walk the eight rays i = 0..=limit and record the
/// first outline hit on each. Per pixel: min hit + 1 and max hit; the result
/// is mean(max) - mean(min) over pixels with at least one hit.
pub fn margin_class(boundary: &[(usize, usize)], outline: &BinaryMask, limit: usize) -> Result<f64> {
    if boundary.is_empty() || outline.is_blank() {
        return Err(Error::InvalidInput(
            "margin class needs a boundary and an outline".into(),
        ));
    }
    let (mut sum_min, mut sum_max, mut n) = (0.0, 0.0, 0usize);
    for &(x, y) in boundary {
        let mut hits = RAYS.iter().filter_map(|&(dx, dy)| {
            (0..=limit as isize).find(|&i| outline.get_signed(x as isize + i * dx, y as isize + i * dy))
        });
        let Some(first) = hits.next() else { continue };
        let (lo, hi) = hits.fold((first, first), |(lo, hi), d| (lo.min(d), hi.max(d)));
        sum_min += (lo + 1) as f64;
        sum_max += hi as f64;
        n += 1;
    }
    if n == 0 {
        return Err(Error::BoundaryTooFar);
    }
    Ok(sum_max / n as f64 - sum_min / n as f64)
}

/// Chessboard distance from every pixel to the nearest seed pixel, by BFS.
/// Unreached pixels get `usize::MAX`.
fn chessboard_distance(width: usize, height: usize, seeds: impl Iterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut dist = vec![usize::MAX; width * height];
    let mut queue = VecDeque::new();
    for (x, y) in seeds {
        dist[y * width + x] = 0;
        queue.push_back((x, y));
    }
    while let Some((x, y)) = queue.pop_front() {
        let d = dist[y * width + x];
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx as usize >= width || ny as usize >= height {
                    continue;
                }
                let i = ny as usize * width + nx as usize;
                if dist[i] == usize::MAX {
                    dist[i] = d + 1;
                    queue.push_back((nx as usize, ny as usize));
                }
            }
        }
    }
    dist
}

/// Inner and outer bands of width `k` around a mask: inside pixels within
/// chessboard distance k of the outside (the image edge counts as outside),
/// and outside pixels within distance k of the mask.
pub fn boundary_bands(mask: &BinaryMask, k: usize) -> (BinaryMask, BinaryMask) {
    let (w, h) = (mask.width(), mask.height());
    let to_mask = chessboard_distance(w, h, mask.pixels());
    let outside = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).filter(|&(x, y)| !mask.get(x, y));
    let to_outside = chessboard_distance(w, h, outside);
    let inner = BinaryMask::from_fn(w, h, |x, y| {
        if !mask.get(x, y) {
            return false;
        }
        // Distance to the frame just beyond the image edge.
        let edge = 1 + x.min(y).min(w - 1 - x).min(h - 1 - y);
        to_outside[y * w + x].min(edge) <= k
    })
    .expect("same dims");
    let outer = BinaryMask::from_fn(w, h, |x, y| !mask.get(x, y) && to_mask[y * w + x] <= k)
        .expect("same dims");
    (inner, outer)
}

fn band_mean(img: &ImageGrid, band: &BinaryMask) -> Option<f64> {
    let n = band.count();
    (n > 0).then(|| band.pixels().map(|(x, y)| img.get(x, y)).sum::<f64>() / n as f64)
}

pub const DEFAULT_BAND_WIDTH: usize = 6;

/// Mean of the outer band minus mean of the inner band.
pub fn lesion_boundary_class(img: &ImageGrid, mask: &BinaryMask, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("band width must be >= 1".into()));
    }
    if (img.width(), img.height()) != (mask.width(), mask.height()) {
        return Err(Error::DimensionMismatch("image and mask differ in size".into()));
    }
    let (inner, outer) = boundary_bands(mask, k);
    match (band_mean(img, &outer), band_mean(img, &inner)) {
        (Some(o), Some(i)) => Ok(o - i),
        _ => Err(Error::InvalidInput("empty boundary band".into())),
    }
}

/// Sobel gradient magnitude at (x, y), reading through `get`.
fn sobel(get: impl Fn(isize, isize) -> f64, x: isize, y: isize) -> f64 {
    let gx = get(x - 1, y - 1) + 2.0 * get(x - 1, y) + get(x - 1, y + 1)
        - get(x + 1, y - 1)
        - 2.0 * get(x + 1, y)
        - get(x + 1, y + 1);
    let gy = get(x - 1, y - 1) + 2.0 * get(x, y - 1) + get(x + 1, y - 1)
        - get(x - 1, y + 1)
        - 2.0 * get(x, y + 1)
        - get(x + 1, y + 1);
    gx.hypot(gy)
}

/// Mean Sobel magnitude over ROI pixels whose 3x3 neighbourhood lies in the image.
pub fn echo_pattern_class(img: &ImageGrid, roi: &BinaryMask) -> Result<f64> {
    let (w, h) = (img.width(), img.height());
    let get = |x: isize, y: isize| img.get(x as usize, y as usize);
    let vals: Vec<f64> = roi
        .pixels()
        .filter(|&(x, y)| x >= 1 && y >= 1 && x + 1 < w && y + 1 < h)
        .map(|(x, y)| sobel(get, x as isize, y as isize))
        .collect();
    if vals.is_empty() {
        return Err(Error::InvalidInput("ROI has no interior pixel".into()));
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Mean Sobel magnitude over all ROI pixels with replicate padding.
pub fn echo_pattern_class_padded(img: &ImageGrid, roi: &BinaryMask) -> Result<f64> {
    let get = |x: isize, y: isize| img.get_clamped(x, y);
    let n = roi.count();
    if n == 0 {
        return Err(Error::InvalidInput("ROI is empty".into()));
    }
    Ok(roi
        .pixels()
        .map(|(x, y)| sobel(get, x as isize, y as isize))
        .sum::<f64>()
        / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipseGeometry {
    pub radius: f64,
    pub perimeter: f64,
    pub area: f64,
    pub compactness: f64,
}

/// Mean radius, Ramanujan perimeter, area and P^2/A - 1.
pub fn ellipse_geometry(e: &TiltedEllipse) -> EllipseGeometry {
    let (a, b) = (e.a, e.b);
    let perimeter = PI * (3.0 * (a + b) - ((3.0 * a + b) * (a + 3.0 * b)).sqrt());
    let area = PI * a * b;
    EllipseGeometry {
        radius: 0.5 * (a + b),
        perimeter,
        area,
        compactness: perimeter * perimeter / area - 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ellipse(a: f64, b: f64) -> TiltedEllipse {
        TiltedEllipse {
            x0: 0.0,
            y0: 0.0,
            a,
            b,
            theta: 0.0,
        }
    }

    #[test]
    fn taller_than_wide_values() {
        assert!((taller_than_wide(&ellipse(25.0, 15.0)) - 0.2).abs() < 1e-15);
        assert_eq!(taller_than_wide(&ellipse(7.0, 7.0)), 0.0);
        assert!((taller_than_wide(&ellipse(10.0, 35.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn orientation_branches() {
        let q = PI / 4.0;
        for t in [q, 3.0 * q, 5.0 * q, 7.0 * q] {
            assert!((orientation_class(t) - q).abs() < 1e-15, "{t}");
        }
    }

    #[test]
    fn unit_circle_geometry() {
        let g = ellipse_geometry(&ellipse(1.0, 1.0));
        assert_eq!(g.radius, 1.0);
        assert!((g.perimeter - 2.0 * PI).abs() < 1e-14);
        assert!((g.area - PI).abs() < 1e-15);
        assert!((g.compactness - (4.0 * PI - 1.0)).abs() < 1e-12);
        let p = ellipse_geometry(&ellipse(3.0, 1.0)).perimeter;
        assert!((p - PI * (12.0 - 60f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn sobel_on_ramp() {
        let img = ImageGrid::from_fn(8, 8, crate::imagecore::ValueDomain::Coefficient, |x, _| x as f64).unwrap();
        let roi = BinaryMask::from_fn(8, 8, |_, _| true).unwrap();
        assert!((echo_pattern_class(&img, &roi).unwrap() - 8.0).abs() < 1e-12);
    }
}
