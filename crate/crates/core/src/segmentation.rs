//! Lesion binarization, Moore-neighbour boundary tracing and the
//! moment-equivalent tilted ellipse.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_4, PI};

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{BinaryMask, ImageGrid, ValueDomain};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltedEllipse {
    pub x0: f64,
    pub y0: f64,
    /// Semi-axis whose direction is closer to the image x axis.
    pub a: f64,
    /// Semi-axis whose direction is closer to the image y axis.
    pub b: f64,
    /// Major-axis angle in [0, pi), measured from +x towards +y (rows grow downwards).
    pub theta: f64,
}

impl TiltedEllipse {
    pub fn major(&self) -> f64 {
        self.a.max(self.b)
    }

    pub fn minor(&self) -> f64 {
        self.a.min(self.b)
    }

    /// Angle of the `a` axis in [0, pi).
    pub fn a_angle(&self) -> f64 {
        if self.a >= self.b {
            self.theta
        } else {
            (self.theta + PI / 2.0) % PI
        }
    }

    /// Distance from the centre to the ellipse along direction `phi`.
    pub fn radius_at(&self, phi: f64) -> f64 {
        let t = phi - self.a_angle();
        let (c, s) = (t.cos() / self.a, t.sin() / self.b);
        1.0 / (c * c + s * s).sqrt()
    }

    pub fn area(&self) -> f64 {
        PI * self.a * self.b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LesionRegion {
    pub mask: BinaryMask,
    pub boundary: Vec<(usize, usize)>,
    pub ellipse: TiltedEllipse,
}

impl LesionRegion {
    /// Build a region from a mask: keep its largest 8-connected component,
    /// trace it and fit the ellipse.
    pub fn from_mask(mask: &BinaryMask) -> Result<Self> {
        let comps = components(mask, true);
        let Some(largest) = comps.iter().max_by_key(|c| c.len()) else {
            return Err(Error::NoLesionCandidate);
        };
        if comps.len() > 1 {
            debug!("mask has {} components; keeping the largest", comps.len());
        }
        let mask = mask_of(mask.width(), mask.height(), largest)?;
        let boundary = trace_boundary(&mask)?;
        let ellipse = fit_ellipse(&mask)?;
        Ok(Self {
            mask,
            boundary,
            ellipse,
        })
    }
}

/// Binarize, then build the region.
pub fn segment(img: &ImageGrid) -> Result<LesionRegion> {
    LesionRegion::from_mask(&binarize(img)?)
}

/// Otsu threshold over integer levels: the largest level `t` that maximizes
/// the between-class variance of {v <= t} and {v > t}. `None` when the image
/// has a single level.
pub fn otsu_threshold(img: &ImageGrid) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v.round().clamp(0.0, 255.0) as usize] += 1;
    }
    let total = img.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best: Option<(f64, u8)> = None;
    for t in 0..255usize {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let d = sum0 / w0 - (sum_all - sum0) / w1;
        let between = w0 * w1 * d * d;
        if best.is_none_or(|(b, _)| between > b) {
            best = Some((between, t as u8));
        }
    }
    best.map(|(_, t)| t)
}

/// Dark-lesion mask: inverted Otsu threshold, 3x3 opening by reconstruction,
/// border-touching candidates dropped when an interior one exists, largest
/// component kept, holes filled.
pub fn binarize(img: &ImageGrid) -> Result<BinaryMask> {
    if img.domain() != ValueDomain::RawU8 {
        return Err(Error::InvalidInput("binarize expects a raw-u8 image".into()));
    }
    let t = otsu_threshold(img).ok_or(Error::NoLesionCandidate)? as f64;
    let (w, h) = (img.width(), img.height());
    let dark = BinaryMask::from_fn(w, h, |x, y| img.get(x, y) <= t)?;

    // Components that survive a 3x3 opening are kept whole.
    let opened = dark.erode().dilate();
    let comps: Vec<Vec<(usize, usize)>> = components(&dark, true)
        .into_iter()
        .filter(|c| c.iter().any(|&(x, y)| opened.get(x, y)))
        .collect();
    let touches = |c: &Vec<(usize, usize)>| {
        c.iter()
            .any(|&(x, y)| x == 0 || y == 0 || x + 1 == w || y + 1 == h)
    };
    let interior: Vec<&Vec<(usize, usize)>> = comps.iter().filter(|c| !touches(c)).collect();
    let pool: Vec<&Vec<(usize, usize)>> = if interior.is_empty() {
        comps.iter().collect()
    } else {
        interior
    };
    let best = pool
        .into_iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .ok_or(Error::NoLesionCandidate)?;
    Ok(fill_holes(&mask_of(w, h, best)?))
}

fn mask_of(w: usize, h: usize, pixels: &[(usize, usize)]) -> Result<BinaryMask> {
    let mut m = BinaryMask::empty(w, h)?;
    for &(x, y) in pixels {
        m.set(x, y, true);
    }
    Ok(m)
}

const N4: [(isize, isize); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
const N8: [(isize, isize); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// Foreground components in raster order of their first pixel.
pub fn components(mask: &BinaryMask, eight: bool) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = (mask.width(), mask.height());
    let nbrs: &[(isize, isize)] = if eight { &N8 } else { &N4 };
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for (x, y) in mask.pixels() {
        if seen[y * w + x] {
            continue;
        }
        seen[y * w + x] = true;
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([(x, y)]);
        while let Some((cx, cy)) = queue.pop_front() {
            comp.push((cx, cy));
            for &(dx, dy) in nbrs {
                let (nx, ny) = (cx as isize + dx, cy as isize + dy);
                if mask.get_signed(nx, ny) && !seen[ny as usize * w + nx as usize] {
                    seen[ny as usize * w + nx as usize] = true;
                    queue.push_back((nx as usize, ny as usize));
                }
            }
        }
        comp.sort_by_key(|&(x, y)| (y, x));
        out.push(comp);
    }
    out
}

/// Set background pixels not 4-connected to the image border.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if (x == 0 || y == 0 || x + 1 == w || y + 1 == h) && !mask.get(x, y) {
                outside[y * w + x] = true;
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for (dx, dy) in N4 {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                continue;
            }
            let i = ny as usize * w + nx as usize;
            if !outside[i] && !mask.data()[i] {
                outside[i] = true;
                queue.push_back((nx as usize, ny as usize));
            }
        }
    }
    let mut out = mask.clone();
    for y in 0..h {
        for x in 0..w {
            if !outside[y * w + x] {
                out.set(x, y, true);
            }
        }
    }
    out
}

// Moore neighbourhood in clockwise order on screen (y down), starting west.
const MOORE: [(isize, isize); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn moore_index(dx: isize, dy: isize) -> usize {
    MOORE.iter().position(|&d| d == (dx, dy)).expect("neighbour offset")
}

/// Next boundary pixel clockwise from the backtrack neighbour, with the new
/// backtrack position.
fn moore_step(
    mask: &BinaryMask,
    p: (isize, isize),
    back: (isize, isize),
) -> Option<((isize, isize), (isize, isize))> {
    let start = moore_index(back.0 - p.0, back.1 - p.1);
    let mut prev = back;
    for k in 1..=8 {
        let (dx, dy) = MOORE[(start + k) % 8];
        let q = (p.0 + dx, p.1 + dy);
        if mask.get_signed(q.0, q.1) {
            return Some((q, prev));
        }
        prev = q;
    }
    None
}

/// Clockwise Moore-neighbour trace of the component holding the topmost,
/// then leftmost, foreground pixel. Tracing stops when the start pixel is
/// about to repeat its first move.
pub fn trace_boundary(mask: &BinaryMask) -> Result<Vec<(usize, usize)>> {
    let (sx, sy) = mask
        .pixels()
        .next()
        .ok_or_else(|| Error::InvalidInput("cannot trace an empty mask".into()))?;
    let start = (sx as isize, sy as isize);
    let as_u = |p: (isize, isize)| (p.0 as usize, p.1 as usize);
    let Some(first) = moore_step(mask, start, (start.0 - 1, start.1)) else {
        return Ok(vec![(sx, sy)]);
    };
    let limit = 4 * mask.count() + 8;
    let mut chain = vec![(sx, sy)];
    let (mut cur, mut back) = first;
    loop {
        if cur == start && moore_step(mask, cur, back) == Some(first) {
            break;
        }
        chain.push(as_u(cur));
        if chain.len() > limit {
            return Err(Error::InvalidInput("boundary trace did not close".into()));
        }
        (cur, back) = moore_step(mask, cur, back).expect("connected neighbour");
    }
    Ok(chain)
}

/// Ellipse with the mask's centroid and second central moments.
pub fn fit_ellipse(mask: &BinaryMask) -> Result<TiltedEllipse> {
    let n = mask.count();
    if n < 5 {
        return Err(Error::InvalidInput(format!(
            "ellipse fit needs at least 5 pixels, got {n}"
        )));
    }
    let (x0, y0) = mask.centroid().expect("non-empty");
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in mask.pixels() {
        let (dx, dy) = (x as f64 - x0, y as f64 - y0);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let nf = n as f64;
    let (sxx, syy, sxy) = (sxx / nf, syy / nf, sxy / nf);
    let mean = 0.5 * (sxx + syy);
    let rad = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
    let (l1, l2) = (mean + rad, mean - rad);
    if l2 <= 1e-9 * l1.max(1.0) {
        return Err(Error::DegenerateRegion);
    }
    // A uniform ellipse with semi-axis s has variance s^2 / 4 along it.
    let (major, minor) = (2.0 * l1.sqrt(), 2.0 * l2.sqrt());
    let mut theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    if theta < 0.0 {
        theta += PI;
    }
    if theta >= PI {
        theta -= PI;
    }
    let near_horizontal = theta <= FRAC_PI_4 || theta >= 3.0 * FRAC_PI_4;
    let (a, b) = if near_horizontal {
        (major, minor)
    } else {
        (minor, major)
    };
    Ok(TiltedEllipse {
        x0,
        y0,
        a,
        b,
        theta,
    })
}
