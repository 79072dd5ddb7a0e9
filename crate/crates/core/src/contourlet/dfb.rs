//! Tree-structured directional filter bank (2^l wedge subbands).
//!
//! Each node is a two-channel fan filter bank in ladder form on a quincunx
//! polyphase split. The first two tree levels use quincunx sampling, deeper
//! levels parallelogram sampling; for two or more tree levels a final
//! backsampling step makes every subband rectangular: the first half is
//! `(rows / 2^(l-1)) x (cols / 2)`, the second half `(rows / 2) x (cols / 2^(l-1))`.

use std::f64::consts::SQRT_2;

use super::filters::ladder_filter;
use super::lattice::{Lattice, Mat2, PSig};
use crate::error::{Error, Result};
use crate::imagecore::{ImageGrid, ValueDomain};

/// Shear `R_t` with parameter `s`.
fn shear(t: u8, s: i64) -> Mat2 {
    match t {
        1 => [[1, s], [0, 1]],
        2 => [[1, -s], [0, 1]],
        3 => [[1, 0], [s, 1]],
        4 => [[1, 0], [-s, 1]],
        _ => unreachable!(),
    }
}

/// Polyphase split used by a tree node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NodeType {
    /// First level: quincunx split on rows.
    Q1,
    /// Second level: quincunx split on columns.
    Q2,
    /// Parallelogram splits for deeper levels.
    P(u8),
}

struct Split {
    pre: Option<u8>,
    d: (i64, i64),
    e: (i64, i64),
    post: u8,
}

impl NodeType {
    fn split(self) -> Split {
        let (pre, d, e, post) = match self {
            NodeType::Q1 => (Some(2), (2, 1), (1, 1), 3),
            NodeType::Q2 => (Some(4), (1, 2), (1, 1), 1),
            NodeType::P(1) => (None, (2, 1), (1, 1), 3),
            NodeType::P(2) => (None, (2, 1), (1, 0), 4),
            NodeType::P(3) => (None, (1, 2), (1, 1), 1),
            NodeType::P(4) => (None, (1, 2), (0, 1), 2),
            NodeType::P(_) => unreachable!(),
        };
        Split { pre, d, e, post }
    }

    /// Node type for the k-th (1-based) parent at tree level `l >= 3`.
    fn deep(k: usize, l: u32) -> Self {
        let half = 1usize << (l - 2);
        NodeType::P(if k <= half {
            ((k - 1) % 2 + 1) as u8
        } else {
            ((k - 1) % 2 + 3) as u8
        })
    }
}

fn inv_shear(t: u8) -> u8 {
    match t {
        1 => 2,
        2 => 1,
        3 => 4,
        4 => 3,
        _ => unreachable!(),
    }
}

fn pre_lattice(x: Lattice, ty: NodeType) -> Lattice {
    match ty.split().pre {
        Some(p) => x.resampled(&shear(p, 1)),
        None => x,
    }
}

fn child_lattice(x: Lattice, ty: NodeType) -> Lattice {
    let sp = ty.split();
    pre_lattice(x, ty)
        .downsampled(sp.d)
        .resampled(&shear(sp.post, 1))
}

struct Ladder {
    f: Vec<f64>,
    lo: i64,
}

impl Ladder {
    fn new() -> Self {
        let f = ladder_filter();
        let lo = (f.len() as i64 - 1) / 2;
        Self { f, lo }
    }

    fn apply(&self, x: &PSig, shift: i64) -> PSig {
        x.sep_filter(&self.f, self.lo + shift)
    }

    /// Two-channel analysis; returns `(y1, y2)`.
    fn analyze(&self, x: &PSig, ty: NodeType) -> (PSig, PSig) {
        let sp = ty.split();
        let pre = match sp.pre {
            Some(p) => x.resample(&shear(p, 1)),
            None => x.clone(),
        };
        let post = shear(sp.post, 1);
        let p0 = pre.downsample(sp.d, (0, 0)).resample(&post);
        let p1 = pre.downsample(sp.d, sp.e).resample(&post);
        let y1 = p0.zip_with(&self.apply(&p1, 1), |a, b| (a - b) / SQRT_2);
        let y2 = p1.zip_with(&self.apply(&y1, 0), |a, b| -SQRT_2 * a - b);
        (y1, y2)
    }

    /// Inverse of [`Ladder::analyze`] for a node whose input lives on `xlat`.
    fn synthesize(&self, y1: &PSig, y2: &PSig, ty: NodeType, xlat: Lattice) -> PSig {
        let sp = ty.split();
        let p1 = y2.zip_with(&self.apply(y1, 0), |a, b| -(a + b) / SQRT_2);
        let p0 = y1.zip_with(&self.apply(&p1, 1), |a, b| SQRT_2 * a + b);
        let back = shear(inv_shear(sp.post), 1);
        let q0 = p0.resample(&back);
        let q1 = p1.resample(&back);
        let y = PSig::interleave(&q0, &q1, sp.d, sp.e, pre_lattice(xlat, ty));
        match sp.pre {
            Some(p) => y.resample(&shear(inv_shear(p), 1)),
            None => y,
        }
    }
}

fn levels_for(num_directions: usize) -> Result<u32> {
    match num_directions {
        2 | 4 | 8 | 16 | 32 => Ok(num_directions.trailing_zeros()),
        _ => Err(Error::InvalidInput(format!(
            "unsupported direction count {num_directions}; expected 2, 4, 8, 16 or 32"
        ))),
    }
}

/// Side-length multiple a band must have for an `num_directions` DFB.
pub fn dfb_period(num_directions: usize) -> Result<usize> {
    let l = levels_for(num_directions)?;
    Ok(1usize << l.saturating_sub(1).max(1))
}

fn check_shape(rows: usize, cols: usize, num_directions: usize) -> Result<()> {
    let p = dfb_period(num_directions)?;
    if rows % p != 0 || cols % p != 0 {
        return Err(Error::InvalidInput(format!(
            "{rows}x{cols} band is not a multiple of {p} as needed for {num_directions} directions"
        )));
    }
    Ok(())
}

fn to_psig(g: &ImageGrid) -> PSig {
    PSig::new(Lattice::rect(g.height(), g.width()), g.data().to_vec())
}

/// Store one period block; a sheared lattice (two-direction case) is
/// recovered from the band shape on reconstruction.
fn to_grid(p: PSig) -> Result<ImageGrid> {
    ImageGrid::new(
        p.lat.c as usize,
        p.lat.r as usize,
        p.data,
        ValueDomain::Coefficient,
    )
}

/// Backsampling shift for subband pair `k` (1-based) at depth `n`.
fn backsample_shift(k: usize, n: u32) -> i64 {
    2 * k as i64 - ((1i64 << (n - 2)) + 1)
}

/// Split `band` into `num_directions` directional subbands.
pub fn dfb_decompose(band: &ImageGrid, num_directions: usize) -> Result<Vec<ImageGrid>> {
    let n = levels_for(num_directions)?;
    check_shape(band.height(), band.width(), num_directions)?;
    let lad = Ladder::new();
    let x = to_psig(band);

    let (x0, x1) = lad.analyze(&x, NodeType::Q1);
    if n == 1 {
        return [x0, x1].into_iter().map(to_grid).collect();
    }
    let mut y: Vec<PSig> = Vec::with_capacity(4);
    for xi in [&x0, &x1] {
        let (a, b) = lad.analyze(xi, NodeType::Q2);
        y.push(b);
        y.push(a);
    }
    for l in 3..=n {
        let mut next = Vec::with_capacity(1 << l);
        for (k, node) in y.iter().enumerate() {
            let (a, b) = lad.analyze(node, NodeType::deep(k + 1, l));
            next.push(b);
            next.push(a);
        }
        y = next;
    }
    if n > 2 {
        let half = 1usize << (n - 1);
        for k in 1..=(1usize << (n - 2)) {
            let sh = backsample_shift(k, n);
            for c in [2 * k - 2, 2 * k - 1] {
                y[c] = y[c].resample(&shear(3, sh));
                y[c + half] = y[c + half].resample(&shear(1, sh));
            }
        }
    }
    let half = y.len() / 2;
    y[half..].reverse();
    y.into_iter().map(to_grid).collect()
}

/// Inverse of [`dfb_decompose`] for a band of `rows x cols`.
pub fn dfb_reconstruct(subbands: &[ImageGrid], rows: usize, cols: usize) -> Result<ImageGrid> {
    let num_directions = subbands.len();
    let n = levels_for(num_directions)?;
    check_shape(rows, cols, num_directions)?;
    let lad = Ladder::new();

    // Node lattices of the forward tree, level by level.
    let root = Lattice::rect(rows, cols);
    let l1 = child_lattice(root, NodeType::Q1);
    let mut level_lats: Vec<Vec<Lattice>> = vec![vec![l1; 2]];
    if n >= 2 {
        level_lats.push(vec![child_lattice(l1, NodeType::Q2); 4]);
    }
    for l in 3..=n {
        let prev = level_lats.last().unwrap();
        let cur = prev
            .iter()
            .enumerate()
            .flat_map(|(k, &lat)| {
                let c = child_lattice(lat, NodeType::deep(k + 1, l));
                [c, c]
            })
            .collect();
        level_lats.push(cur);
    }
    // Lattices of the final subbands: leaves, backsampled, second half flipped.
    let mut out_lats = level_lats.last().unwrap().clone();
    let half = out_lats.len() / 2;
    if n > 2 {
        for k in 1..=(1usize << (n - 2)) {
            let sh = backsample_shift(k, n);
            for c in [2 * k - 2, 2 * k - 1] {
                out_lats[c] = out_lats[c].resampled(&shear(3, sh));
                out_lats[c + half] = out_lats[c + half].resampled(&shear(1, sh));
            }
        }
    }
    out_lats[half..].reverse();

    let mut y: Vec<PSig> = Vec::with_capacity(num_directions);
    for (g, lat) in subbands.iter().zip(&out_lats) {
        if (g.height() as i64, g.width() as i64) != (lat.r, lat.c) {
            return Err(Error::DimensionMismatch(format!(
                "subband shape {}x{} does not match a {rows}x{cols} band",
                g.height(),
                g.width()
            )));
        }
        y.push(PSig::new(*lat, g.data().to_vec()));
    }
    y[half..].reverse();
    if n > 2 {
        for k in 1..=(1usize << (n - 2)) {
            let sh = backsample_shift(k, n);
            for c in [2 * k - 2, 2 * k - 1] {
                y[c] = y[c].resample(&shear(4, sh));
                y[c + half] = y[c + half].resample(&shear(2, sh));
            }
        }
    }

    for l in (3..=n).rev() {
        let parents = &level_lats[(l - 2) as usize];
        y = parents
            .iter()
            .enumerate()
            .map(|(k, &plat)| {
                lad.synthesize(&y[2 * k + 1], &y[2 * k], NodeType::deep(k + 1, l), plat)
            })
            .collect();
    }
    let x = if n == 1 {
        lad.synthesize(&y[0], &y[1], NodeType::Q1, root)
    } else {
        let x0 = lad.synthesize(&y[1], &y[0], NodeType::Q2, l1);
        let x1 = lad.synthesize(&y[3], &y[2], NodeType::Q2, l1);
        lad.synthesize(&x0, &x1, NodeType::Q1, root)
    };
    to_grid(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> ImageGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageGrid::from_fn(cols, rows, ValueDomain::Coefficient, |_, _| {
            rng.random_range(-1.0..1.0)
        })
        .unwrap()
    }

    fn max_abs_diff(a: &ImageGrid, b: &ImageGrid) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn perfect_reconstruction_all_depths() {
        for (d, rows, cols) in [(2, 16, 16), (4, 16, 24), (8, 32, 32), (16, 32, 64), (32, 64, 64)] {
            let x = random(rows, cols, d as u64);
            let sb = dfb_decompose(&x, d).unwrap();
            assert_eq!(sb.len(), d);
            let r = dfb_reconstruct(&sb, rows, cols).unwrap();
            assert!(max_abs_diff(&x, &r) < 1e-9, "{d} directions");
        }
    }

    #[test]
    fn critical_sampling_and_shapes() {
        let x = random(128, 128, 1);
        let sb = dfb_decompose(&x, 8).unwrap();
        let total: usize = sb.iter().map(|g| g.len()).sum();
        assert_eq!(total, 16384);
        for (i, g) in sb.iter().enumerate() {
            let want = if i < 4 { (32, 64) } else { (64, 32) };
            assert_eq!(g.shape(), want, "subband {i}");
        }
    }

    #[test]
    fn unsupported_direction_count() {
        let x = random(16, 16, 2);
        assert!(dfb_decompose(&x, 3).is_err());
        assert!(dfb_decompose(&x, 64).is_err());
        assert!(dfb_decompose(&x, 1).is_err());
    }

    #[test]
    fn shape_must_match_sampling_period() {
        let x = random(12, 16, 3);
        assert!(dfb_decompose(&x, 16).is_err());
    }
}
