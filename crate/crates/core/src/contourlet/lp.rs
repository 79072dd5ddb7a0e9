//! Laplacian pyramid with periodic extension.

use super::filters::{PyramidFilters, Taps};
use crate::error::{Error, Result};
use crate::imagecore::{ImageGrid, ValueDomain};

/// Output of [`lp_decompose`]: coarse lowpass plus one detail band per level,
/// finest first.
#[derive(Clone, Debug, PartialEq)]
pub struct Pyramid {
    pub lowpass: ImageGrid,
    pub details: Vec<ImageGrid>,
    pub filters: PyramidFilters,
}

#[derive(Clone, Copy)]
enum Axis {
    Rows,
    Cols,
}

/// Filter along `axis` and keep even samples.
fn reduce_axis(x: &[f64], rows: usize, cols: usize, t: &Taps, axis: Axis) -> Vec<f64> {
    match axis {
        Axis::Cols => {
            let oc = cols / 2;
            let mut out = vec![0.0; rows * oc];
            for i in 0..rows {
                let row = &x[i * cols..(i + 1) * cols];
                for m in 0..oc {
                    let mut acc = 0.0;
                    for (k, &f) in t.f.iter().enumerate() {
                        let j = (2 * m as i64 - t.off + k as i64).rem_euclid(cols as i64);
                        acc += f * row[j as usize];
                    }
                    out[i * oc + m] = acc;
                }
            }
            out
        }
        Axis::Rows => {
            let or = rows / 2;
            let mut out = vec![0.0; or * cols];
            for m in 0..or {
                let dst = &mut out[m * cols..(m + 1) * cols];
                for (k, &f) in t.f.iter().enumerate() {
                    let i = (2 * m as i64 - t.off + k as i64).rem_euclid(rows as i64) as usize;
                    for (d, s) in dst.iter_mut().zip(&x[i * cols..(i + 1) * cols]) {
                        *d += f * s;
                    }
                }
            }
            out
        }
    }
}

/// Upsample by two along `axis` (zeros at odd samples) and filter.
fn expand_axis(c: &[f64], rows: usize, cols: usize, t: &Taps, axis: Axis) -> Vec<f64> {
    match axis {
        Axis::Cols => {
            let oc = cols * 2;
            let mut out = vec![0.0; rows * oc];
            for i in 0..rows {
                let row = &c[i * cols..(i + 1) * cols];
                for n in 0..oc {
                    let mut acc = 0.0;
                    for (k, &f) in t.f.iter().enumerate() {
                        let u = (n as i64 - t.off + k as i64).rem_euclid(oc as i64);
                        if u % 2 == 0 {
                            acc += f * row[(u / 2) as usize];
                        }
                    }
                    out[i * oc + n] = acc;
                }
            }
            out
        }
        Axis::Rows => {
            let or = rows * 2;
            let mut out = vec![0.0; or * cols];
            for n in 0..or {
                let dst = &mut out[n * cols..(n + 1) * cols];
                for (k, &f) in t.f.iter().enumerate() {
                    let u = (n as i64 - t.off + k as i64).rem_euclid(or as i64);
                    if u % 2 == 0 {
                        let src = &c[(u / 2) as usize * cols..((u / 2) as usize + 1) * cols];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += f * s;
                        }
                    }
                }
            }
            out
        }
    }
}

fn reduce(x: &[f64], rows: usize, cols: usize, t: &Taps) -> Vec<f64> {
    let a = reduce_axis(x, rows, cols, t, Axis::Cols);
    reduce_axis(&a, rows, cols / 2, t, Axis::Rows)
}

fn expand(c: &[f64], rows: usize, cols: usize, t: &Taps) -> Vec<f64> {
    let a = expand_axis(c, rows, cols, t, Axis::Cols);
    expand_axis(&a, rows, cols * 2, t, Axis::Rows)
}

/// Decompose into `levels` detail bands; level `l` (1-based) has dims
/// `input / 2^(l-1)`, the lowpass `input / 2^levels`.
pub fn lp_decompose(img: &ImageGrid, levels: usize, filters: PyramidFilters) -> Result<Pyramid> {
    if levels == 0 {
        return Err(Error::InvalidInput("pyramid needs at least one level".into()));
    }
    let p = 1usize << levels.min(40);
    if levels > 40 || img.width() % p != 0 || img.height() % p != 0 {
        return Err(Error::InvalidInput(format!(
            "{levels} pyramid levels too deep for a {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let (ta, ts) = (filters.analysis(), filters.synthesis());
    let (mut rows, mut cols) = img.shape();
    let mut cur = img.data().to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let c = reduce(&cur, rows, cols, &ta);
        let e = expand(&c, rows / 2, cols / 2, &ts);
        let d: Vec<f64> = cur.iter().zip(&e).map(|(a, b)| a - b).collect();
        details.push(ImageGrid::new(cols, rows, d, ValueDomain::Coefficient)?);
        cur = c;
        rows /= 2;
        cols /= 2;
    }
    Ok(Pyramid {
        lowpass: ImageGrid::new(cols, rows, cur, ValueDomain::Coefficient)?,
        details,
        filters,
    })
}

/// Invert [`lp_decompose`]: `x = d + expand(c)` from the coarsest level up.
pub fn lp_reconstruct(pyr: &Pyramid) -> Result<ImageGrid> {
    let ts = pyr.filters.synthesis();
    let mut cur = pyr.lowpass.clone();
    for d in pyr.details.iter().rev() {
        if d.width() != 2 * cur.width() || d.height() != 2 * cur.height() {
            return Err(Error::DimensionMismatch(format!(
                "detail {}x{} does not double coarse band {}x{}",
                d.width(),
                d.height(),
                cur.width(),
                cur.height()
            )));
        }
        let e = expand(cur.data(), cur.height(), cur.width(), &ts);
        let x: Vec<f64> = d.data().iter().zip(&e).map(|(a, b)| a + b).collect();
        cur = ImageGrid::new(d.width(), d.height(), x, ValueDomain::Coefficient)?;
    }
    Ok(cur)
}
