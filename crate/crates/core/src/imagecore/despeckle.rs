//! Classical speckle suppression: Lee local-statistics filter and median filter.

use serde::{Deserialize, Serialize};

use super::grid::{ImageGrid, ValueDomain};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Despeckle {
    Lee { window: usize },
    Median { window: usize },
    Passthrough,
}

impl Default for Despeckle {
    fn default() -> Self {
        Despeckle::Lee { window: 7 }
    }
}

/// Apply the configured despeckler. Output stays in the raw-u8 domain.
pub fn despeckle(img: &ImageGrid, method: Despeckle) -> Result<ImageGrid> {
    if img.domain() != ValueDomain::RawU8 {
        return Err(Error::InvalidInput("despeckle expects a raw-u8 image".into()));
    }
    match method {
        Despeckle::Passthrough => Ok(img.clone()),
        Despeckle::Lee { window } => {
            check_window(img, window)?;
            lee(img, window)
        }
        Despeckle::Median { window } => {
            check_window(img, window)?;
            median(img, window)
        }
    }
}

fn check_window(img: &ImageGrid, window: usize) -> Result<()> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "despeckle window must be odd, got {window}"
        )));
    }
    if window > img.width() || window > img.height() {
        return Err(Error::InvalidInput(format!(
            "despeckle window {window} larger than {}x{} image",
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

/// Local window sums over a replicate-padded image via summed-area tables.
pub(crate) struct WindowStats {
    width: usize,
    stride: usize,
    half: usize,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl WindowStats {
    pub(crate) fn new(img: &ImageGrid, window: usize) -> Self {
        let half = window / 2;
        let pw = img.width() + 2 * half;
        let ph = img.height() + 2 * half;
        let stride = pw + 1;
        let mut s1 = vec![0.0; stride * (ph + 1)];
        let mut s2 = vec![0.0; stride * (ph + 1)];
        for py in 0..ph {
            let y = py as isize - half as isize;
            let (mut r1, mut r2) = (0.0, 0.0);
            for px in 0..pw {
                let v = img.get_clamped(px as isize - half as isize, y);
                r1 += v;
                r2 += v * v;
                s1[(py + 1) * stride + px + 1] = s1[py * stride + px + 1] + r1;
                s2[(py + 1) * stride + px + 1] = s2[py * stride + px + 1] + r2;
            }
        }
        Self {
            width: img.width(),
            stride,
            half,
            s1,
            s2,
        }
    }

    /// (mean, population variance) of the window centred on `(x, y)`.
    pub(crate) fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let w = 2 * self.half + 1;
        let (x0, y0, x1, y1) = (x, y, x + w, y + w);
        let rect = |s: &[f64]| {
            s[y1 * self.stride + x1] - s[y0 * self.stride + x1] - s[y1 * self.stride + x0]
                + s[y0 * self.stride + x0]
        };
        let n = (w * w) as f64;
        let mean = rect(&self.s1) / n;
        let var = (rect(&self.s2) / n - mean * mean).max(0.0);
        debug_assert!(x < self.width);
        (mean, var)
    }
}

fn lee(img: &ImageGrid, window: usize) -> Result<ImageGrid> {
    let stats = WindowStats::new(img, window);
    let (w, h) = (img.width(), img.height());
    let local: Vec<(f64, f64)> = (0..w * h).map(|i| stats.at(i % w, i / w)).collect();

    // Speckle coefficient of variation: median of local Ci^2 over nonzero-mean windows.
    let mut ci2: Vec<f64> = local
        .iter()
        .filter(|(m, _)| *m > 0.0)
        .map(|(m, v)| v / (m * m))
        .collect();
    let cu2 = if ci2.is_empty() {
        0.0
    } else {
        let mid = ci2.len() / 2;
        *ci2.select_nth_unstable_by(mid, f64::total_cmp).1
    };

    let data = img
        .data()
        .iter()
        .zip(&local)
        .map(|(&x, &(m, v))| {
            let out = if v <= 0.0 || m <= 0.0 {
                x
            } else {
                let weight = (1.0 - cu2 * m * m / v).clamp(0.0, 1.0);
                m + weight * (x - m)
            };
            out.round().clamp(0.0, 255.0)
        })
        .collect();
    ImageGrid::new(w, h, data, ValueDomain::RawU8)
}

fn median(img: &ImageGrid, window: usize) -> Result<ImageGrid> {
    let half = (window / 2) as isize;
    let mut buf = Vec::with_capacity(window * window);
    let data = (0..img.len())
        .map(|i| {
            let (x, y) = ((i % img.width()) as isize, (i / img.width()) as isize);
            buf.clear();
            for dy in -half..=half {
                for dx in -half..=half {
                    buf.push(img.get_clamped(x + dx, y + dy));
                }
            }
            let mid = buf.len() / 2;
            *buf.select_nth_unstable_by(mid, f64::total_cmp).1
        })
        .collect();
    ImageGrid::new(img.width(), img.height(), data, ValueDomain::RawU8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn raw(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> ImageGrid {
        ImageGrid::from_fn(w, h, ValueDomain::RawU8, f).unwrap()
    }

    fn variance(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
    }

    #[test]
    fn constant_image_is_unchanged() {
        let img = raw(20, 15, |_, _| 100.0);
        for m in [
            Despeckle::Lee { window: 7 },
            Despeckle::Median { window: 3 },
            Despeckle::Passthrough,
        ] {
            assert_eq!(despeckle(&img, m).unwrap(), img);
        }
    }

    #[test]
    fn multiplicative_speckle_variance_drops() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::<f64>::new(1.0, 0.3).unwrap();
        let img = raw(64, 64, |_, _| {
            (100.0 * noise.sample(&mut rng)).round().clamp(0.0, 255.0)
        });
        let roi = |g: &ImageGrid| -> Vec<f64> {
            (16..48)
                .flat_map(|y| (16..48).map(move |x| (x, y)))
                .map(|(x, y)| g.get(x, y))
                .collect()
        };
        for m in [Despeckle::Lee { window: 7 }, Despeckle::Median { window: 7 }] {
            let out = despeckle(&img, m).unwrap();
            assert!(variance(&roi(&out)) < variance(&roi(&img)), "{m:?}");
        }
    }

    #[test]
    fn window_larger_than_image_errors() {
        let img = raw(1, 1, |_, _| 5.0);
        assert!(despeckle(&img, Despeckle::Median { window: 3 }).is_err());
        assert!(despeckle(&img, Despeckle::Lee { window: 3 }).is_err());
    }

    #[test]
    fn output_stays_raw_u8_and_same_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = raw(17, 9, |_, _| rng.random_range(0..=255) as f64);
        for m in [Despeckle::Lee { window: 5 }, Despeckle::Median { window: 5 }] {
            let out = despeckle(&img, m).unwrap();
            assert_eq!(out.shape(), img.shape());
            assert_eq!(out.domain(), ValueDomain::RawU8);
        }
    }

    #[test]
    fn window_stats_match_brute_force() {
        let img = raw(6, 5, |x, y| (x * 3 + y * y) as f64);
        let s = WindowStats::new(&img, 3);
        for y in 0..5 {
            for x in 0..6 {
                let vals: Vec<f64> = (-1..=1)
                    .flat_map(|dy| (-1..=1).map(move |dx| (dx, dy)))
                    .map(|(dx, dy)| img.get_clamped(x as isize + dx, y as isize + dy))
                    .collect();
                let m = vals.iter().sum::<f64>() / 9.0;
                let (sm, sv) = s.at(x, y);
                assert!((sm - m).abs() < 1e-12);
                assert!((sv - variance(&vals)).abs() < 1e-9);
            }
        }
    }
}
