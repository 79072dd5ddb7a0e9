//! Autoregressive (Yule-Walker) spectra sampled along an ellipse sub-axis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::ImageGrid;
use crate::segmentation::TiltedEllipse;

pub const DEFAULT_AR_ORDER: usize = 10;
pub const PSD_POINTS: usize = 512;
/// Minimum topographic prominence of a reported peak.
pub const PEAK_PROMINENCE_DB: f64 = 3.0;
/// Frequency reported for missing peaks.
pub const NO_PEAK: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubAxis {
    /// The `b` axis (closer to vertical).
    #[default]
    Vertical,
    /// The `a` axis (closer to horizontal).
    Horizontal,
}

/// AR coefficients `a[1..=p]` (x[n] + sum a_k x[n-k] = e[n]) and the
/// innovation variance, from biased autocorrelations via Levinson-Durbin.
pub fn yule_walker(x: &[f64], order: usize) -> Result<(Vec<f64>, f64)> {
    let n = x.len();
    if order == 0 || n < 2 * order {
        return Err(Error::InvalidInput(format!(
            "AR({order}) needs at least {} samples, got {n}",
            2 * order
        )));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let r: Vec<f64> = (0..=order)
        .map(|k| d[..n - k].iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect();
    if !(r[0] > 0.0) {
        return Err(Error::DegenerateSample);
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    for m in 1..=order {
        let acc: f64 = (0..m).map(|j| a[j] * r[m - j]).sum();
        let k = -acc / err;
        let prev = a.clone();
        for j in 1..m {
            a[j] = prev[j] + k * prev[m - j];
        }
        a[m] = k;
        err *= 1.0 - k * k;
        if !(err > 0.0) {
            err = f64::MIN_POSITIVE;
            break;
        }
    }
    Ok((a[1..].to_vec(), err))
}

/// AR power spectrum at `points` frequencies evenly spaced on [0, 0.5].
pub fn ar_spectrum(coeffs: &[f64], variance: f64, points: usize) -> Vec<(f64, f64)> {
    (0..points)
        .map(|j| {
            let f = 0.5 * j as f64 / (points - 1) as f64;
            let (mut re, mut im) = (1.0, 0.0);
            for (k, a) in coeffs.iter().enumerate() {
                let w = 2.0 * PI * f * (k + 1) as f64;
                re += a * w.cos();
                im -= a * w.sin();
            }
            (f, variance / (re * re + im * im))
        })
        .collect()
}

/// Interior local maxima whose topographic prominence (in dB) reaches
/// `min_db`, in ascending frequency.
pub fn prominent_peaks(spectrum: &[(f64, f64)], min_db: f64) -> Vec<f64> {
    let db: Vec<f64> = spectrum.iter().map(|&(_, p)| 10.0 * p.max(1e-300).log10()).collect();
    let n = db.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(db[i] > db[i - 1] && db[i] >= db[i + 1]) {
            continue;
        }
        // Lowest point on each side before reaching higher ground.
        let mut left = db[i];
        for j in (0..i).rev() {
            if db[j] > db[i] {
                break;
            }
            left = left.min(db[j]);
        }
        let mut right = db[i];
        for &v in &db[i + 1..] {
            if v > db[i] {
                break;
            }
            right = right.min(v);
        }
        if db[i] - left.max(right) >= min_db {
            out.push(spectrum[i].0);
        }
    }
    out
}

/// First three prominent peak frequencies of a 1-D signal, padded with 0.5.
pub fn psd_peaks_of_signal(x: &[f64], order: usize) -> Result<[f64; 3]> {
    let (a, v) = yule_walker(x, order)?;
    let peaks = prominent_peaks(&ar_spectrum(&a, v, PSD_POINTS), PEAK_PROMINENCE_DB);
    let mut out = [NO_PEAK; 3];
    for (o, p) in out.iter_mut().zip(peaks) {
        *o = p;
    }
    Ok(out)
}

fn bilinear(img: &ImageGrid, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (xi, yi) = (x0 as isize, y0 as isize);
    let g = |dx: isize, dy: isize| img.get_clamped(xi + dx, yi + dy);
    (1.0 - fy) * ((1.0 - fx) * g(0, 0) + fx * g(1, 0)) + fy * ((1.0 - fx) * g(0, 1) + fx * g(1, 1))
}

/// Endpoints of the chosen sub-axis through the ellipse centre.
pub fn sub_axis_segment(e: &TiltedEllipse, axis: SubAxis) -> ((f64, f64), (f64, f64)) {
    let (phi, len) = match axis {
        SubAxis::Horizontal => (e.a_angle(), e.a),
        SubAxis::Vertical => (e.a_angle() + PI / 2.0, e.b),
    };
    let (dx, dy) = (len * phi.cos(), len * phi.sin());
    ((e.x0 - dx, e.y0 - dy), (e.x0 + dx, e.y0 + dy))
}

/// Bilinear samples at unit spacing along a segment, centred on its midpoint.
pub fn sample_segment(img: &ImageGrid, p: (f64, f64), q: (f64, f64)) -> Vec<f64> {
    let len = (q.0 - p.0).hypot(q.1 - p.1);
    let half = (len / 2.0).floor() as isize;
    let (mx, my) = (0.5 * (p.0 + q.0), 0.5 * (p.1 + q.1));
    let (ux, uy) = if len > 0.0 {
        ((q.0 - p.0) / len, (q.1 - p.1) / len)
    } else {
        (0.0, 0.0)
    };
    (-half..=half)
        .map(|t| bilinear(img, mx + t as f64 * ux, my + t as f64 * uy))
        .collect()
}

/// PSD peak frequencies of the pixels along an ellipse sub-axis.
pub fn psd_peaks(e: &TiltedEllipse, img: &ImageGrid, axis: SubAxis, order: usize) -> Result<[f64; 3]> {
    let (p, q) = sub_axis_segment(e, axis);
    psd_peaks_of_signal(&sample_segment(img, p, q), order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar1_is_recovered() {
        // x[n] = 0.6 x[n-1] + e[n] via a deterministic pseudo-noise drive.
        let mut x = vec![0.0f64];
        let mut s = 12345u64;
        for _ in 0..20000 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let e = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            let prev = *x.last().unwrap();
            x.push(0.6 * prev + e);
        }
        let (a, _) = yule_walker(&x, 1).unwrap();
        assert!((a[0] + 0.6).abs() < 0.02, "{a:?}");
    }

    #[test]
    fn flat_spectrum_has_no_peaks() {
        let s = ar_spectrum(&[], 1.0, 64);
        assert!(prominent_peaks(&s, 3.0).is_empty());
    }

    #[test]
    fn short_signal_rejected() {
        assert!(yule_walker(&[1.0, 2.0, 3.0], 2).is_err());
    }
}
