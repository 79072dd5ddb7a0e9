//! Pixel-count ratio features and ROI texture spread.

use log::debug;

use crate::error::{Error, Result};
use crate::imagecore::{BinaryMask, ImageGrid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EchoRatios {
    pub hypo: f64,
    pub micro_lobulation: f64,
    pub homogeneous: f64,
    pub heterogeneous: f64,
    pub micro_calcification: f64,
}

pub(crate) fn roi_values(img: &ImageGrid, roi: &BinaryMask) -> Result<Vec<f64>> {
    if (img.width(), img.height()) != (roi.width(), roi.height()) {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{} vs ROI {}x{}",
            img.width(),
            img.height(),
            roi.width(),
            roi.height()
        )));
    }
    let v: Vec<f64> = roi.pixels().map(|(x, y)| img.get(x, y)).collect();
    if v.is_empty() {
        return Err(Error::InvalidInput("ROI is empty".into()));
    }
    Ok(v)
}

/// `num / den` with a zero denominator clamped to 1.
fn safe_ratio(num: usize, den: usize, what: &str) -> f64 {
    if den == 0 {
        debug!("{what}: zero denominator, reporting the numerator count");
        num as f64
    } else {
        num as f64 / den as f64
    }
}

/// The five ratio features over ROI pixels. Thresholds are the mean, the
/// standard deviation and the variance of the ROI magnitudes (population
/// forms); comparisons use the signed values.
pub fn echo_ratio_features(img: &ImageGrid, roi: &BinaryMask) -> Result<EchoRatios> {
    let v = roi_values(img, roi)?;
    Ok(echo_ratios_of(&v))
}

pub(crate) fn echo_ratios_of(v: &[f64]) -> EchoRatios {
    let n = v.len();
    let nf = n as f64;
    let mean_abs = v.iter().map(|x| x.abs()).sum::<f64>() / nf;
    let var_abs = v.iter().map(|x| (x.abs() - mean_abs).powi(2)).sum::<f64>() / nf;
    let std_abs = var_abs.sqrt();
    let count = |f: &dyn Fn(f64) -> bool| v.iter().filter(|&&x| f(x)).count();

    let below_mean = count(&|x| x < mean_abs);
    let nonneg = count(&|x| x >= 0.0);
    let above_var = count(&|x| x >= var_abs);
    EchoRatios {
        hypo: safe_ratio(below_mean, n - below_mean, "Hypo_echo"),
        micro_lobulation: count(&|x| x >= std_abs) as f64 / nf,
        homogeneous: nonneg as f64 / nf,
        heterogeneous: (n - nonneg) as f64 / nf,
        micro_calcification: safe_ratio(above_var, n - above_var, "MicroCal_echo"),
    }
}

/// Sample standard deviation of the ROI values.
pub fn texture_std(img: &ImageGrid, roi: &BinaryMask) -> Result<f64> {
    let v = roi_values(img, roi)?;
    sample_std(&v)
}

pub(crate) fn sample_std(v: &[f64]) -> Result<f64> {
    if v.len() < 2 {
        return Err(Error::InvalidInput(
            "texture spread needs at least 2 ROI pixels".into(),
        ));
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    Ok((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}
