use super::grid::{ImageGrid, ValueDomain};
use crate::error::{Error, Result};

/// Standardize (population std), clip to [-3, 3], map to integer levels
/// `round((z + 3) / 6 * 255)`. A zero-variance image maps to 128 everywhere.
pub fn normalize(img: &ImageGrid) -> Result<ImageGrid> {
    if img.domain() != ValueDomain::RawU8 {
        return Err(Error::InvalidInput("normalize expects a raw-u8 image".into()));
    }
    let n = img.len() as f64;
    let mean = img.mean();
    let var = img.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return img.map(ValueDomain::RawU8, |_| 128.0);
    }
    img.map(ValueDomain::RawU8, |v| {
        let z = ((v - mean) / std).clamp(-3.0, 3.0);
        ((z + 3.0) / 6.0 * 255.0).round()
    })
}
