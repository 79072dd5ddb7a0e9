use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Label;
use crate::imagecore::{save_image, save_mask, BinaryMask, ImageGrid, ValueDomain};
use crate::statmodel::{riig_sample, RiIGParams};

/// Synthetic B-mode set: speckle background with an elliptical hypoechoic
/// lesion whose RiIG dispersion depends on the class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSpec {
    pub cases: usize,
    pub side: usize,
    pub seed: u64,
    pub alpha: f64,
    pub background_delta: f64,
    pub benign_delta: f64,
    pub malignant_delta: f64,
    /// Intensity per unit RMS amplitude of the background.
    pub background_level: f64,
    /// Lesion RMS intensity as a fraction of the background.
    pub lesion_contrast: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            cases: 40,
            side: 256,
            seed: 7,
            alpha: 2.0,
            background_delta: 2.0,
            benign_delta: 2.0,
            malignant_delta: 0.3,
            background_level: 110.0,
            lesion_contrast: 0.35,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomCase {
    pub case_id: String,
    pub label: Label,
    pub image: ImageGrid,
    pub mask: BinaryMask,
}

fn case_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Amplitudes with unit RMS.
fn unit_rms(p: &RiIGParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    let scale = p.second_moment().sqrt();
    Ok(riig_sample(p, n, seed)?.into_iter().map(|v| v / scale).collect())
}

/// One phantom case. Classes alternate, malignant first.
pub fn phantom_case(spec: &PhantomSpec, i: usize) -> Result<PhantomCase> {
    let label = if i % 2 == 0 { Label::Malignant } else { Label::Benign };
    let side = spec.side;
    if side < 64 {
        return Err(Error::InvalidInput(format!("phantom side {side} is below 64")));
    }
    let seed = case_seed(spec.seed, i);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = side as f64;
    let (cx, cy) = (s * rng.random_range(0.4..0.6), s * rng.random_range(0.4..0.6));
    let a = s * rng.random_range(0.12..0.2);
    let b = s * rng.random_range(0.08..0.14);
    let t = rng.random_range(0.0..PI);
    let (c, sn) = (t.cos(), t.sin());
    let mask = BinaryMask::from_fn(side, side, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let u = dx * c + dy * sn;
        let v = -dx * sn + dy * c;
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    })?;

    let lesion_delta = match label {
        Label::Malignant => spec.malignant_delta,
        _ => spec.benign_delta,
    };
    let bg = unit_rms(&RiIGParams::new(spec.alpha, 0.0, spec.background_delta)?, side * side, seed ^ 1)?;
    let fg = unit_rms(&RiIGParams::new(spec.alpha, 0.0, lesion_delta)?, side * side, seed ^ 2)?;
    let lesion_level = spec.background_level * spec.lesion_contrast;
    let data = (0..side * side)
        .map(|k| {
            let (x, y) = (k % side, k / side);
            let v = if mask.get(x, y) { lesion_level * fg[k] } else { spec.background_level * bg[k] };
            v.round().clamp(0.0, 255.0)
        })
        .collect();
    Ok(PhantomCase {
        case_id: format!("phantom{i:03}"),
        label,
        image: ImageGrid::new(side, side, data, ValueDomain::RawU8)?,
        mask,
    })
}

pub fn generate_phantom(spec: &PhantomSpec) -> Result<Vec<PhantomCase>> {
    (0..spec.cases).map(|i| phantom_case(spec, i)).collect()
}

/// Write the set as `<dir>/benign/*.png`, `<dir>/malignant/*.png` and
/// `<dir>/masks/*.png`.
pub fn write_phantom_set(dir: &Path, spec: &PhantomSpec) -> Result<Vec<PhantomCase>> {
    let cases = generate_phantom(spec)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for c in &cases {
        save_image(&c.image, &dir.join(c.label.as_str()).join(format!("{}.png", c.case_id)))?;
        save_mask(&c.mask, &dir.join("masks").join(format!("{}.png", c.case_id)))?;
    }
    Ok(cases)
}
