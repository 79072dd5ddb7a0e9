//! Contourlet transform: Laplacian pyramid followed by a directional filter
//! bank on every detail band.

mod dfb;
mod filters;
mod lattice;
mod lp;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use dfb::{dfb_decompose, dfb_period, dfb_reconstruct};
pub use filters::PyramidFilters;
pub use lp::{lp_decompose, lp_reconstruct, Pyramid};

use crate::error::{Error, Result};
use crate::imagecore::{ImageGrid, ValueDomain};

/// Options for [`contourlet_decompose_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContourletOptions {
    pub filters: PyramidFilters,
    /// Lower bound on the padded working side length.
    pub min_side: usize,
}

impl Default for ContourletOptions {
    fn default() -> Self {
        Self {
            filters: PyramidFilters::Cdf97,
            min_side: 0,
        }
    }
}

/// Multiscale, multidirectional coefficients of a (padded, square) image.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourletDecomposition {
    lowpass: ImageGrid,
    /// `bands[level - 1][direction]`.
    bands: Vec<Vec<ImageGrid>>,
    spec: Vec<usize>,
    filters: PyramidFilters,
    original: (usize, usize),
    side: usize,
}

impl ContourletDecomposition {
    pub fn lowpass(&self) -> &ImageGrid {
        &self.lowpass
    }

    /// Directional counts per pyramid level, finest first.
    pub fn spec(&self) -> &[usize] {
        &self.spec
    }

    /// Band at 1-based pyramid `level`, 0-based `direction`.
    pub fn band(&self, level: usize, direction: usize) -> Option<&ImageGrid> {
        self.bands.get(level.checked_sub(1)?)?.get(direction)
    }

    pub fn level(&self, level: usize) -> Option<&[ImageGrid]> {
        Some(self.bands.get(level.checked_sub(1)?)?.as_slice())
    }

    /// All bands as `((level, direction), grid)`.
    pub fn bands(&self) -> impl Iterator<Item = ((usize, usize), &ImageGrid)> {
        self.bands.iter().enumerate().flat_map(|(l, v)| {
            v.iter().enumerate().map(move |(d, g)| ((l + 1, d), g))
        })
    }

    /// Input `(width, height)` before padding.
    pub fn original_dims(&self) -> (usize, usize) {
        self.original
    }

    /// Side of the square working grid the coefficients refer to.
    pub fn padded_side(&self) -> usize {
        self.side
    }

    pub fn band_mut(&mut self, level: usize, direction: usize) -> Option<&mut ImageGrid> {
        self.bands.get_mut(level.checked_sub(1)?)?.get_mut(direction)
    }

    pub fn lowpass_mut(&mut self) -> &mut ImageGrid {
        &mut self.lowpass
    }
}

/// Side-length multiple needed for `spec`: every level's band must fit the
/// DFB sampling period, and the pyramid must halve cleanly.
pub fn required_multiple(spec: &[usize]) -> Result<usize> {
    let mut m = 1usize << spec.len();
    for (i, &d) in spec.iter().enumerate() {
        m = m.max((1usize << i) * dfb_period(d)?);
    }
    Ok(m)
}

fn round_up(v: usize, m: usize) -> usize {
    v.div_ceil(m) * m
}

/// Decompose with default options (CDF 9/7, no minimum side).
pub fn contourlet_decompose(img: &ImageGrid, spec: &[usize]) -> Result<ContourletDecomposition> {
    contourlet_decompose_with(img, spec, &ContourletOptions::default())
}

/// Zero-pad to a square of the required multiple, run the pyramid, then a DFB
/// with `spec[l-1]` directions on the level-`l` detail band.
pub fn contourlet_decompose_with(
    img: &ImageGrid,
    spec: &[usize],
    opts: &ContourletOptions,
) -> Result<ContourletDecomposition> {
    if spec.is_empty() {
        return Err(Error::InvalidInput("contourlet spec is empty".into()));
    }
    let m = required_multiple(spec)?;
    let side = round_up(img.width().max(img.height()).max(opts.min_side), m);
    let padded = img
        .pad_to(side, side)?
        .with_domain(ValueDomain::Coefficient)?;
    let pyr = lp_decompose(&padded, spec.len(), opts.filters)?;
    let bands = pyr
        .details
        .iter()
        .zip(spec)
        .map(|(d, &n)| dfb_decompose(d, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(ContourletDecomposition {
        lowpass: pyr.lowpass,
        bands,
        spec: spec.to_vec(),
        filters: opts.filters,
        original: (img.width(), img.height()),
        side,
    })
}

/// Invert the decomposition and crop to the original size.
pub fn contourlet_reconstruct(dec: &ContourletDecomposition) -> Result<ImageGrid> {
    let mut details = Vec::with_capacity(dec.bands.len());
    let mut side = dec.side;
    for level in &dec.bands {
        details.push(dfb_reconstruct(level, side, side)?);
        side /= 2;
    }
    let pyr = Pyramid {
        lowpass: dec.lowpass.clone(),
        details,
        filters: dec.filters,
    };
    let (w, h) = dec.original;
    lp_reconstruct(&pyr)?.crop(w, h)
}

/// The six subbands carried forward to parametric imaging.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubbandKey {
    P2D4,
    P2D8,
    P3D8,
    P3D16,
    P4D16,
    P4D32,
}

impl SubbandKey {
    pub const ALL: [SubbandKey; 6] = [
        SubbandKey::P2D4,
        SubbandKey::P2D8,
        SubbandKey::P3D8,
        SubbandKey::P3D16,
        SubbandKey::P4D16,
        SubbandKey::P4D32,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SubbandKey::P2D4 => "P2D4",
            SubbandKey::P2D8 => "P2D8",
            SubbandKey::P3D8 => "P3D8",
            SubbandKey::P3D16 => "P3D16",
            SubbandKey::P4D16 => "P4D16",
            SubbandKey::P4D32 => "P4D32",
        }
    }

    /// (pyramid level, size group index within that level).
    fn slot(self) -> (usize, usize) {
        match self {
            SubbandKey::P2D4 => (2, 0),
            SubbandKey::P2D8 => (2, 1),
            SubbandKey::P3D8 => (3, 0),
            SubbandKey::P3D16 => (3, 1),
            SubbandKey::P4D16 => (4, 0),
            SubbandKey::P4D32 => (4, 1),
        }
    }

    /// Directional count expected at this key's pyramid level.
    fn directions(self) -> usize {
        match self.slot().0 {
            2 => 8,
            3 => 16,
            _ => 32,
        }
    }
}

impl fmt::Display for SubbandKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One selected subband and where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedSubband {
    pub key: SubbandKey,
    pub level: usize,
    pub direction: usize,
    pub grid: ImageGrid,
}

/// Exactly six subbands keyed P2D4 .. P4D32, plus the working-grid side they
/// refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedSubbandSet {
    entries: Vec<NamedSubband>,
    source_side: usize,
    original: (usize, usize),
}

impl NamedSubbandSet {
    pub fn get(&self, key: SubbandKey) -> &NamedSubband {
        &self.entries[SubbandKey::ALL.iter().position(|&k| k == key).unwrap()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &NamedSubband> {
        self.entries.iter()
    }

    /// Side of the padded square grid the subbands were computed from.
    pub fn source_side(&self) -> usize {
        self.source_side
    }

    /// `(width, height)` of the unpadded input image.
    pub fn original_dims(&self) -> (usize, usize) {
        self.original
    }
}

/// Group a level's bands by shape (in order of first appearance) and pick the
/// largest-area band of each group, lowest direction index on ties.
pub fn select_named_subbands(dec: &ContourletDecomposition) -> Result<NamedSubbandSet> {
    let mut entries = Vec::with_capacity(6);
    for key in SubbandKey::ALL {
        let (level, group) = key.slot();
        let bands = dec
            .level(level)
            .filter(|b| b.len() == key.directions())
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "decomposition spec {:?} lacks {} directions at pyramid level {level}",
                    dec.spec(),
                    key.directions()
                ))
            })?;
        let mut shapes: Vec<(usize, usize)> = Vec::new();
        for b in bands {
            if !shapes.contains(&b.shape()) {
                shapes.push(b.shape());
            }
        }
        let shape = *shapes.get(group).ok_or_else(|| {
            Error::InvalidInput(format!(
                "pyramid level {level} has {} size group(s), need {}",
                shapes.len(),
                group + 1
            ))
        })?;
        // Within a shape group all areas are equal, so the first index wins.
        let direction = bands.iter().position(|b| b.shape() == shape).unwrap();
        entries.push(NamedSubband {
            key,
            level,
            direction,
            grid: bands[direction].clone(),
        });
    }
    Ok(NamedSubbandSet {
        entries,
        source_side: dec.padded_side(),
        original: dec.original_dims(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn required_multiple_for_paper_spec() {
        assert_eq!(required_multiple(&[8, 8, 16, 32]).unwrap(), 128);
        assert_eq!(required_multiple(&[2]).unwrap(), 2);
        assert_eq!(required_multiple(&[4, 4]).unwrap(), 4);
    }

    #[test]
    fn padding_and_crop() {
        let img = ImageGrid::from_fn(100, 70, ValueDomain::RawU8, |x, y| ((x + 2 * y) % 256) as f64)
            .unwrap();
        let dec = contourlet_decompose(&img, &[4, 8]).unwrap();
        assert_eq!(dec.padded_side(), 104);
        let rec = contourlet_reconstruct(&dec).unwrap();
        assert_eq!(rec.shape(), (70, 100));
        let err = img
            .data()
            .iter()
            .zip(rec.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9);
    }

    #[test]
    fn named_subbands_follow_size_groups() {
        let img = ImageGrid::from_fn(256, 256, ValueDomain::RawU8, |x, y| ((x * y) % 251) as f64)
            .unwrap();
        let dec = contourlet_decompose(&img, &[8, 8, 16, 32]).unwrap();
        let set = select_named_subbands(&dec).unwrap();
        let got: Vec<(SubbandKey, usize, usize, (usize, usize))> = set
            .iter()
            .map(|s| (s.key, s.level, s.direction, s.grid.shape()))
            .collect();
        assert_eq!(
            got,
            vec![
                (SubbandKey::P2D4, 2, 0, (32, 64)),
                (SubbandKey::P2D8, 2, 4, (64, 32)),
                (SubbandKey::P3D8, 3, 0, (8, 32)),
                (SubbandKey::P3D16, 3, 8, (32, 8)),
                (SubbandKey::P4D16, 4, 0, (2, 16)),
                (SubbandKey::P4D32, 4, 16, (16, 2)),
            ]
        );
    }

    #[test]
    fn spec_mismatch_is_an_error() {
        let img = ImageGrid::filled(64, 64, 1.0, ValueDomain::RawU8).unwrap();
        let dec = contourlet_decompose(&img, &[4, 4]).unwrap();
        assert!(select_named_subbands(&dec).is_err());
    }
}
