use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What the numbers in an [`ImageGrid`] mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueDomain {
    /// Integer intensities in `[0, 255]`.
    RawU8,
    Standardized,
    Coefficient,
    ParameterMap,
}

/// Row-major 2-D raster of reals.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    data: Vec<f64>,
    domain: ValueDomain,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, data: Vec<f64>, domain: ValueDomain) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} grid needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if domain == ValueDomain::RawU8
            && data
                .iter()
                .any(|&v| !(0.0..=255.0).contains(&v) || v.fract() != 0.0)
        {
            return Err(Error::InvalidInput(
                "raw-u8 grid holds a value that is not an integer in [0, 255]".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            data,
            domain,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64, domain: ValueDomain) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], domain)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        domain: ValueDomain,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data, domain)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(rows, cols)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn domain(&self) -> ValueDomain {
        self.domain
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Pixel with coordinates clamped to the grid (replicate border).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Relabel the value domain, re-checking the raw-u8 invariant.
    pub fn with_domain(self, domain: ValueDomain) -> Result<Self> {
        Self::new(self.width, self.height, self.data, domain)
    }

    pub fn map(&self, domain: ValueDomain, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
            domain,
        )
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Zero-pad on the bottom/right to `width` x `height`.
    pub fn pad_to(&self, width: usize, height: usize) -> Result<Self> {
        if width < self.width || height < self.height {
            return Err(Error::InvalidInput(format!(
                "cannot pad {}x{} down to {width}x{height}",
                self.width, self.height
            )));
        }
        let mut data = vec![0.0; width * height];
        for y in 0..self.height {
            data[y * width..y * width + self.width].copy_from_slice(self.row(y));
        }
        Self::new(width, height, data, self.domain)
    }

    /// Top-left `width` x `height` window.
    pub fn crop(&self, width: usize, height: usize) -> Result<Self> {
        if width > self.width || height > self.height {
            return Err(Error::InvalidInput(format!(
                "cannot crop {}x{} to {width}x{height}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            data.extend_from_slice(&self.row(y)[..width]);
        }
        Self::new(width, height, data, self.domain)
    }
}

/// Binary raster; `true` is foreground.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} mask needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Out-of-bounds coordinates read as background.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_blank(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    /// Foreground coordinates `(x, y)` in raster order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    pub fn centroid(&self) -> Option<(f64, f64)> {
        let mut n = 0usize;
        let (mut sx, mut sy) = (0.0, 0.0);
        for (x, y) in self.pixels() {
            n += 1;
            sx += x as f64;
            sy += y as f64;
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }

    /// Zero-pad on the bottom/right.
    pub fn pad_to(&self, width: usize, height: usize) -> Result<Self> {
        if width < self.width || height < self.height {
            return Err(Error::InvalidInput(format!(
                "cannot pad {}x{} mask down to {width}x{height}",
                self.width, self.height
            )));
        }
        Self::from_fn(width, height, |x, y| {
            x < self.width && y < self.height && self.get(x, y)
        })
    }

    /// 3x3 dilation.
    pub fn dilate(&self) -> Self {
        let out = (0..self.data.len())
            .map(|i| {
                let (x, y) = ((i % self.width) as isize, (i / self.width) as isize);
                (-1..=1).any(|dy| (-1..=1).any(|dx| self.get_signed(x + dx, y + dy)))
            })
            .collect();
        Self {
            width: self.width,
            height: self.height,
            data: out,
        }
    }

    /// 3x3 erosion; out-of-bounds neighbors count as background.
    pub fn erode(&self) -> Self {
        let out = (0..self.data.len())
            .map(|i| {
                let (x, y) = ((i % self.width) as isize, (i / self.width) as isize);
                (-1..=1).all(|dy| (-1..=1).all(|dx| self.get_signed(x + dx, y + dy)))
            })
            .collect();
        Self {
            width: self.width,
            height: self.height,
            data: out,
        }
    }
}
