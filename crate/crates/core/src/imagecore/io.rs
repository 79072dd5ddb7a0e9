//! BMP/PNG images, binary mask PNGs and the WCPG raster format.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, Luma};

use super::grid::{BinaryMask, ImageGrid, ValueDomain};
use crate::error::{Error, Result};

const RASTER_MAGIC: &[u8; 4] = b"WCPG";

/// Load an 8-bit grayscale or RGB(A) BMP/PNG; colour collapses to the channel mean.
pub fn load_image(path: &Path) -> Result<ImageGrid> {
    let unreadable = |reason: String| Error::UnreadableFile {
        path: path.to_path_buf(),
        reason,
    };
    let reader = ImageReader::open(path)
        .map_err(|e| unreadable(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| unreadable(e.to_string()))?;
    let img = reader.decode().map_err(|e| unreadable(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match &img {
        DynamicImage::ImageLuma8(b) => b.pixels().map(|p| p.0[0] as f64).collect(),
        DynamicImage::ImageLumaA8(b) => b.pixels().map(|p| p.0[0] as f64).collect(),
        DynamicImage::ImageRgb8(b) => b.pixels().map(|p| channel_mean(&p.0[..3])).collect(),
        DynamicImage::ImageRgba8(b) => b.pixels().map(|p| channel_mean(&p.0[..3])).collect(),
        other => {
            return Err(Error::UnsupportedBitDepth {
                path: path.to_path_buf(),
                detail: format!("{:?}", other.color()),
            })
        }
    };
    ImageGrid::new(w, h, data, ValueDomain::RawU8)
}

fn channel_mean(c: &[u8]) -> f64 {
    let s: u32 = c.iter().map(|&v| v as u32).sum();
    (s as f64 / c.len() as f64).round()
}

/// Save as 8-bit grayscale; format follows the file extension (png or bmp).
/// Values are rounded and clamped to `[0, 255]`.
pub fn save_image(img: &ImageGrid, path: &Path) -> Result<()> {
    let buf = GrayImage::from_fn(img.width() as u32, img.height() as u32, |x, y| {
        Luma([img.get(x as usize, y as usize).round().clamp(0.0, 255.0) as u8])
    });
    ensure_parent(path)?;
    buf.save(path).map_err(|e| Error::UnreadableFile {
        path: path.to_path_buf(),
        reason: format!("cannot write image: {e}"),
    })
}

/// Load a mask PNG/BMP: nonzero pixels are foreground.
pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    let g = load_image(path)?;
    BinaryMask::new(g.width(), g.height(), g.data().iter().map(|&v| v > 0.0).collect())
}

/// Save a mask as 0/255 grayscale.
pub fn save_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    let g = ImageGrid::new(
        mask.width(),
        mask.height(),
        mask.data().iter().map(|&v| if v { 255.0 } else { 0.0 }).collect(),
        ValueDomain::RawU8,
    )?;
    save_image(&g, path)
}

/// Write "WCPG", u32 width, u32 height, then little-endian f64 row-major.
pub fn write_raster(img: &ImageGrid, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(RASTER_MAGIC)?;
    put(&(img.width() as u32).to_le_bytes())?;
    put(&(img.height() as u32).to_le_bytes())?;
    for v in img.data() {
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a WCPG raster with the given value domain.
pub fn read_raster(path: &Path, domain: ValueDomain) -> Result<ImageGrid> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(f)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    let unreadable = |reason: &str| Error::UnreadableFile {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 12 || &bytes[..4] != RASTER_MAGIC {
        return Err(unreadable("missing WCPG header"));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload = &bytes[12..];
    if payload.len() != width * height * 8 {
        return Err(unreadable("payload length does not match header"));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ImageGrid::new(width, height, data, domain)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    Ok(())
}
