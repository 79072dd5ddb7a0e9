//! Image representation, file I/O, despeckling and intensity normalization.

mod despeckle;
mod grid;
mod io;
mod normalize;

pub use despeckle::{despeckle, Despeckle};
pub(crate) use despeckle::WindowStats;
pub use grid::{BinaryMask, ImageGrid, ValueDomain};
pub use io::{load_image, load_mask, read_raster, save_image, save_mask, write_raster};
pub use normalize::normalize;
