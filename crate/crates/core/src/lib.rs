pub mod classify;
pub mod contourlet;
pub mod error;
pub mod features;
pub mod imagecore;
pub mod parametric;
pub mod pipeline;
pub mod segmentation;
pub mod statmodel;

pub use error::{Error, Result};
