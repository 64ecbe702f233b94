//! Point-cloud crystal diffusion.
//!
//! Crystal structures are encoded as 3×128×3 point-cloud tensors, corrupted
//! and denoised by a DDPM with a 1-D U-Net noise predictor, decoded back into
//! structures by periodic DBSCAN, and scored against their originals.

pub mod codec;
pub mod crystal;
pub mod diffusion;
pub mod eval;
pub mod fixtures;
pub mod nn;
pub mod rng;

mod error;

pub use error::Error;
