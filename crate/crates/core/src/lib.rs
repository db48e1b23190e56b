//! Toolkit for studying how error-bounded lossy compression interacts with
//! iso-surface visualization of patch-based AMR data.
//!
//! The crate is organized around the pipeline it supports:
//!
//! * [`amr`] builds and stores two-level patch-based AMR hierarchies,
//! * [`codec`] holds two prediction-based, error-bounded compressors
//!   (block-wise Lorenzo/regression and global interpolation),
//! * [`iso`] extracts iso-surfaces either by re-sampling to vertices or on
//!   the dual lattice with gap filling, and counts cracks,
//! * [`metrics`] computes PSNR, SSIM and R-SSIM and writes reports,
//! * [`pipeline`] wires all of the above into single runs and sweeps.

pub mod amr;
pub mod codec;
mod error;
pub mod grid;
pub mod iso;
pub mod metrics;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
pub use grid::{Mask3, ScalarGrid};
