//! Thin-lens defocus synthesis, defocus-aware Gaussian splatting and
//! depth-from-defocus estimation.

pub mod cli;
pub mod config;
pub mod error;
pub mod estimate;
pub mod fit;
pub mod io;
pub mod lens;
pub mod losses;
pub mod metrics;
pub mod procedural;
pub mod psf;
pub mod raster;
pub mod refine;
pub mod splat;
pub mod ssim;
pub mod stack;

pub use error::{Error, Result};
pub use lens::{CocRoots, LensModel};
pub use raster::{DefocusMap, DepthMap, RasterImage};
