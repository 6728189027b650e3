//! Depth-of-field aware 3D Gaussian splatting.
//!
//! Gaussians are projected to screen space, each projected footprint is
//! convolved with an isotropic Gaussian sized by its CoC radius, and the
//! footprints are alpha-composited front to back into color and depth.

mod camera;
pub(crate) mod gaussian;
mod project;
mod render;

pub use camera::{CameraView, Intrinsics, Pose};
pub use gaussian::{Gaussian3D, GaussianScene, SceneView};
pub use project::{blur_splat, project, Splat2D, NEAR_PLANE_M};
pub use render::{
    prepare_splats, render, RenderOptions, Rendered, ALPHA_MAX, TRANSMITTANCE_MIN,
};
