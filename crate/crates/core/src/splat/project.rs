use nalgebra::{Matrix2, Matrix2x3, Vector2};

use super::camera::CameraView;
use super::gaussian::Gaussian3D;
use crate::psf::threshold_sigma;

/// Gaussians whose camera-space depth is at or below this are culled.
pub const NEAR_PLANE_M: f64 = 1e-2;

/// Screen-space footprint of a projected Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splat2D {
    /// Pixel coordinates of the projected center.
    pub mean: Vector2<f64>,
    /// Covariance in pixels².
    pub cov: Matrix2<f64>,
    /// Camera-space z of the center, meters.
    pub depth: f64,
    /// CoC radius at `depth`, pixels.
    pub coc_sigma: f64,
    pub opacity: f64,
    pub color: [f64; 3],
}

impl Splat2D {
    /// Inverse covariance, or `None` when the footprint is degenerate.
    pub fn conic(&self) -> Option<Matrix2<f64>> {
        let det = self.cov.determinant();
        if !(det > 0.0 && det.is_finite()) {
            return None;
        }
        let c = &self.cov;
        Some(Matrix2::new(c[(1, 1)], -c[(0, 1)], -c[(1, 0)], c[(0, 0)]) / det)
    }

    /// Gaussian weight at pixel `p` before opacity.
    pub fn falloff(&self, conic: &Matrix2<f64>, p: Vector2<f64>) -> f64 {
        let d = p - self.mean;
        (-0.5 * (d.transpose() * conic * d)[(0, 0)]).exp()
    }
}

/// Projects `g` into `view` with the affine (local Jacobian) approximation of
/// perspective projection.
pub fn project(g: &Gaussian3D, view: &CameraView) -> Option<Splat2D> {
    let t = view.pose.transform(&g.mean);
    if t.z <= NEAR_PLANE_M {
        return None;
    }
    let k = &view.intrinsics;
    let mean = Vector2::new(k.fx * t.x / t.z + k.cx, k.fy * t.y / t.z + k.cy);
    let z2 = t.z * t.z;
    let j = Matrix2x3::new(
        k.fx / t.z,
        0.0,
        -k.fx * t.x / z2,
        0.0,
        k.fy / t.z,
        -k.fy * t.y / z2,
    );
    let w = view.pose.rotation();
    let cov3 = w * g.covariance() * w.transpose();
    let cov = j * cov3 * j.transpose();
    let cov = 0.5 * (cov + cov.transpose());
    Some(Splat2D {
        mean,
        cov,
        depth: t.z,
        coc_sigma: view.lens.coc_radius_unchecked(t.z),
        opacity: g.opacity,
        color: g.color,
    })
}

/// Convolves the footprint with the isotropic CoC kernel.
///
/// The kernel has covariance `aI` with `a = σ² / (2 ln 4)`, so it falls to a
/// quarter of its peak at radius σ. Opacity is rescaled so the integral of the
/// unnormalized footprint is unchanged. Radii below one pixel leave the splat
/// untouched.
pub fn blur_splat(s: &Splat2D) -> Splat2D {
    let sigma = threshold_sigma(s.coc_sigma);
    if sigma == 0.0 {
        return *s;
    }
    let a = sigma * sigma / (2.0 * 4f64.ln());
    let cov = s.cov + Matrix2::identity() * a;
    let ratio = s.cov.determinant() / cov.determinant();
    Splat2D {
        cov,
        opacity: s.opacity * ratio.sqrt(),
        ..*s
    }
}
