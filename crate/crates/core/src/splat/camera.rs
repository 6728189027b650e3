use nalgebra::{Matrix3, Vector3};

use crate::error::{ensure, Result};
use crate::lens::LensModel;

/// Pinhole intrinsics in pixels. Pixel `(x, y)` has its center at `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(width: usize, height: usize, fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        ensure!(width > 0 && height > 0, "image dimensions must be non-zero");
        ensure!(
            fx.is_finite() && fy.is_finite() && fx > 0.0 && fy > 0.0,
            "focal lengths in pixels must be positive"
        );
        ensure!(cx.is_finite() && cy.is_finite(), "principal point must be finite");
        Ok(Self {
            width,
            height,
            fx,
            fy,
            cx,
            cy,
        })
    }

    /// Principal point at the image center.
    pub fn centered(width: usize, height: usize, focal_px: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            focal_px,
            focal_px,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
        )
    }
}

/// Rigid world-to-camera transform. Camera space is x right, y down, z forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        ensure!(
            rotation.iter().chain(translation.iter()).all(|v| v.is_finite()),
            "pose must be finite"
        );
        let err = (rotation * rotation.transpose() - Matrix3::identity()).abs().max();
        ensure!(err < 1e-6, "pose rotation is not orthonormal (error {err:e})");
        let det = rotation.determinant();
        ensure!((det - 1.0).abs() < 1e-6, "pose rotation has determinant {det}, expected +1");
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Camera at `eye` looking at `target`; `up` fixes the roll.
    pub fn look_at(eye: Vector3<f64>, target: Vector3<f64>, up: Vector3<f64>) -> Result<Self> {
        let forward = (target - eye).normalize();
        let right = (-up).cross(&forward);
        ensure!(right.norm() > 1e-9, "look_at up vector is parallel to the view direction");
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        Self::new(rotation, -(rotation * eye))
    }

    /// Row-major 3×4 `[R | t]`.
    pub fn from_row_major(m: &[f64; 12]) -> Result<Self> {
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        Self::new(rotation, Vector3::new(m[3], m[7], m[11]))
    }

    pub fn to_row_major(&self) -> [f64; 12] {
        let (r, t) = (&self.rotation, &self.translation);
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t[0],
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t[1],
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t[2],
        ]
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

/// Everything needed to render one view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraView {
    pub pose: Pose,
    pub intrinsics: Intrinsics,
    pub lens: LensModel,
}
