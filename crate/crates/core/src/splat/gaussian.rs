use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

use super::camera::{CameraView, Intrinsics, Pose};
use crate::error::{ensure, Result};
use crate::lens::LensModel;

/// One anisotropic 3D Gaussian with view-independent color.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian3D {
    pub mean: Vector3<f64>,
    /// Per-axis standard deviations in meters.
    pub scale: Vector3<f64>,
    /// Unit quaternion `(w, x, y, z)`.
    pub rotation: [f64; 4],
    pub opacity: f64,
    pub color: [f64; 3],
}

const QUAT_NORM_TOL: f64 = 1e-9;

impl Gaussian3D {
    pub fn new(
        mean: Vector3<f64>,
        scale: Vector3<f64>,
        rotation: [f64; 4],
        opacity: f64,
        color: [f64; 3],
    ) -> Result<Self> {
        let g = Self {
            mean,
            scale,
            rotation,
            opacity,
            color,
        };
        g.validate()?;
        Ok(g)
    }

    /// Isotropic Gaussian with identity rotation.
    pub fn isotropic(mean: Vector3<f64>, radius: f64, opacity: f64, color: [f64; 3]) -> Result<Self> {
        Self::new(mean, Vector3::repeat(radius), [1.0, 0.0, 0.0, 0.0], opacity, color)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.mean.iter().all(|v| v.is_finite()),
            "gaussian mean must be finite"
        );
        ensure!(
            self.scale.iter().all(|s| s.is_finite() && *s > 0.0),
            "gaussian scales must be positive, got {:?}",
            self.scale.as_slice()
        );
        let n = quat_norm(&self.rotation);
        ensure!(
            (n - 1.0).abs() <= QUAT_NORM_TOL,
            "gaussian rotation quaternion has norm {n}, expected 1"
        );
        ensure!(
            (0.0..=1.0).contains(&self.opacity),
            "gaussian opacity must be in [0, 1], got {}",
            self.opacity
        );
        ensure!(
            self.color.iter().all(|c| (0.0..=1.0).contains(c)),
            "gaussian color must be in [0, 1]"
        );
        Ok(())
    }

    /// Rescales the quaternion to unit norm.
    pub fn normalize_rotation(&mut self) {
        let n = quat_norm(&self.rotation);
        if n > 0.0 {
            for q in &mut self.rotation {
                *q /= n;
            }
        }
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let [w, x, y, z] = self.rotation;
        UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)).to_rotation_matrix().into_inner()
    }

    /// `R diag(s²) Rᵀ`.
    pub fn covariance(&self) -> Matrix3<f64> {
        let r = self.rotation_matrix();
        let s2 = Matrix3::from_diagonal(&self.scale.component_mul(&self.scale));
        let c = r * s2 * r.transpose();
        0.5 * (c + c.transpose())
    }
}

pub(crate) fn quat_norm(q: &[f64; 4]) -> f64 {
    q.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A viewpoint of a scene; `focus_distance_m` overrides the scene lens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneView {
    pub pose: Pose,
    pub focus_distance_m: Option<f64>,
}

/// Gaussians plus the shared camera and the per-view poses.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianScene {
    pub intrinsics: Intrinsics,
    pub lens: LensModel,
    pub views: Vec<SceneView>,
    pub gaussians: Vec<Gaussian3D>,
}

impl GaussianScene {
    pub fn new(
        intrinsics: Intrinsics,
        lens: LensModel,
        views: Vec<SceneView>,
        gaussians: Vec<Gaussian3D>,
    ) -> Result<Self> {
        let scene = Self {
            intrinsics,
            lens,
            views,
            gaussians,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.gaussians.is_empty(), "scene contains no gaussians");
        for (i, g) in self.gaussians.iter().enumerate() {
            g.validate()
                .map_err(|e| crate::error::domain!("gaussian {i}: {e}"))?;
        }
        for (i, v) in self.views.iter().enumerate() {
            if let Some(fd) = v.focus_distance_m {
                self.lens
                    .with_focus_distance(fd)
                    .map_err(|e| crate::error::domain!("view {i}: {e}"))?;
            }
        }
        Ok(())
    }

    pub fn camera_view(&self, index: usize) -> Result<CameraView> {
        let v = self.views.get(index).ok_or_else(|| {
            crate::error::domain!("view {index} out of range ({} views)", self.views.len())
        })?;
        let lens = match v.focus_distance_m {
            Some(fd) => self.lens.with_focus_distance(fd)?,
            None => self.lens,
        };
        Ok(CameraView {
            pose: v.pose,
            intrinsics: self.intrinsics,
            lens,
        })
    }

    pub fn camera_views(&self) -> Result<Vec<CameraView>> {
        (0..self.views.len()).map(|i| self.camera_view(i)).collect()
    }
}
