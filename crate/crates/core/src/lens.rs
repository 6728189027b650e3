//! Thin-lens circle-of-confusion model.
//!
//! All lens quantities are SI meters. The only place meters turn into pixels
//! is [`LensModel::coc_radius`], which divides by twice the pixel pitch, so the
//! returned blur is a *radius* in pixels.

use crate::error::{ensure, Result};

/// Camera optics driving every blur computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensModel {
    focal_length_m: f64,
    f_number: f64,
    focus_distance_m: f64,
    pixel_pitch_m: f64,
}

/// Depths producing a given CoC radius. `far` is absent when the radius is at
/// or beyond the far-field asymptote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocRoots {
    pub near: f64,
    pub far: Option<f64>,
}

impl LensModel {
    pub fn new(
        focal_length_m: f64,
        f_number: f64,
        focus_distance_m: f64,
        pixel_pitch_m: f64,
    ) -> Result<Self> {
        ensure!(
            focal_length_m.is_finite() && focal_length_m > 0.0,
            "focal length must be positive, got {focal_length_m}"
        );
        ensure!(
            f_number.is_finite() && f_number > 0.0,
            "f-number must be positive, got {f_number}"
        );
        ensure!(
            pixel_pitch_m.is_finite() && pixel_pitch_m > 0.0,
            "pixel pitch must be positive, got {pixel_pitch_m}"
        );
        ensure!(
            focus_distance_m.is_finite() && focus_distance_m > focal_length_m,
            "focus distance {focus_distance_m} m must exceed focal length {focal_length_m} m"
        );
        Ok(Self {
            focal_length_m,
            f_number,
            focus_distance_m,
            pixel_pitch_m,
        })
    }

    pub fn focal_length_m(&self) -> f64 {
        self.focal_length_m
    }

    pub fn f_number(&self) -> f64 {
        self.f_number
    }

    pub fn focus_distance_m(&self) -> f64 {
        self.focus_distance_m
    }

    pub fn pixel_pitch_m(&self) -> f64 {
        self.pixel_pitch_m
    }

    /// Aperture diameter `f / N`.
    pub fn aperture_m(&self) -> f64 {
        self.focal_length_m / self.f_number
    }

    /// Same optics refocused at `focus_distance_m`.
    pub fn with_focus_distance(&self, focus_distance_m: f64) -> Result<Self> {
        Self::new(
            self.focal_length_m,
            self.f_number,
            focus_distance_m,
            self.pixel_pitch_m,
        )
    }

    /// Asymptotic CoC radius for an object at infinity, `f² / (2pN(F_d − f))`.
    pub fn far_limit_px(&self) -> f64 {
        let f = self.focal_length_m;
        f * f
            / (2.0
                * self.pixel_pitch_m
                * self.f_number
                * (self.focus_distance_m - self.focal_length_m))
    }

    /// CoC radius in pixels of a point at `depth_m`.
    pub fn coc_radius(&self, depth_m: f64) -> Result<f64> {
        ensure!(
            depth_m.is_finite() && depth_m > 0.0,
            "depth must be positive and finite, got {depth_m}"
        );
        Ok(self.coc_radius_unchecked(depth_m))
    }

    /// [`coc_radius`](Self::coc_radius) without the depth check, for inner loops
    /// that have already validated their input.
    #[inline]
    pub(crate) fn coc_radius_unchecked(&self, depth_m: f64) -> f64 {
        let f = self.focal_length_m;
        (depth_m - self.focus_distance_m).abs() / depth_m * (f * f)
            / (self.f_number * (self.focus_distance_m - f))
            / (2.0 * self.pixel_pitch_m)
    }

    /// Both depths whose CoC radius equals `sigma_px`.
    ///
    /// With `k = σ / σ∞` the near root is `F_d / (1 + k)`; the far root
    /// `F_d / (1 − k)` exists only for `k < 1`.
    pub fn invert_coc(&self, sigma_px: f64) -> Result<CocRoots> {
        ensure!(
            sigma_px.is_finite() && sigma_px >= 0.0,
            "CoC radius must be non-negative, got {sigma_px}"
        );
        let fd = self.focus_distance_m;
        let k = sigma_px / self.far_limit_px();
        let near = fd / (1.0 + k);
        let far = (k < 1.0).then(|| fd / (1.0 - k));
        Ok(CocRoots { near, far })
    }

    /// Uniformly sampled `(depth_m, sigma_px)` pairs on `[depth_min_m, depth_max_m]`.
    pub fn coc_curve(
        &self,
        depth_min_m: f64,
        depth_max_m: f64,
        n_samples: usize,
    ) -> Result<Vec<(f64, f64)>> {
        ensure!(
            depth_min_m > 0.0 && depth_min_m < depth_max_m && depth_max_m.is_finite(),
            "curve range must satisfy 0 < min < max, got [{depth_min_m}, {depth_max_m}]"
        );
        ensure!(n_samples >= 2, "curve needs at least 2 samples, got {n_samples}");
        let span = depth_max_m - depth_min_m;
        let last = (n_samples - 1) as f64;
        Ok((0..n_samples)
            .map(|i| {
                // span * i / last is exact whenever the true sample is representable
                let d = if i + 1 == n_samples {
                    depth_max_m
                } else {
                    depth_min_m + span * i as f64 / last
                };
                (d, self.coc_radius_unchecked(d))
            })
            .collect())
    }
}
