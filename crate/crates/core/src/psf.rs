//! Spatially varying Gaussian point-spread-function rendering.
//!
//! Blur is a per-output-pixel gather: the kernel at `(x, y)` is chosen by the
//! defocus value at `(x, y)`. Borders replicate the edge sample.

use rayon::prelude::*;

use crate::error::{ensure, Result};
use crate::raster::{same_dims, DefocusMap, RasterImage};

/// PSF window used by the defocus renderer.
pub const DEFAULT_WINDOW: usize = 7;

/// Radii below this many pixels are treated as in focus.
pub const BLUR_THRESHOLD_PX: f64 = 1.0;

/// Continuous isotropic Gaussian density with standard deviation `sigma`.
#[inline]
pub fn gaussian_density(sigma: f64, u: f64, v: f64) -> f64 {
    let s2 = sigma * sigma;
    (-(u * u + v * v) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2)
}

/// `σ · 1[σ ≥ 1]`.
#[inline]
pub fn threshold_sigma(sigma_px: f64) -> f64 {
    if sigma_px >= BLUR_THRESHOLD_PX {
        sigma_px
    } else {
        0.0
    }
}

/// Square, odd-sized, unit-sum filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    window: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn radius(&self) -> isize {
        (self.window / 2) as isize
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(u, v)` from the center.
    pub fn at(&self, u: isize, v: isize) -> f64 {
        let r = self.radius();
        self.weights[((v + r) as usize) * self.window + (u + r) as usize]
    }
}

/// Gaussian sampled on the integer grid and renormalized to sum to one.
pub fn gaussian_kernel(sigma_px: f64, window: usize) -> Result<Kernel> {
    ensure!(
        sigma_px.is_finite() && sigma_px > 0.0,
        "kernel sigma must be positive, got {sigma_px}"
    );
    ensure!(
        window >= 3 && window % 2 == 1,
        "kernel window must be odd and at least 3, got {window}"
    );
    let mut weights = vec![0.0; window * window];
    fill_kernel(sigma_px, window, &mut weights);
    Ok(Kernel { window, weights })
}

fn fill_kernel(sigma: f64, window: usize, out: &mut [f64]) {
    let r = (window / 2) as isize;
    let mut sum = 0.0;
    for v in -r..=r {
        for u in -r..=r {
            let w = gaussian_density(sigma, u as f64, v as f64);
            out[((v + r) as usize) * window + (u + r) as usize] = w;
            sum += w;
        }
    }
    for w in out.iter_mut() {
        *w /= sum;
    }
}

/// σ of the Gaussian obtained by convolving Gaussians of σ0 and σ_add.
pub fn compose_blur(sigma0_px: f64, sigma_add_px: f64) -> f64 {
    sigma0_px.hypot(sigma_add_px)
}

/// Blurs `image` with the per-pixel Gaussian PSF given by `defocus`.
///
/// Pixels whose radius is below one pixel are copied through unchanged.
pub fn render_defocus(
    image: &RasterImage,
    defocus: &DefocusMap,
    window: usize,
) -> Result<RasterImage> {
    same_dims(image.dims(), defocus.dims(), "render_defocus")?;
    ensure!(
        window >= 3 && window % 2 == 1,
        "kernel window must be odd and at least 3, got {window}"
    );
    let out = gather(image, window, |x, y| threshold_sigma(defocus.get(x, y)));
    Ok(out)
}

/// Uniform Gaussian blur with no thresholding; `sigma_px == 0` is the identity.
pub fn blur_uniform(image: &RasterImage, sigma_px: f64, window: usize) -> Result<RasterImage> {
    ensure!(
        sigma_px.is_finite() && sigma_px >= 0.0,
        "blur sigma must be non-negative, got {sigma_px}"
    );
    ensure!(
        window >= 3 && window % 2 == 1,
        "kernel window must be odd and at least 3, got {window}"
    );
    Ok(gather(image, window, |_, _| sigma_px))
}

fn gather(
    image: &RasterImage,
    window: usize,
    sigma_at: impl Fn(usize, usize) -> f64 + Sync,
) -> RasterImage {
    let (w, h, ch) = (image.width(), image.height(), image.channels());
    let src = image.data();
    let r = (window / 2) as isize;
    let mut out = vec![0.0; w * h * ch];
    out.par_chunks_mut(w * ch).enumerate().for_each(|(y, row)| {
        let mut kernel = vec![0.0; window * window];
        let mut cached = f64::NAN;
        for x in 0..w {
            let sigma = sigma_at(x, y);
            let dst = &mut row[x * ch..(x + 1) * ch];
            if sigma <= 0.0 {
                let i = (y * w + x) * ch;
                dst.copy_from_slice(&src[i..i + ch]);
                continue;
            }
            if sigma != cached {
                fill_kernel(sigma, window, &mut kernel);
                cached = sigma;
            }
            dst.fill(0.0);
            for v in -r..=r {
                let sy = (y as isize - v).clamp(0, h as isize - 1) as usize;
                for u in -r..=r {
                    let sx = (x as isize - u).clamp(0, w as isize - 1) as usize;
                    let k = kernel[((v + r) as usize) * window + (u + r) as usize];
                    let i = (sy * w + sx) * ch;
                    for c in 0..ch {
                        dst[c] += k * src[i + c];
                    }
                }
            }
        }
    });
    RasterImage::from_computed(w, h, ch, out)
}
