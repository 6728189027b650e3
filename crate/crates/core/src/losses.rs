//! Scalar training objectives.

use crate::error::{ensure, Result};
use crate::raster::{same_dims, DefocusMap, DepthMap, RasterImage};
use crate::ssim::ssim;

/// Weights of the joint objective `μ1·L_defocus + μ2·L_blur + μ3·L_recon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub mu_defocus: f64,
    pub mu_blur: f64,
    pub mu_recon: f64,
    /// SSIM share of the reconstruction loss.
    pub alpha_ssim: f64,
    pub beta_blur: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            mu_defocus: 1.0,
            mu_blur: 0.01,
            mu_recon: 1.0,
            alpha_ssim: 0.2,
            beta_blur: 0.01,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            [self.mu_defocus, self.mu_blur, self.mu_recon, self.beta_blur]
                .iter()
                .all(|v| v.is_finite() && *v >= 0.0),
            "loss weights must be non-negative"
        );
        ensure!(
            (0.0..=1.0).contains(&self.alpha_ssim),
            "alpha_ssim must be in [0, 1], got {}",
            self.alpha_ssim
        );
        Ok(())
    }
}

pub const DEFAULT_PATCH_PX: usize = 16;

/// Mean over co-located `patch_px` patches of the negative cosine similarity.
/// Patches where either side has zero norm score 0.
pub fn defocus_loss(d1: &DefocusMap, d2: &DefocusMap, patch_px: usize) -> Result<f64> {
    same_dims(d1.dims(), d2.dims(), "defocus_loss")?;
    let (w, h) = d1.dims();
    ensure!(
        patch_px > 0 && w % patch_px == 0 && h % patch_px == 0,
        "patch size {patch_px} must divide the map size {w}x{h}"
    );
    let (px, py) = (w / patch_px, h / patch_px);
    let mut total = 0.0;
    for by in 0..py {
        for bx in 0..px {
            let (mut dot, mut n1, mut n2) = (0.0, 0.0, 0.0);
            for y in by * patch_px..(by + 1) * patch_px {
                for x in bx * patch_px..(bx + 1) * patch_px {
                    let (a, b) = (d1.get(x, y), d2.get(x, y));
                    dot += a * b;
                    n1 += a * a;
                    n2 += b * b;
                }
            }
            if n1 > 0.0 && n2 > 0.0 {
                total -= dot / (n1.sqrt() * n2.sqrt());
            }
        }
    }
    Ok(total / (px * py) as f64)
}

/// Denominator of the sharpness ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlurNormalization {
    /// Pixel count minus squared mean intensity.
    #[default]
    CountMinusMeanSquared,
    /// Intensity variance.
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurLossOptions {
    pub beta: f64,
    pub eps: f64,
    pub normalization: BlurNormalization,
}

impl Default for BlurLossOptions {
    fn default() -> Self {
        Self {
            beta: 0.01,
            eps: 1e-8,
            normalization: BlurNormalization::default(),
        }
    }
}

/// Laplacian-energy sharpness loss; lower means sharper.
///
/// Color images are reduced to luminance. The 4-neighbour Laplacian is taken
/// over interior pixels.
pub fn blur_loss(image: &RasterImage, opts: &BlurLossOptions) -> Result<f64> {
    let lum = image.luminance();
    let (w, h) = lum.dims();
    let v = |x: usize, y: usize| lum.get(x, y, 0);
    let mut energy = 0.0;
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let lap = v(x - 1, y) + v(x + 1, y) + v(x, y - 1) + v(x, y + 1) - 4.0 * v(x, y);
            energy += lap * lap;
        }
    }
    let m = (w * h) as f64;
    let mean = lum.data().iter().sum::<f64>() / m;
    let denom = match opts.normalization {
        BlurNormalization::CountMinusMeanSquared => m - mean * mean,
        BlurNormalization::Variance => {
            lum.data().iter().map(|p| (p - mean).powi(2)).sum::<f64>() / m
        }
    };
    // rounding leaves a tiny positive variance on flat images
    ensure!(
        denom > 1e-12,
        "blur loss normalization is not positive ({denom})"
    );
    Ok(-opts.beta * (energy / denom + opts.eps).ln())
}

/// [`blur_loss`] averaged over a batch.
pub fn blur_loss_mean(images: &[RasterImage], opts: &BlurLossOptions) -> Result<f64> {
    ensure!(!images.is_empty(), "blur loss over an empty batch");
    let mut sum = 0.0;
    for img in images {
        sum += blur_loss(img, opts)?;
    }
    Ok(sum / images.len() as f64)
}

/// `α·(1 − SSIM)/2 + (1 − α)·mean|a − b|`.
pub fn recon_loss(rendered: &RasterImage, target: &RasterImage, alpha_ssim: f64) -> Result<f64> {
    ensure!(
        (0.0..=1.0).contains(&alpha_ssim),
        "alpha_ssim must be in [0, 1], got {alpha_ssim}"
    );
    let l1 = rendered.data().len() as f64;
    let s = ssim(rendered, target)?;
    let mae = rendered
        .data()
        .iter()
        .zip(target.data())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / l1;
    // identical inputs give exactly zero even if ssim rounds below 1
    let structural = if rendered == target { 0.0 } else { (1.0 - s).max(0.0) / 2.0 };
    Ok(alpha_ssim * structural + (1.0 - alpha_ssim) * mae)
}

pub fn total_loss(l_defocus: f64, l_blur: f64, l_recon: f64, w: &LossWeights) -> f64 {
    w.mu_defocus * l_defocus + w.mu_blur * l_blur + w.mu_recon * l_recon
}

/// Mean `|(D̂ + R) − D_gt|` over pixels with valid ground truth. The residual
/// is signed, so it is passed as a raw row-major buffer.
pub fn residual_loss(depth_splat: &DepthMap, residual: &[f64], depth_gt: &DepthMap) -> Result<f64> {
    same_dims(depth_splat.dims(), depth_gt.dims(), "residual_loss")?;
    ensure!(
        residual.len() == depth_gt.data().len(),
        "residual_loss: residual has {} values, expected {}",
        residual.len(),
        depth_gt.data().len()
    );
    let (mut sum, mut n) = (0.0, 0usize);
    for ((d, r), g) in depth_splat.data().iter().zip(residual).zip(depth_gt.data()) {
        if *g > 0.0 {
            sum += (d + r - g).abs();
            n += 1;
        }
    }
    ensure!(n > 0, "residual_loss: ground truth has no valid pixels");
    Ok(sum / n as f64)
}

/// Edge-aware first-order smoothness of `depth`, down-weighted where the guide
/// image has strong gradients.
pub fn smoothness_loss(depth: &DepthMap, guide: &RasterImage) -> Result<f64> {
    same_dims(depth.dims(), guide.dims(), "smoothness_loss")?;
    let lum = guide.luminance();
    Ok(smoothness_raw(depth.data(), lum.data(), depth.width(), depth.height()))
}

pub(crate) fn edge_weights(luma: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut wx = vec![0.0; w * h];
    let mut wy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                wx[i] = (-(luma[i + 1] - luma[i]).abs()).exp();
            }
            if y + 1 < h {
                wy[i] = (-(luma[i + w] - luma[i]).abs()).exp();
            }
        }
    }
    (wx, wy)
}

pub(crate) fn smoothness_raw(depth: &[f64], luma: &[f64], w: usize, h: usize) -> f64 {
    let (wx, wy) = edge_weights(luma, w, h);
    let mut sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                sum += (depth[i + 1] - depth[i]).abs() * wx[i];
            }
            if y + 1 < h {
                sum += (depth[i + w] - depth[i]).abs() * wy[i];
            }
        }
    }
    sum / (w * h) as f64
}
