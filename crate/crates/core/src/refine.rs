//! Residual depth refinement: pull splat depth toward the depth implied by
//! defocus while keeping it edge-aware smooth.

use crate::error::{ensure, Result};
use crate::estimate::invert_defocus_to_depth;
use crate::lens::LensModel;
use crate::losses::edge_weights;
use crate::raster::{same_dims, DefocusMap, DepthMap, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub lambda_data: f64,
    /// Each pixel touches at most four smoothness edges of weight ≤ 1, so a
    /// value below `lambda_data / 4` leaves a consistent target untouched.
    pub lambda_smooth: f64,
    pub max_sweeps: usize,
    /// Sweeps stop once no pixel moves by more than this.
    pub tolerance_m: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            lambda_data: 1.0,
            lambda_smooth: 0.2,
            max_sweeps: 100,
            tolerance_m: 1e-9,
        }
    }
}

/// Returns `D̂ + D_res`, where the residual minimizes
/// `λ_data·Σ|D̂ + D_res − D_target| + λ_sm·N·smoothness(D̂ + D_res, guide)`.
///
/// `D_target` is `gt` where it is valid and the defocus-implied depth elsewhere.
pub fn refine_depth(
    depth_splat: &DepthMap,
    defocus: &DefocusMap,
    lens: &LensModel,
    guide: &RasterImage,
    gt: Option<&DepthMap>,
    cfg: &RefineConfig,
) -> Result<DepthMap> {
    same_dims(depth_splat.dims(), defocus.dims(), "refine_depth defocus")?;
    same_dims(depth_splat.dims(), guide.dims(), "refine_depth guide")?;
    if let Some(g) = gt {
        same_dims(depth_splat.dims(), g.dims(), "refine_depth ground truth")?;
    }
    ensure!(
        cfg.lambda_data > 0.0 && cfg.lambda_smooth >= 0.0,
        "refine weights must satisfy lambda_data > 0 and lambda_smooth >= 0"
    );
    let analytic = invert_defocus_to_depth(defocus, lens, depth_splat)?;
    let target: Vec<f64> = match gt {
        Some(g) => g
            .data()
            .iter()
            .zip(analytic.data())
            .map(|(&g, &a)| if g > 0.0 { g } else { a })
            .collect(),
        None => analytic.into_data(),
    };
    let (w, h) = depth_splat.dims();
    let luma = guide.luminance();
    let (wx, wy) = edge_weights(luma.data(), w, h);
    let mut v = depth_splat.data().to_vec();
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(5);
    for _ in 0..cfg.max_sweeps {
        let mut moved: f64 = 0.0;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                pts.clear();
                pts.push((target[i], cfg.lambda_data));
                if cfg.lambda_smooth > 0.0 {
                    if x + 1 < w {
                        pts.push((v[i + 1], cfg.lambda_smooth * wx[i]));
                    }
                    if x > 0 {
                        pts.push((v[i - 1], cfg.lambda_smooth * wx[i - 1]));
                    }
                    if y + 1 < h {
                        pts.push((v[i + w], cfg.lambda_smooth * wy[i]));
                    }
                    if y > 0 {
                        pts.push((v[i - w], cfg.lambda_smooth * wy[i - w]));
                    }
                }
                let m = weighted_median(&mut pts, v[i]);
                moved = moved.max((m - v[i]).abs());
                v[i] = m;
            }
        }
        if moved <= cfg.tolerance_m {
            break;
        }
    }
    DepthMap::new(w, h, v)
}

/// Minimizer of `Σ wₖ|t − pₖ|`. When a whole interval minimizes, the point of
/// it closest to `current` is returned.
fn weighted_median(pts: &mut [(f64, f64)], current: f64) -> f64 {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pts.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for (k, &(value, weight)) in pts.iter().enumerate() {
        acc += weight;
        if acc * 2.0 > total {
            return value;
        }
        if acc * 2.0 == total {
            let next = pts[k + 1].0;
            return current.clamp(value, next);
        }
    }
    pts[pts.len() - 1].0
}
