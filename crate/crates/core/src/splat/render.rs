use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use super::camera::CameraView;
use super::gaussian::Gaussian3D;
use super::project::{blur_splat, project, Splat2D};
use crate::error::{ensure, Result};
use crate::raster::{DepthMap, RasterImage};

/// Per-splat alpha ceiling.
pub const ALPHA_MAX: f64 = 0.99;
/// Compositing stops once transmittance drops below this.
pub const TRANSMITTANCE_MIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub enable_dof: bool,
    /// Footprints are evaluated only within this Mahalanobis radius.
    pub cutoff_t: f64,
    pub tile_size: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            enable_dof: true,
            cutoff_t: 3.0,
            tile_size: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub color: RasterImage,
    /// Alpha-blended depth; uncovered pixels are 0.
    pub depth: DepthMap,
}

/// Projects, optionally blurs, and depth-sorts the scene's splats.
///
/// Sorted by center depth with ties broken by scene index.
pub fn prepare_splats(gaussians: &[Gaussian3D], view: &CameraView, enable_dof: bool) -> Vec<Splat2D> {
    let mut splats: Vec<(usize, Splat2D)> = gaussians
        .iter()
        .enumerate()
        .filter_map(|(i, g)| project(g, view).map(|s| (i, s)))
        .map(|(i, s)| (i, if enable_dof { blur_splat(&s) } else { s }))
        .collect();
    splats.sort_by(|a, b| a.1.depth.total_cmp(&b.1.depth).then(a.0.cmp(&b.0)));
    splats.into_iter().map(|(_, s)| s).collect()
}

struct Prepared {
    splat: Splat2D,
    conic: Matrix2<f64>,
}

pub fn render(gaussians: &[Gaussian3D], view: &CameraView, opts: &RenderOptions) -> Result<Rendered> {
    ensure!(!gaussians.is_empty(), "cannot render an empty scene");
    ensure!(
        opts.cutoff_t.is_finite() && opts.cutoff_t > 0.0,
        "cutoff must be positive, got {}",
        opts.cutoff_t
    );
    ensure!(opts.tile_size > 0, "tile size must be non-zero");
    let (w, h) = (view.intrinsics.width, view.intrinsics.height);
    let ts = opts.tile_size;
    let (tiles_x, tiles_y) = (w.div_ceil(ts), h.div_ceil(ts));

    let prepared: Vec<Prepared> = prepare_splats(gaussians, view, opts.enable_dof)
        .into_iter()
        .filter_map(|splat| splat.conic().map(|conic| Prepared { splat, conic }))
        .collect();

    // Bin each footprint's cutoff bounding box into tiles, keeping depth order.
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); tiles_x * tiles_y];
    for (k, p) in prepared.iter().enumerate() {
        let hx = opts.cutoff_t * p.splat.cov[(0, 0)].sqrt();
        let hy = opts.cutoff_t * p.splat.cov[(1, 1)].sqrt();
        let (x0, x1) = (p.splat.mean.x - hx, p.splat.mean.x + hx);
        let (y0, y1) = (p.splat.mean.y - hy, p.splat.mean.y + hy);
        if x1 < 0.0 || y1 < 0.0 || x0 > (w - 1) as f64 || y0 > (h - 1) as f64 {
            continue;
        }
        let tx0 = (x0.max(0.0).ceil() as usize) / ts;
        let tx1 = (x1.floor().min((w - 1) as f64) as usize) / ts;
        let ty0 = (y0.max(0.0).ceil() as usize) / ts;
        let ty1 = (y1.floor().min((h - 1) as f64) as usize) / ts;
        for ty in ty0..=ty1 {
            for tx in tx0..=tx1 {
                bins[ty * tiles_x + tx].push(k as u32);
            }
        }
    }

    let cutoff2 = opts.cutoff_t * opts.cutoff_t;
    let mut color = vec![0.0; w * h * 3];
    let mut depth = vec![0.0; w * h];
    color
        .par_chunks_mut(w * 3)
        .zip(depth.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (crow, drow))| {
            let ty = y / ts;
            for x in 0..w {
                let bin = &bins[ty * tiles_x + x / ts];
                let p = Vector2::new(x as f64, y as f64);
                let mut t = 1.0;
                let mut c = [0.0; 3];
                let mut d = 0.0;
                for &k in bin {
                    let s = &prepared[k as usize];
                    let dv = p - s.splat.mean;
                    let m = (dv.transpose() * s.conic * dv)[(0, 0)];
                    if m > cutoff2 {
                        continue;
                    }
                    let alpha = (s.splat.opacity * (-0.5 * m).exp()).min(ALPHA_MAX);
                    let wgt = t * alpha;
                    for ch in 0..3 {
                        c[ch] += wgt * s.splat.color[ch];
                    }
                    d += wgt * s.splat.depth;
                    t *= 1.0 - alpha;
                    if t < TRANSMITTANCE_MIN {
                        break;
                    }
                }
                crow[x * 3..x * 3 + 3].copy_from_slice(&c);
                drow[x] = d;
            }
        });

    Ok(Rendered {
        color: RasterImage::from_computed(w, h, 3, color),
        depth: DepthMap::new(w, h, depth)?,
    })
}
