//! Standard monocular depth benchmark metrics.

use crate::error::{ensure, Result};
use crate::raster::{same_dims, DepthMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthMetrics {
    pub rmse: f64,
    pub absrel: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub valid_pixels: usize,
}

/// Metrics over pixels valid in both maps. `δk` counts ratios strictly below `1.25^k`.
pub fn depth_metrics(pred: &DepthMap, gt: &DepthMap) -> Result<DepthMetrics> {
    same_dims(pred.dims(), gt.dims(), "depth_metrics")?;
    depth_metrics_masked(pred, gt, |_| true)
}

/// [`depth_metrics`] further restricted to pixel indices accepted by `mask`.
pub fn depth_metrics_masked(
    pred: &DepthMap,
    gt: &DepthMap,
    mask: impl Fn(usize) -> bool,
) -> Result<DepthMetrics> {
    same_dims(pred.dims(), gt.dims(), "depth_metrics")?;
    let (mut se, mut rel, mut n) = (0.0, 0.0, 0usize);
    let mut hits = [0usize; 3];
    for (i, (&p, &g)) in pred.data().iter().zip(gt.data()).enumerate() {
        if !(p > 0.0 && g > 0.0 && mask(i)) {
            continue;
        }
        n += 1;
        se += (p - g) * (p - g);
        rel += (p - g).abs() / g;
        let ratio = (p / g).max(g / p);
        let mut thr = 1.0;
        for h in &mut hits {
            thr *= 1.25;
            if ratio < thr {
                *h += 1;
            }
        }
    }
    ensure!(n > 0, "depth_metrics: no pixels are valid in both maps");
    let nf = n as f64;
    Ok(DepthMetrics {
        rmse: (se / nf).sqrt(),
        absrel: rel / nf,
        delta1: hits[0] as f64 / nf,
        delta2: hits[1] as f64 / nf,
        delta3: hits[2] as f64 / nf,
        valid_pixels: n,
    })
}
