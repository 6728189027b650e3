//! Depth from a focal stack by reblur matching, and CoC inversion to depth.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{ensure, Result};
use crate::lens::LensModel;
use crate::psf::{blur_uniform, compose_blur, threshold_sigma, DEFAULT_WINDOW};
use crate::raster::{same_dims, DefocusMap, DepthMap, RasterImage};
use crate::stack::{defocus_from_depth, FocalStack};

pub const DEFAULT_GRID_SIZE: usize = 64;

/// Candidate depths with the CoC radius each view would see at each of them.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthGrid {
    depths: Vec<f64>,
    /// `sigma[k][j]`: radius in view `j` at candidate `k`.
    sigma: Vec<Vec<f64>>,
}

impl DepthGrid {
    pub fn new(depths: Vec<f64>, lenses: &[LensModel]) -> Result<Self> {
        ensure!(!depths.is_empty(), "depth grid is empty");
        ensure!(!lenses.is_empty(), "depth grid needs at least one lens");
        ensure!(
            depths.iter().all(|d| d.is_finite() && *d > 0.0),
            "grid depths must be positive"
        );
        ensure!(
            depths.windows(2).all(|w| w[0] < w[1]),
            "grid depths must be strictly increasing"
        );
        let sigma = depths
            .iter()
            .map(|&d| lenses.iter().map(|l| l.coc_radius_unchecked(d)).collect())
            .collect();
        Ok(Self { depths, sigma })
    }

    /// `n` log-spaced candidates over `[min_m, max_m]`, both ends included.
    pub fn log_spaced(min_m: f64, max_m: f64, n: usize, lenses: &[LensModel]) -> Result<Self> {
        ensure!(
            min_m > 0.0 && min_m < max_m && max_m.is_finite(),
            "grid range must satisfy 0 < min < max, got [{min_m}, {max_m}]"
        );
        ensure!(n >= 2, "grid needs at least 2 candidates, got {n}");
        let (a, b) = (min_m.ln(), max_m.ln());
        let mut depths: Vec<f64> = (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect();
        depths[0] = min_m;
        depths[n - 1] = max_m;
        Self::new(depths, lenses)
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    pub fn n_views(&self) -> usize {
        self.sigma[0].len()
    }

    pub fn sigma(&self, candidate: usize, view: usize) -> f64 {
        self.sigma[candidate][view]
    }

    /// Index of the candidate closest to `depth_m` in log distance.
    pub fn nearest(&self, depth_m: f64) -> usize {
        let ld = depth_m.ln();
        let mut best = 0;
        for (i, d) in self.depths.iter().enumerate() {
            if (d.ln() - ld).abs() < (self.depths[best].ln() - ld).abs() {
                best = i;
            }
        }
        best
    }
}

/// How views are brought to a common blur level before comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReblurScheme {
    /// Blur every view up to the largest hypothesized radius.
    #[default]
    ComposeToReference,
    /// Blur view `j` by view `k`'s radius and vice versa, for each pair.
    CrossBlur,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub patch_px: usize,
    pub window: usize,
    /// Blur already present in every view, composed with the CoC.
    pub baseline_sigma_px: f64,
    /// Patches whose sharpest view has a lower luminance std are unreliable.
    pub low_texture_std: f64,
    pub scheme: ReblurScheme,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            patch_px: 16,
            window: DEFAULT_WINDOW,
            baseline_sigma_px: 0.0,
            low_texture_std: 0.01,
            scheme: ReblurScheme::default(),
        }
    }
}

/// Per-patch layout of an estimate. Edge patches may be partial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGrid {
    pub patch_px: usize,
    pub cols: usize,
    pub rows: usize,
    width: usize,
    height: usize,
}

impl PatchGrid {
    pub fn new(width: usize, height: usize, patch_px: usize) -> Self {
        Self {
            patch_px,
            cols: width.div_ceil(patch_px),
            rows: height.div_ceil(patch_px),
            width,
            height,
        }
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pixel ranges `(x0..x1, y0..y1)` of patch `i`.
    pub fn bounds(&self, i: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let (bx, by) = (i % self.cols, i / self.cols);
        let x0 = bx * self.patch_px;
        let y0 = by * self.patch_px;
        (
            x0..(x0 + self.patch_px).min(self.width),
            y0..(y0 + self.patch_px).min(self.height),
        )
    }

    /// Continuous pixel coordinate of the center of patch `i`.
    pub fn center(&self, i: usize) -> (f64, f64) {
        let (xs, ys) = self.bounds(i);
        (
            (xs.start + xs.end - 1) as f64 / 2.0,
            (ys.start + ys.end - 1) as f64 / 2.0,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthEstimate {
    pub depth: DepthMap,
    /// `σ_j(x) = coc_radius(lens_j, depth(x))` for each view.
    pub defocus: Vec<DefocusMap>,
    pub patches: PatchGrid,
    /// Winning candidate per patch (after filling unreliable patches).
    pub patch_index: Vec<usize>,
    pub patch_depth: Vec<f64>,
    pub confident: Vec<bool>,
}

/// Recovers depth by searching `grid` for the hypothesis under which all views
/// agree after reblurring.
pub fn estimate_depth_from_stack(
    stack: &FocalStack,
    grid: &DepthGrid,
    opts: &EstimateOptions,
) -> Result<DepthEstimate> {
    let n = stack.len();
    ensure!(n >= 2, "depth estimation needs at least 2 views, got {n}");
    ensure!(
        grid.n_views() == n,
        "depth grid was built for {} views, stack has {n}",
        grid.n_views()
    );
    ensure!(opts.patch_px > 0, "patch size must be positive");
    ensure!(
        opts.baseline_sigma_px.is_finite() && opts.baseline_sigma_px >= 0.0,
        "baseline sigma must be non-negative"
    );
    let (w, h) = stack.dims();
    let patches = PatchGrid::new(w, h, opts.patch_px);
    let lum: Vec<RasterImage> = stack.entries().iter().map(|e| e.image.luminance()).collect();

    let effective = |k: usize, j: usize| threshold_sigma(compose_blur(opts.baseline_sigma_px, grid.sigma(k, j)));
    let scores: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let s: Vec<f64> = (0..n).map(|j| effective(k, j)).collect();
            match opts.scheme {
                ReblurScheme::ComposeToReference => compose_scores(&lum, &s, &patches, opts.window),
                ReblurScheme::CrossBlur => cross_scores(&lum, &s, &patches, opts.window),
            }
        })
        .collect::<Result<_>>()?;

    let texture: Vec<f64> = (0..patches.len())
        .map(|p| lum.iter().map(|l| patch_std(l, &patches, p)).fold(0.0, f64::max))
        .collect();
    let mut index = vec![0usize; patches.len()];
    let mut confident = vec![false; patches.len()];
    for p in 0..patches.len() {
        let (mut best, mut lo, mut hi) = (0, f64::INFINITY, f64::NEG_INFINITY);
        for (k, sc) in scores.iter().enumerate() {
            if sc[p] < lo {
                lo = sc[p];
                best = k;
            }
            hi = hi.max(sc[p]);
        }
        index[p] = best;
        confident[p] = texture[p] >= opts.low_texture_std && hi - lo > 1e-6;
    }
    ensure!(
        confident.iter().any(|c| *c),
        "no patch has enough texture to estimate depth"
    );
    let filled: Vec<usize> = (0..patches.len())
        .map(|p| {
            if confident[p] {
                return index[p];
            }
            let (px, py) = ((p % patches.cols) as isize, (p / patches.cols) as isize);
            let nearest = (0..patches.len())
                .filter(|&q| confident[q])
                .min_by_key(|&q| {
                    let (qx, qy) = ((q % patches.cols) as isize, (q / patches.cols) as isize);
                    ((qx - px).pow(2) + (qy - py).pow(2), q)
                })
                .unwrap();
            index[nearest]
        })
        .collect();
    let patch_depth: Vec<f64> = filled.iter().map(|&k| grid.depths()[k]).collect();
    let depth = upsample(&patch_depth, &patches)?;
    let defocus = stack
        .entries()
        .iter()
        .map(|e| defocus_from_depth(&depth, &e.lens))
        .collect();
    Ok(DepthEstimate {
        depth,
        defocus,
        patches,
        patch_index: filled,
        patch_depth,
        confident,
    })
}

fn patch_l1(a: &RasterImage, b: &RasterImage, patches: &PatchGrid, out: &mut [f64]) {
    for (p, o) in out.iter_mut().enumerate() {
        let (xs, ys) = patches.bounds(p);
        let mut sum = 0.0;
        for y in ys.clone() {
            for x in xs.clone() {
                sum += (a.get(x, y, 0) - b.get(x, y, 0)).abs();
            }
        }
        *o += sum / (xs.len() * ys.len()) as f64;
    }
}

fn compose_scores(lum: &[RasterImage], s: &[f64], patches: &PatchGrid, window: usize) -> Result<Vec<f64>> {
    let reference = s.iter().copied().fold(0.0, f64::max);
    let reblurred: Vec<RasterImage> = lum
        .iter()
        .zip(s)
        .map(|(l, &sj)| blur_uniform(l, (reference * reference - sj * sj).max(0.0).sqrt(), window))
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; patches.len()];
    let mut pairs = 0;
    for j in 0..lum.len() {
        for k in j + 1..lum.len() {
            patch_l1(&reblurred[j], &reblurred[k], patches, &mut out);
            pairs += 1;
        }
    }
    out.iter_mut().for_each(|v| *v /= pairs as f64);
    Ok(out)
}

fn cross_scores(lum: &[RasterImage], s: &[f64], patches: &PatchGrid, window: usize) -> Result<Vec<f64>> {
    let mut cache: HashMap<(usize, u64), RasterImage> = HashMap::new();
    let mut blurred = |j: usize, sigma: f64| -> Result<RasterImage> {
        if let Some(img) = cache.get(&(j, sigma.to_bits())) {
            return Ok(img.clone());
        }
        let img = blur_uniform(&lum[j], sigma, window)?;
        cache.insert((j, sigma.to_bits()), img.clone());
        Ok(img)
    };
    let mut out = vec![0.0; patches.len()];
    let mut pairs = 0;
    for j in 0..lum.len() {
        for k in j + 1..lum.len() {
            let a = blurred(j, s[k])?;
            let b = blurred(k, s[j])?;
            patch_l1(&a, &b, patches, &mut out);
            pairs += 1;
        }
    }
    out.iter_mut().for_each(|v| *v /= pairs as f64);
    Ok(out)
}

fn patch_std(l: &RasterImage, patches: &PatchGrid, p: usize) -> f64 {
    let (xs, ys) = patches.bounds(p);
    let n = (xs.len() * ys.len()) as f64;
    let (mut s, mut s2) = (0.0, 0.0);
    for y in ys {
        for x in xs.clone() {
            let v = l.get(x, y, 0);
            s += v;
            s2 += v * v;
        }
    }
    let mean = s / n;
    (s2 / n - mean * mean).max(0.0).sqrt()
}

/// Bilinear interpolation between patch centers, clamped outside them.
fn upsample(values: &[f64], patches: &PatchGrid) -> Result<DepthMap> {
    let xs: Vec<f64> = (0..patches.cols).map(|c| patches.center(c).0).collect();
    let ys: Vec<f64> = (0..patches.rows).map(|r| patches.center(r * patches.cols).1).collect();
    let locate = |centers: &[f64], t: f64| -> (usize, usize, f64) {
        if centers.len() == 1 || t <= centers[0] {
            return (0, 0, 0.0);
        }
        let last = centers.len() - 1;
        if t >= centers[last] {
            return (last, last, 0.0);
        }
        let i = centers.iter().rposition(|c| *c <= t).unwrap();
        (i, i + 1, (t - centers[i]) / (centers[i + 1] - centers[i]))
    };
    DepthMap::from_fn(patches.width, patches.height, |x, y| {
        let (x0, x1, fx) = locate(&xs, x as f64);
        let (y0, y1, fy) = locate(&ys, y as f64);
        let v = |c: usize, r: usize| values[r * patches.cols + c];
        let top = v(x0, y0) * (1.0 - fx) + v(x1, y0) * fx;
        let bottom = v(x0, y1) * (1.0 - fx) + v(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

/// Per-pixel depth from a defocus map, choosing the CoC root nearer to `prior`.
///
/// Where the far root does not exist the near root is returned; pixels with an
/// invalid prior also take the near root.
pub fn invert_defocus_to_depth(defocus: &DefocusMap, lens: &LensModel, prior: &DepthMap) -> Result<DepthMap> {
    same_dims(defocus.dims(), prior.dims(), "invert_defocus_to_depth")?;
    let data = defocus
        .data()
        .iter()
        .zip(prior.data())
        .map(|(&s, &p)| {
            let roots = lens.invert_coc(s)?;
            Ok(match roots.far {
                Some(far) if p > 0.0 && (far - p).abs() < (roots.near - p).abs() => far,
                _ => roots.near,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    DepthMap::new(defocus.width(), defocus.height(), data)
}
