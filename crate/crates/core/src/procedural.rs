//! Seeded procedural scenes: a textured all-in-focus image plus its depth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Result};
use crate::raster::{DepthMap, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneStyle {
    /// Vertical bands, each a fronto-parallel plane at its own depth.
    FrontoPlanes,
    /// One plane whose depth grows linearly from left to right.
    SlantedPlane,
    /// Hemispherical bumps in front of a background plane.
    Spheres,
}

impl std::str::FromStr for SceneStyle {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fronto-planes" => Ok(SceneStyle::FrontoPlanes),
            "slanted-plane" => Ok(SceneStyle::SlantedPlane),
            "spheres" => Ok(SceneStyle::Spheres),
            other => Err(crate::error::domain!(
                "unknown scene style '{other}' (expected fronto-planes, slanted-plane or spheres)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProceduralConfig {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub style: SceneStyle,
    pub depth_min_m: f64,
    pub depth_max_m: f64,
    /// Plane depths for [`SceneStyle::FrontoPlanes`]; defaults to four evenly
    /// spaced depths across the range.
    pub plane_depths_m: Option<Vec<f64>>,
}

impl ProceduralConfig {
    pub fn new(width: usize, height: usize, seed: u64, style: SceneStyle) -> Self {
        Self {
            width,
            height,
            seed,
            style,
            depth_min_m: 1.0,
            depth_max_m: 4.0,
            plane_depths_m: None,
        }
    }

    pub fn with_depth_range(mut self, min_m: f64, max_m: f64) -> Self {
        self.depth_min_m = min_m;
        self.depth_max_m = max_m;
        self
    }

    pub fn plane_depths(&self) -> Vec<f64> {
        self.plane_depths_m.clone().unwrap_or_else(|| {
            let (lo, hi) = (self.depth_min_m, self.depth_max_m);
            (0..4).map(|i| lo + (hi - lo) * i as f64 / 3.0).collect()
        })
    }
}

/// Generates the all-in-focus texture and depth map for `cfg`.
pub fn synth_procedural(cfg: &ProceduralConfig) -> Result<(RasterImage, DepthMap)> {
    ensure!(
        cfg.width >= 16 && cfg.height >= 16,
        "procedural scenes need at least 16x16 pixels, got {}x{}",
        cfg.width,
        cfg.height
    );
    ensure!(
        cfg.depth_min_m > 0.0 && cfg.depth_min_m < cfg.depth_max_m,
        "depth range must satisfy 0 < min < max"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let image = texture(cfg.width, cfg.height, &mut rng)?;
    let depth = match cfg.style {
        SceneStyle::FrontoPlanes => fronto_planes(cfg)?,
        SceneStyle::SlantedPlane => slanted_plane(cfg)?,
        SceneStyle::Spheres => spheres(cfg, &mut rng)?,
    };
    Ok((image, depth))
}

/// Multi-octave value noise; the finest octave has a 2-pixel lattice.
struct ValueNoise {
    cell: f64,
    cols: usize,
    values: Vec<f64>,
}

impl ValueNoise {
    fn new(width: usize, height: usize, cell: usize, rng: &mut impl Rng) -> Self {
        let cols = width / cell + 2;
        let rows = height / cell + 2;
        let values = (0..cols * rows).map(|_| rng.random::<f64>()).collect();
        Self {
            cell: cell as f64,
            cols,
            values,
        }
    }

    fn sample(&self, x: usize, y: usize) -> f64 {
        let fx = x as f64 / self.cell;
        let fy = y as f64 / self.cell;
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let at = |cx: usize, cy: usize| self.values[cy * self.cols + cx];
        let top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
        let bottom = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

fn texture(width: usize, height: usize, rng: &mut impl Rng) -> Result<RasterImage> {
    const OCTAVES: [(usize, f64); 3] = [(2, 0.5), (4, 0.3), (8, 0.2)];
    let luma: Vec<ValueNoise> = OCTAVES
        .iter()
        .map(|&(cell, _)| ValueNoise::new(width, height, cell, rng))
        .collect();
    let chroma: Vec<ValueNoise> = (0..3)
        .map(|_| ValueNoise::new(width, height, 4, rng))
        .collect();
    RasterImage::from_fn(width, height, 3, |x, y, c| {
        let l: f64 = luma
            .iter()
            .zip(OCTAVES)
            .map(|(n, (_, amp))| amp * n.sample(x, y))
            .sum();
        let v = 0.7 * l + 0.3 * chroma[c].sample(x, y);
        0.05 + 0.9 * v
    })
}

fn fronto_planes(cfg: &ProceduralConfig) -> Result<DepthMap> {
    let planes = cfg.plane_depths();
    ensure!(!planes.is_empty(), "fronto-planes style needs at least one plane");
    ensure!(
        planes.iter().all(|d| *d > 0.0 && d.is_finite()),
        "plane depths must be positive"
    );
    let n = planes.len();
    DepthMap::from_fn(cfg.width, cfg.height, |x, _| planes[(x * n / cfg.width).min(n - 1)])
}

fn slanted_plane(cfg: &ProceduralConfig) -> Result<DepthMap> {
    let span = cfg.depth_max_m - cfg.depth_min_m;
    let last = (cfg.width - 1) as f64;
    DepthMap::from_fn(cfg.width, cfg.height, |x, _| {
        cfg.depth_min_m + span * x as f64 / last
    })
}

fn spheres(cfg: &ProceduralConfig, rng: &mut impl Rng) -> Result<DepthMap> {
    let (lo, hi) = (cfg.depth_min_m, cfg.depth_max_m);
    let side = cfg.width.min(cfg.height) as f64;
    let count = rng.random_range(3..=5);
    let bumps: Vec<(f64, f64, f64, f64, f64)> = (0..count)
        .map(|_| {
            let r_px = rng.random_range(side / 8.0..side / 4.0);
            let cx = rng.random_range(0.0..cfg.width as f64);
            let cy = rng.random_range(0.0..cfg.height as f64);
            let r_m = 0.25 * (hi - lo) * r_px / (side / 4.0);
            let zc = rng.random_range(lo + r_m..hi - r_m);
            (cx, cy, r_px, r_m, zc)
        })
        .collect();
    DepthMap::from_fn(cfg.width, cfg.height, |x, y| {
        bumps
            .iter()
            .filter_map(|&(cx, cy, r_px, r_m, zc)| {
                let rho2 = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / (r_px * r_px);
                (rho2 < 1.0).then(|| zc - r_m * (1.0 - rho2).sqrt())
            })
            .fold(hi, f64::min)
    })
}
