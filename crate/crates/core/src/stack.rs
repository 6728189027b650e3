//! Focal stacks and their synthesis from an all-in-focus image plus depth.

use crate::error::{ensure, Result};
use crate::lens::LensModel;
use crate::psf::{compose_blur, render_defocus, DEFAULT_WINDOW};
use crate::raster::{same_dims, DefocusMap, DepthMap, RasterImage};

#[derive(Debug, Clone, PartialEq)]
pub struct StackEntry {
    pub image: RasterImage,
    pub lens: LensModel,
    /// Ground-truth CoC radii used to render `image`, when known.
    pub defocus: Option<DefocusMap>,
}

/// Images of one scene at strictly increasing focus distances.
#[derive(Debug, Clone, PartialEq)]
pub struct FocalStack {
    entries: Vec<StackEntry>,
    pub depth: Option<DepthMap>,
    pub aif: Option<RasterImage>,
}

impl FocalStack {
    pub fn new(
        entries: Vec<StackEntry>,
        depth: Option<DepthMap>,
        aif: Option<RasterImage>,
    ) -> Result<Self> {
        ensure!(!entries.is_empty(), "focal stack has no entries");
        let dims = entries[0].image.dims();
        for (i, e) in entries.iter().enumerate() {
            same_dims(dims, e.image.dims(), &format!("focal stack entry {i}"))?;
            if let Some(d) = &e.defocus {
                same_dims(dims, d.dims(), &format!("defocus map of entry {i}"))?;
            }
        }
        for pair in entries.windows(2) {
            let (a, b) = (pair[0].lens.focus_distance_m(), pair[1].lens.focus_distance_m());
            ensure!(a < b, "focus distances must be strictly increasing ({a} then {b})");
        }
        if let Some(d) = &depth {
            same_dims(dims, d.dims(), "focal stack depth")?;
        }
        if let Some(a) = &aif {
            same_dims(dims, a.dims(), "focal stack all-in-focus image")?;
        }
        Ok(Self {
            entries,
            depth,
            aif,
        })
    }

    pub fn entries(&self) -> &[StackEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.entries[0].image.dims()
    }

    pub fn focus_distances(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.lens.focus_distance_m())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub window: usize,
    /// Blur already present in the source image, composed with every CoC.
    pub baseline_sigma_px: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            baseline_sigma_px: 0.0,
        }
    }
}

/// Per-pixel CoC radius map for `depth` under `lens`. Invalid pixels get zero.
pub fn defocus_from_depth(depth: &DepthMap, lens: &LensModel) -> DefocusMap {
    let data = depth
        .data()
        .iter()
        .map(|&d| if d > 0.0 { lens.coc_radius_unchecked(d) } else { 0.0 })
        .collect();
    DefocusMap::new(depth.width(), depth.height(), data)
        .expect("CoC radii of valid depths are finite and non-negative")
}

/// Renders one defocused view per focus distance.
pub fn synthesize_stack(
    aif: &RasterImage,
    depth: &DepthMap,
    lens_base: &LensModel,
    focus_distances_m: &[f64],
    opts: &SynthOptions,
) -> Result<FocalStack> {
    same_dims(aif.dims(), depth.dims(), "synthesize_stack")?;
    ensure!(!focus_distances_m.is_empty(), "no focus distances given");
    ensure!(
        opts.baseline_sigma_px.is_finite() && opts.baseline_sigma_px >= 0.0,
        "baseline sigma must be non-negative"
    );
    let mut entries = Vec::with_capacity(focus_distances_m.len());
    for &fd in focus_distances_m {
        let lens = lens_base.with_focus_distance(fd)?;
        let defocus = defocus_from_depth(depth, &lens);
        let blur = if opts.baseline_sigma_px > 0.0 {
            let data = defocus
                .data()
                .iter()
                .map(|&s| compose_blur(opts.baseline_sigma_px, s))
                .collect();
            DefocusMap::new(defocus.width(), defocus.height(), data)?
        } else {
            defocus.clone()
        };
        let image = render_defocus(aif, &blur, opts.window)?;
        entries.push(StackEntry {
            image,
            lens,
            defocus: Some(defocus),
        });
    }
    FocalStack::new(entries, Some(depth.clone()), Some(aif.clone()))
}
