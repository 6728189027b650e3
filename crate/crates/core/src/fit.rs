//! Joint fitting of Gaussians and per-view focus distance to observed views.
//!
//! Gradients are central finite differences of the total loss, one probe pair
//! per unmasked scalar. Steps are plain gradient descent with a shared step
//! multiplier that halves on failure and grows on success.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{domain, ensure, Error, Result};
use crate::losses::{
    blur_loss, defocus_loss, recon_loss, total_loss, BlurLossOptions, BlurNormalization, LossWeights,
    DEFAULT_PATCH_PX,
};
use crate::raster::{DefocusMap, RasterImage};
use crate::splat::{render, CameraView, Gaussian3D, GaussianScene, RenderOptions};
use crate::stack::defocus_from_depth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    Position,
    Scale,
    Rotation,
    Opacity,
    Color,
    Focus,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 6] = [
        ParamGroup::Position,
        ParamGroup::Scale,
        ParamGroup::Rotation,
        ParamGroup::Opacity,
        ParamGroup::Color,
        ParamGroup::Focus,
    ];

    fn name(self) -> &'static str {
        match self {
            ParamGroup::Position => "pos",
            ParamGroup::Scale => "scale",
            ParamGroup::Rotation => "rot",
            ParamGroup::Opacity => "opacity",
            ParamGroup::Color => "color",
            ParamGroup::Focus => "focus",
        }
    }

    /// Parses a comma-separated list such as `pos,scale,focus`.
    pub fn parse_list(s: &str) -> Result<Vec<ParamGroup>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let g: ParamGroup = part.parse()?;
            if !out.contains(&g) {
                out.push(g);
            }
        }
        ensure!(!out.is_empty(), "no parameter groups selected");
        Ok(out)
    }
}

impl FromStr for ParamGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| domain!("unknown parameter group `{s}` (expected pos, scale, rot, opacity, color or focus)"))
    }
}

impl fmt::Display for ParamGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per parameter group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupValues {
    pub position: f64,
    /// Applies to log-scale.
    pub scale: f64,
    pub rotation: f64,
    pub opacity: f64,
    pub color: f64,
    pub focus: f64,
}

impl GroupValues {
    pub fn get(&self, g: ParamGroup) -> f64 {
        match g {
            ParamGroup::Position => self.position,
            ParamGroup::Scale => self.scale,
            ParamGroup::Rotation => self.rotation,
            ParamGroup::Opacity => self.opacity,
            ParamGroup::Color => self.color,
            ParamGroup::Focus => self.focus,
        }
    }

    fn all_positive(&self) -> bool {
        ParamGroup::ALL.iter().all(|g| {
            let v = self.get(*g);
            v.is_finite() && v > 0.0
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub iterations: usize,
    /// Initial gradient-descent step per group.
    pub step: GroupValues,
    /// Central-difference half-width per group.
    pub fd_step: GroupValues,
    pub weights: LossWeights,
    pub blur_normalization: BlurNormalization,
    pub optimize: Vec<ParamGroup>,
    pub render: RenderOptions,
    pub patch_px: usize,
    pub max_halvings: usize,
    /// Step multiplier growth after an accepted step.
    pub growth: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            step: GroupValues {
                position: 1e-3,
                scale: 1e-2,
                rotation: 1e-2,
                opacity: 1e-2,
                color: 1e-2,
                focus: 1e-1,
            },
            fd_step: GroupValues {
                position: 1e-5,
                scale: 1e-4,
                rotation: 1e-4,
                opacity: 1e-4,
                color: 1e-4,
                focus: 1e-4,
            },
            weights: LossWeights::default(),
            blur_normalization: BlurNormalization::default(),
            optimize: vec![ParamGroup::Position, ParamGroup::Scale, ParamGroup::Opacity, ParamGroup::Color],
            render: RenderOptions::default(),
            patch_px: DEFAULT_PATCH_PX,
            max_halvings: 5,
            growth: 1.2,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.iterations >= 1, "iterations must be at least 1");
        ensure!(self.step.all_positive(), "step sizes must be positive");
        ensure!(self.fd_step.all_positive(), "finite-difference steps must be positive");
        ensure!(!self.optimize.is_empty(), "no parameter groups selected");
        ensure!(self.growth >= 1.0, "step growth must be at least 1");
        ensure!(self.patch_px > 0, "patch size must be positive");
        self.weights.validate()
    }

    fn blur_options(&self) -> BlurLossOptions {
        BlurLossOptions {
            beta: self.weights.beta_blur,
            normalization: self.blur_normalization,
            ..Default::default()
        }
    }
}

/// An observed view to fit against.
#[derive(Debug, Clone, PartialEq)]
pub struct FitView {
    pub camera: CameraView,
    pub target: RasterImage,
    /// Per-pixel CoC radii the rendered depth should reproduce, if known.
    pub defocus_target: Option<DefocusMap>,
    /// Scene view that receives the fitted focus distance.
    pub scene_view: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub defocus: f64,
    pub blur: f64,
    pub recon: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub scene: GaussianScene,
    pub cameras: Vec<CameraView>,
    pub initial: LossBreakdown,
    pub last: LossBreakdown,
    /// Total loss after each iteration.
    pub trace: Vec<f64>,
}

/// Loss of `gaussians` against `views`; every view is rendered with depth of field.
pub fn evaluate_loss(gaussians: &[Gaussian3D], views: &[FitView], cfg: &FitConfig) -> Result<LossBreakdown> {
    ensure!(!views.is_empty(), "no views to evaluate");
    let w = &cfg.weights;
    let opts = RenderOptions {
        enable_dof: true,
        ..cfg.render
    };
    let blur_opts = cfg.blur_options();
    let (mut d, mut b, mut r, mut nd) = (0.0, 0.0, 0.0, 0usize);
    for v in views {
        let out = render(gaussians, &v.camera, &opts)?;
        r += recon_loss(&out.color, &v.target, w.alpha_ssim)?;
        if w.mu_blur > 0.0 {
            b += blur_loss(&out.color, &blur_opts)?;
        }
        if let (true, Some(t)) = (w.mu_defocus > 0.0, &v.defocus_target) {
            let rendered = defocus_from_depth(&out.depth, &v.camera.lens);
            d += defocus_loss(&rendered, t, cfg.patch_px)?;
            nd += 1;
        }
    }
    let n = views.len() as f64;
    let defocus = if nd > 0 { d / nd as f64 } else { 0.0 };
    let (blur, recon) = (b / n, r / n);
    Ok(LossBreakdown {
        defocus,
        blur,
        recon,
        total: total_loss(defocus, blur, recon, w),
    })
}

const PER_GAUSSIAN: usize = 14;

/// Flat parameter vector: per Gaussian `[mean(3), ln scale(3), quat(4), opacity, color(3)]`,
/// then one focus distance per view.
struct Params {
    template: Vec<Gaussian3D>,
    cameras: Vec<CameraView>,
}

impl Params {
    fn flatten(gaussians: &[Gaussian3D], cameras: &[CameraView]) -> Vec<f64> {
        let mut t = Vec::with_capacity(gaussians.len() * PER_GAUSSIAN + cameras.len());
        for g in gaussians {
            t.extend(g.mean.iter());
            t.extend(g.scale.iter().map(|s| s.ln()));
            t.extend(g.rotation);
            t.push(g.opacity);
            t.extend(g.color);
        }
        t.extend(cameras.iter().map(|c| c.lens.focus_distance_m()));
        t
    }

    fn group_of(&self, i: usize) -> ParamGroup {
        let n = self.template.len() * PER_GAUSSIAN;
        if i >= n {
            return ParamGroup::Focus;
        }
        match i % PER_GAUSSIAN {
            0..=2 => ParamGroup::Position,
            3..=5 => ParamGroup::Scale,
            6..=9 => ParamGroup::Rotation,
            10 => ParamGroup::Opacity,
            _ => ParamGroup::Color,
        }
    }

    /// Decodes `theta`, projecting onto the feasible set.
    fn unflatten(&self, theta: &[f64]) -> (Vec<Gaussian3D>, Vec<CameraView>) {
        let gaussians = self
            .template
            .iter()
            .enumerate()
            .map(|(k, base)| {
                let p = &theta[k * PER_GAUSSIAN..(k + 1) * PER_GAUSSIAN];
                let mut g = Gaussian3D {
                    mean: Vector3::new(p[0], p[1], p[2]),
                    scale: Vector3::new(p[3].exp(), p[4].exp(), p[5].exp()),
                    rotation: [p[6], p[7], p[8], p[9]],
                    opacity: p[10].clamp(0.0, 1.0),
                    color: [p[11].clamp(0.0, 1.0), p[12].clamp(0.0, 1.0), p[13].clamp(0.0, 1.0)],
                };
                if crate::splat::gaussian::quat_norm(&g.rotation) > 0.0 {
                    g.normalize_rotation();
                } else {
                    g.rotation = base.rotation;
                }
                g
            })
            .collect();
        let off = self.template.len() * PER_GAUSSIAN;
        let cameras = self
            .cameras
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let f = c.lens.focal_length_m();
                let fd = theta[off + j].max(f * (1.0 + 1e-6));
                CameraView {
                    lens: c.lens.with_focus_distance(fd).expect("focus clamped above focal length"),
                    ..*c
                }
            })
            .collect();
        (gaussians, cameras)
    }
}

fn with_cameras(views: &[FitView], cameras: &[CameraView]) -> Vec<FitView> {
    views
        .iter()
        .zip(cameras)
        .map(|(v, c)| FitView {
            camera: *c,
            ..v.clone()
        })
        .collect()
}

/// Minimizes the total loss over the parameter groups in `cfg.optimize`.
///
/// A trial step that fails to lower the loss is halved up to `max_halvings`
/// times; if none of them helps the step is rejected, so the trace never rises.
pub fn fit_scene(scene: &GaussianScene, views: &[FitView], cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    scene.validate()?;
    ensure!(!views.is_empty(), "fit needs at least one view");
    for (i, v) in views.iter().enumerate() {
        let (iw, ih) = (v.camera.intrinsics.width, v.camera.intrinsics.height);
        ensure!(
            v.target.dims() == (iw, ih),
            "view {i}: target is {}x{} but the camera renders {iw}x{ih}",
            v.target.width(),
            v.target.height()
        );
        if let Some(s) = v.scene_view {
            ensure!(s < scene.views.len(), "view {i}: scene view {s} does not exist");
        }
    }
    let cameras: Vec<CameraView> = views.iter().map(|v| v.camera).collect();
    let params = Params {
        template: scene.gaussians.clone(),
        cameras: cameras.clone(),
    };
    let active: Vec<usize> = (0..scene.gaussians.len() * PER_GAUSSIAN + cameras.len())
        .filter(|&i| cfg.optimize.contains(&params.group_of(i)))
        .collect();

    let loss_at = |theta: &[f64]| -> Result<LossBreakdown> {
        let (g, c) = params.unflatten(theta);
        evaluate_loss(&g, &with_cameras(views, &c), cfg)
    };
    let check = |l: LossBreakdown, iteration: usize, what: &str| -> Result<LossBreakdown> {
        if l.total.is_finite() {
            Ok(l)
        } else {
            Err(Error::NonFiniteLoss {
                iteration,
                detail: format!("{what}: defocus {} blur {} recon {}", l.defocus, l.blur, l.recon),
            })
        }
    };

    let mut theta = Params::flatten(&scene.gaussians, &cameras);
    let initial = check(loss_at(&theta)?, 0, "initial loss")?;
    let mut current = initial;
    let mut multiplier = 1.0;
    let mut trace = Vec::with_capacity(cfg.iterations);
    for it in 1..=cfg.iterations {
        let grads: Vec<f64> = active
            .par_iter()
            .map(|&i| {
                let h = cfg.fd_step.get(params.group_of(i));
                let mut probe = theta.clone();
                probe[i] = theta[i] + h;
                let up = loss_at(&probe)?.total;
                probe[i] = theta[i] - h;
                let down = loss_at(&probe)?.total;
                Ok((up - down) / (2.0 * h))
            })
            .collect::<Result<_>>()?;
        if let Some(k) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss {
                iteration: it,
                detail: format!("gradient of parameter {} is not finite", active[k]),
            });
        }
        let mut accepted = false;
        for _ in 0..=cfg.max_halvings {
            let mut trial = theta.clone();
            for (&i, g) in active.iter().zip(&grads) {
                trial[i] -= multiplier * cfg.step.get(params.group_of(i)) * g;
            }
            let (g, c) = params.unflatten(&trial);
            let trial = Params::flatten(&g, &c);
            let l = check(loss_at(&trial)?, it, "trial step")?;
            if l.total < current.total {
                theta = trial;
                current = l;
                accepted = true;
                break;
            }
            multiplier *= 0.5;
        }
        if accepted {
            multiplier *= cfg.growth;
        }
        trace.push(current.total);
    }

    let (gaussians, cameras) = params.unflatten(&theta);
    let mut fitted = scene.clone();
    fitted.gaussians = gaussians;
    if cfg.optimize.contains(&ParamGroup::Focus) {
        for (v, c) in views.iter().zip(&cameras) {
            if let Some(s) = v.scene_view {
                fitted.views[s].focus_distance_m = Some(c.lens.focus_distance_m());
            }
        }
    }
    Ok(FitResult {
        scene: fitted,
        cameras,
        initial,
        last: current,
        trace,
    })
}
