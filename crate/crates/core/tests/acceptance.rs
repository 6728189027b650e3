mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use gsdefocus::estimate::{estimate_depth_from_stack, DepthGrid, EstimateOptions};
use gsdefocus::fit::{fit_scene, FitConfig, FitView, ParamGroup};
use gsdefocus::losses::{defocus_loss, recon_loss};
use gsdefocus::metrics::{depth_metrics, depth_metrics_masked};
use gsdefocus::procedural::{synth_procedural, ProceduralConfig, SceneStyle};
use gsdefocus::psf::{blur_uniform, compose_blur, gaussian_kernel, render_defocus};
use gsdefocus::refine::{refine_depth, RefineConfig};
use gsdefocus::splat::{blur_splat, project, render, CameraView, Gaussian3D, GaussianScene, Intrinsics, Pose, RenderOptions, SceneView};
use gsdefocus::stack::{defocus_from_depth, synthesize_stack, SynthOptions};
use gsdefocus::{DefocusMap, DepthMap, LensModel, RasterImage};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Writes past the test harness's output capture so every run shows the line.
fn report(n: u32, pass: bool, detail: &str, elapsed: Duration, budget: Duration) -> bool {
    let pass = pass && elapsed <= budget;
    let line = format!(
        "criterion {n}: {} | {detail} | {:.2}s (limit {}s)\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    pass
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

#[test]
fn criterion_1_lens() {
    let t = Instant::now();
    let lens = LensModel::new(0.05, 2.0, 2.0, 1e-5).unwrap();
    let in_focus = lens.coc_radius(2.0).unwrap();
    let inf = 0.05f64.powi(2) / (2.0 * 1e-5 * 2.0 * (2.0 - 0.05));
    let far_rel = (lens.coc_radius(1e6).unwrap() - inf).abs() / inf;

    let near: Vec<f64> = (0..1000).map(|i| 0.06 + (2.0 - 0.06) * i as f64 / 999.0).collect();
    let far: Vec<f64> = (0..1000).map(|i| 2.0 * 500f64.powf(i as f64 / 999.0)).collect();
    let s = |d: &f64| lens.coc_radius(*d).unwrap();
    let near_dec = near.windows(2).all(|w| s(&w[1]) < s(&w[0]));
    let far_inc = far.windows(2).all(|w| s(&w[1]) > s(&w[0]));

    let mut worst_rt = 0.0f64;
    for d in near.iter().chain(&far).filter(|d| **d != 2.0) {
        let roots = lens.invert_coc(s(d)).unwrap();
        let back = if *d < 2.0 { roots.near } else { roots.far.unwrap() };
        worst_rt = worst_rt.max((back - d).abs() / d);
    }
    let pass = in_focus == 0.0 && far_rel <= 1e-3 && near_dec && far_inc && worst_rt <= 1e-9;
    let detail = format!(
        "sigma(F_d)={in_focus}, far rel err {far_rel:.2e}, monotone near/far {near_dec}/{far_inc}, round trip {worst_rt:.1e}"
    );
    assert!(report(1, pass, &detail, t.elapsed(), secs(1)));
}

#[test]
fn criterion_2_curve_shape() {
    let t = Instant::now();
    let lens = LensModel::new(0.05, 2.0, 2.0, 1e-5).unwrap();
    let curve = lens.coc_curve(0.5, 10.0, 191).unwrap();
    let zeros: Vec<f64> = curve.iter().filter(|(_, s)| *s == 0.0).map(|(d, _)| *d).collect();
    let dip = curve.iter().position(|(_, s)| *s == 0.0).unwrap_or(0);
    let shape = curve[..=dip].windows(2).all(|w| w[1].1 < w[0].1)
        && curve[dip..].windows(2).all(|w| w[1].1 > w[0].1);
    let pass = zeros == [2.0] && shape;
    let detail = format!("zeros at {zeros:?}, decreasing then increasing: {shape}");
    assert!(report(2, pass, &detail, t.elapsed(), secs(1)));
}

#[test]
fn criterion_3_psf() {
    let t = Instant::now();
    let constant = RasterImage::constant(32, 32, 3, 0.37).unwrap();
    let const_err = [0.5, 1.0, 1.7, 2.5, 4.0]
        .iter()
        .map(|s| blur_uniform(&constant, *s, 7).unwrap().max_abs_diff(&constant).unwrap())
        .fold(0.0, f64::max);

    let mut impulse_err = 0.0f64;
    for s in [1.0, 1.6, 2.5] {
        let img = RasterImage::from_fn(15, 15, 1, |x, y, _| if (x, y) == (7, 7) { 1.0 } else { 0.0 }).unwrap();
        let out = blur_uniform(&img, s, 7).unwrap();
        let k = gaussian_kernel(s, 7).unwrap();
        for y in 0..15 {
            for x in 0..15 {
                let (u, v) = (x as isize - 7, y as isize - 7);
                let want = if u.abs() <= 3 && v.abs() <= 3 { k.at(u, v) } else { 0.0 };
                impulse_err = impulse_err.max((out.get(x, y, 0) - want).abs());
            }
        }
    }

    let (tex, _) = synth_procedural(&ProceduralConfig::new(64, 64, 1, SceneStyle::FrontoPlanes)).unwrap();
    let sharp = render_defocus(&tex, &DefocusMap::constant(64, 64, 0.99).unwrap(), 7).unwrap();
    let identity = sharp == tex;

    let sigmas = [1.0, 1.5, 2.0, 2.5];
    let (mut semigroup, mut interior, mut wide) = (0.0f64, 0.0f64, 0.0f64);
    let inner = |a: &RasterImage, b: &RasterImage| {
        let mut m = 0.0f64;
        for y in 10..54 {
            for x in 10..54 {
                for c in 0..3 {
                    m = m.max((a.get(x, y, c) - b.get(x, y, c)).abs());
                }
            }
        }
        m
    };
    for &s1 in &sigmas {
        for &s2 in &sigmas {
            let twice = blur_uniform(&blur_uniform(&tex, s1, 7).unwrap(), s2, 7).unwrap();
            let once = blur_uniform(&tex, compose_blur(s1, s2), 7).unwrap();
            semigroup = semigroup.max(twice.max_abs_diff(&once).unwrap());
            interior = interior.max(inner(&twice, &once));
            let twice = blur_uniform(&blur_uniform(&tex, s1, 21).unwrap(), s2, 21).unwrap();
            let once = blur_uniform(&tex, compose_blur(s1, s2), 21).unwrap();
            wide = wide.max(inner(&twice, &once));
        }
    }
    let pass = const_err <= 1e-6 && impulse_err <= 1e-15 && identity && semigroup <= 0.02;
    let detail = format!(
        "constant err {const_err:.1e}, impulse err {impulse_err:.1e}, sub-pixel identity {identity}, semigroup Linf {semigroup:.4} (tol 0.02; interior {interior:.4}, interior with window 21 {wide:.4})"
    );
    assert!(report(3, pass, &detail, t.elapsed(), secs(10)));
}

fn oracle_view() -> CameraView {
    CameraView {
        pose: Pose::identity(),
        intrinsics: Intrinsics::centered(64, 64, 70.0).unwrap(),
        lens: LensModel::new(0.02, 2.0, 1.8, 1e-5).unwrap(),
    }
}

#[test]
fn criterion_4_renderer_oracle() {
    let t = Instant::now();
    let g = common::random_gaussians(32, 2024);
    let v = oracle_view();
    let (naive, _) = common::naive_render(&g, &v, true);
    let err_at = |cutoff_t: f64| {
        let opts = RenderOptions { cutoff_t, ..Default::default() };
        common::max_abs(render(&g, &v, &opts).unwrap().color.data(), &naive)
    };
    let (err3, err4) = (err_at(3.0), err_at(4.0));

    let opts = RenderOptions { cutoff_t: 4.0, ..Default::default() };
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| render(&g, &v, &opts).unwrap())
    };
    let one = run(1);
    let identical = [2, 4, 8].iter().all(|n| run(*n) == one);
    let pass = err4 <= 1e-3 && identical;
    let detail = format!("Linf vs naive {err4:.2e} at t=4 ({err3:.2e} at default t=3), 1 vs N threads identical {identical}");
    assert!(report(4, pass, &detail, t.elapsed(), secs(30)));
}

#[test]
fn criterion_5_dof_consistency() {
    let t = Instant::now();
    let mut v = oracle_view();
    v.lens = v.lens.with_focus_distance(2.2).unwrap();
    let g: Vec<Gaussian3D> = common::random_gaussians(32, 5)
        .into_iter()
        .map(|mut g| {
            g.mean.z = 2.2;
            g
        })
        .collect();
    let on = render(&g, &v, &RenderOptions::default()).unwrap();
    let off = render(&g, &v, &RenderOptions { enable_dof: false, ..Default::default() }).unwrap();
    let identical = on == off;

    let mut v2 = oracle_view();
    v2.lens = v2.lens.with_focus_distance(1.1).unwrap();
    let mut worst = 0.0f64;
    for g in common::random_gaussians(64, 6) {
        let Some(s) = project(&g, &v2) else { continue };
        let b = blur_splat(&s);
        let before = s.opacity * s.cov.determinant().sqrt();
        let after = b.opacity * b.cov.determinant().sqrt();
        worst = worst.max((before - after).abs() / before);
    }
    let pass = identical && worst <= 1e-9;
    let detail = format!("in-focus DoF on/off identical {identical}, mass invariance rel err {worst:.1e}");
    assert!(report(5, pass, &detail, t.elapsed(), secs(30)));
}

#[test]
fn criterion_6_depth_from_stack() {
    let t = Instant::now();
    let cfg = ProceduralConfig::new(128, 128, 7, SceneStyle::SlantedPlane).with_depth_range(1.0, 4.0);
    let (aif, gt) = synth_procedural(&cfg).unwrap();
    let lens = LensModel::new(0.01, 2.0, 1.0, 1e-5).unwrap();
    let focus = [1.0, 1.5, 2.5, 4.0, 6.0];
    let stack = synthesize_stack(&aif, &gt, &lens, &focus, &SynthOptions::default()).unwrap();
    let lenses: Vec<LensModel> = stack.entries().iter().map(|e| e.lens).collect();
    let grid = DepthGrid::log_spaced(0.5, 10.0, 64, &lenses).unwrap();
    let est = estimate_depth_from_stack(&stack, &grid, &EstimateOptions::default()).unwrap();

    let (mut textured, mut within) = (0, 0);
    let mut pixel_ok = vec![false; 128 * 128];
    for i in 0..est.patches.len() {
        if !est.confident[i] {
            continue;
        }
        textured += 1;
        let (xs, ys) = est.patches.bounds(i);
        let (cx, cy) = ((xs.start + xs.end - 1) / 2, (ys.start + ys.end - 1) / 2);
        let truth = grid.nearest(gt.get(cx, cy));
        if est.patch_index[i].abs_diff(truth) <= 1 {
            within += 1;
        }
        for y in ys {
            for x in xs.clone() {
                pixel_ok[y * 128 + x] = true;
            }
        }
    }
    let m = depth_metrics_masked(&est.depth, &gt, |i| pixel_ok[i]).unwrap();
    let frac = within as f64 / textured.max(1) as f64;
    let pass = textured > 0 && frac >= 0.9 && m.absrel <= 0.05;
    let detail = format!("{within}/{textured} textured patches within one cell ({:.1}%), AbsRel {:.4}", 100.0 * frac, m.absrel);
    assert!(report(6, pass, &detail, t.elapsed(), secs(120)));
}

fn fit_fixture() -> (GaussianScene, Vec<FitView>) {
    let lens = LensModel::new(0.02, 2.0, 1.5, 1e-5).unwrap();
    let intr = Intrinsics::centered(64, 64, 80.0).unwrap();
    let target = Vector3::new(0.0, 0.0, 1.7);
    let up = Vector3::new(0.0, -1.0, 0.0);
    let views: Vec<SceneView> = [-0.15, 0.0, 0.15]
        .iter()
        .map(|&x| SceneView {
            pose: Pose::look_at(Vector3::new(x, 0.02, 0.0), target, up).unwrap(),
            focus_distance_m: None,
        })
        .collect();
    let spots = [
        (-0.15, -0.1, 1.3, [0.9, 0.3, 0.2]),
        (0.12, -0.08, 1.5, [0.2, 0.8, 0.3]),
        (0.0, 0.1, 1.7, [0.3, 0.4, 0.9]),
        (-0.1, 0.12, 1.9, [0.8, 0.8, 0.2]),
        (0.16, 0.1, 2.1, [0.7, 0.3, 0.8]),
    ];
    let gaussians = spots
        .iter()
        .map(|&(x, y, z, c)| {
            Gaussian3D::new(Vector3::new(x, y, z), Vector3::new(0.07, 0.05, 0.06), [1.0, 0.0, 0.0, 0.0], 0.85, c).unwrap()
        })
        .collect();
    let scene = GaussianScene::new(intr, lens, views, gaussians).unwrap();
    let fit_views = scene
        .camera_views()
        .unwrap()
        .into_iter()
        .enumerate()
        .map(|(i, camera)| {
            let out = render(&scene.gaussians, &camera, &RenderOptions::default()).unwrap();
            FitView {
                camera,
                target: out.color,
                defocus_target: None,
                scene_view: Some(i),
            }
        })
        .collect();
    (scene, fit_views)
}

#[test]
fn criterion_7_joint_fit() {
    let t = Instant::now();
    let (truth, views) = fit_fixture();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut start = truth.clone();
    // 1% of the scene's 0.5 m extent
    for g in &mut start.gaussians {
        for k in 0..3 {
            g.mean[k] += 0.005 * if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
    }
    let cfg = FitConfig { optimize: vec![ParamGroup::Position], ..FitConfig::default() };
    let result = fit_scene(&start, &views, &cfg).unwrap();
    let ratio = result.last.recon / result.initial.recon;
    let monotone = result.trace.windows(2).all(|w| w[1] <= w[0]) && result.trace[0] <= result.initial.total;

    // focus alone, from a wrong starting focus
    let focus_cfg = FitConfig { optimize: vec![ParamGroup::Focus], ..FitConfig::default() };
    let mut wrong = truth.clone();
    let focus_views: Vec<FitView> = views
        .iter()
        .map(|v| {
            let mut v = v.clone();
            v.camera.lens = v.camera.lens.with_focus_distance(1.2).unwrap();
            v
        })
        .collect();
    for sv in &mut wrong.views {
        sv.focus_distance_m = Some(1.2);
    }
    let fr = fit_scene(&wrong, &focus_views, &focus_cfg).unwrap();
    let worst_focus = fr
        .cameras
        .iter()
        .map(|c| (c.lens.focus_distance_m() - 1.5).abs() / 1.5)
        .fold(0.0, f64::max);

    let pass = ratio <= 0.1 && monotone && worst_focus <= 0.05;
    let detail = format!(
        "recon {:.3e} -> {:.3e} (ratio {ratio:.4}), trace non-increasing {monotone}, {} iterations; focus 1.2 -> {:?} (worst rel err {worst_focus:.1e})",
        result.initial.recon,
        result.last.recon,
        result.trace.len(),
        fr.cameras.iter().map(|c| (c.lens.focus_distance_m() * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
    assert!(report(7, pass, &detail, t.elapsed(), secs(300)));
}

#[test]
fn criterion_8_losses_and_metrics() {
    let t = Instant::now();
    let d = DefocusMap::from_fn(32, 32, |x, y| 0.5 + ((x * 3 + y * 5) % 7) as f64).unwrap();
    let self_defocus = defocus_loss(&d, &d, 16).unwrap();
    let a = common::texture(24, 24, 3, 3);
    let self_recon = recon_loss(&a, &a, 0.2).unwrap();
    let gt = common::depth_from(8, 8, |x, y| 1.0 + 0.1 * (x + y) as f64);
    let m = depth_metrics(&gt, &gt).unwrap();
    let identity = (m.rmse, m.absrel, m.delta1, m.delta2, m.delta3) == (0.0, 0.0, 1.0, 1.0, 1.0);
    let scaled = DepthMap::from_fn(8, 8, |x, y| 1.3 * gt.get(x, y)).unwrap();
    let s = depth_metrics(&scaled, &gt).unwrap();
    let scale_ok = s.delta1 == 0.0 && s.delta2 == 1.0 && s.delta3 == 1.0 && (s.absrel - 0.3).abs() < 1e-12;
    // errors 0, 0, 0, 1 over four pixels: RMSE = sqrt(1/4); ratio 1.25 is not < 1.25
    let hp = DepthMap::new(2, 2, vec![1.0, 2.0, 3.0, 5.0]).unwrap();
    let hg = DepthMap::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let h = depth_metrics(&hp, &hg).unwrap();
    let hand_ok = h.rmse == 0.5 && h.absrel == 0.0625 && h.delta1 == 0.75;
    let pass = self_defocus == -1.0 && self_recon == 0.0 && identity && scale_ok && hand_ok;
    let detail = format!(
        "defocus(d,d)={self_defocus}, recon(a,a)={self_recon}, identity metrics {identity}, 1.3x scaling {scale_ok} (absrel {:.3}), 4-pixel case rmse={} absrel={} delta1={}",
        s.absrel, h.rmse, h.absrel, h.delta1
    );
    assert!(report(8, pass, &detail, t.elapsed(), secs(1)));
}

#[test]
fn criterion_9_refinement() {
    let t = Instant::now();
    let lens = LensModel::new(0.01, 2.0, 2.5, 1e-5).unwrap();
    let (aif, gt) = synth_procedural(&ProceduralConfig::new(64, 64, 4, SceneStyle::Spheres)).unwrap();
    let defocus = defocus_from_depth(&gt, &lens);
    let biased = DepthMap::from_fn(64, 64, |x, y| 1.05 * gt.get(x, y)).unwrap();
    let refined = refine_depth(&biased, &defocus, &lens, &aif, None, &RefineConfig::default()).unwrap();
    let before = depth_metrics(&biased, &gt).unwrap().absrel;
    let after = depth_metrics(&refined, &gt).unwrap().absrel;
    let detail = format!("AbsRel {before:.4} -> {after:.3e}");
    assert!(report(9, after < before, &detail, t.elapsed(), secs(60)));
}
