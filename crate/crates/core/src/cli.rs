//! Command-line front end. Exit status: 0 success, 1 domain or I/O failure,
//! 2 usage error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{Protocol, RunConfig};
use crate::error::{domain, ensure, Error, Result};
use crate::estimate::{estimate_depth_from_stack, invert_defocus_to_depth, DepthGrid, EstimateOptions, ReblurScheme};
use crate::fit::{fit_scene, FitConfig, FitView, ParamGroup};
use crate::io::{load_scene, read_pfm, read_png, save_scene, write_pfm, write_png, write_stack, FloatMap, Manifest};
use crate::lens::LensModel;
use crate::losses::LossWeights;
use crate::metrics::depth_metrics;
use crate::procedural::{synth_procedural, ProceduralConfig, SceneStyle};
use crate::refine::{refine_depth, RefineConfig};
use crate::splat::{render, RenderOptions};
use crate::stack::{synthesize_stack, SynthOptions};

pub const OUT_DIR_ENV: &str = "GSDEFOCUS_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "gsdefocus", version, about = "Defocus synthesis, depth-of-field splatting and depth from defocus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a procedural scene and its focal stack.
    Synth(SynthArgs),
    /// Render every view of a scene file.
    Render(RenderArgs),
    /// Estimate depth from a focal stack.
    Estimate(EstimateArgs),
    /// Fit a scene to observed views.
    Fit(FitArgs),
    /// Convert a defocus map to depth.
    Invert(InvertArgs),
    /// Refine a depth map with a defocus map.
    Refine(RefineArgs),
    /// Compare a predicted depth map against ground truth.
    Eval(EvalArgs),
    /// Print the CoC radius over a depth range as CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct Overwrite {
    /// Replace existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value = "nyuv2-style")]
    protocol: Protocol,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "slanted-plane")]
    style: SceneStyle,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    /// Scene depth range; defaults to the protocol range.
    #[arg(long)]
    depth_min: Option<f64>,
    #[arg(long)]
    depth_max: Option<f64>,
    /// Lens as `f=..,N=..,Fd=..,p=..`; defaults to the protocol lens.
    #[arg(long)]
    lens: Option<String>,
    /// Blur already present in the source, composed with every CoC.
    #[arg(long, default_value_t = 0.0)]
    baseline_sigma: f64,
    #[arg(long, env = OUT_DIR_ENV)]
    out: PathBuf,
    #[command(flatten)]
    ow: Overwrite,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Render with the pinhole model only.
    #[arg(long)]
    no_dof: bool,
    #[arg(long, default_value_t = 3.0)]
    cutoff: f64,
    #[arg(long, env = OUT_DIR_ENV)]
    out: PathBuf,
    #[command(flatten)]
    ow: Overwrite,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    stack_manifest: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    grid_min: f64,
    #[arg(long, default_value_t = 10.0)]
    grid_max: f64,
    #[arg(long, default_value_t = 64)]
    grid_n: usize,
    #[arg(long, default_value_t = 16)]
    patch: usize,
    /// `compose` or `cross`.
    #[arg(long, default_value = "compose")]
    scheme: String,
    #[arg(long)]
    out_depth: PathBuf,
    #[arg(long)]
    out_defocus_dir: Option<PathBuf>,
    #[command(flatten)]
    ow: Overwrite,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Manifest whose entries carry `pose=` indices into the scene.
    #[arg(long)]
    views_manifest: PathBuf,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value = "pos,scale,opacity,color")]
    optimize: String,
    /// `mu1,mu2,mu3` for the defocus, blur and reconstruction terms.
    #[arg(long, default_value = "1,0.01,1")]
    weights: String,
    #[arg(long)]
    out_scene: PathBuf,
    #[arg(long)]
    trace_csv: Option<PathBuf>,
    #[command(flatten)]
    ow: Overwrite,
}

#[derive(Debug, Args)]
struct InvertArgs {
    #[arg(long)]
    defocus: PathBuf,
    #[arg(long)]
    lens: String,
    /// Depth used to pick between the near and far solutions.
    #[arg(long)]
    prior: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    ow: Overwrite,
}

#[derive(Debug, Args)]
struct RefineArgs {
    #[arg(long)]
    depth: PathBuf,
    #[arg(long)]
    defocus: PathBuf,
    #[arg(long)]
    lens: String,
    #[arg(long)]
    guide: PathBuf,
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    lambda_smooth: f64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    ow: Overwrite,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Label for the `scene` column; defaults to the prediction's file stem.
    #[arg(long)]
    name: Option<String>,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    ow: Overwrite,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    lens: String,
    #[arg(long, default_value_t = 0.5)]
    min: f64,
    #[arg(long, default_value_t = 10.0)]
    max: f64,
    #[arg(long, default_value_t = 191)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    ow: Overwrite,
}

/// Runs the CLI on `argv` (including the program name) and returns the exit status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::Render(a) => render_cmd(a),
        Command::Estimate(a) => estimate(a),
        Command::Fit(a) => fit(a),
        Command::Invert(a) => invert(a),
        Command::Refine(a) => refine(a),
        Command::Eval(a) => eval(a, stdout),
        Command::Plot(a) => plot(a, stdout),
    }
}

/// Parses `f=0.05,N=2,Fd=2,p=1e-5`.
pub fn parse_lens(spec: &str) -> Result<LensModel> {
    let (mut f, mut n, mut fd, mut p) = (None, None, None, None);
    for part in spec.split(',').map(str::trim) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| domain!("lens field `{part}` is not key=value"))?;
        let v: f64 = v
            .parse()
            .map_err(|_| domain!("lens field `{k}` has non-numeric value `{v}`"))?;
        let slot = match k {
            "f" => &mut f,
            "N" => &mut n,
            "Fd" => &mut fd,
            "p" => &mut p,
            _ => return Err(domain!("unknown lens field `{k}` (expected f, N, Fd, p)")),
        };
        *slot = Some(v);
    }
    match (f, n, fd, p) {
        (Some(f), Some(n), Some(fd), Some(p)) => LensModel::new(f, n, fd, p),
        _ => Err(domain!("lens needs all of f, N, Fd and p")),
    }
}

/// `%g`-style formatting with `sig` significant digits.
pub fn format_sig(v: f64, sig: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let sci = format!("{:.*e}", sig - 1, v);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -5 || exp >= sig as i32 {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_text(path: Option<&Path>, text: &str, force: bool, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => crate::io::write_bytes(p, text.as_bytes(), force),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut run = RunConfig::preset(a.protocol, a.seed, &a.out);
    if let Some(spec) = &a.lens {
        run.lens = parse_lens(spec)?;
    }
    run.depth_min_m = a.depth_min.unwrap_or(run.depth_min_m);
    run.depth_max_m = a.depth_max.unwrap_or(run.depth_max_m);
    run.validate()?;
    let cfg = ProceduralConfig::new(a.width, a.height, run.seed, a.style)
        .with_depth_range(run.depth_min_m, run.depth_max_m);
    let (aif, depth) = synth_procedural(&cfg)?;
    let opts = SynthOptions {
        baseline_sigma_px: a.baseline_sigma,
        ..Default::default()
    };
    let stack = synthesize_stack(&aif, &depth, &run.lens, &run.focus_distances_m, &opts)?;
    write_stack(&run.output_dir, &stack, a.ow.force)?;
    Ok(())
}

fn render_cmd(a: RenderArgs) -> Result<()> {
    let scene = load_scene(&a.scene)?;
    ensure!(!scene.views.is_empty(), "{}: scene has no poses", a.scene.display());
    let opts = RenderOptions {
        enable_dof: !a.no_dof,
        cutoff_t: a.cutoff,
        ..Default::default()
    };
    for (i, view) in scene.camera_views()?.iter().enumerate() {
        let out = render(&scene.gaussians, view, &opts)?;
        write_png(&a.out.join(format!("view_{i}.png")), &out.color, a.ow.force)?;
        write_pfm(&a.out.join(format!("view_{i}_depth.pfm")), &FloatMap::from(&out.depth), a.ow.force)?;
    }
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let stack = Manifest::load(&a.stack_manifest)?.load_stack()?;
    let lenses: Vec<LensModel> = stack.entries().iter().map(|e| e.lens).collect();
    let grid = DepthGrid::log_spaced(a.grid_min, a.grid_max, a.grid_n, &lenses)?;
    let scheme = match a.scheme.as_str() {
        "compose" => ReblurScheme::ComposeToReference,
        "cross" => ReblurScheme::CrossBlur,
        other => return Err(domain!("unknown scheme `{other}` (expected compose or cross)")),
    };
    let opts = EstimateOptions {
        patch_px: a.patch,
        scheme,
        ..Default::default()
    };
    let est = estimate_depth_from_stack(&stack, &grid, &opts)?;
    write_pfm(&a.out_depth, &FloatMap::from(&est.depth), a.ow.force)?;
    if let Some(dir) = &a.out_defocus_dir {
        for (i, d) in est.defocus.iter().enumerate() {
            write_pfm(&dir.join(format!("defocus_{i}.pfm")), &FloatMap::from(d), a.ow.force)?;
        }
    }
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    let scene = load_scene(&a.scene)?;
    let manifest = Manifest::load(&a.views_manifest)?;
    let mut views = Vec::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        let pose = e
            .pose
            .ok_or_else(|| domain!("{}: entry {i} has no pose=", a.views_manifest.display()))?;
        let mut camera = scene.camera_view(pose)?;
        camera.lens = e.lens;
        views.push(FitView {
            camera,
            target: read_png(&e.image)?,
            defocus_target: match &e.defocus {
                Some(p) => Some(read_pfm(p)?.to_defocus()?),
                None => None,
            },
            scene_view: Some(pose),
        });
    }
    let mu: Vec<f64> = a
        .weights
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| domain!("--weights expects three numbers, got `{}`", a.weights))?;
    ensure!(mu.len() == 3, "--weights expects three numbers, got `{}`", a.weights);
    let cfg = FitConfig {
        iterations: a.iters,
        optimize: ParamGroup::parse_list(&a.optimize)?,
        weights: LossWeights {
            mu_defocus: mu[0],
            mu_blur: mu[1],
            mu_recon: mu[2],
            ..Default::default()
        },
        ..Default::default()
    };
    let result = fit_scene(&scene, &views, &cfg)?;
    save_scene(&a.out_scene, &result.scene, a.ow.force)?;
    if let Some(p) = &a.trace_csv {
        let mut csv = String::from("iteration,loss\n");
        for (i, l) in result.trace.iter().enumerate() {
            csv.push_str(&format!("{},{}\n", i + 1, format_sig(*l, 9)));
        }
        crate::io::write_bytes(p, csv.as_bytes(), a.ow.force)?;
    }
    Ok(())
}

fn invert(a: InvertArgs) -> Result<()> {
    let lens = parse_lens(&a.lens)?;
    let defocus = read_pfm(&a.defocus)?.to_defocus()?;
    let prior = read_pfm(&a.prior)?.to_depth()?;
    let depth = invert_defocus_to_depth(&defocus, &lens, &prior)?;
    write_pfm(&a.out, &FloatMap::from(&depth), a.ow.force)
}

fn refine(a: RefineArgs) -> Result<()> {
    let lens = parse_lens(&a.lens)?;
    let depth = read_pfm(&a.depth)?.to_depth()?;
    let defocus = read_pfm(&a.defocus)?.to_defocus()?;
    let guide = read_png(&a.guide)?;
    let gt = match &a.gt {
        Some(p) => Some(read_pfm(p)?.to_depth()?),
        None => None,
    };
    let cfg = RefineConfig {
        lambda_smooth: a.lambda_smooth,
        ..Default::default()
    };
    let out = refine_depth(&depth, &defocus, &lens, &guide, gt.as_ref(), &cfg)?;
    write_pfm(&a.out, &FloatMap::from(&out), a.ow.force)
}

fn eval(a: EvalArgs, stdout: &mut dyn Write) -> Result<()> {
    let pred = read_pfm(&a.pred)?.to_depth()?;
    let gt = read_pfm(&a.gt)?.to_depth()?;
    let m = depth_metrics(&pred, &gt)?;
    let name = a.name.unwrap_or_else(|| {
        a.pred
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let csv = format!(
        "scene,rmse,absrel,delta1,delta2,delta3\n{name},{},{},{},{},{}\n",
        format_sig(m.rmse, 9),
        format_sig(m.absrel, 9),
        format_sig(m.delta1, 9),
        format_sig(m.delta2, 9),
        format_sig(m.delta3, 9)
    );
    write_text(a.out.as_deref(), &csv, a.ow.force, stdout)
}

fn plot(a: PlotArgs, stdout: &mut dyn Write) -> Result<()> {
    let lens = parse_lens(&a.lens)?;
    let mut csv = String::from("depth_m,sigma_px\n");
    for (d, s) in lens.coc_curve(a.min, a.max, a.n)? {
        csv.push_str(&format!("{},{}\n", format_sig(d, 9), format_sig(s, 9)));
    }
    write_text(a.out.as_deref(), &csv, a.ow.force, stdout)
}
