//! Line-oriented text scenes.
//!
//! ```text
//! camera width 64 height 64 fx 80 fy 80 cx 31.5 cy 31.5 focal_length 0.05 f_number 2 focus_distance 2 pixel_pitch 1e-5
//! pose r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2 [focus_distance 1.5]
//! gaussian px py pz sx sy sz qw qx qy qz opacity r g b
//! ```

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::{tokenize, LineCtx};
use crate::error::{Error, Result};
use crate::lens::LensModel;
use crate::splat::{Gaussian3D, GaussianScene, Intrinsics, Pose, SceneView};

/// Accepted deviation of a stored quaternion from unit norm. Within this the
/// quaternion is renormalized on load.
const LOAD_QUAT_TOL: f64 = 1e-3;
const KEEP_QUAT_TOL: f64 = 1e-9;

const CAMERA_KEYS: [&str; 10] = [
    "width",
    "height",
    "fx",
    "fy",
    "cx",
    "cy",
    "focal_length",
    "f_number",
    "focus_distance",
    "pixel_pitch",
];

pub fn load_scene(path: &Path) -> Result<GaussianScene> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scene(&text, path)
}

/// Parses scene text; `path` is only used in diagnostics.
pub fn parse_scene(text: &str, path: &Path) -> Result<GaussianScene> {
    let mut camera: Option<(Intrinsics, LensModel)> = None;
    let mut views = Vec::new();
    let mut gaussians = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ctx = LineCtx { path, line: i + 1 };
        let toks = tokenize(line);
        let Some(&(col, keyword)) = toks.first() else {
            continue;
        };
        let args = &toks[1..];
        match keyword {
            "camera" => {
                if camera.is_some() {
                    return Err(ctx.err(col, "duplicate camera line"));
                }
                camera = Some(parse_camera(&ctx, col, args)?);
            }
            "pose" => views.push(parse_pose(&ctx, col, args)?),
            "gaussian" => gaussians.push(parse_gaussian(&ctx, col, args)?),
            other => return Err(ctx.err(col, format!("unknown record `{other}`"))),
        }
    }
    let Some((intrinsics, lens)) = camera else {
        if gaussians.is_empty() {
            return Err(crate::error::domain!("{}: scene contains no gaussians", path.display()));
        }
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            column: 0,
            message: "missing camera line".into(),
        });
    };
    GaussianScene::new(intrinsics, lens, views, gaussians)
        .map_err(|e| crate::error::domain!("{}: {e}", path.display()))
}

fn parse_camera(ctx: &LineCtx, col: usize, args: &[(usize, &str)]) -> Result<(Intrinsics, LensModel)> {
    if args.len() % 2 != 0 {
        return Err(ctx.err(col, "camera expects key/value pairs"));
    }
    let mut vals: [Option<f64>; 10] = [None; 10];
    for pair in args.chunks(2) {
        let (kc, key) = pair[0];
        let idx = CAMERA_KEYS
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| ctx.err(kc, format!("unknown camera key `{key}`")))?;
        if vals[idx].is_some() {
            return Err(ctx.err(kc, format!("duplicate camera key `{key}`")));
        }
        vals[idx] = Some(if idx < 2 {
            ctx.count(pair[1])? as f64
        } else {
            ctx.number(pair[1])?
        });
    }
    let mut v = [0.0; 10];
    for (i, slot) in vals.iter().enumerate() {
        v[i] = slot.ok_or_else(|| ctx.err(col, format!("camera is missing `{}`", CAMERA_KEYS[i])))?;
    }
    let intr = Intrinsics::new(v[0] as usize, v[1] as usize, v[2], v[3], v[4], v[5])
        .map_err(|e| ctx.err(col, e.to_string()))?;
    let lens = LensModel::new(v[6], v[7], v[8], v[9]).map_err(|e| ctx.err(col, e.to_string()))?;
    Ok((intr, lens))
}

fn parse_pose(ctx: &LineCtx, col: usize, args: &[(usize, &str)]) -> Result<SceneView> {
    if args.len() != 12 && args.len() != 14 {
        return Err(ctx.err(col, format!("pose expects 12 numbers, found {}", args.len())));
    }
    let mut m = [0.0; 12];
    for (slot, tok) in m.iter_mut().zip(args) {
        *slot = ctx.number(*tok)?;
    }
    let pose = Pose::from_row_major(&m).map_err(|e| ctx.err(args[0].0, e.to_string()))?;
    let focus_distance_m = if args.len() == 14 {
        if args[12].1 != "focus_distance" {
            return Err(ctx.err(args[12].0, format!("unexpected `{}`", args[12].1)));
        }
        Some(ctx.number(args[13])?)
    } else {
        None
    };
    Ok(SceneView {
        pose,
        focus_distance_m,
    })
}

fn parse_gaussian(ctx: &LineCtx, col: usize, args: &[(usize, &str)]) -> Result<Gaussian3D> {
    if args.len() != 14 {
        return Err(ctx.err(col, format!("gaussian expects 14 numbers, found {}", args.len())));
    }
    let mut v = [0.0; 14];
    for (slot, tok) in v.iter_mut().zip(args) {
        *slot = ctx.number(*tok)?;
    }
    let mut g = Gaussian3D {
        mean: Vector3::new(v[0], v[1], v[2]),
        scale: Vector3::new(v[3], v[4], v[5]),
        rotation: [v[6], v[7], v[8], v[9]],
        opacity: v[10],
        color: [v[11], v[12], v[13]],
    };
    let n = crate::splat::gaussian::quat_norm(&g.rotation);
    if (n - 1.0).abs() > LOAD_QUAT_TOL {
        return Err(ctx.err(args[6].0, format!("rotation quaternion has norm {n}, expected 1")));
    }
    if (n - 1.0).abs() > KEEP_QUAT_TOL {
        g.normalize_rotation();
    }
    g.validate().map_err(|e| ctx.err(col, e.to_string()))?;
    Ok(g)
}

pub fn format_scene(scene: &GaussianScene) -> String {
    let mut s = String::new();
    let (i, l) = (&scene.intrinsics, &scene.lens);
    writeln!(
        s,
        "camera width {} height {} fx {} fy {} cx {} cy {} focal_length {} f_number {} focus_distance {} pixel_pitch {}",
        i.width,
        i.height,
        i.fx,
        i.fy,
        i.cx,
        i.cy,
        l.focal_length_m(),
        l.f_number(),
        l.focus_distance_m(),
        l.pixel_pitch_m()
    )
    .unwrap();
    for v in &scene.views {
        s.push_str("pose");
        for x in v.pose.to_row_major() {
            write!(s, " {x}").unwrap();
        }
        if let Some(fd) = v.focus_distance_m {
            write!(s, " focus_distance {fd}").unwrap();
        }
        s.push('\n');
    }
    for g in &scene.gaussians {
        s.push_str("gaussian");
        let vals = g
            .mean
            .iter()
            .chain(g.scale.iter())
            .chain(g.rotation.iter())
            .chain(std::iter::once(&g.opacity))
            .chain(g.color.iter());
        for x in vals {
            write!(s, " {x}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn save_scene(path: &Path, scene: &GaussianScene, force: bool) -> Result<()> {
    super::write_bytes(path, format_scene(scene).as_bytes(), force)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "camera width 32 height 24 fx 40 fy 41 cx 15.5 cy 11.5 focal_length 0.05 f_number 2 focus_distance 2 pixel_pitch 1e-5\n";

    fn parse(text: &str) -> Result<GaussianScene> {
        parse_scene(text, Path::new("t.scene"))
    }

    #[test]
    fn round_trip_is_exact() {
        let text = format!(
            "{HEADER}# views\npose 1 0 0 0.1 0 1 0 -0.2 0 0 1 0.3 focus_distance 1.7\npose 1 0 0 0 0 1 0 0 0 0 1 0\n\
             gaussian 0.1 -0.2 2.3 0.05 0.07 0.011 0.9238795325112867 0 0.3826834323650898 0 0.8 0.1 0.2 0.3\n"
        );
        let scene = parse(&text).unwrap();
        assert_eq!(scene.views.len(), 2);
        assert_eq!(scene.views[0].focus_distance_m, Some(1.7));
        let again = parse(&format_scene(&scene)).unwrap();
        assert_eq!(scene, again);
    }

    #[test]
    fn bad_quaternion_reports_line() {
        let text = format!("{HEADER}\ngaussian 0 0 2 0.1 0.1 0.1 0.5 0 0 0 0.5 1 1 1\n");
        match parse(&text) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, 28);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn slightly_off_quaternion_is_normalized() {
        let text = format!("{HEADER}gaussian 0 0 2 0.1 0.1 0.1 1.0005 0 0 0 0.5 1 1 1\n");
        let g = parse(&text).unwrap().gaussians[0];
        assert_eq!(g.rotation, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn comment_only_file_is_empty_scene() {
        let e = parse("# nothing here\n\n   # still nothing\n").unwrap_err();
        assert!(e.to_string().contains("no gaussians"), "{e}");
        let e = parse(HEADER).unwrap_err();
        assert!(e.to_string().contains("no gaussians"), "{e}");
    }

    #[test]
    fn parse_errors_carry_locations() {
        for (text, line) in [
            (format!("{HEADER}gaussian 0 0 2 0.1 0.1\n"), 2),
            (format!("{HEADER}gaussian 0 0 2 0.1 -0.1 0.1 1 0 0 0 0.5 1 1 1\n"), 2),
            (format!("{HEADER}bogus 1 2\n"), 2),
            (format!("{HEADER}pose 1 0 0 0 0 1 0 0 0 0 2 0\n"), 2),
            ("camera width 4\n".to_string(), 1),
            (format!("{HEADER}{HEADER}"), 2),
        ] {
            match parse(&text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("unexpected {other:?} for {text}"),
            }
        }
    }

    #[test]
    fn save_refuses_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.scene");
        let scene = parse(&format!("{HEADER}gaussian 0 0 2 0.1 0.1 0.1 1 0 0 0 0.5 1 1 1\n")).unwrap();
        save_scene(&p, &scene, false).unwrap();
        assert!(save_scene(&p, &scene, false).is_err());
        assert_eq!(load_scene(&p).unwrap(), scene);
    }
}
