//! Stack and view manifests.
//!
//! ```text
//! gsdefocus-manifest 1
//! lens focal_length=0.01 f_number=2 pixel_pitch=1e-5 [focus=1.0]
//! aif aif.png
//! depth depth.pfm
//! entry image=view_0.png focus=1.0 [depth=..] [defocus=..] [pose=0] [focal_length=..] [f_number=..] [pixel_pitch=..]
//! ```
//!
//! Paths are relative to the manifest's directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{read_pfm, read_png, tokenize, write_pfm, write_png, FloatMap, LineCtx};
use crate::error::{Error, Result};
use crate::lens::LensModel;
use crate::stack::{FocalStack, StackEntry};

pub const MANIFEST_HEADER: &str = "gsdefocus-manifest";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub image: PathBuf,
    /// Base lens with this entry's overrides applied.
    pub lens: LensModel,
    pub depth: Option<PathBuf>,
    pub defocus: Option<PathBuf>,
    /// Index of the scene pose this image was taken from.
    pub pose: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub version: u32,
    /// Lens from the `lens` line; without `focus=` it takes the first entry's focus.
    pub base_lens: LensModel,
    pub aif: Option<PathBuf>,
    pub depth: Option<PathBuf>,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Clone, Copy)]
struct LensFields {
    f: f64,
    n: f64,
    p: f64,
    fd: f64,
}

impl LensFields {
    /// Applies `key=value`; returns false for keys that are not lens fields.
    fn apply(&mut self, ctx: &LineCtx, col: usize, key: &str, value: &str) -> Result<bool> {
        let slot = match key {
            "focal_length" => &mut self.f,
            "f_number" => &mut self.n,
            "pixel_pitch" => &mut self.p,
            "focus" => &mut self.fd,
            _ => return Ok(false),
        };
        *slot = ctx.number((col + key.len() + 1, value))?;
        Ok(true)
    }

    fn build(&self, ctx: &LineCtx, col: usize) -> Result<LensModel> {
        LensModel::new(self.f, self.n, self.fd, self.p).map_err(|e| ctx.err(col, e.to_string()))
    }
}

fn split_kv<'a>(ctx: &LineCtx, tok: (usize, &'a str)) -> Result<(&'a str, &'a str)> {
    tok.1
        .split_once('=')
        .filter(|(k, v)| !k.is_empty() && !v.is_empty())
        .ok_or_else(|| ctx.err(tok.0, format!("expected key=value, found `{}`", tok.1)))
}

impl Manifest {
    /// Loads and checks that every referenced file exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m = Self::parse(&text, path)?;
        for p in m.referenced_files() {
            if !p.is_file() {
                return Err(crate::error::domain!(
                    "{}: referenced file {} does not exist",
                    path.display(),
                    p.display()
                ));
            }
        }
        Ok(m)
    }

    /// Parses manifest text; relative paths resolve against `path`'s directory.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, tokenize(l)))
            .filter(|(_, t)| !t.is_empty());
        let missing = |what: &str| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            column: 0,
            message: format!("missing {what}"),
        };

        let (ln, header) = lines.next().ok_or_else(|| missing("manifest header"))?;
        let ctx = LineCtx { path, line: ln };
        if header.len() != 2 || header[0].1 != MANIFEST_HEADER {
            return Err(ctx.err(header[0].0, format!("expected `{MANIFEST_HEADER} {VERSION}`")));
        }
        let version = ctx.count(header[1])? as u32;
        if version != VERSION {
            return Err(ctx.err(header[1].0, format!("unsupported manifest version {version}")));
        }

        let mut base: Option<LensFields> = None;
        let mut aif = None;
        let mut depth = None;
        let mut entries = Vec::new();
        for (ln, toks) in lines {
            let ctx = LineCtx { path, line: ln };
            let (col, kw) = toks[0];
            let args = &toks[1..];
            match kw {
                "lens" => {
                    if base.is_some() {
                        return Err(ctx.err(col, "duplicate lens line"));
                    }
                    let mut f = LensFields {
                        f: f64::NAN,
                        n: f64::NAN,
                        p: f64::NAN,
                        fd: f64::INFINITY,
                    };
                    for &tok in args {
                        let (k, v) = split_kv(&ctx, tok)?;
                        if !f.apply(&ctx, tok.0, k, v)? {
                            return Err(ctx.err(tok.0, format!("unknown lens key `{k}`")));
                        }
                    }
                    if f.f.is_nan() || f.n.is_nan() || f.p.is_nan() {
                        return Err(ctx.err(col, "lens needs focal_length, f_number and pixel_pitch"));
                    }
                    if f.fd.is_finite() {
                        f.build(&ctx, col)?;
                    }
                    base = Some(f);
                }
                "aif" | "depth" => {
                    if args.len() != 1 {
                        return Err(ctx.err(col, format!("`{kw}` expects one path")));
                    }
                    let p = Some(super::relative_to(path, args[0].1));
                    if kw == "aif" {
                        aif = p;
                    } else {
                        depth = p;
                    }
                }
                "entry" => {
                    let base = base.ok_or_else(|| ctx.err(col, "entry before lens line"))?;
                    let mut lens = base;
                    let (mut image, mut edepth, mut defocus, mut pose) = (None, None, None, None);
                    for &tok in args {
                        let (k, v) = split_kv(&ctx, tok)?;
                        match k {
                            "image" => image = Some(super::relative_to(path, v)),
                            "depth" => edepth = Some(super::relative_to(path, v)),
                            "defocus" => defocus = Some(super::relative_to(path, v)),
                            "pose" => pose = Some(ctx.count((tok.0 + 5, v))?),
                            _ => {
                                if !lens.apply(&ctx, tok.0, k, v)? {
                                    return Err(ctx.err(tok.0, format!("unknown entry key `{k}`")));
                                }
                            }
                        }
                    }
                    entries.push(ManifestEntry {
                        image: image.ok_or_else(|| ctx.err(col, "entry without image="))?,
                        lens: lens.build(&ctx, col)?,
                        depth: edepth,
                        defocus,
                        pose,
                    });
                }
                other => return Err(ctx.err(col, format!("unknown record `{other}`"))),
            }
        }
        let base = base.ok_or_else(|| missing("lens line"))?;
        if entries.is_empty() {
            return Err(crate::error::domain!("{}: manifest has no entries", path.display()));
        }
        let base_lens = if base.fd.is_finite() {
            LensModel::new(base.f, base.n, base.fd, base.p)?
        } else {
            entries[0].lens
        };
        Ok(Self {
            version,
            base_lens,
            aif,
            depth,
            entries,
        })
    }

    pub fn referenced_files(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = self.aif.iter().chain(self.depth.iter()).map(|p| p.as_path()).collect();
        for e in &self.entries {
            v.push(&e.image);
            v.extend(e.depth.iter().map(|p| p.as_path()));
            v.extend(e.defocus.iter().map(|p| p.as_path()));
        }
        v
    }

    /// Reads every referenced image and map into a focal stack.
    pub fn load_stack(&self) -> Result<FocalStack> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let defocus = match &e.defocus {
                Some(p) => Some(read_pfm(p)?.to_defocus()?),
                None => None,
            };
            entries.push(StackEntry {
                image: read_png(&e.image)?,
                lens: e.lens,
                defocus,
            });
        }
        let depth = match &self.depth {
            Some(p) => Some(read_pfm(p)?.to_depth()?),
            None => None,
        };
        let aif = match &self.aif {
            Some(p) => Some(read_png(p)?),
            None => None,
        };
        FocalStack::new(entries, depth, aif)
    }

    /// Serializes with paths written relative to `dir` when they lie inside it.
    pub fn format(&self, dir: &Path) -> String {
        let rel = |p: &Path| p.strip_prefix(dir).unwrap_or(p).display().to_string();
        let b = &self.base_lens;
        let mut s = format!("{MANIFEST_HEADER} {}\n", self.version);
        writeln!(
            s,
            "lens focal_length={} f_number={} pixel_pitch={} focus={}",
            b.focal_length_m(),
            b.f_number(),
            b.pixel_pitch_m(),
            b.focus_distance_m()
        )
        .unwrap();
        if let Some(p) = &self.aif {
            writeln!(s, "aif {}", rel(p)).unwrap();
        }
        if let Some(p) = &self.depth {
            writeln!(s, "depth {}", rel(p)).unwrap();
        }
        for e in &self.entries {
            write!(s, "entry image={} focus={}", rel(&e.image), e.lens.focus_distance_m()).unwrap();
            if e.lens.focal_length_m() != b.focal_length_m() {
                write!(s, " focal_length={}", e.lens.focal_length_m()).unwrap();
            }
            if e.lens.f_number() != b.f_number() {
                write!(s, " f_number={}", e.lens.f_number()).unwrap();
            }
            if e.lens.pixel_pitch_m() != b.pixel_pitch_m() {
                write!(s, " pixel_pitch={}", e.lens.pixel_pitch_m()).unwrap();
            }
            if let Some(p) = &e.depth {
                write!(s, " depth={}", rel(p)).unwrap();
            }
            if let Some(p) = &e.defocus {
                write!(s, " defocus={}", rel(p)).unwrap();
            }
            if let Some(i) = e.pose {
                write!(s, " pose={i}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

/// Writes a stack as PNG/PFM files plus `manifest.txt` into `dir`; returns the manifest path.
pub fn write_stack(dir: &Path, stack: &FocalStack, force: bool) -> Result<PathBuf> {
    let base_lens = stack.entries()[0].lens;
    let mut entries = Vec::new();
    for (i, e) in stack.entries().iter().enumerate() {
        let image = dir.join(format!("view_{i}.png"));
        write_png(&image, &e.image, force)?;
        let defocus = match &e.defocus {
            Some(d) => {
                let p = dir.join(format!("defocus_{i}.pfm"));
                write_pfm(&p, &FloatMap::from(d), force)?;
                Some(p)
            }
            None => None,
        };
        entries.push(ManifestEntry {
            image,
            lens: e.lens,
            depth: None,
            defocus,
            pose: None,
        });
    }
    let depth = match &stack.depth {
        Some(d) => {
            let p = dir.join("depth.pfm");
            write_pfm(&p, &FloatMap::from(d), force)?;
            Some(p)
        }
        None => None,
    };
    let aif = match &stack.aif {
        Some(a) => {
            let p = dir.join("aif.png");
            write_png(&p, a, force)?;
            Some(p)
        }
        None => None,
    };
    let m = Manifest {
        version: VERSION,
        base_lens,
        aif,
        depth,
        entries,
    };
    let path = dir.join("manifest.txt");
    super::write_bytes(&path, m.format(dir).as_bytes(), force)?;
    Ok(path)
}
