//! File formats: PFM float maps, PNG images, text scenes and stack manifests.

mod manifest;
mod pfm;
mod png;
mod scene_file;

pub use manifest::{write_stack, Manifest, ManifestEntry, MANIFEST_HEADER};
pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm, FloatMap};
pub use png::{read_png, write_png};
pub use scene_file::{format_scene, load_scene, parse_scene, save_scene};

use std::fs::File;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Opens `path` for writing, refusing to replace an existing file unless `force`.
/// Missing parent directories are created.
pub(crate) fn create_output(path: &Path, force: bool) -> Result<File> {
    if path.exists() && !force {
        return Err(Error::WouldOverwrite(path.to_path_buf()));
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8], force: bool) -> Result<()> {
    use std::io::Write;
    let mut f = create_output(path, force)?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Whitespace-separated tokens with their 1-based columns; `#` starts a comment.
pub(crate) fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in body.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &body[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &body[s..]));
    }
    out
}

pub(crate) struct LineCtx<'a> {
    pub path: &'a Path,
    pub line: usize,
}

impl LineCtx<'_> {
    pub fn err(&self, column: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            column,
            message: message.into(),
        }
    }

    pub fn number(&self, tok: (usize, &str)) -> Result<f64> {
        match tok.1.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(tok.0, format!("expected a finite number, found `{}`", tok.1))),
        }
    }

    pub fn count(&self, tok: (usize, &str)) -> Result<usize> {
        tok.1
            .parse::<usize>()
            .map_err(|_| self.err(tok.0, format!("expected a non-negative integer, found `{}`", tok.1)))
    }
}

/// Resolves `p` against the directory containing `base`.
pub(crate) fn relative_to(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new("")).join(p)
    }
}
