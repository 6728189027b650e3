//! Single-channel little-endian PFM.

use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{DefocusMap, DepthMap};

/// A 32-bit float raster as stored on disk, rows top-down in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl FloatMap {
    fn widen(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }

    pub fn to_depth(&self) -> Result<DepthMap> {
        DepthMap::new(self.width, self.height, self.widen())
    }

    pub fn to_defocus(&self) -> Result<DefocusMap> {
        DefocusMap::new(self.width, self.height, self.widen())
    }
}

impl From<&DepthMap> for FloatMap {
    fn from(m: &DepthMap) -> Self {
        Self {
            width: m.width(),
            height: m.height(),
            data: m.data().iter().map(|&v| v as f32).collect(),
        }
    }
}

impl From<&DefocusMap> for FloatMap {
    fn from(m: &DefocusMap) -> Self {
        Self {
            width: m.width(),
            height: m.height(),
            data: m.data().iter().map(|&v| v as f32).collect(),
        }
    }
}

pub fn encode_pfm(map: &FloatMap) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", map.width, map.height).into_bytes();
    out.reserve(map.data.len() * 4);
    for row in map.data.chunks(map.width).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<FloatMap> {
    let fmt = |m: &str| Error::Format(format!("pfm: {m}"));
    // three whitespace-terminated header fields follow the magic
    let mut pos = 0;
    let mut field = || -> Result<&str> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos || pos >= bytes.len() {
            return Err(fmt("truncated header"));
        }
        let s = std::str::from_utf8(&bytes[start..pos]).map_err(|_| fmt("non-ascii header"))?;
        pos += 1;
        Ok(s)
    };
    match field()? {
        "Pf" => {}
        "PF" => return Err(fmt("three-channel file where one channel was expected")),
        other => return Err(fmt(&format!("bad magic `{other}`"))),
    }
    let width: usize = field()?.parse().map_err(|_| fmt("bad width"))?;
    let height: usize = field()?.parse().map_err(|_| fmt("bad height"))?;
    let scale: f64 = field()?.parse().map_err(|_| fmt("bad scale"))?;
    if width == 0 || height == 0 {
        return Err(fmt("zero dimension"));
    }
    if scale > 0.0 {
        return Err(fmt("big-endian files are not supported"));
    }
    if !(scale < 0.0) {
        return Err(fmt("scale must be negative"));
    }
    let payload = &bytes[pos..];
    let n = width
        .checked_mul(height)
        .filter(|n| n.checked_mul(4) == Some(payload.len()))
        .ok_or_else(|| {
            fmt(&format!(
                "expected {}x{} floats, found {} payload bytes",
                width,
                height,
                payload.len()
            ))
        })?;
    let mut data = vec![0f32; n];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let (row, col) = (height - 1 - i / width, i % width);
        data[row * width + col] = f32::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok(FloatMap {
        width,
        height,
        data,
    })
}

pub fn read_pfm(path: &Path) -> Result<FloatMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_pfm(path: &Path, map: &FloatMap, force: bool) -> Result<()> {
    super::write_bytes(path, &encode_pfm(map), force)
}
