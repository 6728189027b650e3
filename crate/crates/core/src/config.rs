//! Dataset-style protocol presets and run configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{ensure, Error, Result};
use crate::lens::LensModel;

pub const FOD500_FOCUS_DISTANCES_M: [f64; 5] = [0.3, 0.45, 0.75, 1.2, 1.8];
pub const NYUV2_FOCUS_DISTANCES_M: [f64; 5] = [1.0, 1.5, 2.5, 4.0, 6.0];
pub const FOD500_MAX_DEPTH_M: f64 = 3.0;
pub const NYUV2_MAX_DEPTH_M: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Fod500Style,
    Nyuv2Style,
    Custom,
}

impl Protocol {
    pub fn max_depth_m(self) -> Option<f64> {
        match self {
            Protocol::Fod500Style => Some(FOD500_MAX_DEPTH_M),
            Protocol::Nyuv2Style => Some(NYUV2_MAX_DEPTH_M),
            Protocol::Custom => None,
        }
    }

    pub fn min_depth_m(self) -> Option<f64> {
        match self {
            Protocol::Fod500Style => Some(0.1),
            Protocol::Nyuv2Style => Some(0.5),
            Protocol::Custom => None,
        }
    }

    pub fn focus_distances_m(self) -> Option<&'static [f64]> {
        match self {
            Protocol::Fod500Style => Some(&FOD500_FOCUS_DISTANCES_M),
            Protocol::Nyuv2Style => Some(&NYUV2_FOCUS_DISTANCES_M),
            Protocol::Custom => None,
        }
    }

    /// Default optics, focused at the first preset distance. Sized so that CoC
    /// radii over the preset depth range stay within a few pixels.
    pub fn default_lens(self) -> LensModel {
        let built = match self {
            Protocol::Fod500Style => LensModel::new(4e-3, 2.0, 0.3, 5e-6),
            Protocol::Nyuv2Style | Protocol::Custom => LensModel::new(10e-3, 2.0, 1.0, 10e-6),
        };
        built.expect("preset lens is valid")
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fod500-style" => Ok(Protocol::Fod500Style),
            "nyuv2-style" => Ok(Protocol::Nyuv2Style),
            "custom" => Ok(Protocol::Custom),
            other => Err(crate::error::domain!(
                "unknown protocol '{other}' (expected fod500-style, nyuv2-style or custom)"
            )),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Fod500Style => "fod500-style",
            Protocol::Nyuv2Style => "nyuv2-style",
            Protocol::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub depth_min_m: f64,
    pub depth_max_m: f64,
    pub focus_distances_m: Vec<f64>,
    pub lens: LensModel,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Preset for a named protocol. `Custom` starts from the NYUv2-style values.
    pub fn preset(protocol: Protocol, seed: u64, output_dir: impl Into<PathBuf>) -> Self {
        let base = match protocol {
            Protocol::Custom => Protocol::Nyuv2Style,
            p => p,
        };
        Self {
            protocol,
            depth_min_m: base.min_depth_m().unwrap(),
            depth_max_m: base.max_depth_m().unwrap(),
            focus_distances_m: base.focus_distances_m().unwrap().to_vec(),
            lens: protocol.default_lens(),
            seed,
            output_dir: output_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.depth_min_m > 0.0 && self.depth_min_m < self.depth_max_m,
            "depth range must satisfy 0 < min < max"
        );
        if let Some(max) = self.protocol.max_depth_m() {
            ensure!(
                self.depth_max_m <= max,
                "{} limits depth to {max} m",
                self.protocol
            );
        }
        ensure!(!self.focus_distances_m.is_empty(), "no focus distances");
        for pair in self.focus_distances_m.windows(2) {
            ensure!(
                pair[0] < pair[1],
                "focus distances must be strictly increasing"
            );
        }
        for &fd in &self.focus_distances_m {
            self.lens.with_focus_distance(fd)?;
        }
        Ok(())
    }
}
