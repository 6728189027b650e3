//! Pixel containers: color images and per-pixel scalar maps.

use crate::error::{ensure, Result};

/// Row-major `height × width × channels` image with samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

// Rec. 601 luma weights.
const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        ensure!(
            channels == 1 || channels == 3,
            "images have 1 or 3 channels, got {channels}"
        );
        ensure!(width > 0 && height > 0, "image dimensions must be non-zero");
        ensure!(
            data.len() == width * height * channels,
            "buffer length {} does not match {width}x{height}x{channels}",
            data.len()
        );
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(crate::error::domain!(
                "image samples must be finite and in [0, 1], found {bad}"
            ));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image from computed samples, clamping round-off outside `[0, 1]`.
    pub(crate) fn from_computed(
        width: usize,
        height: usize,
        channels: usize,
        mut data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Single-channel copy. Color images are reduced with Rec. 601 weights.
    pub fn luminance(&self) -> RasterImage {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2])
            .collect();
        Self::from_computed(self.width, self.height, 1, data)
    }

    /// Largest absolute per-sample difference.
    pub fn max_abs_diff(&self, other: &RasterImage) -> Result<f64> {
        ensure!(
            self.width == other.width
                && self.height == other.height
                && self.channels == other.channels,
            "image shapes differ: {}x{}x{} vs {}x{}x{}",
            self.width,
            self.height,
            self.channels,
            other.width,
            other.height,
            other.channels
        );
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

macro_rules! scalar_map {
    ($(#[$meta:meta])* $name:ident, $what:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            width: usize,
            height: usize,
            data: Vec<f64>,
        }

        impl $name {
            pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
                ensure!(width > 0 && height > 0, "map dimensions must be non-zero");
                ensure!(
                    data.len() == width * height,
                    "buffer length {} does not match {width}x{height}",
                    data.len()
                );
                if let Some(bad) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(crate::error::domain!(
                        concat!($what, " values must be finite and non-negative, found {}"),
                        bad
                    ));
                }
                Ok(Self { width, height, data })
            }

            pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
                Self::new(width, height, vec![value; width * height])
            }

            pub fn from_fn(
                width: usize,
                height: usize,
                mut f: impl FnMut(usize, usize) -> f64,
            ) -> Result<Self> {
                let mut data = Vec::with_capacity(width * height);
                for y in 0..height {
                    for x in 0..width {
                        data.push(f(x, y));
                    }
                }
                Self::new(width, height, data)
            }

            pub fn width(&self) -> usize {
                self.width
            }

            pub fn height(&self) -> usize {
                self.height
            }

            pub fn dims(&self) -> (usize, usize) {
                (self.width, self.height)
            }

            pub fn data(&self) -> &[f64] {
                &self.data
            }

            pub fn into_data(self) -> Vec<f64> {
                self.data
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> f64 {
                self.data[y * self.width + x]
            }
        }
    };
}

scalar_map!(
    /// Per-pixel CoC radius in pixels.
    DefocusMap,
    "defocus"
);

scalar_map!(
    /// Per-pixel depth in meters; `0` marks an invalid pixel.
    DepthMap,
    "depth"
);

impl DepthMap {
    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.get(x, y) > 0.0
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|d| **d > 0.0).count()
    }

    /// Checks every valid pixel lies in `(0, max_depth_m]`.
    pub fn check_max_depth(&self, max_depth_m: f64) -> Result<()> {
        if let Some(d) = self.data.iter().find(|d| **d > max_depth_m) {
            return Err(crate::error::domain!(
                "depth {d} m exceeds configured maximum {max_depth_m} m"
            ));
        }
        Ok(())
    }
}

pub(crate) fn same_dims(a: (usize, usize), b: (usize, usize), what: &str) -> Result<()> {
    ensure!(
        a == b,
        "{what}: dimension mismatch {}x{} vs {}x{}",
        a.0,
        a.1,
        b.0,
        b.1
    );
    Ok(())
}
