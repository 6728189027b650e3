//! Mean structural similarity with an 11×11 Gaussian window (σ = 1.5).
//!
//! Windows that overhang the border are truncated and renormalized, so every
//! pixel contributes and constant images have closed-form scores.

use crate::error::{ensure, Result};
use crate::raster::RasterImage;

const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;
pub const C1: f64 = 0.01 * 0.01;
pub const C2: f64 = 0.03 * 0.03;

pub fn ssim(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    ensure!(
        a.width() == b.width() && a.height() == b.height() && a.channels() == b.channels(),
        "ssim: image shapes differ ({}x{}x{} vs {}x{}x{})",
        a.width(),
        a.height(),
        a.channels(),
        b.width(),
        b.height(),
        b.channels()
    );
    let (w, h, ch) = (a.width(), a.height(), a.channels());
    let taps = taps();
    let mut total = 0.0;
    for c in 0..ch {
        let pa: Vec<f64> = (0..w * h).map(|i| a.data()[i * ch + c]).collect();
        let pb: Vec<f64> = (0..w * h).map(|i| b.data()[i * ch + c]).collect();
        let prod = |f: fn(f64, f64) -> f64| -> Vec<f64> {
            pa.iter().zip(&pb).map(|(x, y)| f(*x, *y)).collect()
        };
        let mu_a = filter(&pa, w, h, &taps);
        let mu_b = filter(&pb, w, h, &taps);
        let e_aa = filter(&prod(|x, _| x * x), w, h, &taps);
        let e_bb = filter(&prod(|_, y| y * y), w, h, &taps);
        let e_ab = filter(&prod(|x, y| x * y), w, h, &taps);
        for i in 0..w * h {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            total += ((2.0 * ma * mb + C1) * (2.0 * cov + C2))
                / ((ma * ma + mb * mb + C1) * (va + vb + C2));
        }
    }
    Ok(total / (w * h * ch) as f64)
}

fn taps() -> [f64; WINDOW] {
    let r = (WINDOW / 2) as isize;
    let mut t = [0.0; WINDOW];
    for (i, v) in t.iter_mut().enumerate() {
        let d = i as isize - r;
        *v = (-((d * d) as f64) / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
    }
    t
}

/// Separable weighted mean with border renormalization.
fn filter(src: &[f64], w: usize, h: usize, taps: &[f64; WINDOW]) -> Vec<f64> {
    let r = (WINDOW / 2) as isize;
    let pass = |src: &[f64], len: usize, count: usize, at: &dyn Fn(usize, usize) -> usize| {
        let mut out = vec![0.0; src.len()];
        for line in 0..count {
            for i in 0..len {
                let (mut acc, mut norm) = (0.0, 0.0);
                for (k, t) in taps.iter().enumerate() {
                    let j = i as isize + k as isize - r;
                    if j < 0 || j >= len as isize {
                        continue;
                    }
                    acc += t * src[at(line, j as usize)];
                    norm += t;
                }
                out[at(line, i)] = acc / norm;
            }
        }
        out
    };
    let rows = pass(src, w, h, &|y, x| y * w + x);
    pass(&rows, h, w, &|x, y| y * w + x)
}
