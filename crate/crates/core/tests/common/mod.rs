//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use gsdefocus::splat::{CameraView, Gaussian3D};
use gsdefocus::{DepthMap, LensModel, RasterImage};
use nalgebra::{Matrix2, Matrix3, Quaternion, UnitQuaternion, Vector2, Vector3};

/// CoC radius in pixels, written out from the thin-lens relation.
pub fn coc(f: f64, n: f64, fd: f64, p: f64, d: f64) -> f64 {
    (d - fd).abs() / d * f * f / (n * (fd - f)) / (2.0 * p)
}

pub fn coc_lens(l: &LensModel, d: f64) -> f64 {
    coc(l.focal_length_m(), l.f_number(), l.focus_distance_m(), l.pixel_pitch_m(), d)
}

/// Direct spatially varying Gaussian gather with replicate borders.
pub fn convolve(img: &RasterImage, sigma_at: impl Fn(usize, usize) -> f64, window: usize) -> Vec<f64> {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let r = (window / 2) as i64;
    let mut out = vec![0.0; w * h * ch];
    for y in 0..h {
        for x in 0..w {
            let s = sigma_at(x, y);
            let s = if s >= 1.0 { s } else { 0.0 };
            for c in 0..ch {
                if s == 0.0 {
                    out[(y * w + x) * ch + c] = img.get(x, y, c);
                    continue;
                }
                let (mut acc, mut norm) = (0.0, 0.0);
                for dy in -r..=r {
                    for dx in -r..=r {
                        let wgt = (-((dx * dx + dy * dy) as f64) / (2.0 * s * s)).exp();
                        let sx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                        let sy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                        acc += wgt * img.get(sx, sy, c);
                        norm += wgt;
                    }
                }
                out[(y * w + x) * ch + c] = acc / norm;
            }
        }
    }
    out
}

pub struct NaiveSplat {
    pub mean: Vector2<f64>,
    pub inv: Matrix2<f64>,
    pub opacity: f64,
    pub color: [f64; 3],
    pub z: f64,
    pub index: usize,
}

/// Projection plus CoC blur, derived from the camera model directly.
pub fn naive_splats(gaussians: &[Gaussian3D], view: &CameraView, dof: bool) -> Vec<NaiveSplat> {
    let r = view.pose.rotation();
    let t = view.pose.translation();
    let k = &view.intrinsics;
    let mut out = Vec::new();
    for (index, g) in gaussians.iter().enumerate() {
        let c = r * g.mean + t;
        if c.z <= 1e-2 {
            continue;
        }
        let [qw, qx, qy, qz] = g.rotation;
        let rot = UnitQuaternion::from_quaternion(Quaternion::new(qw, qx, qy, qz)).to_rotation_matrix();
        let m = rot.matrix() * Matrix3::from_diagonal(&g.scale);
        let sigma3 = m * m.transpose();
        let jac = nalgebra::Matrix2x3::new(
            k.fx / c.z,
            0.0,
            -k.fx * c.x / (c.z * c.z),
            0.0,
            k.fy / c.z,
            -k.fy * c.y / (c.z * c.z),
        );
        let mut cov = jac * r * sigma3 * r.transpose() * jac.transpose();
        let mut opacity = g.opacity;
        if dof {
            let s = coc_lens(&view.lens, c.z);
            if s >= 1.0 {
                let a = s * s / (2.0 * (4.0f64).ln());
                let blurred = cov + Matrix2::identity() * a;
                opacity *= (cov.determinant() / blurred.determinant()).sqrt();
                cov = blurred;
            }
        }
        out.push(NaiveSplat {
            mean: Vector2::new(k.fx * c.x / c.z + k.cx, k.fy * c.y / c.z + k.cy),
            inv: cov.try_inverse().unwrap(),
            opacity,
            color: g.color,
            z: c.z,
            index,
        });
    }
    out.sort_by(|a, b| a.z.total_cmp(&b.z).then(a.index.cmp(&b.index)));
    out
}

/// Every splat at every pixel: no cutoff radius, no early termination.
pub fn naive_render(gaussians: &[Gaussian3D], view: &CameraView, dof: bool) -> (Vec<f64>, Vec<f64>) {
    let splats = naive_splats(gaussians, view, dof);
    let (w, h) = (view.intrinsics.width, view.intrinsics.height);
    let mut color = vec![0.0; w * h * 3];
    let mut depth = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut t = 1.0;
            for s in &splats {
                let d = Vector2::new(x as f64, y as f64) - s.mean;
                let m = (d.transpose() * s.inv * d)[(0, 0)];
                let alpha = (s.opacity * (-0.5 * m).exp()).min(0.99);
                for c in 0..3 {
                    color[(y * w + x) * 3 + c] += t * alpha * s.color[c];
                }
                depth[y * w + x] += t * alpha * s.z;
                t *= 1.0 - alpha;
            }
        }
    }
    (color, depth)
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Deterministic pseudo-random texture without touching the library's RNG path.
pub fn texture(w: usize, h: usize, ch: usize, seed: u64) -> RasterImage {
    let mut s = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let coarse: Vec<f64> = (0..(w / 4 + 2) * (h / 4 + 2) * ch).map(|_| next()).collect();
    RasterImage::from_fn(w, h, ch, |x, y, c| {
        let base = coarse[((y / 4) * (w / 4 + 2) + x / 4) * ch + c];
        0.1 + 0.8 * (0.6 * base + 0.4 * next())
    })
    .unwrap()
}

pub fn depth_from(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> DepthMap {
    DepthMap::from_fn(w, h, f).unwrap()
}

/// `n` Gaussians scattered in front of an identity camera.
pub fn random_gaussians(n: usize, seed: u64) -> Vec<Gaussian3D> {
    let mut s = seed.wrapping_mul(0x2545F4914F6CDD1D) | 1;
    let mut u = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..n)
        .map(|_| {
            let z = 1.0 + 2.0 * u();
            let q = Vector3::new(u() - 0.5, u() - 0.5, u() - 0.5);
            let angle = 3.0 * u();
            let axis = if q.norm() > 1e-6 { q.normalize() } else { Vector3::z() };
            let half = angle / 2.0;
            Gaussian3D::new(
                Vector3::new((u() - 0.5) * 0.8 * z, (u() - 0.5) * 0.8 * z, z),
                Vector3::new(0.02 + 0.08 * u(), 0.02 + 0.08 * u(), 0.02 + 0.08 * u()),
                [half.cos(), axis.x * half.sin(), axis.y * half.sin(), axis.z * half.sin()],
                0.3 + 0.69 * u(),
                [u(), u(), u()],
            )
            .unwrap()
        })
        .collect()
}
