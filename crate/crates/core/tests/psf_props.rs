mod common;

use gsdefocus::procedural::{synth_procedural, ProceduralConfig, SceneStyle};
use gsdefocus::psf::{blur_uniform, compose_blur, gaussian_kernel, render_defocus};
use gsdefocus::stack::{synthesize_stack, SynthOptions};
use gsdefocus::{DefocusMap, DepthMap, LensModel, RasterImage};
use proptest::prelude::*;

fn smooth_texture(w: usize, seed: u64) -> RasterImage {
    synth_procedural(&ProceduralConfig::new(w, w, seed, SceneStyle::FrontoPlanes))
        .unwrap()
        .0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn matches_direct_convolution(seed in 0u64..1000, smax in 0.5..4.0f64, ch in prop::sample::select(vec![1usize, 3])) {
        let img = common::texture(23, 17, ch, seed);
        let defocus = DefocusMap::from_fn(23, 17, |x, y| smax * ((x * 7 + y * 3) % 11) as f64 / 10.0).unwrap();
        let got = render_defocus(&img, &defocus, 7).unwrap();
        let want = common::convolve(&img, |x, y| defocus.get(x, y), 7);
        prop_assert!(common::max_abs(got.data(), &want) < 1e-12);
    }

    #[test]
    fn output_range_is_contained(seed in 0u64..1000, smax in 0.0..5.0f64) {
        let img = common::texture(20, 20, 3, seed);
        let defocus = DefocusMap::from_fn(20, 20, |x, y| smax * ((x + 2 * y) % 5) as f64 / 4.0).unwrap();
        let out = render_defocus(&img, &defocus, 7).unwrap();
        let lo = img.data().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = img.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(out.data().iter().all(|v| *v >= lo - 1e-15 && *v <= hi + 1e-15));
    }

    #[test]
    fn constant_images_are_preserved(v in 0.0..1.0f64, s in 0.0..6.0f64) {
        let img = RasterImage::constant(16, 12, 3, v).unwrap();
        let out = render_defocus(&img, &DefocusMap::constant(16, 12, s).unwrap(), 7).unwrap();
        prop_assert!(out.data().iter().all(|o| (o - v).abs() < 1e-6));
    }

    #[test]
    fn semigroup_away_from_borders(s1 in 1.0..2.5f64, s2 in 1.0..2.5f64, seed in 0u64..50) {
        // Wide window so truncation is negligible; replicate padding is not a
        // semigroup, so the border band is excluded.
        let img = smooth_texture(64, seed);
        let twice = blur_uniform(&blur_uniform(&img, s1, 21).unwrap(), s2, 21).unwrap();
        let once = blur_uniform(&img, compose_blur(s1, s2), 21).unwrap();
        let mut worst = 0.0f64;
        for y in 10..54 {
            for x in 10..54 {
                for c in 0..3 {
                    worst = worst.max((twice.get(x, y, c) - once.get(x, y, c)).abs());
                }
            }
        }
        prop_assert!(worst <= 0.02, "interior error {worst}");
    }

    #[test]
    fn kernel_is_normalized_and_symmetric(s in 0.2..5.0f64, half in 1usize..6) {
        let k = gaussian_kernel(s, 2 * half + 1).unwrap();
        let sum: f64 = k.weights().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        let r = k.radius();
        for v in -r..=r {
            for u in -r..=r {
                prop_assert_eq!(k.at(u, v), k.at(-u, v));
                prop_assert_eq!(k.at(u, v), k.at(v, u));
            }
        }
    }
}

#[test]
fn compose_blur_examples() {
    assert_eq!(compose_blur(0.0, 1.7), 1.7);
    assert_eq!(compose_blur(3.0, 4.0), 5.0);
}

#[test]
fn sub_pixel_radius_is_identity() {
    let img = common::texture(16, 16, 3, 9);
    let out = render_defocus(&img, &DefocusMap::constant(16, 16, 0.999).unwrap(), 7).unwrap();
    assert_eq!(out, img);
}

#[test]
fn parallel_schedule_is_bit_identical() {
    let img = common::texture(61, 47, 3, 4);
    let defocus = DefocusMap::from_fn(61, 47, |x, y| ((x * y) % 9) as f64 * 0.4).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| render_defocus(&img, &defocus, 7).unwrap())
    };
    let serial = run(1);
    for t in [2, 3, 8] {
        assert_eq!(run(t).data(), serial.data());
    }
}

#[test]
fn in_focus_entry_reproduces_aif() {
    let (aif, _) = synth_procedural(&ProceduralConfig::new(40, 32, 3, SceneStyle::Spheres)).unwrap();
    let depth = DepthMap::constant(40, 32, 2.5).unwrap();
    let lens = LensModel::new(0.01, 2.0, 1.0, 1e-5).unwrap();
    let stack = synthesize_stack(&aif, &depth, &lens, &[1.0, 2.5, 6.0], &SynthOptions::default()).unwrap();
    assert_eq!(stack.entries()[1].image, aif);
    assert_ne!(stack.entries()[0].image, aif);
}
