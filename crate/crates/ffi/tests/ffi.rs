use std::ffi::{CStr, CString};
use std::ptr;

use gsdefocus_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(gsd_last_error()) }.to_string_lossy().into_owned()
}

fn cpath(p: &std::path::Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn lens_calls_match_closed_form() {
    unsafe {
        let mut lens = ptr::null_mut();
        assert_eq!(gsd_lens_new(0.05, 2.0, 2.0, 1e-5, &mut lens), GsdStatus::GSD_OK);
        let mut s = f64::NAN;
        assert_eq!(gsd_lens_coc_radius(lens, 4.0, &mut s), GsdStatus::GSD_OK);
        let expected = (4.0 - 2.0) / 4.0 * 0.05 * 0.05 / (2.0 * (2.0 - 0.05)) / (2.0 * 1e-5);
        assert!((s - expected).abs() < 1e-12 * expected);

        let (mut near, mut far, mut has) = (0.0, 0.0, -1);
        assert_eq!(gsd_lens_invert_coc(lens, s, &mut near, &mut far, &mut has), GsdStatus::GSD_OK);
        assert_eq!(has, 1);
        assert!((far - 4.0).abs() < 1e-9);
        assert!(near < 2.0);

        assert_eq!(gsd_lens_coc_radius(lens, -1.0, &mut s), GsdStatus::GSD_ERR_DOMAIN);
        assert!(last_error().contains("depth"), "{}", last_error());
        assert_eq!(gsd_lens_coc_radius(lens, 1.0, ptr::null_mut()), GsdStatus::GSD_ERR_NULL);
        gsd_lens_free(lens);
        gsd_lens_free(ptr::null_mut());
    }
}

#[test]
fn invalid_lens_is_a_domain_error() {
    unsafe {
        let mut lens = ptr::null_mut();
        assert_eq!(gsd_lens_new(0.05, 2.0, 0.01, 1e-5, &mut lens), GsdStatus::GSD_ERR_DOMAIN);
        assert!(lens.is_null());
        assert!(!last_error().is_empty());
    }
}

#[test]
fn image_defocus_pipeline() {
    unsafe {
        let (w, h) = (12usize, 10usize);
        let pixels: Vec<f64> = (0..w * h * 3).map(|i| (i % 17) as f64 / 16.0).collect();
        let mut img = ptr::null_mut();
        assert_eq!(gsd_image_new(w, h, 3, pixels.as_ptr(), &mut img), GsdStatus::GSD_OK);
        assert_eq!((gsd_image_width(img), gsd_image_height(img), gsd_image_channels(img)), (w, h, 3));

        let depth_vals = vec![3.0; w * h];
        let mut depth = ptr::null_mut();
        assert_eq!(gsd_depth_new(w, h, depth_vals.as_ptr(), &mut depth), GsdStatus::GSD_OK);
        let mut lens = ptr::null_mut();
        assert_eq!(gsd_lens_new(0.01, 2.0, 1.0, 1e-5, &mut lens), GsdStatus::GSD_OK);
        let mut defocus = ptr::null_mut();
        assert_eq!(gsd_defocus_from_depth(depth, lens, &mut defocus), GsdStatus::GSD_OK);
        let sigma = *gsd_defocus_data(defocus);
        assert!(sigma > 1.0);

        let mut blurred = ptr::null_mut();
        assert_eq!(gsd_render_defocus(img, defocus, 7, &mut blurred), GsdStatus::GSD_OK);
        let out = std::slice::from_raw_parts(gsd_image_data(blurred), w * h * 3);
        assert!(out.iter().zip(&pixels).any(|(a, b)| a != b));

        let mut back = ptr::null_mut();
        assert_eq!(gsd_invert_defocus(defocus, lens, depth, &mut back), GsdStatus::GSD_OK);
        let d = std::slice::from_raw_parts(gsd_depth_data(back), w * h);
        assert!(d.iter().all(|v| (v - 3.0).abs() < 1e-9));

        let mut m = GsdDepthMetrics::default();
        assert_eq!(gsd_depth_metrics(back, depth, &mut m), GsdStatus::GSD_OK);
        assert_eq!(m.valid_pixels, w * h);
        assert_eq!(m.delta1, 1.0);

        assert_eq!(gsd_render_defocus(img, defocus, 4, &mut blurred), GsdStatus::GSD_ERR_DOMAIN);

        gsd_image_free(blurred);
        gsd_image_free(img);
        gsd_depth_free(depth);
        gsd_depth_free(back);
        gsd_defocus_free(defocus);
        gsd_lens_free(lens);
    }
}

#[test]
fn metrics_size_mismatch_names_both_sizes() {
    unsafe {
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        assert_eq!(gsd_depth_new(2, 2, [1.0; 4].as_ptr(), &mut a), GsdStatus::GSD_OK);
        assert_eq!(gsd_depth_new(3, 1, [1.0; 3].as_ptr(), &mut b), GsdStatus::GSD_OK);
        let mut m = GsdDepthMetrics::default();
        assert_eq!(gsd_depth_metrics(a, b, &mut m), GsdStatus::GSD_ERR_DOMAIN);
        let msg = last_error();
        assert!(msg.contains("2x2") && msg.contains("3x1"), "{msg}");
        gsd_depth_free(a);
        gsd_depth_free(b);
    }
}

#[test]
fn files_and_scenes() {
    let dir = tempfile::tempdir().unwrap();
    let scene_path = dir.path().join("s.scene");
    std::fs::write(
        &scene_path,
        "camera width 16 height 12 fx 20 fy 20 cx 7.5 cy 5.5 focal_length 0.02 f_number 2 focus_distance 1.5 pixel_pitch 1e-5\n\
         pose 1 0 0 0 0 1 0 0 0 0 1 0\n\
         gaussian 0 0 2 0.1 0.1 0.1 1 0 0 0 0.8 0.9 0.5 0.1\n",
    )
    .unwrap();
    unsafe {
        let mut scene = ptr::null_mut();
        assert_eq!(gsd_scene_load(cpath(&scene_path).as_ptr(), &mut scene), GsdStatus::GSD_OK);
        assert_eq!((gsd_scene_gaussian_count(scene), gsd_scene_view_count(scene)), (1, 1));

        let (mut color, mut depth) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(gsd_scene_render(scene, 0, true, &mut color, &mut depth), GsdStatus::GSD_OK);
        assert_eq!(gsd_depth_width(depth), 16);
        assert_eq!(gsd_scene_render(scene, 5, true, &mut color, ptr::null_mut()), GsdStatus::GSD_ERR_DOMAIN);

        let png = dir.path().join("c.png");
        assert_eq!(gsd_image_write_png(color, cpath(&png).as_ptr(), false), GsdStatus::GSD_OK);
        assert_eq!(gsd_image_write_png(color, cpath(&png).as_ptr(), false), GsdStatus::GSD_ERR_EXISTS);
        let mut reread = ptr::null_mut();
        assert_eq!(gsd_image_read_png(cpath(&png).as_ptr(), &mut reread), GsdStatus::GSD_OK);

        let pfm = dir.path().join("d.pfm");
        assert_eq!(gsd_depth_write_pfm(depth, cpath(&pfm).as_ptr(), false), GsdStatus::GSD_OK);
        let mut d2 = ptr::null_mut();
        assert_eq!(gsd_depth_read_pfm(cpath(&pfm).as_ptr(), &mut d2), GsdStatus::GSD_OK);
        let a = std::slice::from_raw_parts(gsd_depth_data(depth), 16 * 12);
        let b = std::slice::from_raw_parts(gsd_depth_data(d2), 16 * 12);
        assert!(a.iter().zip(b).all(|(x, y)| *x as f32 == *y as f32));

        let mut bad: *mut GsdDefocusMap = ptr::null_mut();
        let mut bad_scene: *mut GsdScene = ptr::null_mut();
        let missing = dir.path().join("missing.pfm");
        assert_eq!(gsd_defocus_read_pfm(cpath(&missing).as_ptr(), &mut bad), GsdStatus::GSD_ERR_IO);
        let garbage = dir.path().join("garbage.scene");
        std::fs::write(&garbage, "gaussian 1 2\n").unwrap();
        assert_eq!(gsd_scene_load(cpath(&garbage).as_ptr(), &mut bad_scene), GsdStatus::GSD_ERR_PARSE);

        let saved = dir.path().join("again.scene");
        assert_eq!(gsd_scene_save(scene, cpath(&saved).as_ptr(), false), GsdStatus::GSD_OK);

        gsd_image_free(color);
        gsd_image_free(reread);
        gsd_depth_free(depth);
        gsd_depth_free(d2);
        gsd_scene_free(scene);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/gsdefocus.h")).unwrap();
    for name in [
        "gsd_last_error",
        "gsd_version",
        "gsd_lens_new",
        "gsd_lens_invert_coc",
        "gsd_image_new",
        "gsd_image_read_png",
        "gsd_depth_new",
        "gsd_defocus_read_pfm",
        "gsd_render_defocus",
        "gsd_invert_defocus",
        "gsd_depth_metrics",
        "gsd_scene_load",
        "gsd_scene_render",
        "typedef struct GsdScene GsdScene",
        "GSD_ERR_EXISTS = 6",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(gsd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
