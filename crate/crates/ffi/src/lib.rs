//! C ABI over the gsdefocus library.
//!
//! Objects cross the boundary as opaque handles created by `gsd_*_new` /
//! `gsd_*_read_*` / `gsd_*_load` and released with the matching `gsd_*_free`.
//! Every fallible call returns a `GsdStatus`; on failure the message is
//! available from `gsd_last_error` on the same thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use gsdefocus::estimate::invert_defocus_to_depth;
use gsdefocus::io::{load_scene, read_pfm, read_png, save_scene, write_pfm, write_png, FloatMap};
use gsdefocus::metrics::depth_metrics;
use gsdefocus::psf::render_defocus;
use gsdefocus::splat::{render, GaussianScene, RenderOptions};
use gsdefocus::stack::defocus_from_depth;
use gsdefocus::{DefocusMap, DepthMap, Error, LensModel, RasterImage};

#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsdStatus {
    GSD_OK = 0,
    GSD_ERR_NULL = 1,
    GSD_ERR_DOMAIN = 2,
    GSD_ERR_PARSE = 3,
    GSD_ERR_FORMAT = 4,
    GSD_ERR_IO = 5,
    GSD_ERR_EXISTS = 6,
    GSD_ERR_NONFINITE = 7,
    GSD_ERR_PANIC = 8,
    GSD_ERR_UTF8 = 9,
}

pub struct GsdLens(LensModel);
pub struct GsdImage(RasterImage);
pub struct GsdDepthMap(DepthMap);
pub struct GsdDefocusMap(DefocusMap);
pub struct GsdScene(GaussianScene);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GsdDepthMetrics {
    pub rmse: f64,
    pub absrel: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub valid_pixels: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Fail {
    Null(&'static str),
    Utf8,
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GsdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GsdStatus::GSD_OK
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer passed for {what}"));
            GsdStatus::GSD_ERR_NULL
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("path is not valid UTF-8");
            GsdStatus::GSD_ERR_UTF8
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            match e {
                Error::Domain(_) => GsdStatus::GSD_ERR_DOMAIN,
                Error::Parse { .. } => GsdStatus::GSD_ERR_PARSE,
                Error::Format(_) => GsdStatus::GSD_ERR_FORMAT,
                Error::Io { .. } => GsdStatus::GSD_ERR_IO,
                Error::WouldOverwrite(_) => GsdStatus::GSD_ERR_EXISTS,
                Error::NonFiniteLoss { .. } => GsdStatus::GSD_ERR_NONFINITE,
            }
        }
        Err(_) => {
            set_error("internal panic");
            GsdStatus::GSD_ERR_PANIC
        }
    }
}

unsafe fn href<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn path(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(Fail::Null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Fail::Utf8)
}

unsafe fn floats(data: *const f64, len: usize) -> Result<Vec<f64>, Fail> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if data.is_null() {
        return Err(Fail::Null("data"));
    }
    Ok(std::slice::from_raw_parts(data, len).to_vec())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn gsd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gsd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn gsd_lens_new(
    focal_length_m: f64,
    f_number: f64,
    focus_distance_m: f64,
    pixel_pitch_m: f64,
    lens_out: *mut *mut GsdLens,
) -> GsdStatus {
    guard(|| {
        let slot = out(lens_out, "lens_out")?;
        let lens = LensModel::new(focal_length_m, f_number, focus_distance_m, pixel_pitch_m)?;
        *slot = boxed(GsdLens(lens));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gsd_lens_free(lens: *mut GsdLens) {
    free(lens)
}

#[no_mangle]
pub unsafe extern "C" fn gsd_lens_coc_radius(lens: *const GsdLens, depth_m: f64, sigma_px_out: *mut f64) -> GsdStatus {
    guard(|| {
        let l = href(lens, "lens")?;
        *out(sigma_px_out, "sigma_px_out")? = l.0.coc_radius(depth_m)?;
        Ok(())
    })
}

/// Writes both depth solutions for `sigma_px`; `has_far_out` is set to 0 when
/// only the near one exists (and `far_out` is then left untouched).
#[no_mangle]
pub unsafe extern "C" fn gsd_lens_invert_coc(
    lens: *const GsdLens,
    sigma_px: f64,
    near_out: *mut f64,
    far_out: *mut f64,
    has_far_out: *mut i32,
) -> GsdStatus {
    guard(|| {
        let l = href(lens, "lens")?;
        let roots = l.0.invert_coc(sigma_px)?;
        let (near, far, has) = (out(near_out, "near_out")?, out(far_out, "far_out")?, out(has_far_out, "has_far_out")?);
        *near = roots.near;
        *has = roots.far.is_some() as i32;
        if let Some(f) = roots.far {
            *far = f;
        }
        Ok(())
    })
}

/// Copies `width*height*channels` row-major interleaved samples in `[0, 1]`.
#[no_mangle]
pub unsafe extern "C" fn gsd_image_new(
    width: usize,
    height: usize,
    channels: usize,
    data: *const f64,
    image_out: *mut *mut GsdImage,
) -> GsdStatus {
    guard(|| {
        let slot = out(image_out, "image_out")?;
        let len = width.saturating_mul(height).saturating_mul(channels);
        let img = RasterImage::new(width, height, channels, floats(data, len)?)?;
        *slot = boxed(GsdImage(img));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gsd_image_free(image: *mut GsdImage) {
    free(image)
}

#[no_mangle]
pub unsafe extern "C" fn gsd_image_width(image: *const GsdImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.width())
}

#[no_mangle]
pub unsafe extern "C" fn gsd_image_height(image: *const GsdImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.height())
}

#[no_mangle]
pub unsafe extern "C" fn gsd_image_channels(image: *const GsdImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.channels())
}

/// Borrowed pointer to the samples; valid while the image lives.
#[no_mangle]
pub unsafe extern "C" fn gsd_image_data(image: *const GsdImage) -> *const f64 {
    image.as_ref().map_or(std::ptr::null(), |i| i.0.data().as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn gsd_image_read_png(path_utf8: *const c_char, image_out: *mut *mut GsdImage) -> GsdStatus {
    guard(|| {
        let slot = out(image_out, "image_out")?;
        *slot = boxed(GsdImage(read_png(&path(path_utf8)?)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gsd_image_write_png(image: *const GsdImage, path_utf8: *const c_char, force: bool) -> GsdStatus {
    guard(|| {
        write_png(&path(path_utf8)?, &href(image, "image")?.0, force)?;
        Ok(())
    })
}

trait FloatGrid: Sized {
    fn build(width: usize, height: usize, data: Vec<f64>) -> gsdefocus::Result<Self>;
    fn load(map: &FloatMap) -> gsdefocus::Result<Self>;
    fn values(&self) -> &[f64];
    fn to_file(&self) -> FloatMap;
}

impl FloatGrid for DepthMap {
    fn build(width: usize, height: usize, data: Vec<f64>) -> gsdefocus::Result<Self> {
        DepthMap::new(width, height, data)
    }
    fn load(map: &FloatMap) -> gsdefocus::Result<Self> {
        map.to_depth()
    }
    fn values(&self) -> &[f64] {
        self.data()
    }
    fn to_file(&self) -> FloatMap {
        FloatMap::from(self)
    }
}

impl FloatGrid for DefocusMap {
    fn build(width: usize, height: usize, data: Vec<f64>) -> gsdefocus::Result<Self> {
        DefocusMap::new(width, height, data)
    }
    fn load(map: &FloatMap) -> gsdefocus::Result<Self> {
        map.to_defocus()
    }
    fn values(&self) -> &[f64] {
        self.data()
    }
    fn to_file(&self) -> FloatMap {
        FloatMap::from(self)
    }
}

unsafe fn map_new<M: FloatGrid, H>(
    width: usize,
    height: usize,
    data: *const f64,
    map_out: *mut *mut H,
    wrap: fn(M) -> H,
) -> GsdStatus {
    guard(|| {
        let slot = out(map_out, "map_out")?;
        let m = M::build(width, height, floats(data, width.saturating_mul(height))?)?;
        *slot = boxed(wrap(m));
        Ok(())
    })
}

unsafe fn map_read<M: FloatGrid, H>(path_utf8: *const c_char, map_out: *mut *mut H, wrap: fn(M) -> H) -> GsdStatus {
    guard(|| {
        let slot = out(map_out, "map_out")?;
        *slot = boxed(wrap(M::load(&read_pfm(&path(path_utf8)?)?)?));
        Ok(())
    })
}

unsafe fn map_write<M: FloatGrid>(map: Option<&M>, path_utf8: *const c_char, force: bool) -> GsdStatus {
    guard(|| {
        let m = map.ok_or(Fail::Null("map"))?;
        write_pfm(&path(path_utf8)?, &m.to_file(), force)?;
        Ok(())
    })
}

/// Copies `width*height` row-major values.
#[no_mangle]
pub unsafe extern "C" fn gsd_depth_new(
    width: usize,
    height: usize,
    data: *const f64,
    map_out: *mut *mut GsdDepthMap,
) -> GsdStatus {
    map_new(width, height, data, map_out, GsdDepthMap)
}

#[no_mangle]
pub unsafe extern "C" fn gsd_depth_free(map: *mut GsdDepthMap) {
    free(map)
}

#[no_mangle]
pub unsafe extern "C" fn gsd_depth_width(map: *const GsdDepthMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.dims().0)
}

#[no_mangle]
pub unsafe extern "C" fn gsd_depth_height(map: *const GsdDepthMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.dims().1)
}

/// Borrowed pointer to the values; valid while the map lives.
#[no_mangle]
pub unsafe extern "C" fn gsd_depth_data(map: *const GsdDepthMap) -> *const f64 {
    map.as_ref().map_or(std::ptr::null(), |m| m.0.values().as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn gsd_depth_read_pfm(path_utf8: *const c_char, map_out: *mut *mut GsdDepthMap) -> GsdStatus {
    map_read(path_utf8, map_out, GsdDepthMap)
}

#[no_mangle]
pub unsafe extern "C" fn gsd_depth_write_pfm(map: *const GsdDepthMap, path_utf8: *const c_char, force: bool) -> GsdStatus {
    map_write(map.as_ref().map(|m| &m.0), path_utf8, force)
}

/// Copies `width*height` row-major values.
#[no_mangle]
pub unsafe extern "C" fn gsd_defocus_new(
    width: usize,
    height: usize,
    data: *const f64,
    map_out: *mut *mut GsdDefocusMap,
) -> GsdStatus {
    map_new(width, height, data, map_out, GsdDefocusMap)
}

#[no_mangle]
pub unsafe extern "C" fn gsd_defocus_free(map: *mut GsdDefocusMap) {
    free(map)
}

#[no_mangle]
pub unsafe extern "C" fn gsd_defocus_width(map: *const GsdDefocusMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.dims().0)
}

#[no_mangle]
pub unsafe extern "C" fn gsd_defocus_height(map: *const GsdDefocusMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.dims().1)
}

/// Borrowed pointer to the values; valid while the map lives.
#[no_mangle]
pub unsafe extern "C" fn gsd_defocus_data(map: *const GsdDefocusMap) -> *const f64 {
    map.as_ref().map_or(std::ptr::null(), |m| m.0.values().as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn gsd_defocus_read_pfm(path_utf8: *const c_char, map_out: *mut *mut GsdDefocusMap) -> GsdStatus {
    map_read(path_utf8, map_out, GsdDefocusMap)
}

#[no_mangle]
pub unsafe extern "C" fn gsd_defocus_write_pfm(map: *const GsdDefocusMap, path_utf8: *const c_char, force: bool) -> GsdStatus {
    map_write(map.as_ref().map(|m| &m.0), path_utf8, force)
}

#[no_mangle]
pub unsafe extern "C" fn gsd_defocus_from_depth(
    depth: *const GsdDepthMap,
    lens: *const GsdLens,
    defocus_out: *mut *mut GsdDefocusMap,
) -> GsdStatus {
    guard(|| {
        let d = defocus_from_depth(&href(depth, "depth")?.0, &href(lens, "lens")?.0);
        *out(defocus_out, "defocus_out")? = boxed(GsdDefocusMap(d));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gsd_render_defocus(
    image: *const GsdImage,
    defocus: *const GsdDefocusMap,
    window: usize,
    image_out: *mut *mut GsdImage,
) -> GsdStatus {
    guard(|| {
        let r = render_defocus(&href(image, "image")?.0, &href(defocus, "defocus")?.0, window)?;
        *out(image_out, "image_out")? = boxed(GsdImage(r));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gsd_invert_defocus(
    defocus: *const GsdDefocusMap,
    lens: *const GsdLens,
    prior: *const GsdDepthMap,
    depth_out: *mut *mut GsdDepthMap,
) -> GsdStatus {
    guard(|| {
        let d = invert_defocus_to_depth(&href(defocus, "defocus")?.0, &href(lens, "lens")?.0, &href(prior, "prior")?.0)?;
        *out(depth_out, "depth_out")? = boxed(GsdDepthMap(d));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gsd_depth_metrics(
    pred: *const GsdDepthMap,
    gt: *const GsdDepthMap,
    metrics_out: *mut GsdDepthMetrics,
) -> GsdStatus {
    guard(|| {
        let m = depth_metrics(&href(pred, "pred")?.0, &href(gt, "gt")?.0)?;
        *out(metrics_out, "metrics_out")? = GsdDepthMetrics {
            rmse: m.rmse,
            absrel: m.absrel,
            delta1: m.delta1,
            delta2: m.delta2,
            delta3: m.delta3,
            valid_pixels: m.valid_pixels,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gsd_scene_load(path_utf8: *const c_char, scene_out: *mut *mut GsdScene) -> GsdStatus {
    guard(|| {
        let slot = out(scene_out, "scene_out")?;
        *slot = boxed(GsdScene(load_scene(&path(path_utf8)?)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gsd_scene_save(scene: *const GsdScene, path_utf8: *const c_char, force: bool) -> GsdStatus {
    guard(|| {
        save_scene(&path(path_utf8)?, &href(scene, "scene")?.0, force)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gsd_scene_free(scene: *mut GsdScene) {
    free(scene)
}

#[no_mangle]
pub unsafe extern "C" fn gsd_scene_gaussian_count(scene: *const GsdScene) -> usize {
    scene.as_ref().map_or(0, |s| s.0.gaussians.len())
}

#[no_mangle]
pub unsafe extern "C" fn gsd_scene_view_count(scene: *const GsdScene) -> usize {
    scene.as_ref().map_or(0, |s| s.0.views.len())
}

/// Renders view `view` of the scene. Either output may be null to skip it.
#[no_mangle]
pub unsafe extern "C" fn gsd_scene_render(
    scene: *const GsdScene,
    view: usize,
    enable_dof: bool,
    color_out: *mut *mut GsdImage,
    depth_out: *mut *mut GsdDepthMap,
) -> GsdStatus {
    guard(|| {
        let s = &href(scene, "scene")?.0;
        let opts = RenderOptions {
            enable_dof,
            ..Default::default()
        };
        let r = render(&s.gaussians, &s.camera_view(view)?, &opts)?;
        if let Some(c) = color_out.as_mut() {
            *c = boxed(GsdImage(r.color));
        }
        if let Some(d) = depth_out.as_mut() {
            *d = boxed(GsdDepthMap(r.depth));
        }
        Ok(())
    })
}
