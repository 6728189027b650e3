//! PNG images. Samples are stored as-is (no transfer curve is applied).

use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use crate::error::{Error, Result};
use crate::raster::RasterImage;

/// Reads 8- or 16-bit gray or color PNGs; alpha is dropped.
pub fn read_png(path: &Path) -> Result<RasterImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, ImageFormat::Png)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let gray = matches!(
        img,
        DynamicImage::ImageLuma8(_)
            | DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA8(_)
            | DynamicImage::ImageLumaA16(_)
    );
    let data: Vec<f64> = if gray {
        img.to_luma16().into_raw().iter().map(|&v| v as f64 / 65535.0).collect()
    } else {
        img.to_rgb16().into_raw().iter().map(|&v| v as f64 / 65535.0).collect()
    };
    RasterImage::new(w, h, if gray { 1 } else { 3 }, data)
}

/// Writes a 16-bit PNG.
pub fn write_png(path: &Path, image: &RasterImage, force: bool) -> Result<()> {
    let (w, h) = (image.width() as u32, image.height() as u32);
    let raw: Vec<u16> = image
        .data()
        .iter()
        .map(|v| (v * 65535.0).round() as u16)
        .collect();
    let dynamic = if image.channels() == 1 {
        DynamicImage::ImageLuma16(ImageBuffer::<Luma<u16>, _>::from_raw(w, h, raw).unwrap())
    } else {
        DynamicImage::ImageRgb16(ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, raw).unwrap())
    };
    let mut bytes = std::io::Cursor::new(Vec::new());
    dynamic
        .write_to(&mut bytes, ImageFormat::Png)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    super::write_bytes(path, bytes.get_ref(), force)
}
