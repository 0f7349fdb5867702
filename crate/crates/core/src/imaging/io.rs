use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};

use super::GrayImage;
use crate::error::{Error, Result};
use crate::formats::write_atomic;

/// Reads a PNG as 8-bit gray. RGB(A) is averaged across channels and 16-bit
/// data is rescaled so that the image maximum maps to 255.
pub fn load_grayscale(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png(&bytes).map_err(|message| Error::format(path.display().to_string(), message))
}

fn decode_png(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let reader = ImageReader::with_format(Cursor::new(bytes), ImageFormat::Png);
    let decoded = reader.decode().map_err(|e| e.to_string())?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let pixels: Vec<u8> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| mean3(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(buf) => buf.pixels().map(|p| mean3(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageLuma16(buf) => rescale16(buf.pixels().map(|p| p.0[0] as f64)),
        DynamicImage::ImageLumaA16(buf) => rescale16(buf.pixels().map(|p| p.0[0] as f64)),
        DynamicImage::ImageRgb16(buf) => rescale16(
            buf.pixels()
                .map(|p| (p.0[0] as f64 + p.0[1] as f64 + p.0[2] as f64) / 3.0),
        ),
        DynamicImage::ImageRgba16(buf) => rescale16(
            buf.pixels()
                .map(|p| (p.0[0] as f64 + p.0[1] as f64 + p.0[2] as f64) / 3.0),
        ),
        other => return Err(format!("unsupported pixel layout {:?}", other.color())),
    };
    GrayImage::new(w, h, pixels).map_err(|e| e.to_string())
}

fn mean3(r: u8, g: u8, b: u8) -> u8 {
    ((r as f64 + g as f64 + b as f64) / 3.0).round() as u8
}

fn rescale16(values: impl Iterator<Item = f64>) -> Vec<u8> {
    let values: Vec<f64> = values.collect();
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![0; values.len()];
    }
    values
        .iter()
        .map(|v| (v * 255.0 / max).round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Encodes an 8-bit grayscale PNG in memory.
pub fn encode_png(img: &GrayImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    image::write_buffer_with_format(
        &mut Cursor::new(&mut out),
        img.pixels(),
        img.width() as u32,
        img.height() as u32,
        image::ExtendedColorType::L8,
        ImageFormat::Png,
    )
    .map_err(|e| Error::format("png encoder", e.to_string()))?;
    Ok(out)
}

pub fn save_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_png(img)?)
}
