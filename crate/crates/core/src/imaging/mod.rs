//! Gray raster container, geometric resampling and contrast enhancement.
//!
//! Every resampling step uses bilinear interpolation with pixel centers on
//! integer coordinates; reads outside the canvas return 0.

mod clahe;
mod geometry;
mod io;
mod transform;

pub use clahe::{clahe, ClaheParams};
pub use geometry::{apply_similarity, wrap_angle, Point2, Similarity2, Vec2};
pub use io::{encode_png, load_grayscale, save_png};
pub use transform::{crop_resize, flip_horizontal, flip_point, resize_uniform, rotate_image, warp};

use crate::error::{Error, Result};

/// 8-bit single-channel raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Argument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::Argument(format!(
                "pixel buffer holds {} values, expected {}",
                pixels.len(),
                width * height
            )));
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        GrayImage {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayImage { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Pixel value with zero outside the canvas.
    #[inline]
    pub fn get_or_zero(&self, x: i64, y: i64) -> f64 {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            0.0
        } else {
            self.pixels[y as usize * self.width + x as usize] as f64
        }
    }

    /// Bilinear interpolation at a continuous position; out-of-canvas
    /// neighbors contribute 0.
    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let fx = x.floor();
        let fy = y.floor();
        let ax = x - fx;
        let ay = y - fy;
        let x0 = fx as i64;
        let y0 = fy as i64;
        if x0 >= 0 && y0 >= 0 && x0 + 1 < self.width as i64 && y0 + 1 < self.height as i64 {
            let i = y0 as usize * self.width + x0 as usize;
            let p00 = self.pixels[i] as f64;
            let p10 = self.pixels[i + 1] as f64;
            let p01 = self.pixels[i + self.width] as f64;
            let p11 = self.pixels[i + self.width + 1] as f64;
            let top = p00 + ax * (p10 - p00);
            let bottom = p01 + ax * (p11 - p01);
            return top + ay * (bottom - top);
        }
        if x0 < -1 || y0 < -1 || x0 >= self.width as i64 || y0 >= self.height as i64 {
            return 0.0;
        }
        let p00 = self.get_or_zero(x0, y0);
        let p10 = self.get_or_zero(x0 + 1, y0);
        let p01 = self.get_or_zero(x0, y0 + 1);
        let p11 = self.get_or_zero(x0 + 1, y0 + 1);
        let top = p00 + ax * (p10 - p00);
        let bottom = p01 + ax * (p11 - p01);
        top + ay * (bottom - top)
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= (self.width - 1) as f64 && p.y <= (self.height - 1) as f64
    }

    /// Clamps a point onto the canvas.
    pub fn clamp_point(&self, p: Point2) -> Point2 {
        Point2::new(
            p.x.clamp(0.0, (self.width - 1) as f64),
            p.y.clamp(0.0, (self.height - 1) as f64),
        )
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&v| v as f64).sum::<f64>() / self.pixels.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let var = self.pixels.iter().map(|&v| (v as f64 - m).powi(2)).sum::<f64>() / self.pixels.len() as f64;
        var.sqrt()
    }
}

/// Rounds a resampled intensity into the 8-bit range.
#[inline]
pub(crate) fn to_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}
