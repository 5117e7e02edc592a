//! Image loading and preprocessing: ROI cropping, per-channel contrast
//! normalization and integer-translation alignment.

mod align;
mod io;
mod normalize;

pub use align::{align_translation, Shift};
pub use io::{load_image, save_png};
pub use normalize::{contrast_normalize, NormalizationReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One 8-bit RGB pixel.
pub type Rgb = [u8; 3];

/// Row-major grid of RGB pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Input(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::Input(format!(
                "{width}x{height} image needs {expected} pixels, got {}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image filled with a single color.
    pub fn filled(width: u32, height: u32, color: Rgb) -> Result<Self> {
        Self::new(width, height, vec![color; width as usize * height as usize])
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Rgb) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<Rgb> {
        self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.pixels[self.index(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, value: Rgb) {
        let i = self.index(x, y);
        self.pixels[i] = value;
    }

    /// Integer luma `floor((r + g + b) / 3)` per pixel.
    pub fn luma(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|p| ((p[0] as u16 + p[1] as u16 + p[2] as u16) / 3) as u8)
            .collect()
    }

    fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y as usize * self.width as usize + x as usize
    }
}

/// Rectangular region of interest, top-left anchored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiSpec {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl RoiSpec {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn check_within(&self, width: u32, height: u32) -> Result<()> {
        let fits_x = (self.x as u64 + self.w as u64) <= width as u64;
        let fits_y = (self.y as u64 + self.h as u64) <= height as u64;
        if self.w == 0 || self.h == 0 || !fits_x || !fits_y {
            return Err(Error::Bounds {
                x: self.x,
                y: self.y,
                w: self.w,
                h: self.h,
                width,
                height,
            });
        }
        Ok(())
    }
}

/// Copy out the `roi.w × roi.h` sub-image.
pub fn crop_roi(image: &RasterImage, roi: &RoiSpec) -> Result<RasterImage> {
    roi.check_within(image.width, image.height)?;
    let mut pixels = Vec::with_capacity(roi.w as usize * roi.h as usize);
    for y in roi.y..roi.y + roi.h {
        let start = image.index(roi.x, y);
        pixels.extend_from_slice(&image.pixels[start..start + roi.w as usize]);
    }
    RasterImage::new(roi.w, roi.h, pixels)
}
