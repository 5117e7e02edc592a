//! Synthetic proof-of-concept stimuli: a centered square of one gray level
//! on a uniform background, varied either in area or in level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prep::RasterImage;

pub const DEFAULT_IMAGE_SIZE: u32 = 128;

fn default_image_size() -> u32 {
    DEFAULT_IMAGE_SIZE
}

/// Fixed level, growing area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtentSeriesSpec {
    #[serde(default = "default_image_size")]
    pub image_size: u32,
    pub background_level: u8,
    pub foreground_level: u8,
    /// Requested fractions of the image area covered by the square.
    pub extents: Vec<f64>,
}

/// Fixed area, varying level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensitySeriesSpec {
    #[serde(default = "default_image_size")]
    pub image_size: u32,
    pub background_level: u8,
    pub extent: f64,
    pub foreground_levels: Vec<u8>,
}

/// Either kind of series, as read from a spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeriesSpec {
    Extent(ExtentSeriesSpec),
    Intensity(IntensitySeriesSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameInfo {
    pub index: usize,
    pub extent_requested: f64,
    /// `side² / size²` of the square actually drawn.
    pub extent_actual: f64,
    pub foreground_level: u8,
    pub background_level: u8,
}

#[derive(Debug, Clone)]
pub struct SyntheticFrame {
    pub image: RasterImage,
    pub info: FrameInfo,
}

impl ExtentSeriesSpec {
    /// The six-image series used for the extent proof of concept: 60 on 2,
    /// 1% to 36% of the area.
    pub fn proof_of_concept() -> Self {
        Self {
            image_size: DEFAULT_IMAGE_SIZE,
            background_level: 2,
            foreground_level: 60,
            extents: vec![0.01, 0.04, 0.09, 0.16, 0.25, 0.36],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.image_size == 0 {
            errors.push("image_size: must be positive".to_owned());
        }
        if self.foreground_level == self.background_level {
            errors.push("foreground_level: must differ from background_level".to_owned());
        }
        if self.extents.is_empty() {
            errors.push("extents: must not be empty".to_owned());
        }
        for (i, &e) in self.extents.iter().enumerate() {
            if !(0.0..=1.0).contains(&e) {
                errors.push(format!("extents[{i}]: {e} is outside [0, 1]"));
            }
        }
        if self.extents.windows(2).any(|w| w[0] >= w[1]) {
            errors.push("extents: must be strictly increasing".to_owned());
        }
        finish(errors)
    }
}

impl IntensitySeriesSpec {
    /// Six levels at a fixed extent of 16%, brightest first so the last
    /// (anchor) frame has the weakest contrast.
    pub fn proof_of_concept() -> Self {
        Self {
            image_size: DEFAULT_IMAGE_SIZE,
            background_level: 2,
            extent: 0.16,
            foreground_levels: vec![255, 210, 160, 110, 60, 10],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.image_size == 0 {
            errors.push("image_size: must be positive".to_owned());
        }
        if !(self.extent > 0.0 && self.extent <= 1.0) {
            errors.push(format!("extent: {} is outside (0, 1]", self.extent));
        }
        if self.foreground_levels.is_empty() {
            errors.push("foreground_levels: must not be empty".to_owned());
        }
        let levels = &self.foreground_levels;
        let increasing = levels.windows(2).all(|w| w[0] < w[1]);
        let decreasing = levels.windows(2).all(|w| w[0] > w[1]);
        if !increasing && !decreasing {
            errors.push("foreground_levels: must be strictly monotone".to_owned());
        }
        for (i, &l) in levels.iter().enumerate() {
            if l == self.background_level {
                errors.push(format!(
                    "foreground_levels[{i}]: equals background_level {l}"
                ));
            }
        }
        finish(errors)
    }
}

impl SeriesSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SeriesSpec::Extent(s) => s.validate(),
            SeriesSpec::Intensity(s) => s.validate(),
        }
    }

    pub fn generate(&self) -> Result<Vec<SyntheticFrame>> {
        match self {
            SeriesSpec::Extent(s) => gen_extent_series(s),
            SeriesSpec::Intensity(s) => gen_intensity_series(s),
        }
    }
}

fn finish(errors: Vec<String>) -> Result<()> {
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(errors))
    }
}

/// Side length of the square covering `extent` of a `size × size` image.
pub fn square_side(size: u32, extent: f64) -> Result<u32> {
    let side = (size as f64 * extent.sqrt()).round();
    if !(0.0..=size as f64).contains(&side) {
        return Err(Error::Validation(vec![format!(
            "extent {extent} gives a square side {side} larger than the image ({size})"
        )]));
    }
    Ok(side as u32)
}

fn centered_square(size: u32, side: u32, background: u8, foreground: u8) -> RasterImage {
    let lo = (size - side) / 2;
    let hi = lo + side;
    RasterImage::from_fn(size, size, |x, y| {
        let v = if (lo..hi).contains(&x) && (lo..hi).contains(&y) {
            foreground
        } else {
            background
        };
        [v, v, v]
    })
    .expect("positive square image")
}

pub fn gen_extent_series(spec: &ExtentSeriesSpec) -> Result<Vec<SyntheticFrame>> {
    spec.validate()?;
    let size = spec.image_size;
    spec.extents
        .iter()
        .enumerate()
        .map(|(index, &extent)| {
            let side = square_side(size, extent)?;
            Ok(SyntheticFrame {
                image: centered_square(size, side, spec.background_level, spec.foreground_level),
                info: FrameInfo {
                    index,
                    extent_requested: extent,
                    extent_actual: (side as f64 / size as f64).powi(2),
                    foreground_level: spec.foreground_level,
                    background_level: spec.background_level,
                },
            })
        })
        .collect()
}

pub fn gen_intensity_series(spec: &IntensitySeriesSpec) -> Result<Vec<SyntheticFrame>> {
    spec.validate()?;
    let size = spec.image_size;
    let side = square_side(size, spec.extent)?;
    let extent_actual = (side as f64 / size as f64).powi(2);
    Ok(spec
        .foreground_levels
        .iter()
        .enumerate()
        .map(|(index, &level)| SyntheticFrame {
            image: centered_square(size, side, spec.background_level, level),
            info: FrameInfo {
                index,
                extent_requested: spec.extent,
                extent_actual,
                foreground_level: level,
                background_level: spec.background_level,
            },
        })
        .collect())
}
