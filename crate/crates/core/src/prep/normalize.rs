use serde::Serialize;

use super::{RasterImage, Rgb};

/// Per-channel extrema observed by [`contrast_normalize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NormalizationReport {
    pub i_min: Rgb,
    pub i_max: Rgb,
    /// Set when any channel is constant over the image.
    pub degenerate: bool,
}

impl NormalizationReport {
    pub fn degenerate_channels(&self) -> impl Iterator<Item = usize> + '_ {
        (0..3).filter(|&c| self.i_min[c] == self.i_max[c])
    }
}

/// Stretch each channel independently to the full 0..=255 range:
/// `v -> round((v - min) / (max - min) * 255)`, rounding halves away from
/// zero. A constant channel maps to all zeros and flags the report.
pub fn contrast_normalize(image: &RasterImage) -> (RasterImage, NormalizationReport) {
    let mut i_min = [u8::MAX; 3];
    let mut i_max = [u8::MIN; 3];
    for p in image.pixels() {
        for c in 0..3 {
            i_min[c] = i_min[c].min(p[c]);
            i_max[c] = i_max[c].max(p[c]);
        }
    }

    // Lookup table per channel; the map is exact integer arithmetic.
    let mut lut = [[0u8; 256]; 3];
    for c in 0..3 {
        let lo = i_min[c] as u32;
        let range = i_max[c] as u32 - lo;
        if range == 0 {
            continue;
        }
        for v in lo..=i_max[c] as u32 {
            let num = (v - lo) * 255;
            lut[c][v as usize] = ((2 * num + range) / (2 * range)) as u8;
        }
    }

    let pixels = image
        .pixels()
        .iter()
        .map(|p| {
            [
                lut[0][p[0] as usize],
                lut[1][p[1] as usize],
                lut[2][p[2] as usize],
            ]
        })
        .collect();
    let out = RasterImage::new(image.width(), image.height(), pixels)
        .expect("normalization preserves dimensions");
    let degenerate = (0..3).any(|c| i_min[c] == i_max[c]);
    (
        out,
        NormalizationReport {
            i_min,
            i_max,
            degenerate,
        },
    )
}
