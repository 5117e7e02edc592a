use std::path::Path;

use image::{ImageBuffer, ImageFormat};

use super::RasterImage;
use crate::error::{Error, Result};

/// Decode a PNG or binary PGM/PPM file. Grayscale expands to equal RGB
/// channels; alpha is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let decode_err = |message: String| Error::Decode {
        path: path.to_path_buf(),
        message,
    };

    let format = image::guess_format(&bytes).map_err(|e| decode_err(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(decode_err(format!("unsupported format {format:?}")));
    }
    let decoded = image::load_from_memory_with_format(&bytes, format)
        .map_err(|e| decode_err(e.to_string()))?
        .into_rgb8();

    let (width, height) = decoded.dimensions();
    let pixels = decoded.pixels().map(|p| p.0).collect();
    RasterImage::new(width, height, pixels).map_err(|e| decode_err(e.to_string()))
}

/// Write an 8-bit RGB PNG.
pub fn save_png(image: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let raw: Vec<u8> = image.pixels().iter().flatten().copied().collect();
    let buffer: ImageBuffer<image::Rgb<u8>, _> =
        ImageBuffer::from_raw(image.width(), image.height(), raw)
            .ok_or_else(|| Error::Invariant("pixel buffer size mismatch".into()))?;
    buffer
        .save_with_format(path, ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(source) => Error::io(path, source),
            other => Error::Decode {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })
}
