//! Shared inputs for the criterion benches.

use somqe::{gen_extent_series, ExtentSeriesSpec, RasterImage};

/// The six proof-of-concept extent frames at `size × size`.
pub fn extent_frames(size: u32) -> Vec<RasterImage> {
    let spec = ExtentSeriesSpec {
        image_size: size,
        ..ExtentSeriesSpec::proof_of_concept()
    };
    gen_extent_series(&spec)
        .expect("valid spec")
        .into_iter()
        .map(|f| f.image)
        .collect()
}

/// Deterministic xorshift texture, so benches need no RNG crate.
pub fn textured(width: u32, height: u32) -> RasterImage {
    let mut state: u32 = 0x9e37_79b9;
    RasterImage::from_fn(width, height, |_, _| {
        state ^= state << 13;
        state ^= state >> 17;
        state ^= state << 5;
        let b = state.to_le_bytes();
        [b[0], b[1], b[2]]
    })
    .expect("positive dimensions")
}
