//! Change detection in image time series from the quantization error of a
//! self-organizing map trained on one anchor image.
//!
//! The pipeline is: load and crop each image ([`prep`]), optionally align
//! and contrast-normalize it, train a [`SomLattice`] on the anchor, score
//! every image by its [`quantization error`](SomLattice::quantization_error),
//! then test the QE series for a linear trend or correlate it with external
//! data ([`stats`]).

pub mod error;
pub mod pipeline;
pub mod prep;
pub mod som;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use pipeline::{
    correlate_with, run_series, trend_of, write_synthetic_series, Anchor, CorrelationReport,
    ExternalSeries, ManifestEntry, QeRow, QeSeries, SeriesManifest, SeriesRun,
};
pub use prep::{
    align_translation, contrast_normalize, crop_roi, load_image, save_png, NormalizationReport,
    RasterImage, Rgb, RoiSpec, Shift,
};
pub use som::{FeatureVector, QeValue, SomLattice, TrainingConfig, UnitIndex};
pub use stats::{linear_trend, pearson, student_t_sf, CorrelationResult, TrendResult};
pub use synth::{
    gen_extent_series, gen_intensity_series, ExtentSeriesSpec, FrameInfo, IntensitySeriesSpec,
    SeriesSpec, SyntheticFrame,
};
