//! Rectangular self-organizing map over RGB pixel features with online
//! Kohonen training and quantization-error scoring.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prep::{RasterImage, Rgb};

/// Largest distance between two points of the unit RGB cube.
pub const MAX_FEATURE_DISTANCE: f64 = 1.732_050_807_568_877_2;

/// RGB triple scaled into `[0, 1]³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [f64; 3]);

impl FeatureVector {
    pub fn from_rgb(p: Rgb) -> Self {
        Self([
            p[0] as f64 / 255.0,
            p[1] as f64 / 255.0,
            p[2] as f64 / 255.0,
        ])
    }

    pub fn is_valid(&self) -> bool {
        self.0
            .iter()
            .all(|c| c.is_finite() && (0.0..=1.0).contains(c))
    }

    #[inline]
    pub fn distance_sq(&self, other: &FeatureVector) -> f64 {
        let d0 = self.0[0] - other.0[0];
        let d1 = self.0[1] - other.0[1];
        let d2 = self.0[2] - other.0[2];
        d0 * d0 + d1 * d1 + d2 * d2
    }

    pub fn distance(&self, other: &FeatureVector) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Initial Gaussian neighborhood radius, in lattice units.
    pub sigma0: f64,
    /// Initial learning rate.
    pub alpha0: f64,
    pub iterations: u64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            grid_rows: 4,
            grid_cols: 4,
            sigma0: 1.2,
            alpha0: 0.2,
            iterations: 10_000,
            seed: 42,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.grid_rows == 0 || self.grid_cols == 0 {
            problems.push(format!(
                "grid must be at least 1x1, got {}x{}",
                self.grid_rows, self.grid_cols
            ));
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            problems.push(format!("sigma0 must be positive, got {}", self.sigma0));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            problems.push(format!("alpha0 must be in (0, 1], got {}", self.alpha0));
        }
        if self.iterations == 0 {
            problems.push("iterations must be at least 1".to_owned());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn units(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    /// `alpha0 / (1 + 2t/T)`
    pub fn learning_rate(&self, t: u64) -> f64 {
        self.alpha0 / self.decay_denominator(t)
    }

    /// `sigma0 / (1 + 2t/T)`
    pub fn neighborhood_radius(&self, t: u64) -> f64 {
        self.sigma0 / self.decay_denominator(t)
    }

    fn decay_denominator(&self, t: u64) -> f64 {
        1.0 + 2.0 * t as f64 / self.iterations as f64
    }
}

/// Lattice coordinate of a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitIndex {
    pub row: usize,
    pub col: usize,
}

impl fmt::Display for UnitIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Mean BMU distance over a set of samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QeValue {
    pub value: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SomLattice {
    config: TrainingConfig,
    weights: Vec<FeatureVector>,
    trained: bool,
}

impl SomLattice {
    /// Untrained lattice with weights drawn uniformly from `[0, 1]³`.
    pub fn init(config: TrainingConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let weights = (0..config.units())
            .map(|_| FeatureVector([rng.random(), rng.random(), rng.random()]))
            .collect();
        Ok(Self {
            config,
            weights,
            trained: false,
        })
    }

    /// Build a lattice from explicit row-major weights.
    pub fn from_weights(
        config: TrainingConfig,
        weights: Vec<FeatureVector>,
        trained: bool,
    ) -> Result<Self> {
        config.validate()?;
        if weights.len() != config.units() {
            return Err(Error::Config(format!(
                "{}x{} lattice needs {} weights, got {}",
                config.grid_rows,
                config.grid_cols,
                config.units(),
                weights.len()
            )));
        }
        if let Some(bad) = weights.iter().position(|w| !w.is_valid()) {
            return Err(Error::Config(format!(
                "weight {bad} is outside the unit cube: {:?}",
                weights[bad].0
            )));
        }
        Ok(Self {
            config,
            weights,
            trained,
        })
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn weights(&self) -> &[FeatureVector] {
        &self.weights
    }

    pub fn weight(&self, unit: UnitIndex) -> &FeatureVector {
        &self.weights[unit.row * self.config.grid_cols + unit.col]
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    fn unit_at(&self, index: usize) -> UnitIndex {
        UnitIndex {
            row: index / self.config.grid_cols,
            col: index % self.config.grid_cols,
        }
    }

    /// Row-major index and squared distance of the closest weight; the
    /// first minimum wins.
    #[inline]
    fn nearest(&self, sample: &FeatureVector) -> (usize, f64) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, w) in self.weights.iter().enumerate() {
            let d = w.distance_sq(sample);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        (best, best_d)
    }

    pub fn best_matching_unit(&self, sample: &FeatureVector) -> (UnitIndex, f64) {
        let (i, d2) = self.nearest(sample);
        (self.unit_at(i), d2.sqrt())
    }

    /// Online training on pixels drawn uniformly (with replacement) from
    /// `image`, for `config.iterations` steps.
    pub fn train(&mut self, image: &RasterImage) -> Result<()> {
        if image.is_empty() {
            return Err(Error::Input("training image has no pixels".into()));
        }
        let cfg = self.config;
        // Sampling uses its own stream so it does not depend on how many
        // draws initialization consumed.
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);

        let pixels = image.pixels();
        let coords: Vec<(f64, f64)> = (0..cfg.units())
            .map(|i| {
                let u = self.unit_at(i);
                (u.row as f64, u.col as f64)
            })
            .collect();

        for t in 0..cfg.iterations {
            let x = FeatureVector::from_rgb(pixels[rng.random_range(0..pixels.len())]);
            let (winner, _) = self.nearest(&x);
            let (wr, wc) = coords[winner];
            let alpha = cfg.learning_rate(t);
            let sigma = cfg.neighborhood_radius(t);
            let denom = 2.0 * sigma * sigma;

            for (w, &(r, c)) in self.weights.iter_mut().zip(&coords) {
                let d2 = (r - wr) * (r - wr) + (c - wc) * (c - wc);
                let step = alpha * (-d2 / denom).exp();
                for k in 0..3 {
                    w.0[k] += step * (x.0[k] - w.0[k]);
                }
            }
        }
        self.trained = true;
        Ok(())
    }

    /// Mean Euclidean distance from every pixel to its best-matching weight.
    pub fn quantization_error(&self, image: &RasterImage) -> Result<QeValue> {
        if !self.trained {
            return Err(Error::State(
                "quantization error requires a trained lattice".into(),
            ));
        }
        if image.is_empty() {
            return Err(Error::Input("image has no pixels".into()));
        }
        // Accumulate per distinct color in ascending color order, so the
        // result is bitwise independent of pixel order.
        let mut keys: Vec<u32> = image
            .pixels()
            .iter()
            .map(|p| (p[0] as u32) << 16 | (p[1] as u32) << 8 | p[2] as u32)
            .collect();
        keys.sort_unstable();
        let mut total = 0.0;
        for run in keys.chunk_by(|a, b| a == b) {
            let k = run[0];
            let color = [(k >> 16) as u8, (k >> 8) as u8, k as u8];
            let d = self.nearest(&FeatureVector::from_rgb(color)).1.sqrt();
            total += run.len() as f64 * d;
        }
        let n = image.len();
        let value = total / n as f64;
        if !(value.is_finite() && (0.0..=MAX_FEATURE_DISTANCE + 1e-12).contains(&value)) {
            return Err(Error::Invariant(format!(
                "quantization error {value} outside [0, sqrt(3)]"
            )));
        }
        Ok(QeValue {
            value,
            n_samples: n,
        })
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// On-disk JSON form of a trained lattice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub sigma0: f64,
    pub alpha0: f64,
    pub iterations: u64,
    pub seed: u64,
    pub weights: Vec<[f64; 3]>,
}

impl SomLattice {
    pub fn to_model_file(&self) -> ModelFile {
        let c = &self.config;
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            grid_rows: c.grid_rows,
            grid_cols: c.grid_cols,
            sigma0: c.sigma0,
            alpha0: c.alpha0,
            iterations: c.iterations,
            seed: c.seed,
            weights: self.weights.iter().map(|w| w.0).collect(),
        }
    }

    /// Serialized lattices are always treated as trained.
    pub fn from_model_file(model: ModelFile) -> Result<Self> {
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Input(format!(
                "unsupported model format_version {}",
                model.format_version
            )));
        }
        let config = TrainingConfig {
            grid_rows: model.grid_rows,
            grid_cols: model.grid_cols,
            sigma0: model.sigma0,
            alpha0: model.alpha0,
            iterations: model.iterations,
            seed: model.seed,
        };
        let weights = model.weights.into_iter().map(FeatureVector).collect();
        Self::from_weights(config, weights, true)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_model_file()).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::Input(format!("malformed model JSON: {e}")))?;
        Self::from_model_file(model)
    }
}
