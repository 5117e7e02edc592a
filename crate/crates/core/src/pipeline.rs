//! Series orchestration: preprocess every image, train one map on the
//! anchor, score the whole series, and the CSV/JSON exchange formats.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::prep::save_png;
use crate::prep::{
    align_translation, contrast_normalize, crop_roi, load_image, NormalizationReport, RasterImage,
    RoiSpec, Shift,
};
use crate::som::{QeValue, SomLattice, TrainingConfig};
use crate::stats::{linear_trend, pearson, CorrelationResult, TrendResult};
use crate::synth::{FrameInfo, SeriesSpec};

/// Frame metadata file written next to generated images.
pub const FRAMES_MANIFEST: &str = "manifest.json";
/// Ready-to-analyze series manifest written next to generated images.
pub const SERIES_MANIFEST: &str = "series.json";

/// Which image of a series the map is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Anchor {
    #[default]
    Last,
    Index(usize),
}

impl Anchor {
    pub fn resolve(&self, len: usize) -> Result<usize> {
        match *self {
            Anchor::Last if len > 0 => Ok(len - 1),
            Anchor::Index(i) if i < len => Ok(i),
            _ => Err(Error::Input(format!(
                "anchor {self:?} is out of range for {len} entries"
            ))),
        }
    }
}

impl Serialize for Anchor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Anchor::Last => s.serialize_str("last"),
            Anchor::Index(i) => s.serialize_u64(*i as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Anchor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(i) => Ok(Anchor::Index(i)),
            Raw::Name(s) if s == "last" => Ok(Anchor::Last),
            Raw::Name(s) => Err(serde::de::Error::custom(format!(
                "anchor must be \"last\" or an index, got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub label: String,
    pub path: PathBuf,
}

fn default_true() -> bool {
    true
}

/// Ordered image series plus preprocessing options.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesManifest {
    pub entries: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roi: Option<RoiSpec>,
    #[serde(default)]
    pub anchor: Anchor,
    #[serde(default = "default_true")]
    pub normalize: bool,
    /// Maximum integer shift searched when aligning to the anchor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub align: Option<u32>,
}

impl SeriesManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        Self {
            entries,
            roi: None,
            anchor: Anchor::Last,
            normalize: true,
            align: None,
        }
    }

    /// Read a manifest; relative entry paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: SeriesManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Input(format!("malformed manifest {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for entry in &mut manifest.entries {
            if entry.path.is_relative() {
                entry.path = base.join(&entry.path);
            }
        }
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.entries.is_empty() {
            errors.push("entries: must not be empty".to_owned());
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.label.as_str()) {
                errors.push(format!("entries: duplicate label '{}'", e.label));
            }
        }
        if !self.entries.is_empty() {
            if let Err(e) = self.anchor.resolve(self.entries.len()) {
                errors.push(format!("anchor: {e}"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QeRow {
    pub label: String,
    pub qe: QeValue,
}

/// QE of every series image against a single trained map.
#[derive(Debug, Clone, PartialEq)]
pub struct QeSeries {
    pub rows: Vec<QeRow>,
    pub model_ref: String,
    pub config: TrainingConfig,
}

impl QeSeries {
    pub fn to_csv(&self) -> String {
        qe_rows_to_csv(&self.rows)
    }
}

/// Everything produced by [`run_series`].
#[derive(Debug, Clone)]
pub struct SeriesRun {
    pub series: QeSeries,
    pub model: SomLattice,
    pub anchor_index: usize,
    /// One per entry when normalization ran.
    pub normalization: Vec<Option<NormalizationReport>>,
    /// One per entry when alignment ran.
    pub shifts: Vec<Option<Shift>>,
}

/// Series images after loading and preprocessing, in manifest order.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub images: Vec<RasterImage>,
    pub normalization: Vec<Option<NormalizationReport>>,
    pub shifts: Vec<Option<Shift>>,
}

/// Load, crop, align, and normalize every entry as the manifest asks.
pub fn preprocess_series(manifest: &SeriesManifest) -> Result<Preprocessed> {
    manifest.validate()?;
    let anchor = manifest.anchor.resolve(manifest.entries.len())?;

    let mut images = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let tag = |e| Error::entry(&entry.label, e);
        let mut image = load_image(&entry.path).map_err(tag)?;
        if let Some(roi) = &manifest.roi {
            image = crop_roi(&image, roi).map_err(tag)?;
        }
        if let Some(first) = images.first() {
            let first: &RasterImage = first;
            if image.dimensions() != first.dimensions() {
                return Err(tag(Error::Input(format!(
                    "dimensions {:?} differ from the first entry's {:?}",
                    image.dimensions(),
                    first.dimensions()
                ))));
            }
        }
        images.push(image);
    }

    let mut shifts = vec![None; images.len()];
    if let Some(max_shift) = manifest.align {
        let reference = images[anchor].clone();
        for (i, (image, entry)) in images.iter_mut().zip(&manifest.entries).enumerate() {
            let (aligned, shift) = align_translation(&reference, image, max_shift)
                .map_err(|e| Error::entry(&entry.label, e))?;
            *image = aligned;
            shifts[i] = Some(shift);
        }
    }

    let mut reports = vec![None; images.len()];
    if manifest.normalize {
        for (i, (image, entry)) in images.iter_mut().zip(&manifest.entries).enumerate() {
            let (normalized, report) = contrast_normalize(image);
            if report.degenerate {
                let channels: Vec<usize> = report.degenerate_channels().collect();
                warn!(
                    "entry '{}': constant channel(s) {:?} normalized to zero",
                    entry.label, channels
                );
            }
            *image = normalized;
            reports[i] = Some(report);
        }
    }
    Ok(Preprocessed {
        images,
        normalization: reports,
        shifts,
    })
}

/// Train on the anchor and score every preprocessed image, in manifest
/// order.
pub fn run_series(manifest: &SeriesManifest, config: &TrainingConfig) -> Result<SeriesRun> {
    config.validate()?;
    let Preprocessed {
        images,
        normalization,
        shifts,
    } = preprocess_series(manifest)?;
    let anchor_index = manifest.anchor.resolve(images.len())?;
    let anchor_label = &manifest.entries[anchor_index].label;

    let mut model = SomLattice::init(*config)?;
    model
        .train(&images[anchor_index])
        .map_err(|e| Error::entry(anchor_label, e))?;

    let rows = images
        .par_iter()
        .zip(manifest.entries.par_iter())
        .map(|(image, entry)| {
            let qe = model
                .quantization_error(image)
                .map_err(|e| Error::entry(&entry.label, e))?;
            Ok(QeRow {
                label: entry.label.clone(),
                qe,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SeriesRun {
        series: QeSeries {
            rows,
            model_ref: format!("anchor={anchor_label};seed={}", config.seed),
            config: *config,
        },
        model,
        anchor_index,
        normalization,
        shifts,
    })
}

/// Generate a synthetic series into `outdir`: `frame_NNN.png` per image,
/// the frame metadata list, and a series manifest labelled by frame index.
pub fn write_synthetic_series(spec: &SeriesSpec, outdir: &Path) -> Result<Vec<FrameInfo>> {
    let frames = spec.generate()?;
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let mut entries = Vec::with_capacity(frames.len());
    for frame in &frames {
        let name = format!("frame_{:03}.png", frame.info.index);
        save_png(&frame.image, outdir.join(&name))?;
        entries.push(ManifestEntry {
            label: frame.info.index.to_string(),
            path: PathBuf::from(name),
        });
    }
    let infos: Vec<FrameInfo> = frames.iter().map(|f| f.info).collect();
    write_json(&outdir.join(FRAMES_MANIFEST), &infos)?;
    write_json(&outdir.join(SERIES_MANIFEST), &SeriesManifest::new(entries))?;
    Ok(infos)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Invariant(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `v` with 12 significant digits, plain decimal for moderate magnitudes.
pub fn format_significant(v: f64) -> String {
    const DIGITS: i32 = 12;
    if v == 0.0 || !v.is_finite() {
        return format!("{:.*}", (DIGITS - 1) as usize, v);
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..DIGITS).contains(&exp) {
        format!("{:.*}", (DIGITS - 1 - exp) as usize, v)
    } else {
        sci
    }
}

pub fn qe_rows_to_csv(rows: &[QeRow]) -> String {
    let mut out = String::from("label,qe,n_samples\n");
    for row in rows {
        out.push_str(&csv_field(&row.label));
        out.push(',');
        out.push_str(&format_significant(row.qe.value));
        out.push(',');
        out.push_str(&row.qe.n_samples.to_string());
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn read_csv_records(text: &str, expected: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Input(format!("malformed CSV header: {e}")))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Input(format!(
            "expected CSV header {}, got {}",
            expected.join(","),
            got.join(",")
        )));
    }
    reader
        .records()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::Input(format!("CSV row {}: {e}", i + 1))))
        .collect()
}

fn parse_number<T: std::str::FromStr>(field: &str, what: &str, row: usize) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Input(format!("row {row}: {what} '{field}' is not a number")))
}

fn check_unique<'a>(labels: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::Input(format!("duplicate label '{l}'")));
        }
    }
    Ok(())
}

/// Parse a `label,qe,n_samples` file.
pub fn read_qe_csv(text: &str) -> Result<Vec<QeRow>> {
    let rows = read_csv_records(text, &["label", "qe", "n_samples"])?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(QeRow {
                label: r[0].to_owned(),
                qe: QeValue {
                    value: parse_number(&r[1], "qe", i + 1)?,
                    n_samples: parse_number(&r[2], "n_samples", i + 1)?,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    check_unique(rows.iter().map(|r| r.label.as_str()))?;
    Ok(rows)
}

/// User-supplied `label,value` data aligned with a QE series by label.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSeries {
    pub rows: Vec<(String, f64)>,
}

impl ExternalSeries {
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = read_csv_records(text, &["label", "value"])?
            .iter()
            .enumerate()
            .map(|(i, r)| Ok((r[0].to_owned(), parse_number(&r[1], "value", i + 1)?)))
            .collect::<Result<Vec<_>>>()?;
        check_unique(rows.iter().map(|(l, _)| l.as_str()))?;
        Ok(Self { rows })
    }
}

/// Linear trend of QE against numeric labels (e.g. years).
pub fn trend_of(rows: &[QeRow]) -> Result<TrendResult> {
    if rows.len() < 3 {
        return Err(Error::Input(format!(
            "trend needs at least 3 rows, got {}",
            rows.len()
        )));
    }
    let xs = rows
        .iter()
        .map(|r| {
            r.label.parse::<f64>().map_err(|_| {
                Error::Input(format!(
                    "label '{}' is not numeric; trend uses labels as the x axis, \
                     so relabel rows with explicit numeric x values (e.g. years)",
                    r.label
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ys: Vec<f64> = rows.iter().map(|r| r.qe.value).collect();
    linear_trend(&xs, &ys)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    #[serde(flatten)]
    pub result: CorrelationResult,
    pub unmatched_qe: usize,
    pub unmatched_external: usize,
}

/// Inner-join on label (in QE row order) and correlate QE with the
/// external values.
pub fn correlate_with(rows: &[QeRow], external: &ExternalSeries) -> Result<CorrelationReport> {
    let lookup: HashMap<&str, f64> = external
        .rows
        .iter()
        .map(|(l, v)| (l.as_str(), *v))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| lookup.get(r.label.as_str()).map(|&v| (r.qe.value, v)))
        .unzip();
    let matched = xs.len();
    let unmatched_qe = rows.len() - matched;
    let unmatched_external = external.rows.len() - matched;
    if unmatched_qe + unmatched_external > 0 {
        warn!(
            "{unmatched_qe} QE row(s) and {unmatched_external} external row(s) had no matching label"
        );
    }
    if matched < 3 {
        return Err(Error::Input(format!(
            "only {matched} label(s) match between the series; need at least 3"
        )));
    }
    Ok(CorrelationReport {
        result: pearson(&xs, &ys)?,
        unmatched_qe,
        unmatched_external,
    })
}
