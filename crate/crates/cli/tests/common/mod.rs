#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use somqe::{gen_extent_series, save_png, ExtentSeriesSpec, RasterImage};

pub const FIRST_YEAR: u32 = 1984;

pub fn somqe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_somqe"))
        .args(args)
        .output()
        .expect("spawn somqe")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn add_noise(image: &RasterImage, amplitude: i16, rng: &mut ChaCha8Rng) -> RasterImage {
    let pixels = image
        .pixels()
        .iter()
        .map(|p| {
            p.map(|v| (v as i16 + rng.random_range(-amplitude..=amplitude)).clamp(0, 255) as u8)
        })
        .collect();
    RasterImage::new(image.width(), image.height(), pixels).unwrap()
}

/// 25 yearly frames whose centered 60-on-2 square covers 1%..36% of the
/// area (reversed when `shrinking`), with ±5 gray levels of seeded noise
/// per channel. Returns the manifest path.
pub fn write_change_series(dir: &Path, shrinking: bool, seed: u64) -> PathBuf {
    let n = 25;
    let extents: Vec<f64> = (0..n)
        .map(|i| 0.01 + 0.35 * i as f64 / (n - 1) as f64)
        .collect();
    let spec = ExtentSeriesSpec {
        image_size: 128,
        background_level: 2,
        foreground_level: 60,
        extents,
    };
    let mut frames = gen_extent_series(&spec).unwrap();
    if shrinking {
        frames.reverse();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for (i, frame) in frames.iter().enumerate() {
        let year = FIRST_YEAR + i as u32;
        let name = format!("{year}.png");
        save_png(&add_noise(&frame.image, 5, &mut rng), dir.join(&name)).unwrap();
        entries.push(serde_json::json!({"label": year.to_string(), "path": name}));
    }
    let manifest = dir.join("series.json");
    let body = serde_json::json!({"entries": entries, "anchor": "last", "normalize": true});
    std::fs::write(&manifest, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    manifest
}
