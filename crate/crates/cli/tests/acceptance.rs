//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero if
//! any criterion fails.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use somqe::pipeline::read_qe_csv;
use somqe::som::MAX_FEATURE_DISTANCE;
use somqe::{
    contrast_normalize, linear_trend, pearson, run_series, student_t_sf, FeatureVector,
    RasterImage, SeriesManifest, SomLattice, TrainingConfig,
};

use common::{path_str, somqe, write_change_series};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

const STATS_REFERENCE: &str = include_str!("../../core/tests/fixtures/stats_reference.json");

fn run_ok(args: &[&str]) -> Result<String, String> {
    let out = somqe(args);
    if !out.status.success() {
        return Err(format!(
            "somqe {args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn qe_values(csv_path: &Path) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(csv_path).map_err(|e| e.to_string())?;
    Ok(read_qe_csv(&text)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|r| r.qe.value)
        .collect())
}

/// Synthesize a series with the CLI and analyze it; returns (frame
/// metadata, QE per frame, elapsed).
fn synth_and_analyze(
    dir: &Path,
    spec: Value,
    extra: &[&str],
) -> Result<(Vec<Value>, Vec<f64>, Duration), String> {
    let spec_path = dir.join("spec.json");
    std::fs::write(&spec_path, spec.to_string()).map_err(|e| e.to_string())?;
    let out = dir.join("frames");
    let qe = dir.join("qe.csv");
    let started = Instant::now();
    run_ok(&["synth", path_str(&spec_path), path_str(&out)])?;
    let manifest = out.join("series.json");
    let mut args = vec!["analyze", path_str(&manifest), "--out", path_str(&qe)];
    args.extend_from_slice(extra);
    run_ok(&args)?;
    let elapsed = started.elapsed();
    let frames: Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("manifest.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    Ok((frames.as_array().unwrap().clone(), qe_values(&qe)?, elapsed))
}

fn extent_spec() -> Value {
    serde_json::json!({
        "kind": "extent",
        "image_size": 128,
        "background_level": 2,
        "foreground_level": 60,
        "extents": [0.01, 0.04, 0.09, 0.16, 0.25, 0.36]
    })
}

fn intensity_spec() -> Value {
    // Weakest contrast last, so the anchor is the low-contrast frame.
    serde_json::json!({
        "kind": "intensity",
        "image_size": 128,
        "background_level": 2,
        "extent": 0.16,
        "foreground_levels": [255, 210, 160, 110, 60, 10]
    })
}

fn c1_extent_sensitivity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (frames, qe, elapsed) = synth_and_analyze(dir.path(), extent_spec(), &["--no-normalize"])?;
    let extent: Vec<f64> = frames
        .iter()
        .map(|f| 100.0 * f["extent_actual"].as_f64().unwrap())
        .collect();
    ensure!(
        qe.windows(2).all(|w| w[0] < w[1]),
        "QE not strictly increasing: {qe:?}"
    );
    let fit = linear_trend(&extent, &qe).map_err(|e| e.to_string())?;
    ensure!(fit.r_squared >= 0.90, "R^2 {} < 0.90", fit.r_squared);
    ensure!(fit.p_value < 0.05, "p {} >= .05", fit.p_value);
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    // Both colors of a bilevel anchor are learned exactly, so QE here is
    // f*d_fg + (1-f)*d_bg with residuals at rounding scale; report the range
    // so the magnitude of the signal is visible.
    Ok(format!(
        "R^2={:.6} t({})={:.2} p={:.2e} QE range [{:.3e}, {:.3e}] in {:.2?}",
        fit.r_squared,
        fit.df,
        fit.t_stat,
        fit.p_value,
        qe[0],
        qe[qe.len() - 1],
        elapsed
    ))
}

fn c2_intensity_sensitivity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (frames, qe, elapsed) =
        synth_and_analyze(dir.path(), intensity_spec(), &["--no-normalize"])?;
    let mut pairs: Vec<(f64, f64)> = frames
        .iter()
        .map(|f| f["foreground_level"].as_f64().unwrap())
        .zip(qe.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    ensure!(
        pairs.windows(2).all(|w| w[0].1 < w[1].1),
        "QE not strictly increasing in level: {pairs:?}"
    );
    let (levels, qe): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let fit = linear_trend(&levels, &qe).map_err(|e| e.to_string())?;
    ensure!(fit.r_squared >= 0.95, "R^2 {} < 0.95", fit.r_squared);
    ensure!(fit.p_value < 0.01, "p {} >= .01", fit.p_value);
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "R^2={:.6} t({})={:.2} p={:.2e} in {:.2?}",
        fit.r_squared, fit.df, fit.t_stat, fit.p_value, elapsed
    ))
}

fn c3_normalization_removes_intensity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (_, qe, _) = synth_and_analyze(dir.path(), intensity_spec(), &[])?;
    ensure!(
        qe.windows(2).all(|w| w[0] == w[1]),
        "CSV QE values differ: {qe:?}"
    );

    // Bit-level check through the library on the same frames.
    let manifest =
        SeriesManifest::load(dir.path().join("frames/series.json")).map_err(|e| e.to_string())?;
    let run = run_series(&manifest, &TrainingConfig::default()).map_err(|e| e.to_string())?;
    let bits: Vec<u64> = run
        .series
        .rows
        .iter()
        .map(|r| r.qe.value.to_bits())
        .collect();
    ensure!(
        bits.windows(2).all(|w| w[0] == w[1]),
        "QE bits differ: {bits:?}"
    );
    Ok(format!(
        "6 identical QE values = {}",
        run.series.rows[0].qe.value
    ))
}

fn trend_json(qe: &Path) -> Result<Value, String> {
    let out = run_ok(&["trend", path_str(qe), "--json"])?;
    serde_json::from_str(&out).map_err(|e| e.to_string())
}

fn c4_trend_direction() -> Outcome {
    let started = Instant::now();
    let mut lines = Vec::new();
    for (shrinking, sign, name) in [(false, 1.0, "growth"), (true, -1.0, "shrinkage")] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let manifest = write_change_series(dir.path(), shrinking, 2024);
        let qe = dir.path().join("qe.csv");
        run_ok(&["analyze", path_str(&manifest), "--out", path_str(&qe)])?;
        let fit = trend_json(&qe)?;
        let slope = fit["slope"].as_f64().unwrap();
        let p = fit["p_value"].as_f64().unwrap();
        ensure!(
            slope * sign > 0.0,
            "{name}: slope {slope} has the wrong sign"
        );
        ensure!(p < 0.01, "{name}: p {p} >= .01");
        lines.push(format!(
            "{name}: slope={slope:.3e} R^2={:.3} p={p:.2e} ({})",
            fit["r_squared"].as_f64().unwrap(),
            fit["verdict"].as_str().unwrap()
        ));
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{} in {elapsed:.2?}", lines.join("; ")))
}

fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        ((got - want) / want).abs()
    }
}

fn c5_statistics_oracle() -> Outcome {
    const TOL: f64 = 1e-9;
    let reference: Value = serde_json::from_str(STATS_REFERENCE).map_err(|e| e.to_string())?;
    let floats = |v: &Value| -> Vec<f64> {
        v.as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect()
    };
    let mut worst: f64 = 0.0;
    let mut check = |what: &str, got: f64, want: f64| -> Result<(), String> {
        let e = rel_err(got, want);
        worst = worst.max(e);
        ensure!(
            e <= TOL,
            "{what}: got {got}, reference {want} (rel {e:.2e})"
        );
        Ok(())
    };

    let datasets: Vec<&Value> = std::iter::once(&reference["fixed_25"])
        .chain(reference["random"].as_array().unwrap())
        .collect();
    for (i, d) in datasets.iter().enumerate() {
        let (xs, ys) = (floats(&d["xs"]), floats(&d["ys"]));
        let fit = linear_trend(&xs, &ys).map_err(|e| e.to_string())?;
        check(
            &format!("set {i} slope"),
            fit.slope,
            d["slope"].as_f64().unwrap(),
        )?;
        check(
            &format!("set {i} intercept"),
            fit.intercept,
            d["intercept"].as_f64().unwrap(),
        )?;
        check(
            &format!("set {i} r2"),
            fit.r_squared,
            d["r_squared"].as_f64().unwrap(),
        )?;
        check(
            &format!("set {i} t"),
            fit.t_stat,
            d["t_stat"].as_f64().unwrap(),
        )?;
        check(
            &format!("set {i} trend p"),
            fit.p_value,
            d["trend_p"].as_f64().unwrap(),
        )?;
        let c = pearson(&xs, &ys).map_err(|e| e.to_string())?;
        check(&format!("set {i} r"), c.r, d["r"].as_f64().unwrap())?;
        check(
            &format!("set {i} pearson p"),
            c.p_value,
            d["pearson_p"].as_f64().unwrap(),
        )?;
    }

    let points = reference["t_sf"].as_array().unwrap();
    let first = &points[0];
    ensure!(
        first["t"].as_f64() == Some(2.13) && first["df"].as_u64() == Some(23),
        "fixture must start with (2.13, 23)"
    );
    for pt in points {
        let (t, df) = (pt["t"].as_f64().unwrap(), pt["df"].as_u64().unwrap());
        let want = pt["p"].as_f64().unwrap();
        let got = student_t_sf(t, df).map_err(|e| e.to_string())?;
        if want < 1e-290 {
            // Below the normal f64 range only absolute agreement is meaningful.
            ensure!(
                (got - want).abs() < 1e-300,
                "t_sf({t}, {df}) = {got}, reference {want}"
            );
        } else {
            check(&format!("t_sf({t}, {df})"), got, want)?;
        }
    }
    let p = student_t_sf(2.13, 23).unwrap();
    Ok(format!(
        "{} datasets + {} t points, worst rel err {worst:.1e}; P(|T|>=2.13; 23)={p:.10}",
        datasets.len(),
        points.len()
    ))
}

fn random_image(rng: &mut ChaCha8Rng, w: u32, h: u32) -> RasterImage {
    RasterImage::from_fn(w, h, |_, _| rng.random()).unwrap()
}

fn c6_som_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let config = TrainingConfig {
        seed: 6,
        ..Default::default()
    };
    let train_image = random_image(&mut rng, 64, 48);
    let mut lattice = SomLattice::init(config).map_err(|e| e.to_string())?;
    lattice.train(&train_image).map_err(|e| e.to_string())?;

    for i in 0..1000 {
        let s = FeatureVector([rng.random(), rng.random(), rng.random()]);
        let (unit, d) = lattice.best_matching_unit(&s);
        let mut best = (0, f64::INFINITY);
        for (k, w) in lattice.weights().iter().enumerate() {
            let dist =
                ((w.0[0] - s.0[0]).powi(2) + (w.0[1] - s.0[1]).powi(2) + (w.0[2] - s.0[2]).powi(2))
                    .sqrt();
            if dist < best.1 {
                best = (k, dist);
            }
        }
        ensure!(
            unit.row * config.grid_cols + unit.col == best.0,
            "sample {i}: BMU {unit} disagrees with exhaustive index {}",
            best.0
        );
        ensure!(
            (d - best.1).abs() <= 1e-15,
            "sample {i}: distance {d} vs {}",
            best.1
        );
    }

    for _ in 0..20 {
        let img = random_image(&mut rng, 17, 9);
        let qe = lattice
            .quantization_error(&img)
            .map_err(|e| e.to_string())?;
        ensure!(
            qe.value >= 0.0 && qe.value <= MAX_FEATURE_DISTANCE,
            "QE {} out of range",
            qe.value
        );

        let mut px = img.pixels().to_vec();
        use rand::seq::SliceRandom;
        px.shuffle(&mut rng);
        let permuted = RasterImage::new(17, 9, px).unwrap();
        let qp = lattice
            .quantization_error(&permuted)
            .map_err(|e| e.to_string())?;
        ensure!(
            qe.value.to_bits() == qp.value.to_bits(),
            "permutation changed QE"
        );
    }

    let colors: Vec<[u8; 3]> = (0..16).map(|_| rng.random()).collect();
    let weights = colors.iter().map(|&c| FeatureVector::from_rgb(c)).collect();
    let exact = SomLattice::from_weights(config, weights, true).map_err(|e| e.to_string())?;
    let img = RasterImage::from_fn(20, 20, |x, y| colors[((x * 7 + y * 3) % 16) as usize]).unwrap();
    let qe = exact.quantization_error(&img).map_err(|e| e.to_string())?;
    ensure!(
        qe.value == 0.0,
        "QE on weight-colored image is {}",
        qe.value
    );

    let mut again = SomLattice::init(config).map_err(|e| e.to_string())?;
    again.train(&train_image).map_err(|e| e.to_string())?;
    ensure!(
        again.to_json() == lattice.to_json(),
        "same seed gave different models"
    );
    let q1 = lattice.quantization_error(&train_image).unwrap().value;
    let q2 = again.quantization_error(&train_image).unwrap().value;
    ensure!(q1.to_bits() == q2.to_bits(), "same seed gave different QE");
    Ok("1000 BMU checks, bounds, zero-QE, permutation and seed determinism hold".into())
}

fn c7_normalization_formula() -> Outcome {
    let row = RasterImage::new(3, 1, vec![[10; 3], [60; 3], [110; 3]]).unwrap();
    let (out, _) = contrast_normalize(&row);
    ensure!(
        out.pixels() == [[0; 3], [128; 3], [255; 3]],
        "{{10,60,110}} -> {:?}",
        out.pixels()
    );

    let flat = RasterImage::filled(8, 8, [33, 33, 33]).unwrap();
    let (out, report) = contrast_normalize(&flat);
    ensure!(
        out.pixels().iter().all(|p| *p == [0; 3]),
        "constant image not zeroed"
    );
    ensure!(report.degenerate, "constant image not flagged degenerate");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let mut img = random_image(&mut rng, 11, 13);
        img.set(0, 0, [0, 0, 0]);
        img.set(10, 12, [255, 255, 255]);
        let (once, _) = contrast_normalize(&img);
        ensure!(once == img, "full-range image changed by normalization");
        let (twice, _) = contrast_normalize(&once);
        ensure!(twice == once, "normalization not idempotent");
    }
    Ok("{10,60,110}->{0,128,255}, degenerate flag, idempotence exact".into())
}

fn c8_end_to_end_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = write_change_series(dir.path(), false, 2024);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let qe = dir.path().join(format!("qe{run}.csv"));
        let model = dir.path().join(format!("model{run}.json"));
        run_ok(&[
            "analyze",
            path_str(&manifest),
            "--seed",
            "42",
            "--out",
            path_str(&qe),
            "--model",
            path_str(&model),
        ])?;
        outputs.push((std::fs::read(&qe).unwrap(), std::fs::read(&model).unwrap()));
    }
    ensure!(outputs[0].0 == outputs[1].0, "qe.csv differs between runs");
    ensure!(
        outputs[0].1 == outputs[1].1,
        "model.json differs between runs"
    );
    Ok(format!(
        "qe.csv ({} bytes) and model.json ({} bytes) byte-identical",
        outputs[0].0.len(),
        outputs[0].1.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 extent sensitivity", c1_extent_sensitivity),
        ("2 intensity sensitivity", c2_intensity_sensitivity),
        (
            "3 normalization removes intensity dependence",
            c3_normalization_removes_intensity,
        ),
        ("4 growth/shrinkage trend detection", c4_trend_direction),
        ("5 statistics oracle equivalence", c5_statistics_oracle),
        ("6 SOM invariants", c6_som_invariants),
        ("7 normalization formula", c7_normalization_formula),
        ("8 end-to-end determinism", c8_end_to_end_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] criterion {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
