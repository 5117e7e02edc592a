//! `somqe` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use somqe::pipeline::{read_qe_csv, SERIES_MANIFEST};
use somqe::{
    correlate_with, run_series, trend_of, write_synthetic_series, Error, ErrorKind, ExternalSeries,
    SeriesManifest, SeriesSpec, TrainingConfig,
};

#[derive(Parser)]
#[command(
    name = "somqe",
    version,
    about = "Detect structural change in image time series from SOM quantization error"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic proof-of-concept series from a JSON spec.
    Synth { spec: PathBuf, outdir: PathBuf },
    /// Train on the anchor image and write the QE of every image.
    Analyze(AnalyzeArgs),
    /// Fit a linear trend of QE against numeric labels.
    Trend {
        qe_csv: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Correlate QE with an external `label,value` series.
    Correlate {
        qe_csv: PathBuf,
        external_csv: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    manifest: PathBuf,
    /// Lattice size as ROWSxCOLS.
    #[arg(long, default_value = "4x4", value_parser = parse_grid)]
    grid: (usize, usize),
    #[arg(long, default_value_t = 1.2)]
    sigma: f64,
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    iters: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Skip per-image contrast normalization.
    #[arg(long)]
    no_normalize: bool,
    /// Align every image to the anchor, searching shifts up to MAXPX.
    #[arg(long, value_name = "MAXPX")]
    align: Option<u32>,
    /// QE CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the trained model as JSON.
    #[arg(long)]
    model: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got '{s}'"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad grid dimension '{v}'"))
    };
    Ok((parse(r)?, parse(c)?))
}

fn read_text(path: &Path) -> somqe::Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> somqe::Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> somqe::Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(e.to_string()))
}

fn synth(spec_path: &Path, outdir: &Path) -> somqe::Result<()> {
    let spec: SeriesSpec = serde_json::from_str(&read_text(spec_path)?)
        .map_err(|e| Error::Validation(vec![format!("{}: {e}", spec_path.display())]))?;
    spec.validate()?;
    let frames = write_synthetic_series(&spec, outdir)?;
    println!(
        "wrote {} frames to {} (analyze with {})",
        frames.len(),
        outdir.display(),
        outdir.join(SERIES_MANIFEST).display()
    );
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> somqe::Result<()> {
    let mut manifest = SeriesManifest::load(&args.manifest)?;
    if args.no_normalize {
        manifest.normalize = false;
    }
    if args.align.is_some() {
        manifest.align = args.align;
    }
    let config = TrainingConfig {
        grid_rows: args.grid.0,
        grid_cols: args.grid.1,
        sigma0: args.sigma,
        alpha0: args.alpha,
        iterations: args.iters,
        seed: args.seed,
    };

    let started = Instant::now();
    let run = run_series(&manifest, &config)?;
    info!(
        "trained on '{}' and scored {} images in {:.2?}",
        manifest.entries[run.anchor_index].label,
        run.series.rows.len(),
        started.elapsed()
    );

    let csv = run.series.to_csv();
    match &args.out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.model {
        let mut json = run.model.to_json();
        json.push('\n');
        write_text(path, &json)?;
    }
    Ok(())
}

fn trend(path: &Path, json: bool) -> somqe::Result<()> {
    let rows = read_qe_csv(&read_text(path)?)?;
    let fit = trend_of(&rows)?;
    let verdict = if fit.slope > 0.0 {
        "increase"
    } else if fit.slope < 0.0 {
        "decrease"
    } else {
        "no trend"
    };
    if json {
        let mut value = serde_json::to_value(fit).map_err(|e| Error::Invariant(e.to_string()))?;
        value["verdict"] = verdict.into();
        println!("{}", to_json(&value)?);
    } else {
        println!(
            "slope={:.6e} intercept={:.6e} R^2={:.4} t({})={:.4} p={:.4e} n={}",
            fit.slope, fit.intercept, fit.r_squared, fit.df, fit.t_stat, fit.p_value, fit.n
        );
        println!("verdict: {verdict} (p={:.4e})", fit.p_value);
    }
    Ok(())
}

fn correlate(qe_path: &Path, external_path: &Path, json: bool) -> somqe::Result<()> {
    let rows = read_qe_csv(&read_text(qe_path)?)?;
    let external = ExternalSeries::from_csv(&read_text(external_path)?)?;
    let report = correlate_with(&rows, &external)?;
    if json {
        println!("{}", to_json(&report)?);
    } else {
        let c = &report.result;
        println!(
            "R={:.6} t({})={:.4} p={:.4e} n={} (unmatched: {} qe, {} external)",
            c.r, c.df, c.t_stat, c.p_value, c.n, report.unmatched_qe, report.unmatched_external
        );
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err.kind() {
        ErrorKind::Input => 1,
        ErrorKind::Io => 2,
        ErrorKind::Internal => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let result = match &cli.command {
        Command::Synth { spec, outdir } => synth(spec, outdir),
        Command::Analyze(args) => analyze(args),
        Command::Trend { qe_csv, json } => trend(qe_csv, *json),
        Command::Correlate {
            qe_csv,
            external_csv,
            json,
        } => correlate(qe_csv, external_csv, *json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("4x4"), Ok((4, 4)));
        assert_eq!(parse_grid("3X5"), Ok((3, 5)));
        assert!(parse_grid("4").is_err());
        assert!(parse_grid("ax4").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
