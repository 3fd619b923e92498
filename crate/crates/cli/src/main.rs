//! Command-line front end for the beamforming forecast pipeline.
//!
//! Settings are layered: command-line flags beat `--set` overrides, which
//! beat the config file, which beats built-in defaults. Exit codes are 0
//! on success, 1 on usage errors, and 2 on runtime errors.

use std::error::Error;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use beamcast::beamformer::{beampattern, write_beampattern_csv};
use beamcast::config::{load_config, FileConfig};
use beamcast::exec::ExecMode;
use beamcast::harness::{
    generate_dataset, run_sweep, write_results, ModelKind, ModelSelection, SweepAxis, SweepSpec,
    SweepSummary,
};
use beamcast::lstm::{self, LstmParams};
use beamcast::nar::{self, NarParams};
use beamcast::plot::{line_chart, write_svg, LineSeries};
use beamcast::timeseries::{
    apply_stats, compute_stats, make_supervised, rmse_cells, split_train_test, ChannelStats,
    Series,
};

#[derive(Debug, Parser)]
#[command(
    name = "beamcast",
    version,
    about = "Uniform-linear-array beamforming simulator with one-step forecasters",
    after_help = "Precedence: flags beat --set overrides, which beat --config values, \
                  which beat built-in defaults."
)]
struct Cli {
    /// TOML config file with [scenario], [lstm], [nar], and [sweep] tables
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Directory all output files go under
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,

    /// Master seed; overrides the scenario and forecaster seeds together
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Dotted config override, repeatable (e.g. --set scenario.snr_db=10)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Sweep worker threads; 1 forces sequential execution
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the scenario and write snapshots.csv and series.csv
    Generate,
    /// Train one forecaster on the scenario series, write params + loss curve
    Train {
        /// Which forecaster to train
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
    },
    /// One-step-ahead forecast of a saved series with saved parameters
    Forecast {
        /// Which forecaster the parameter file belongs to
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
        /// Parameter file written by `train`
        #[arg(long, value_name = "FILE")]
        params: PathBuf,
        /// Series CSV with columns t,ch0,ch1,... as written by `generate`
        #[arg(long, value_name = "FILE")]
        series: PathBuf,
    },
    /// Cross-validated RMSE sweep along one axis
    Sweep {
        /// Axis to vary: incident, span, or antennas
        #[arg(long, value_parser = parse_axis)]
        axis: SweepAxis,
        /// Comma-separated axis values (default: the axis's standard grid)
        #[arg(long, value_delimiter = ',', value_name = "V,V,...")]
        values: Option<Vec<f64>>,
        /// Fold count for cross validation
        #[arg(long)]
        k: Option<usize>,
        /// Forecasters to benchmark: lstm, nar, or both
        #[arg(long, value_parser = parse_selection)]
        model: Option<ModelSelection>,
    },
    /// Beam pattern of the scenario's distortionless weights, CSV + SVG
    Beampattern,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse()
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse()
}

fn parse_selection(s: &str) -> Result<ModelSelection, String> {
    match s {
        "lstm" => Ok(ModelSelection::Lstm),
        "nar" => Ok(ModelSelection::Nar),
        "both" => Ok(ModelSelection::Both),
        other => Err(format!("unknown model selection '{other}', expected lstm|nar|both")),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

type CliResult = Result<(), Box<dyn Error>>;

fn run(cli: Cli) -> CliResult {
    let mut cfg = load_config(cli.config.as_deref(), &cli.set)
        .map_err(|e| format!("loading configuration: {e}"))?;
    if let Some(seed) = cli.seed {
        cfg.scenario.seed = seed;
        cfg.lstm.seed = seed;
        cfg.nar.seed = seed;
    }
    let mode = exec_mode(cli.jobs);
    fs::create_dir_all(&cli.out)
        .map_err(|e| format!("creating {}: {e}", cli.out.display()))?;
    match &cli.command {
        Command::Generate => cmd_generate(&cfg, &cli.out),
        Command::Train { model } => cmd_train(&cfg, &cli.out, *model),
        Command::Forecast { model, params, series } => {
            cmd_forecast(*model, params, series, &cli.out)
        }
        Command::Sweep { axis, values, k, model } => {
            cmd_sweep(&cfg, &cli.out, *axis, values.clone(), *k, *model, mode)
        }
        Command::Beampattern => cmd_beampattern(&cfg, &cli.out),
    }
}

/// Picks the execution mode and sizes the worker pool. Without a flag the
/// pool defaults to one worker per available processor.
fn exec_mode(jobs: Option<u64>) -> ExecMode {
    match jobs {
        Some(1) => ExecMode::Sequential,
        #[cfg(feature = "parallel")]
        Some(n) => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global();
            ExecMode::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => ExecMode::Parallel,
        None => ExecMode::Parallel,
    }
}

/// Creates `path` and streams `body` into it through a buffered writer.
fn write_file<F>(path: &Path, body: F) -> CliResult
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| format!("creating {}: {e}", path.display()))?;
    let mut out = BufWriter::new(file);
    body(&mut out)
        .and_then(|()| out.flush())
        .map_err(|e| format!("writing {}: {e}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn series_rows(s: &Series) -> Vec<Vec<f64>> {
    (0..s.len()).map(|t| s.at(t)).collect()
}

fn cmd_generate(cfg: &FileConfig, out: &Path) -> CliResult {
    let ds = generate_dataset(&cfg.scenario)?;
    write_file(&out.join("snapshots.csv"), |w| ds.snapshots.write_csv(w))?;
    write_file(&out.join("series.csv"), |w| ds.series.write_csv(w))?;
    println!(
        "scenario: {} elements, desired {} deg, {} samples, snr {} dB",
        cfg.scenario.array.num_elements,
        cfg.scenario.desired_azimuth_deg,
        cfg.scenario.num_samples,
        cfg.scenario.snr_db
    );
    Ok(())
}

fn cmd_train(cfg: &FileConfig, out: &Path, model: ModelKind) -> CliResult {
    let ds = generate_dataset(&cfg.scenario)?;
    let (train_raw, test_raw) = split_train_test(&ds.series, 0.8)?;
    let stats = compute_stats(&train_raw);
    let full_std = apply_stats(&ds.series, &stats);
    let values = series_rows(&full_std);
    let train_len = train_raw.len();
    println!("split: {} train / {} test samples", train_len, test_raw.len());
    let (test_preds, test_targets, curve_header, curve): (_, _, &str, Vec<f64>) = match model {
        ModelKind::Lstm => {
            let windows = make_supervised(&apply_stats(&train_raw, &stats))?;
            let (params, curve) = lstm::train(&windows, &cfg.lstm)?;
            let preds = lstm::predict_updating(&params, &values[..values.len() - 1])?;
            write_file(&out.join("lstm_params.txt"), |w| params.save(w))?;
            let preds: Vec<Vec<f64>> =
                (train_len..values.len()).map(|t| preds[t - 1].clone()).collect();
            let targets: Vec<Vec<f64>> =
                (train_len..values.len()).map(|t| values[t].clone()).collect();
            (preds, targets, "epoch,loss", curve)
        }
        ModelKind::Nar => {
            let p = cfg.nar.delays;
            let windows = nar::build_windows(&values[..train_len], p)?;
            let (params, curve) = nar::train_lm(&windows, &cfg.nar)?;
            let preds = nar::nar_predict_updating(&params, &values, p)?;
            write_file(&out.join("nar_params.txt"), |w| params.save(w))?;
            let preds: Vec<Vec<f64>> =
                (train_len..values.len()).map(|t| preds[t - p].clone()).collect();
            let targets: Vec<Vec<f64>> =
                (train_len..values.len()).map(|t| values[t].clone()).collect();
            (preds, targets, "iteration,sse", curve)
        }
    };
    let curve_path = out.join(format!("{model}_loss.csv"));
    write_file(&curve_path, |w| {
        writeln!(w, "{curve_header}")?;
        for (i, loss) in curve.iter().enumerate() {
            writeln!(w, "{i},{loss:.17e}")?;
        }
        Ok(())
    })?;
    let test_rmse = rmse_cells(&test_preds, &test_targets)?;
    println!("final training objective: {:.6e}", curve.last().copied().unwrap_or(f64::NAN));
    println!("held-out one-step rmse: {test_rmse:.6e} (standardized units)");
    Ok(())
}

fn cmd_forecast(model: ModelKind, params: &Path, series: &Path, out: &Path) -> CliResult {
    let file = File::open(series).map_err(|e| format!("opening {}: {e}", series.display()))?;
    let raw = Series::read_csv(BufReader::new(file))?;
    let stats = compute_stats(&raw);
    let std_series = apply_stats(&raw, &stats);
    let values = series_rows(&std_series);
    let mut reader = BufReader::new(
        File::open(params).map_err(|e| format!("opening {}: {e}", params.display()))?,
    );
    // Each prediction row i forecasts time offset+i, in standardized units.
    let (preds, offset) = match model {
        ModelKind::Lstm => {
            let p = LstmParams::load(&mut reader)?;
            if p.input_size() != raw.num_channels() {
                return Err(format!(
                    "parameter file expects {} channels, series has {}",
                    p.input_size(),
                    raw.num_channels()
                )
                .into());
            }
            (lstm::predict_updating(&p, &values[..values.len() - 1])?, 1)
        }
        ModelKind::Nar => {
            let p = NarParams::load(&mut reader)?;
            if p.channels != raw.num_channels() {
                return Err(format!(
                    "parameter file expects {} channels, series has {}",
                    p.channels,
                    raw.num_channels()
                )
                .into());
            }
            let delays = p.delays;
            (nar::nar_predict_updating(&p, &values, delays)?, delays)
        }
    };
    let targets: Vec<Vec<f64>> = (offset..values.len()).map(|t| values[t].clone()).collect();
    let scored: Vec<Vec<f64>> = preds[..targets.len()].to_vec();
    let score = rmse_cells(&scored, &targets)?;
    write_file(&out.join("predictions.csv"), |w| {
        write_predictions(w, &raw, &stats, &scored, offset)
    })?;
    println!("one-step rmse over {} samples: {score:.6e} (standardized units)", targets.len());
    Ok(())
}

/// Prediction rows in raw units next to the observed values.
fn write_predictions<W: Write>(
    out: &mut W,
    raw: &Series,
    stats: &ChannelStats,
    preds_std: &[Vec<f64>],
    offset: usize,
) -> std::io::Result<()> {
    write!(out, "t")?;
    for c in 0..raw.num_channels() {
        write!(out, ",pred_ch{c}")?;
    }
    for c in 0..raw.num_channels() {
        write!(out, ",actual_ch{c}")?;
    }
    writeln!(out)?;
    for (i, pred) in preds_std.iter().enumerate() {
        let t = offset + i;
        write!(out, "{t}")?;
        for (c, v) in pred.iter().enumerate() {
            write!(out, ",{:.17e}", v * stats.std[c] + stats.mean[c])?;
        }
        for v in raw.at(t) {
            write!(out, ",{v:.17e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn cmd_sweep(
    cfg: &FileConfig,
    out: &Path,
    axis: SweepAxis,
    values: Option<Vec<f64>>,
    k: Option<usize>,
    model: Option<ModelSelection>,
    mode: ExecMode,
) -> CliResult {
    let spec = SweepSpec {
        axis,
        values: values
            .or_else(|| cfg.sweep.values.clone())
            .unwrap_or_else(|| axis.default_values()),
        model: model.unwrap_or(cfg.sweep.model),
        k: k.unwrap_or(cfg.sweep.k),
    };
    let result = run_sweep(&spec, &cfg.scenario, &cfg.lstm, &cfg.nar, mode)?;
    println!(
        "sweep over {}: {} values, k={}, {} records",
        spec.axis,
        spec.values.len(),
        spec.k,
        result.records.len()
    );
    println!("{:>10} {:>6} {:>12} {:>12} {:>12}", "value", "model", "min", "mean", "max");
    for s in &result.summaries {
        println!(
            "{:>10} {:>6} {:>12.4e} {:>12.4e} {:>12.4e}",
            s.value, s.model, s.min, s.mean, s.max
        );
    }
    report_model_gap(&spec, &result.summaries);
    for path in write_results(&result, out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Compares the two forecasters at the largest axis value. Informational
/// only; nothing fails on the ratio.
fn report_model_gap(spec: &SweepSpec, summaries: &[SweepSummary]) {
    let Some(&largest) = spec.values.iter().max_by(|a, b| a.total_cmp(b)) else {
        return;
    };
    let mean_of = |m: ModelKind| {
        summaries.iter().find(|s| s.value == largest && s.model == m).map(|s| s.mean)
    };
    if let (Some(l), Some(n)) = (mean_of(ModelKind::Lstm), mean_of(ModelKind::Nar)) {
        println!(
            "at {} = {}: lstm mean rmse {:.4e}, nar mean rmse {:.4e}, nar/lstm ratio {:.2}",
            spec.axis,
            largest,
            l,
            n,
            n / l
        );
    }
}

fn cmd_beampattern(cfg: &FileConfig, out: &Path) -> CliResult {
    let ds = generate_dataset(&cfg.scenario)?;
    let grid: Vec<f64> = (0..=720).map(|i| -90.0 + f64::from(i) * 0.25).collect();
    let gains = beampattern(&ds.weights, &cfg.scenario.array, &grid);
    write_file(&out.join("beampattern.csv"), |w| write_beampattern_csv(&grid, &gains, w))?;
    let series = vec![LineSeries::new(
        "mvdr",
        grid.iter().zip(&gains).map(|(&az, &g)| (az, g)).collect(),
    )];
    let svg = line_chart("Beam pattern", "azimuth (deg)", "gain (dB)", &series)?;
    let svg_path = out.join("beampattern.svg");
    write_svg(&svg_path, &svg)?;
    println!("wrote {}", svg_path.display());
    Ok(())
}
