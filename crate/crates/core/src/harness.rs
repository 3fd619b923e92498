//! Experiment driver: scenario datasets, k-fold forecast sweeps, and
//! result files.
//!
//! A scenario is a pulsed desired source plus Gaussian interferers hitting
//! a uniform linear array. The driver beamforms the noisy snapshots,
//! converts the output to a two-channel series, and scores one-step-ahead
//! forecasts from both regressors under contiguous-block cross validation,
//! sweeping incident angle, azimuthal span, or antenna count. Sweep cells
//! are independent jobs, so they run through [`crate::exec::map_jobs`].

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::{
    add_noise, collect_plane_waves, rectangular_pulse, steering_vector, ArrayConfig, ArrayError,
    PlaneWaveSource, SnapshotMatrix, SourceKind,
};
use crate::beamformer::{
    beamform, mvdr_weights, sample_covariance, BeamWeights, BeamformError,
    CovarianceMatrix,
};
use crate::exec::{map_jobs, ExecMode};
use crate::lstm::{self, LstmError, TrainConfig};
use crate::nar::{self, NarConfig, NarError};
use crate::plot::{line_chart, write_svg, LineSeries, PlotError};
use crate::seeds::substream;
use crate::timeseries::{
    apply_stats, channelize, kfold_partitions, rmse_cells, Series, SeriesError,
    SupervisedWindows,
};

/// Roadside-unit mast height, carried for documentation only.
pub const RSU_HEIGHT_M: f64 = 25.0;
/// Distance between neighboring roadside units, documentation only.
pub const INTER_SITE_DISTANCE_M: f64 = 200.0;
/// Transmit power of the link budget narrative, documentation only.
pub const TX_POWER_DBM: f64 = 23.0;
/// Base-station receiver noise figure, documentation only.
pub const BS_NOISE_FIGURE_DB: f64 = 5.0;
/// Terminal receiver noise figure, documentation only.
pub const UE_NOISE_FIGURE_DB: f64 = 7.0;

const TAG_NOISE: u64 = 0x01;
const TAG_INTERFERER: u64 = 0x02;
const TAG_FOLDS: u64 = 0x03;
const TAG_SPAN_AZIMUTH: u64 = 0x04;
const TAG_MODEL_LSTM: u64 = 0x05;
const TAG_MODEL_NAR: u64 = 0x06;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("bad scenario: {0}")]
    BadScenario(String),
    #[error("bad sweep: {0}")]
    BadSweep(String),
    #[error("unknown span code {0}, expected 1..=10")]
    UnknownCode(i64),
    #[error("axis {axis} value {value} fold {fold}: {source}")]
    Cell {
        axis: SweepAxis,
        value: f64,
        fold: usize,
        #[source]
        source: Box<HarnessError>,
    },
    #[error("bad results file: {0}")]
    BadCsv(String),
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error(transparent)]
    Beamform(#[from] BeamformError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Lstm(#[from] LstmError),
    #[error(transparent)]
    Nar(#[from] NarError),
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Everything a dataset run needs: geometry, signal levels, waveform
/// shape, and the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub array: ArrayConfig,
    pub desired_azimuth_deg: f64,
    pub elevation_deg: f64,
    pub num_samples: usize,
    pub snr_db: f64,
    /// Interferer directions; when absent, one interferer sits 30 degrees
    /// off the desired azimuth.
    pub interferer_azimuths_deg: Option<Vec<f64>>,
    pub inr_db: f64,
    /// Period of the transmitted on/off pulse train in samples.
    pub pulse_period_samples: usize,
    /// Fraction of each period spent at full amplitude.
    pub pulse_on_fraction: f64,
    /// Carrier phase of the pulse. The default 45 degrees puts equal
    /// signal power in both quadrature channels of the beamformed series.
    pub pulse_phase_deg: f64,
    /// Diagonal loading applied to the sample covariance, as a fraction of
    /// the average per-element power. Short snapshot records leave the
    /// estimate ill-conditioned and let the desired signal cancel itself;
    /// loading near a tenth of the element power keeps the weights tame
    /// without filling in the interference nulls.
    pub diagonal_loading_factor: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            array: ArrayConfig::default(),
            desired_azimuth_deg: 45.0,
            elevation_deg: 0.0,
            num_samples: 361,
            snr_db: 20.0,
            interferer_azimuths_deg: None,
            inr_db: 10.0,
            pulse_period_samples: 120,
            pulse_on_fraction: 0.5,
            pulse_phase_deg: 45.0,
            diagonal_loading_factor: 0.1,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// Interferer azimuths with the relative default applied.
    pub fn interferer_azimuths(&self) -> Vec<f64> {
        self.interferer_azimuths_deg
            .clone()
            .unwrap_or_else(|| vec![self.desired_azimuth_deg + 30.0])
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.num_samples < 4 {
            return Err(HarnessError::BadScenario(format!(
                "num_samples must be at least 4, got {}",
                self.num_samples
            )));
        }
        if self.array.num_elements == 0 {
            return Err(HarnessError::BadScenario("array has no elements".into()));
        }
        if self.pulse_period_samples == 0 {
            return Err(HarnessError::BadScenario("pulse period must be positive".into()));
        }
        if !(self.pulse_on_fraction > 0.0 && self.pulse_on_fraction <= 1.0) {
            return Err(HarnessError::BadScenario(format!(
                "pulse_on_fraction must lie in (0, 1], got {}",
                self.pulse_on_fraction
            )));
        }
        if !self.pulse_phase_deg.is_finite() {
            return Err(HarnessError::BadScenario("pulse_phase_deg must be finite".into()));
        }
        if !(self.diagonal_loading_factor.is_finite() && self.diagonal_loading_factor >= 0.0) {
            return Err(HarnessError::BadScenario(format!(
                "diagonal_loading_factor must be finite and nonnegative, got {}",
                self.diagonal_loading_factor
            )));
        }
        let interferers = self.interferer_azimuths();
        for &az in &interferers {
            if (az - self.desired_azimuth_deg).abs() < 5.0 {
                return Err(HarnessError::BadScenario(format!(
                    "interferer at {az} deg sits within 5 deg of the desired {} deg",
                    self.desired_azimuth_deg
                )));
            }
        }
        let snr_lin = 10f64.powf(self.snr_db / 10.0);
        let inr_lin = 10f64.powf(self.inr_db / 10.0);
        let m = interferers.len() as f64;
        if !interferers.is_empty() && snr_lin <= m * inr_lin {
            return Err(HarnessError::BadScenario(format!(
                "snr {} dB cannot support {} interferer(s) at inr {} dB",
                self.snr_db,
                interferers.len(),
                self.inr_db
            )));
        }
        Ok(())
    }
}

/// All intermediates of one scenario run, kept for inspection.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub snapshots: SnapshotMatrix,
    pub covariance: CovarianceMatrix,
    pub steering: DVector<Complex64>,
    pub weights: BeamWeights,
    pub beamformed: Vec<Complex64>,
    pub series: Series,
    pub desired_waveform: Vec<Complex64>,
}

/// Tiles the on/off pulse template across the requested length.
fn periodic_pulse(
    num_samples: usize,
    period: usize,
    on_fraction: f64,
    phase_deg: f64,
) -> Vec<Complex64> {
    let amplitude = Complex64::from_polar(1.0, phase_deg.to_radians());
    let template = rectangular_pulse(period, on_fraction, amplitude);
    (0..num_samples).map(|t| template[t % period]).collect()
}

/// Runs the full dataset pipeline: pulse, plane waves, noise, covariance,
/// distortionless weights, beamforming, and the two-channel series.
pub fn generate_dataset(cfg: &ScenarioConfig) -> Result<Dataset, HarnessError> {
    cfg.validate()?;
    let pulse = periodic_pulse(
        cfg.num_samples,
        cfg.pulse_period_samples,
        cfg.pulse_on_fraction,
        cfg.pulse_phase_deg,
    );
    let p_d = pulse.iter().map(|v| v.norm_sqr()).sum::<f64>() / pulse.len() as f64;
    let interferers = cfg.interferer_azimuths();
    let mut sources = vec![PlaneWaveSource {
        azimuth_deg: cfg.desired_azimuth_deg,
        elevation_deg: cfg.elevation_deg,
        waveform: pulse.clone(),
        kind: SourceKind::Desired,
    }];
    if !interferers.is_empty() {
        // Noise power ends up at (P_d + m P_i) / snr, so this P_i puts each
        // interferer exactly inr above the noise.
        let snr_lin = 10f64.powf(cfg.snr_db / 10.0);
        let inr_lin = 10f64.powf(cfg.inr_db / 10.0);
        let m = interferers.len() as f64;
        let p_i = p_d * inr_lin / (snr_lin - m * inr_lin);
        let scale = (p_i / 2.0).sqrt();
        for (idx, &az) in interferers.iter().enumerate() {
            let mut rng =
                ChaCha8Rng::seed_from_u64(substream(cfg.seed, &[TAG_INTERFERER, idx as u64]));
            let waveform: Vec<Complex64> = (0..cfg.num_samples)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re * scale, im * scale)
                })
                .collect();
            sources.push(PlaneWaveSource {
                azimuth_deg: az,
                elevation_deg: cfg.elevation_deg,
                waveform,
                kind: SourceKind::Interference,
            });
        }
    }
    let clean = collect_plane_waves(&cfg.array, &sources, cfg.num_samples)?;
    let noisy = add_noise(&clean, cfg.snr_db, substream(cfg.seed, &[TAG_NOISE]))?;
    let unloaded = sample_covariance(&noisy, 0.0)?;
    let average_power = unloaded.data.diagonal().iter().map(|c| c.re).sum::<f64>()
        / unloaded.data.nrows() as f64;
    let covariance = sample_covariance(&noisy, cfg.diagonal_loading_factor * average_power)?;
    let steering = steering_vector(&cfg.array, cfg.desired_azimuth_deg, cfg.elevation_deg);
    let weights = mvdr_weights(&covariance, &steering)?;
    let beamformed = beamform(&weights, &noisy)?;
    let series = channelize(&beamformed)?;
    Ok(Dataset {
        snapshots: noisy,
        covariance,
        steering,
        weights,
        beamformed,
        series,
        desired_waveform: pulse,
    })
}

/// Symmetric azimuthal range for a span code. Codes 3 and 4 intentionally
/// map to the same range, reproducing the source table verbatim.
pub fn span_code_to_range(code: i64) -> Result<(f64, f64), HarnessError> {
    const HALF_SPANS: [f64; 10] = [30.0, 45.0, 60.0, 60.0, 70.0, 80.0, 90.0, 100.0, 110.0, 120.0];
    if !(1..=10).contains(&code) {
        return Err(HarnessError::UnknownCode(code));
    }
    let half = HALF_SPANS[(code - 1) as usize];
    Ok((-half, half))
}

/// What a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    IncidentAngle,
    AzimuthSpan,
    AntennaCount,
}

impl SweepAxis {
    /// The values swept when the caller does not override them.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::IncidentAngle => (4..=10).map(|v| v as f64 * 10.0).collect(),
            SweepAxis::AzimuthSpan => (1..=10).map(f64::from).collect(),
            SweepAxis::AntennaCount => vec![4.0, 8.0, 16.0, 32.0, 64.0],
        }
    }

    fn x_label(self) -> &'static str {
        match self {
            SweepAxis::IncidentAngle => "desired azimuth (deg)",
            SweepAxis::AzimuthSpan => "azimuthal span code",
            SweepAxis::AntennaCount => "antenna elements",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::IncidentAngle => "incident",
            SweepAxis::AzimuthSpan => "span",
            SweepAxis::AntennaCount => "antennas",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "incident" => Ok(SweepAxis::IncidentAngle),
            "span" => Ok(SweepAxis::AzimuthSpan),
            "antennas" => Ok(SweepAxis::AntennaCount),
            other => Err(format!("unknown axis '{other}'")),
        }
    }
}

/// One trained forecaster family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Lstm,
    Nar,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Lstm => "lstm",
            ModelKind::Nar => "nar",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lstm" => Ok(ModelKind::Lstm),
            "nar" => Ok(ModelKind::Nar),
            other => Err(format!("unknown model '{other}'")),
        }
    }
}

/// Which forecasters a sweep trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSelection {
    Lstm,
    Nar,
    Both,
}

impl ModelSelection {
    pub fn kinds(self) -> Vec<ModelKind> {
        match self {
            ModelSelection::Lstm => vec![ModelKind::Lstm],
            ModelSelection::Nar => vec![ModelKind::Nar],
            ModelSelection::Both => vec![ModelKind::Lstm, ModelKind::Nar],
        }
    }
}

/// A sweep request: axis, points along it, forecasters, and fold count.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub model: ModelSelection,
    pub k: usize,
}

/// One fold's held-out RMSE for one model at one axis value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub axis: SweepAxis,
    pub value: f64,
    pub model: ModelKind,
    pub fold: usize,
    pub rmse: f64,
}

/// Fold statistics for one (axis value, model) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub axis: SweepAxis,
    pub value: f64,
    pub model: ModelKind,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub summaries: Vec<SweepSummary>,
}

fn validate_spec(spec: &SweepSpec) -> Result<(), HarnessError> {
    if spec.values.is_empty() {
        return Err(HarnessError::BadSweep("no axis values given".into()));
    }
    if spec.k < 2 {
        return Err(HarnessError::BadSweep(format!("k must be at least 2, got {}", spec.k)));
    }
    for (i, &v) in spec.values.iter().enumerate() {
        if !v.is_finite() {
            return Err(HarnessError::BadSweep(format!("value #{i} is not finite")));
        }
        if spec.values[..i].contains(&v) {
            return Err(HarnessError::BadSweep(format!("duplicate axis value {v}")));
        }
        match spec.axis {
            SweepAxis::IncidentAngle => {}
            SweepAxis::AzimuthSpan => {
                if v.fract() != 0.0 {
                    return Err(HarnessError::BadSweep(format!(
                        "span code {v} is not an integer"
                    )));
                }
                span_code_to_range(v as i64)?;
            }
            SweepAxis::AntennaCount => {
                if v.fract() != 0.0 || v < 1.0 {
                    return Err(HarnessError::BadSweep(format!(
                        "antenna count {v} is not a positive integer"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Scenario for one sweep cell. The span axis draws the desired azimuth
/// uniformly from the coded range, per fold, from the scenario seed, so
/// both models see the same geometry.
fn scenario_for(
    spec: &SweepSpec,
    base: &ScenarioConfig,
    value_idx: usize,
    fold: usize,
) -> Result<ScenarioConfig, HarnessError> {
    let value = spec.values[value_idx];
    let mut cfg = base.clone();
    match spec.axis {
        SweepAxis::IncidentAngle => cfg.desired_azimuth_deg = value,
        SweepAxis::AntennaCount => cfg.array.num_elements = value as usize,
        SweepAxis::AzimuthSpan => {
            let (lo, hi) = span_code_to_range(value as i64)?;
            let mut rng = ChaCha8Rng::seed_from_u64(substream(
                base.seed,
                &[TAG_SPAN_AZIMUTH, value_idx as u64, fold as u64],
            ));
            cfg.desired_azimuth_deg = lo + rng.random::<f64>() * (hi - lo);
        }
    }
    Ok(cfg)
}

fn series_values(s: &Series) -> Vec<Vec<f64>> {
    (0..s.len()).map(|t| s.at(t)).collect()
}

/// Maximal contiguous runs of (sorted) pair indices as supervised segments.
fn contiguous_segments(values: &[Vec<f64>], pairs: &[usize]) -> Vec<SupervisedWindows> {
    let mut segments = Vec::new();
    let mut run: Vec<usize> = Vec::new();
    for &t in pairs {
        if let Some(&last) = run.last() {
            if t != last + 1 {
                segments.push(run.clone());
                run.clear();
            }
        }
        run.push(t);
    }
    if !run.is_empty() {
        segments.push(run);
    }
    segments
        .into_iter()
        .map(|idx| SupervisedWindows {
            inputs: idx.iter().map(|&t| values[t].clone()).collect(),
            targets: idx.iter().map(|&t| values[t + 1].clone()).collect(),
        })
        .collect()
}

fn eval_lstm(
    values: &[Vec<f64>],
    train_pairs: &[usize],
    val_pairs: &[usize],
    cfg: &TrainConfig,
) -> Result<f64, HarnessError> {
    let segments = contiguous_segments(values, train_pairs);
    let (params, _) = lstm::train_segments(&segments, cfg)?;
    let preds = lstm::predict_updating(&params, &values[..values.len() - 1])?;
    let mut pred_rows = Vec::with_capacity(val_pairs.len());
    let mut target_rows = Vec::with_capacity(val_pairs.len());
    for &t in val_pairs {
        pred_rows.push(preds[t].clone());
        target_rows.push(values[t + 1].clone());
    }
    Ok(rmse_cells(&pred_rows, &target_rows)?)
}

fn eval_nar(
    values: &[Vec<f64>],
    train_pairs: &[usize],
    val_pairs: &[usize],
    cfg: &NarConfig,
) -> Result<f64, HarnessError> {
    let p = cfg.delays;
    let all = nar::build_windows(values, p)?;
    // Window i targets time p+i, i.e. pair index p+i-1. Only pairs in the
    // training side become training targets; lag inputs are past
    // observations and may straddle the held-out block.
    let keep: Vec<usize> = (0..all.len())
        .filter(|i| train_pairs.binary_search(&(p + i - 1)).is_ok())
        .collect();
    let train = SupervisedWindows {
        inputs: keep.iter().map(|&i| all.inputs[i].clone()).collect(),
        targets: keep.iter().map(|&i| all.targets[i].clone()).collect(),
    };
    if train.is_empty() {
        return Err(HarnessError::BadSweep("no training windows outside the fold".into()));
    }
    let (params, _) = nar::train_lm(&train, cfg)?;
    let preds = nar::nar_predict_updating(&params, values, p)?;
    let mut pred_rows = Vec::new();
    let mut target_rows = Vec::new();
    for &t in val_pairs {
        // The first p-1 pairs have no full lag window; skip them.
        if t + 1 >= p {
            pred_rows.push(preds[t + 1 - p].clone());
            target_rows.push(values[t + 1].clone());
        }
    }
    if pred_rows.is_empty() {
        return Err(HarnessError::BadSweep("fold lies entirely in the lag warmup".into()));
    }
    Ok(rmse_cells(&pred_rows, &target_rows)?)
}

/// Held-out RMSE of the requested models on one fold of one series.
///
/// Standardization statistics come from the union of the training pairs'
/// input and target times, and the scores are in those standardized units.
pub fn evaluate_fold(
    series: &Series,
    train_pairs: &[usize],
    val_pairs: &[usize],
    lstm_cfg: Option<&TrainConfig>,
    nar_cfg: Option<&NarConfig>,
) -> Result<(Option<f64>, Option<f64>), HarnessError> {
    let mut train_times: Vec<usize> = train_pairs
        .iter()
        .flat_map(|&t| [t, t + 1])
        .collect();
    train_times.sort_unstable();
    train_times.dedup();
    let stats = crate::timeseries::stats_over(series, &train_times);
    let std_series = apply_stats(series, &stats);
    let values = series_values(&std_series);
    let lstm_rmse = match lstm_cfg {
        Some(cfg) => Some(eval_lstm(&values, train_pairs, val_pairs, cfg)?),
        None => None,
    };
    let nar_rmse = match nar_cfg {
        Some(cfg) => Some(eval_nar(&values, train_pairs, val_pairs, cfg)?),
        None => None,
    };
    Ok((lstm_rmse, nar_rmse))
}

fn evaluate_cell(
    spec: &SweepSpec,
    base: &ScenarioConfig,
    lstm_cfg: &TrainConfig,
    nar_cfg: &NarConfig,
    value_idx: usize,
    fold: usize,
) -> Result<Vec<SweepRecord>, HarnessError> {
    let cfg = scenario_for(spec, base, value_idx, fold)?;
    let dataset = generate_dataset(&cfg)?;
    let num_pairs = dataset.series.len() - 1;
    let folds = kfold_partitions(
        num_pairs,
        spec.k,
        substream(base.seed, &[TAG_FOLDS, value_idx as u64]),
    )?;
    let (train_pairs, val_pairs) = &folds[fold];
    let kinds = spec.model.kinds();
    let lstm_local = kinds.contains(&ModelKind::Lstm).then(|| TrainConfig {
        seed: substream(base.seed, &[TAG_MODEL_LSTM, value_idx as u64, fold as u64]),
        ..lstm_cfg.clone()
    });
    let nar_local = kinds.contains(&ModelKind::Nar).then(|| NarConfig {
        seed: substream(base.seed, &[TAG_MODEL_NAR, value_idx as u64, fold as u64]),
        ..nar_cfg.clone()
    });
    let (lstm_rmse, nar_rmse) = evaluate_fold(
        &dataset.series,
        train_pairs,
        val_pairs,
        lstm_local.as_ref(),
        nar_local.as_ref(),
    )?;
    let value = spec.values[value_idx];
    let mut records = Vec::new();
    if let Some(rmse) = lstm_rmse {
        records.push(SweepRecord { axis: spec.axis, value, model: ModelKind::Lstm, fold, rmse });
    }
    if let Some(rmse) = nar_rmse {
        records.push(SweepRecord { axis: spec.axis, value, model: ModelKind::Nar, fold, rmse });
    }
    Ok(records)
}

fn summarize(spec: &SweepSpec, records: &[SweepRecord]) -> Vec<SweepSummary> {
    let mut summaries = Vec::new();
    for &value in &spec.values {
        for model in spec.model.kinds() {
            let rmses: Vec<f64> = records
                .iter()
                .filter(|r| r.value == value && r.model == model)
                .map(|r| r.rmse)
                .collect();
            let min = rmses.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = rmses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mean = rmses.iter().sum::<f64>() / rmses.len() as f64;
            summaries.push(SweepSummary { axis: spec.axis, value, model, min, mean, max });
        }
    }
    summaries
}

/// Runs every (axis value, fold) cell, training the requested models, and
/// returns all fold records plus per-cell statistics. Any cell failure
/// aborts the sweep with the cell named in the error.
pub fn run_sweep(
    spec: &SweepSpec,
    base: &ScenarioConfig,
    lstm_cfg: &TrainConfig,
    nar_cfg: &NarConfig,
    mode: ExecMode,
) -> Result<SweepResult, HarnessError> {
    validate_spec(spec)?;
    base.validate()?;
    let mut jobs = Vec::with_capacity(spec.values.len() * spec.k);
    for value_idx in 0..spec.values.len() {
        for fold in 0..spec.k {
            jobs.push((value_idx, fold));
        }
    }
    let outcomes = map_jobs(mode, jobs, |(value_idx, fold)| {
        evaluate_cell(spec, base, lstm_cfg, nar_cfg, value_idx, fold).map_err(|e| {
            HarnessError::Cell {
                axis: spec.axis,
                value: spec.values[value_idx],
                fold,
                source: Box::new(e),
            }
        })
    });
    let mut records = Vec::new();
    for outcome in outcomes {
        records.extend(outcome?);
    }
    let summaries = summarize(spec, &records);
    Ok(SweepResult { records, summaries })
}

/// Writes `records.csv`, `summary.csv`, and one mean-RMSE plot per axis
/// with the fold min/max as a band. Returns the written paths.
pub fn write_results(result: &SweepResult, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(out_dir)?;
    let mut manifest = Vec::new();

    let records_path = out_dir.join("records.csv");
    let mut records = String::from("axis,value,model,fold,rmse\n");
    for r in &result.records {
        records.push_str(&format!(
            "{},{},{},{},{:.17e}\n",
            r.axis, r.value, r.model, r.fold, r.rmse
        ));
    }
    fs::write(&records_path, records)?;
    manifest.push(records_path);

    let summary_path = out_dir.join("summary.csv");
    let mut summary = String::from("axis,value,model,min,mean,max\n");
    for s in &result.summaries {
        summary.push_str(&format!(
            "{},{},{},{:.17e},{:.17e},{:.17e}\n",
            s.axis, s.value, s.model, s.min, s.mean, s.max
        ));
    }
    fs::write(&summary_path, summary)?;
    manifest.push(summary_path);

    for axis in [SweepAxis::IncidentAngle, SweepAxis::AzimuthSpan, SweepAxis::AntennaCount] {
        let on_axis: Vec<&SweepSummary> =
            result.summaries.iter().filter(|s| s.axis == axis).collect();
        if on_axis.is_empty() {
            continue;
        }
        let mut series = Vec::new();
        for model in [ModelKind::Lstm, ModelKind::Nar] {
            let rows: Vec<&&SweepSummary> =
                on_axis.iter().filter(|s| s.model == model).collect();
            if rows.is_empty() {
                continue;
            }
            series.push(LineSeries {
                label: model.to_string(),
                points: rows.iter().map(|s| (s.value, s.mean)).collect(),
                band: rows.iter().map(|s| (s.value, s.min, s.max)).collect(),
            });
        }
        let svg = line_chart(
            &format!("Held-out RMSE vs {}", axis.x_label()),
            axis.x_label(),
            "RMSE (standardized)",
            &series,
        )?;
        let path = out_dir.join(format!("rmse_{axis}.svg"));
        write_svg(&path, &svg)?;
        manifest.push(path);
    }
    Ok(manifest)
}

/// Reads a summary file written by [`write_results`].
pub fn read_summary_csv(path: &Path) -> Result<Vec<SweepSummary>, HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| HarnessError::BadCsv("empty file".into()))?;
    if header != "axis,value,model,min,mean,max" {
        return Err(HarnessError::BadCsv(format!("unexpected header '{header}'")));
    }
    let mut summaries = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(HarnessError::BadCsv(format!(
                "line {}: expected 6 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| HarnessError::BadCsv(format!("line {}: {what}", lineno + 2));
        summaries.push(SweepSummary {
            axis: fields[0].parse().map_err(|e: String| bad(&e))?,
            value: fields[1].parse().map_err(|_| bad("bad value"))?,
            model: fields[2].parse().map_err(|e: String| bad(&e))?,
            min: fields[3].parse().map_err(|_| bad("bad min"))?,
            mean: fields[4].parse().map_err(|_| bad("bad mean"))?,
            max: fields[5].parse().map_err(|_| bad("bad max"))?,
        });
    }
    Ok(summaries)
}
