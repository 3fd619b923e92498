//! Real-valued series handling for the forecasting stage.
//!
//! Complex beamformer output becomes a two-channel (re, im) series, gets
//! standardized to zero mean and unit variance, and is windowed into
//! one-step-ahead (input, target) pairs. Test data is always transformed
//! with statistics captured on training data; the stats travel with the
//! series so that rule can be asserted rather than hoped for.

use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Channels with a sample standard deviation at or below this are treated
/// as constant and standardized with a forced std of 1, so purely real
/// basebands (identically zero imaginary channel) stay usable.
pub const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("series needs at least {min} samples, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("empty input")]
    Empty,
    #[error("split leaves a side with fewer than 2 samples")]
    DegenerateSplit,
    #[error("k must satisfy 2 <= k <= T, got k={k} for T={t}")]
    InvalidK { k: usize, t: usize },
    #[error("malformed series CSV: {0}")]
    BadCsv(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Per-channel standardization statistics (population mean and std).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// C x T real series with optional standardization metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// channels[c][t]; all channels share one length.
    pub channels: Vec<Vec<f64>>,
    /// Stats the series was standardized with (None before standardization).
    pub stats: Option<ChannelStats>,
    pub standardized: bool,
}

impl Series {
    pub fn new(channels: Vec<Vec<f64>>) -> Result<Self, SeriesError> {
        if channels.is_empty() || channels[0].is_empty() {
            return Err(SeriesError::Empty);
        }
        let t = channels[0].len();
        for ch in &channels {
            if ch.len() != t {
                return Err(SeriesError::LengthMismatch { a: t, b: ch.len() });
            }
        }
        Ok(Self {
            channels,
            stats: None,
            standardized: false,
        })
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels[0].is_empty()
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Values of every channel at one time step.
    pub fn at(&self, t: usize) -> Vec<f64> {
        self.channels.iter().map(|ch| ch[t]).collect()
    }

    /// Writes the series as CSV with columns `t,ch0,ch1,...`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        write!(out, "t")?;
        for c in 0..self.num_channels() {
            write!(out, ",ch{c}")?;
        }
        writeln!(out)?;
        for t in 0..self.len() {
            write!(out, "{t}")?;
            for ch in &self.channels {
                write!(out, ",{:.17e}", ch[t])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Reads a series written by [`Series::write_csv`].
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, SeriesError> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| SeriesError::BadCsv("missing header".into()))??;
        let cols = header.split(',').count();
        if cols < 2 || !header.starts_with("t,") {
            return Err(SeriesError::BadCsv(format!("unexpected header `{header}`")));
        }
        let mut channels: Vec<Vec<f64>> = vec![Vec::new(); cols - 1];
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Err(SeriesError::BadCsv(format!("ragged row `{line}`")));
            }
            for (c, f) in fields[1..].iter().enumerate() {
                let v: f64 = f
                    .parse()
                    .map_err(|_| SeriesError::BadCsv(format!("bad float `{f}`")))?;
                channels[c].push(v);
            }
        }
        Series::new(channels)
    }
}

/// One-step-ahead supervised pairs: targets[t] is the series at time t+1.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedWindows {
    /// inputs[t][c] = series channel c at time t, for t in 0..T-1.
    pub inputs: Vec<Vec<f64>>,
    /// targets[t][c] = series channel c at time t+1.
    pub targets: Vec<Vec<f64>>,
}

impl SupervisedWindows {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn num_channels(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    /// The contiguous slice of pairs [start, end).
    pub fn slice(&self, start: usize, end: usize) -> SupervisedWindows {
        SupervisedWindows {
            inputs: self.inputs[start..end].to_vec(),
            targets: self.targets[start..end].to_vec(),
        }
    }
}

/// Splits a complex signal into (re, im) channels.
pub fn channelize(signal: &[Complex64]) -> Result<Series, SeriesError> {
    if signal.len() < 2 {
        return Err(SeriesError::TooShort { min: 2, got: signal.len() });
    }
    Series::new(vec![
        signal.iter().map(|v| v.re).collect(),
        signal.iter().map(|v| v.im).collect(),
    ])
}

/// Rebuilds the complex signal from a two-channel series.
pub fn recombine(s: &Series) -> Result<Vec<Complex64>, SeriesError> {
    if s.num_channels() != 2 {
        return Err(SeriesError::LengthMismatch { a: 2, b: s.num_channels() });
    }
    Ok((0..s.len())
        .map(|t| Complex64::new(s.channels[0][t], s.channels[1][t]))
        .collect())
}

/// Population mean and std per channel; a std at or below
/// [`DEGENERATE_STD`] is forced to 1 so constant channels pass through.
pub fn compute_stats(s: &Series) -> ChannelStats {
    stats_over(s, &(0..s.len()).collect::<Vec<_>>())
}

/// Statistics over a subset of time indices, same degenerate-channel rule.
pub fn stats_over(s: &Series, times: &[usize]) -> ChannelStats {
    let n = times.len().max(1) as f64;
    let mut mean = Vec::with_capacity(s.num_channels());
    let mut std = Vec::with_capacity(s.num_channels());
    for ch in &s.channels {
        let m = times.iter().map(|&t| ch[t]).sum::<f64>() / n;
        let var = times.iter().map(|&t| (ch[t] - m).powi(2)).sum::<f64>() / n;
        let mut sd = var.sqrt();
        if sd <= DEGENERATE_STD {
            sd = 1.0;
        }
        mean.push(m);
        std.push(sd);
    }
    ChannelStats { mean, std }
}

/// Standardizes each channel to zero mean and unit variance using the
/// series' own statistics. The stats are stored for later inversion and for
/// transforming held-out data with [`apply_stats`].
pub fn standardize(s: &Series) -> Series {
    apply_stats(s, &compute_stats(s))
}

/// Transforms a series with externally supplied (train-side) statistics.
pub fn apply_stats(s: &Series, stats: &ChannelStats) -> Series {
    let channels = s
        .channels
        .iter()
        .enumerate()
        .map(|(c, ch)| ch.iter().map(|&v| (v - stats.mean[c]) / stats.std[c]).collect())
        .collect();
    Series {
        channels,
        stats: Some(stats.clone()),
        standardized: true,
    }
}

/// Inverts [`standardize`] using the stats stored on the series.
pub fn destandardize(s: &Series) -> Series {
    let Some(stats) = &s.stats else {
        return s.clone();
    };
    let channels = s
        .channels
        .iter()
        .enumerate()
        .map(|(c, ch)| ch.iter().map(|&v| v * stats.std[c] + stats.mean[c]).collect())
        .collect();
    Series {
        channels,
        stats: None,
        standardized: false,
    }
}

/// Chronological split: first floor(fraction * T) steps train, rest test.
pub fn split_train_test(s: &Series, train_fraction: f64) -> Result<(Series, Series), SeriesError> {
    let t = s.len();
    let cut = (train_fraction * t as f64).floor() as usize;
    if cut < 2 || t - cut < 2 {
        return Err(SeriesError::DegenerateSplit);
    }
    let part = |range: std::ops::Range<usize>| Series {
        channels: s.channels.iter().map(|ch| ch[range.clone()].to_vec()).collect(),
        stats: s.stats.clone(),
        standardized: s.standardized,
    };
    Ok((part(0..cut), part(cut..t)))
}

/// Builds the one-step-shifted supervised pairs (T-1 of them).
pub fn make_supervised(s: &Series) -> Result<SupervisedWindows, SeriesError> {
    let t = s.len();
    if t < 2 {
        return Err(SeriesError::TooShort { min: 2, got: t });
    }
    let mut inputs = Vec::with_capacity(t - 1);
    let mut targets = Vec::with_capacity(t - 1);
    for i in 0..t - 1 {
        inputs.push(s.at(i));
        targets.push(s.at(i + 1));
    }
    Ok(SupervisedWindows { inputs, targets })
}

/// Root mean square error over two equal-length sequences.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64, SeriesError> {
    if predicted.len() != actual.len() {
        return Err(SeriesError::LengthMismatch { a: predicted.len(), b: actual.len() });
    }
    if predicted.is_empty() {
        return Err(SeriesError::Empty);
    }
    let acc: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a).powi(2))
        .sum();
    Ok((acc / predicted.len() as f64).sqrt())
}

/// RMSE across per-step channel vectors: the mean runs over every
/// channel-time cell.
pub fn rmse_cells(predicted: &[Vec<f64>], actual: &[Vec<f64>]) -> Result<f64, SeriesError> {
    if predicted.len() != actual.len() {
        return Err(SeriesError::LengthMismatch { a: predicted.len(), b: actual.len() });
    }
    let mut acc = 0.0;
    let mut count = 0usize;
    for (p, a) in predicted.iter().zip(actual) {
        if p.len() != a.len() {
            return Err(SeriesError::LengthMismatch { a: p.len(), b: a.len() });
        }
        for (x, y) in p.iter().zip(a) {
            acc += (x - y).powi(2);
            count += 1;
        }
    }
    if count == 0 {
        return Err(SeriesError::Empty);
    }
    Ok((acc / count as f64).sqrt())
}

/// Contiguous-block k-fold partitions of the index range 0..t.
///
/// Validation blocks tile the range in time order and differ in size by at
/// most one; the seed only shuffles the order in which folds are returned,
/// never their membership, so there is no leakage across the time axis.
pub fn kfold_partitions(
    t: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>, SeriesError> {
    if k < 2 || t < k {
        return Err(SeriesError::InvalidK { k, t });
    }
    let base = t / k;
    let extra = t % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0usize;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let val: Vec<usize> = (start..start + size).collect();
        let train: Vec<usize> = (0..t).filter(|i| *i < start || *i >= start + size).collect();
        folds.push((train, val));
        start += size;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    folds.shuffle(&mut rng);
    Ok(folds)
}
