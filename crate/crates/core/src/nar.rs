//! Nonlinear autoregressive forecaster trained by Levenberg-Marquardt.
//!
//! A tapped delay line of the p most recent samples feeds a single
//! tanh hidden layer with a linear output. Training minimizes the sum of
//! squared residuals with damped Gauss-Newton steps built from an analytic
//! Jacobian; the damping factor grows on rejected steps and shrinks on
//! accepted ones.

use std::io::{self, Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeseries::SupervisedWindows;

#[derive(Debug, Error)]
pub enum NarError {
    #[error("expected {expected} lagged values, got {got}")]
    WrongLagCount { expected: usize, got: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("damped normal equations are not solvable; increase damping")]
    IllConditioned,
    #[error("training diverged at iteration {iteration} (sse {sse})")]
    Divergence { iteration: usize, sse: f64 },
    #[error("series too short: need more than {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("empty window set")]
    EmptyInput,
    #[error("bad parameter file: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NarConfig {
    /// Number of delayed samples fed to the network.
    pub delays: usize,
    pub hidden_neurons: usize,
    pub mu_init: f64,
    pub mu_increase: f64,
    pub mu_decrease: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for NarConfig {
    fn default() -> Self {
        Self {
            delays: 8,
            hidden_neurons: 10,
            mu_init: 1e-3,
            mu_increase: 10.0,
            mu_decrease: 0.1,
            max_iterations: 200,
            seed: 0,
        }
    }
}

/// Hidden-layer activation. The identity variant exists for tests that
/// exercise the linear degeneracies of the update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Activation {
    Tanh,
    #[cfg_attr(not(test), allow(dead_code))]
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output.
    fn deriv_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

/// Flat parameter vector plus the layer shapes that give it meaning.
///
/// Layout of `chi`: hidden-layer weights row by row, hidden biases,
/// output weights row by row, output biases.
#[derive(Debug, Clone, PartialEq)]
pub struct NarParams {
    pub chi: DVector<f64>,
    pub delays: usize,
    pub hidden: usize,
    pub channels: usize,
    activation: Activation,
}

impl NarParams {
    /// Total parameter count for the given shapes.
    pub fn chi_len(delays: usize, hidden: usize, channels: usize) -> usize {
        let input = delays * channels;
        hidden * input + hidden + channels * hidden + channels
    }

    pub fn zeros(delays: usize, hidden: usize, channels: usize) -> Self {
        Self {
            chi: DVector::zeros(Self::chi_len(delays, hidden, channels)),
            delays,
            hidden,
            channels,
            activation: Activation::Tanh,
        }
    }

    /// Seeded initialization, uniform in (-0.5, 0.5).
    pub fn init(delays: usize, hidden: usize, channels: usize, seed: u64) -> Self {
        let mut p = Self::zeros(delays, hidden, channels);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in p.chi.iter_mut() {
            *v = rng.random_range(-0.5..0.5);
        }
        p
    }

    fn input_width(&self) -> usize {
        self.delays * self.channels
    }

    fn w1(&self, row: usize, col: usize) -> f64 {
        self.chi[row * self.input_width() + col]
    }

    fn b1(&self, row: usize) -> f64 {
        self.chi[self.hidden * self.input_width() + row]
    }

    fn w2(&self, out: usize, hid: usize) -> f64 {
        self.chi[self.hidden * self.input_width() + self.hidden + out * self.hidden + hid]
    }

    fn b2(&self, out: usize) -> f64 {
        self.chi
            [self.hidden * self.input_width() + self.hidden + self.channels * self.hidden + out]
    }

    fn idx_w1(&self, row: usize, col: usize) -> usize {
        row * self.input_width() + col
    }

    fn idx_b1(&self, row: usize) -> usize {
        self.hidden * self.input_width() + row
    }

    fn idx_w2(&self, out: usize, hid: usize) -> usize {
        self.hidden * self.input_width() + self.hidden + out * self.hidden + hid
    }

    fn idx_b2(&self, out: usize) -> usize {
        self.hidden * self.input_width() + self.hidden + self.channels * self.hidden + out
    }

    /// Writes `NARX1`, then p, hidden and C as little-endian u32, then the
    /// flat parameter vector as little-endian f64.
    pub fn save<W: Write>(&self, out: &mut W) -> io::Result<()> {
        out.write_all(b"NARX1")?;
        for dim in [self.delays, self.hidden, self.channels] {
            out.write_all(&(dim as u32).to_le_bytes())?;
        }
        for v in self.chi.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a file produced by [`NarParams::save`].
    pub fn load<R: Read>(input: &mut R) -> Result<Self, NarError> {
        let mut magic = [0u8; 5];
        input.read_exact(&mut magic)?;
        if &magic != b"NARX1" {
            return Err(NarError::BadFormat("wrong magic bytes".into()));
        }
        let mut dims = [0usize; 3];
        for d in dims.iter_mut() {
            let mut buf = [0u8; 4];
            input.read_exact(&mut buf)?;
            *d = u32::from_le_bytes(buf) as usize;
        }
        let [delays, hidden, channels] = dims;
        if delays == 0 || hidden == 0 || channels == 0 {
            return Err(NarError::BadFormat("zero dimension in header".into()));
        }
        let mut p = Self::zeros(delays, hidden, channels);
        for i in 0..p.chi.len() {
            let mut buf = [0u8; 8];
            input
                .read_exact(&mut buf)
                .map_err(|_| NarError::BadFormat("file truncated".into()))?;
            p.chi[i] = f64::from_le_bytes(buf);
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(NarError::BadFormat("trailing bytes after parameters".into()));
        }
        Ok(p)
    }
}

/// Hidden activations and network output for one lag window.
fn eval(p: &NarParams, lags: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut hidden = Vec::with_capacity(p.hidden);
    for i in 0..p.hidden {
        let mut z = p.b1(i);
        for (j, &u) in lags.iter().enumerate() {
            z += p.w1(i, j) * u;
        }
        hidden.push(p.activation.apply(z));
    }
    let mut out = Vec::with_capacity(p.channels);
    for o in 0..p.channels {
        let mut y = p.b2(o);
        for (i, &a) in hidden.iter().enumerate() {
            y += p.w2(o, i) * a;
        }
        out.push(y);
    }
    (hidden, out)
}

/// Network output for one window of lagged values, most recent first.
pub fn nar_forward(p: &NarParams, lagged_inputs: &[f64]) -> Result<Vec<f64>, NarError> {
    if lagged_inputs.len() != p.input_width() {
        return Err(NarError::WrongLagCount {
            expected: p.input_width(),
            got: lagged_inputs.len(),
        });
    }
    Ok(eval(p, lagged_inputs).1)
}

/// Builds p-lag supervised windows from a multichannel value sequence.
///
/// The input row for target time t holds, most recent first, the channel
/// values at t-1, t-2, ..., t-p. One window per t in p..T.
pub fn build_windows(values: &[Vec<f64>], delays: usize) -> Result<SupervisedWindows, NarError> {
    if values.len() <= delays {
        return Err(NarError::TooShort { needed: delays, got: values.len() });
    }
    let c = values[0].len();
    let mut inputs = Vec::with_capacity(values.len() - delays);
    let mut targets = Vec::with_capacity(values.len() - delays);
    for t in delays..values.len() {
        let mut row = Vec::with_capacity(delays * c);
        for back in 1..=delays {
            row.extend_from_slice(&values[t - back]);
        }
        inputs.push(row);
        targets.push(values[t].clone());
    }
    Ok(SupervisedWindows { inputs, targets })
}

/// Stacked residuals e = target - output and the analytic Jacobian
/// J[m][k] = de_m/dchi_k over all windows, rows ordered window-major then
/// channel.
pub fn residuals_and_jacobian(
    p: &NarParams,
    windows: &SupervisedWindows,
) -> Result<(DVector<f64>, DMatrix<f64>), NarError> {
    if windows.is_empty() {
        return Err(NarError::EmptyInput);
    }
    let n = p.chi.len();
    let rows = windows.len() * p.channels;
    let mut e = DVector::zeros(rows);
    let mut jac = DMatrix::zeros(rows, n);
    for (m, (input, target)) in windows.inputs.iter().zip(&windows.targets).enumerate() {
        if input.len() != p.input_width() {
            return Err(NarError::ShapeMismatch {
                expected: p.input_width(),
                got: input.len(),
            });
        }
        if target.len() != p.channels {
            return Err(NarError::ShapeMismatch {
                expected: p.channels,
                got: target.len(),
            });
        }
        let (hidden, out) = eval(p, input);
        for c in 0..p.channels {
            let row = m * p.channels + c;
            e[row] = target[c] - out[c];
            // de/dchi = -dout/dchi for this row's channel.
            for i in 0..p.hidden {
                let da = p.activation.deriv_from_output(hidden[i]);
                let back = p.w2(c, i) * da;
                for (j, &u) in input.iter().enumerate() {
                    jac[(row, p.idx_w1(i, j))] = -back * u;
                }
                jac[(row, p.idx_b1(i))] = -back;
                jac[(row, p.idx_w2(c, i))] = -hidden[i];
            }
            jac[(row, p.idx_b2(c))] = -1.0;
        }
    }
    Ok((e, jac))
}

/// One damped Gauss-Newton step on a flat parameter vector:
/// chi - (J'J + mu I)^-1 J'e, solved by Cholesky with an LU fallback.
pub fn lm_step_chi(
    chi: &DVector<f64>,
    e: &DVector<f64>,
    jac: &DMatrix<f64>,
    mu: f64,
) -> Result<DVector<f64>, NarError> {
    if jac.ncols() != chi.len() || jac.nrows() != e.len() {
        return Err(NarError::ShapeMismatch {
            expected: chi.len(),
            got: jac.ncols(),
        });
    }
    let mut normal = jac.tr_mul(jac);
    for i in 0..normal.nrows() {
        normal[(i, i)] += mu;
    }
    let rhs = jac.tr_mul(e);
    let delta = match normal.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => normal
            .lu()
            .solve(&rhs)
            .ok_or(NarError::IllConditioned)?,
    };
    if delta.iter().any(|v| !v.is_finite()) {
        return Err(NarError::IllConditioned);
    }
    Ok(chi - delta)
}

/// [`lm_step_chi`] applied to network parameters.
pub fn lm_step(
    p: &NarParams,
    e: &DVector<f64>,
    jac: &DMatrix<f64>,
    mu: f64,
) -> Result<NarParams, NarError> {
    let chi = lm_step_chi(&p.chi, e, jac, mu)?;
    Ok(NarParams { chi, ..p.clone() })
}

fn sse_of(p: &NarParams, windows: &SupervisedWindows) -> Result<f64, NarError> {
    let (e, _) = residuals_and_jacobian(p, windows)?;
    Ok(e.dot(&e))
}

/// Upper damping bound: training stops once mu grows past this.
const MU_MAX: f64 = 1e10;

/// Trains by damped Gauss-Newton with step acceptance.
///
/// Each iteration proposes a step at the current damping; an SSE decrease
/// accepts it and relaxes the damping, anything else rejects it and
/// tightens. Returns the trained parameters and the SSE curve, one entry
/// for the start plus one per iteration (rejected iterations repeat the
/// previous value).
pub fn train_lm(
    windows: &SupervisedWindows,
    cfg: &NarConfig,
) -> Result<(NarParams, Vec<f64>), NarError> {
    if windows.is_empty() {
        return Err(NarError::EmptyInput);
    }
    let channels = windows.targets[0].len();
    let expected = cfg.delays * channels;
    if windows.inputs[0].len() != expected {
        return Err(NarError::ShapeMismatch {
            expected,
            got: windows.inputs[0].len(),
        });
    }
    let mut params = NarParams::init(cfg.delays, cfg.hidden_neurons, channels, cfg.seed);
    let mut mu = cfg.mu_init;
    let mut sse = sse_of(&params, windows)?;
    if !sse.is_finite() {
        return Err(NarError::Divergence { iteration: 0, sse });
    }
    let mut curve = Vec::with_capacity(cfg.max_iterations + 1);
    curve.push(sse);
    for iteration in 0..cfg.max_iterations {
        let (e, jac) = residuals_and_jacobian(&params, windows)?;
        let accepted = match lm_step(&params, &e, &jac, mu) {
            Ok(candidate) => {
                let candidate_sse = sse_of(&candidate, windows)?;
                if !candidate_sse.is_finite() {
                    return Err(NarError::Divergence { iteration, sse: candidate_sse });
                }
                if candidate_sse < sse {
                    let rel = (sse - candidate_sse) / sse;
                    params = candidate;
                    sse = candidate_sse;
                    curve.push(sse);
                    if rel < 1e-12 {
                        return Ok((params, curve));
                    }
                    true
                } else {
                    false
                }
            }
            Err(NarError::IllConditioned) => false,
            Err(other) => return Err(other),
        };
        if accepted {
            mu *= cfg.mu_decrease;
        } else {
            curve.push(sse);
            mu *= cfg.mu_increase;
            if mu > MU_MAX {
                break;
            }
        }
    }
    Ok((params, curve))
}

/// One-step-ahead prediction with observed lags: for each t >= p the
/// window of p observed values forecasts time t. Output length is T - p.
pub fn nar_predict_updating(
    p: &NarParams,
    observed: &[Vec<f64>],
    delays: usize,
) -> Result<Vec<Vec<f64>>, NarError> {
    if delays != p.delays {
        return Err(NarError::WrongLagCount { expected: p.delays, got: delays });
    }
    let windows = build_windows(observed, delays)?;
    windows.inputs.iter().map(|w| nar_forward(p, w)).collect()
}

/// Free-running closed-loop rollout: the lag buffer starts on the last p
/// warmup values and every prediction is pushed back into it.
pub fn nar_predict_free_running(
    p: &NarParams,
    warmup: &[Vec<f64>],
    horizon: usize,
) -> Result<Vec<Vec<f64>>, NarError> {
    if warmup.len() < p.delays {
        return Err(NarError::TooShort { needed: p.delays, got: warmup.len() });
    }
    let mut buffer: Vec<Vec<f64>> = warmup[warmup.len() - p.delays..].to_vec();
    let mut preds = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut lags = Vec::with_capacity(p.input_width());
        for back in buffer.iter().rev() {
            lags.extend_from_slice(back);
        }
        let y = nar_forward(p, &lags)?;
        buffer.remove(0);
        buffer.push(y.clone());
        preds.push(y);
    }
    Ok(preds)
}
