//! From-scratch LSTM sequence regressor.
//!
//! One LSTM layer plus a dense head, trained by full-sequence
//! backpropagation through time with exact gradients and an
//! adaptive-moment update. The network predicts the next sample of a
//! C-channel series from the current one; prediction can roll
//! teacher-forced (state advanced with observed values) or free-running
//! (state advanced with its own predictions).

use std::io::{self, Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds::substream;
use crate::timeseries::SupervisedWindows;

#[derive(Debug, Error)]
pub enum LstmError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("backprop cache does not match the target sequence")]
    StaleCache,
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },
    #[error("empty input sequence")]
    EmptyInput,
    #[error("bad parameter file: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// All trainable tensors. Field order is the serialization order.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_xf: DMatrix<f64>,
    pub w_xi: DMatrix<f64>,
    pub w_xo: DMatrix<f64>,
    pub w_xc: DMatrix<f64>,
    pub w_hf: DMatrix<f64>,
    pub w_hi: DMatrix<f64>,
    pub w_ho: DMatrix<f64>,
    pub w_hc: DMatrix<f64>,
    pub b_f: DVector<f64>,
    pub b_i: DVector<f64>,
    pub b_o: DVector<f64>,
    pub b_c: DVector<f64>,
    pub w_out: DMatrix<f64>,
    pub b_out: DVector<f64>,
}

/// Gradients (or optimizer moments) with the same shapes as [`LstmParams`].
pub type LstmGrads = LstmParams;

/// Hidden and cell state.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: DVector<f64>,
    pub c: DVector<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: DVector::zeros(hidden),
            c: DVector::zeros(hidden),
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Global gradient-norm clip applied before the optimizer step.
    pub grad_clip: f64,
    /// Probability of dropping a hidden unit on the dense-head input during
    /// training (inverted dropout). Recurrent connections are never dropped.
    pub dropout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_size: 64,
            learning_rate: 1e-3,
            epochs: 200,
            seed: 0,
            grad_clip: 1.0,
            dropout: 0.0,
        }
    }
}

impl LstmParams {
    pub fn hidden_size(&self) -> usize {
        self.w_hf.nrows()
    }

    pub fn input_size(&self) -> usize {
        self.w_xf.ncols()
    }

    /// Zero-filled tensors with the given dimensions.
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_xf: DMatrix::zeros(hidden, input),
            w_xi: DMatrix::zeros(hidden, input),
            w_xo: DMatrix::zeros(hidden, input),
            w_xc: DMatrix::zeros(hidden, input),
            w_hf: DMatrix::zeros(hidden, hidden),
            w_hi: DMatrix::zeros(hidden, hidden),
            w_ho: DMatrix::zeros(hidden, hidden),
            w_hc: DMatrix::zeros(hidden, hidden),
            b_f: DVector::zeros(hidden),
            b_i: DVector::zeros(hidden),
            b_o: DVector::zeros(hidden),
            b_c: DVector::zeros(hidden),
            w_out: DMatrix::zeros(input, hidden),
            b_out: DVector::zeros(input),
        }
    }

    /// Seeded initialization: matrices uniform in (-1/sqrt(H), 1/sqrt(H)),
    /// forget-gate bias +1 against early saturation, other biases zero.
    pub fn init(input: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut p = Self::zeros(input, hidden);
        for m in [
            &mut p.w_xf, &mut p.w_xi, &mut p.w_xo, &mut p.w_xc,
            &mut p.w_hf, &mut p.w_hi, &mut p.w_ho, &mut p.w_hc,
            &mut p.w_out,
        ] {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    m[(i, j)] = rng.random_range(-bound..bound);
                }
            }
        }
        p.b_f.fill(1.0);
        p
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w_xf.as_mut_slice(),
            self.w_xi.as_mut_slice(),
            self.w_xo.as_mut_slice(),
            self.w_xc.as_mut_slice(),
            self.w_hf.as_mut_slice(),
            self.w_hi.as_mut_slice(),
            self.w_ho.as_mut_slice(),
            self.w_hc.as_mut_slice(),
            self.b_f.as_mut_slice(),
            self.b_i.as_mut_slice(),
            self.b_o.as_mut_slice(),
            self.b_c.as_mut_slice(),
            self.w_out.as_mut_slice(),
            self.b_out.as_mut_slice(),
        ]
    }

    fn slices(&self) -> Vec<&[f64]> {
        vec![
            self.w_xf.as_slice(),
            self.w_xi.as_slice(),
            self.w_xo.as_slice(),
            self.w_xc.as_slice(),
            self.w_hf.as_slice(),
            self.w_hi.as_slice(),
            self.w_ho.as_slice(),
            self.w_hc.as_slice(),
            self.b_f.as_slice(),
            self.b_i.as_slice(),
            self.b_o.as_slice(),
            self.b_c.as_slice(),
            self.w_out.as_slice(),
            self.b_out.as_slice(),
        ]
    }

    /// Writes `LSTM1`, C and H as little-endian u32, then every tensor in
    /// field order as little-endian f64, row-major within each tensor.
    pub fn save<W: Write>(&self, out: &mut W) -> io::Result<()> {
        out.write_all(b"LSTM1")?;
        out.write_all(&(self.input_size() as u32).to_le_bytes())?;
        out.write_all(&(self.hidden_size() as u32).to_le_bytes())?;
        let mats = [
            &self.w_xf, &self.w_xi, &self.w_xo, &self.w_xc,
            &self.w_hf, &self.w_hi, &self.w_ho, &self.w_hc,
        ];
        for m in mats {
            write_matrix(out, m)?;
        }
        for b in [&self.b_f, &self.b_i, &self.b_o, &self.b_c] {
            write_vector(out, b)?;
        }
        write_matrix(out, &self.w_out)?;
        write_vector(out, &self.b_out)?;
        Ok(())
    }

    /// Reads a file produced by [`LstmParams::save`].
    pub fn load<R: Read>(input: &mut R) -> Result<Self, LstmError> {
        let mut magic = [0u8; 5];
        input.read_exact(&mut magic)?;
        if &magic != b"LSTM1" {
            return Err(LstmError::BadFormat("wrong magic bytes".into()));
        }
        let c = read_u32(input)? as usize;
        let h = read_u32(input)? as usize;
        if c == 0 || h == 0 {
            return Err(LstmError::BadFormat("zero dimension in header".into()));
        }
        let mut p = Self::zeros(c, h);
        {
            let mats = [
                &mut p.w_xf, &mut p.w_xi, &mut p.w_xo, &mut p.w_xc,
                &mut p.w_hf, &mut p.w_hi, &mut p.w_ho, &mut p.w_hc,
            ];
            for m in mats {
                read_matrix(input, m)?;
            }
        }
        for b in [&mut p.b_f, &mut p.b_i, &mut p.b_o, &mut p.b_c] {
            read_vector(input, b)?;
        }
        read_matrix(input, &mut p.w_out)?;
        read_vector(input, &mut p.b_out)?;
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(LstmError::BadFormat("trailing bytes after tensors".into()));
        }
        Ok(p)
    }
}

fn write_matrix<W: Write>(out: &mut W, m: &DMatrix<f64>) -> io::Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

fn write_vector<W: Write>(out: &mut W, v: &DVector<f64>) -> io::Result<()> {
    for x in v.iter() {
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32, LstmError> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64, LstmError> {
    let mut buf = [0u8; 8];
    input
        .read_exact(&mut buf)
        .map_err(|_| LstmError::BadFormat("file truncated".into()))?;
    Ok(f64::from_le_bytes(buf))
}

fn read_matrix<R: Read>(input: &mut R, m: &mut DMatrix<f64>) -> Result<(), LstmError> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m[(i, j)] = read_f64(input)?;
        }
    }
    Ok(())
}

fn read_vector<R: Read>(input: &mut R, v: &mut DVector<f64>) -> Result<(), LstmError> {
    for i in 0..v.len() {
        v[i] = read_f64(input)?;
    }
    Ok(())
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Intermediate values of one unrolled step, kept for backpropagation.
#[derive(Debug, Clone)]
struct StepCache {
    x: DVector<f64>,
    h_prev: DVector<f64>,
    c_prev: DVector<f64>,
    f: DVector<f64>,
    i: DVector<f64>,
    o: DVector<f64>,
    ctilde: DVector<f64>,
    c: DVector<f64>,
    tanh_c: DVector<f64>,
    h: DVector<f64>,
    /// Inverted-dropout scaling on the dense-head input (all ones when
    /// dropout is off).
    mask: DVector<f64>,
}

/// Everything backward needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    steps: Vec<StepCache>,
    preds: Vec<DVector<f64>>,
}

impl ForwardCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn check_input(p: &LstmParams, x: &[f64]) -> Result<(), LstmError> {
    if x.len() != p.input_size() {
        return Err(LstmError::ShapeMismatch {
            expected: p.input_size(),
            got: x.len(),
        });
    }
    Ok(())
}

fn gate_preactivations(
    p: &LstmParams,
    x: &DVector<f64>,
    h_prev: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
    (
        &p.w_xf * x + &p.w_hf * h_prev + &p.b_f,
        &p.w_xi * x + &p.w_hi * h_prev + &p.b_i,
        &p.w_xo * x + &p.w_ho * h_prev + &p.b_o,
        &p.w_xc * x + &p.w_hc * h_prev + &p.b_c,
    )
}

fn step_full(p: &LstmParams, x: DVector<f64>, prev: &LstmState, mask: DVector<f64>) -> StepCache {
    let (zf, zi, zo, zc) = gate_preactivations(p, &x, &prev.h);
    let f = zf.map(sigmoid);
    let i = zi.map(sigmoid);
    let o = zo.map(sigmoid);
    let ctilde = zc.map(f64::tanh);
    let c = f.component_mul(&prev.c) + i.component_mul(&ctilde);
    let tanh_c = c.map(f64::tanh);
    let h = o.component_mul(&tanh_c);
    StepCache {
        x,
        h_prev: prev.h.clone(),
        c_prev: prev.c.clone(),
        f,
        i,
        o,
        ctilde,
        c,
        tanh_c,
        h,
        mask,
    }
}

/// One cell update: gates through sigmoid, candidate through tanh,
/// c_t = f*c_{t-1} + i*c~, h_t = o*tanh(c_t).
pub fn cell_step(p: &LstmParams, x_t: &[f64], prev: &LstmState) -> Result<LstmState, LstmError> {
    check_input(p, x_t)?;
    if prev.h.len() != p.hidden_size() {
        return Err(LstmError::ShapeMismatch {
            expected: p.hidden_size(),
            got: prev.h.len(),
        });
    }
    let cache = step_full(
        p,
        DVector::from_column_slice(x_t),
        prev,
        DVector::from_element(p.hidden_size(), 1.0),
    );
    Ok(LstmState { h: cache.h, c: cache.c })
}

fn forward_with_mask(
    p: &LstmParams,
    inputs: &[Vec<f64>],
    initial: &LstmState,
    mut mask_for: impl FnMut(usize) -> DVector<f64>,
) -> Result<(Vec<Vec<f64>>, LstmState, ForwardCache), LstmError> {
    if inputs.is_empty() {
        return Err(LstmError::EmptyInput);
    }
    let mut state = initial.clone();
    let mut steps = Vec::with_capacity(inputs.len());
    let mut preds = Vec::with_capacity(inputs.len());
    let mut outputs = Vec::with_capacity(inputs.len());
    for (t, x) in inputs.iter().enumerate() {
        check_input(p, x)?;
        let cache = step_full(p, DVector::from_column_slice(x), &state, mask_for(t));
        state = LstmState { h: cache.h.clone(), c: cache.c.clone() };
        let pred = &p.w_out * cache.h.component_mul(&cache.mask) + &p.b_out;
        outputs.push(pred.iter().cloned().collect());
        preds.push(pred);
        steps.push(cache);
    }
    Ok((outputs, state, ForwardCache { steps, preds }))
}

/// Runs the sequence through the cell and dense head, threading state.
///
/// Returns per-step predictions, the final state, and the cache that
/// [`backward`] consumes.
pub fn forward(
    p: &LstmParams,
    inputs: &[Vec<f64>],
    initial: &LstmState,
) -> Result<(Vec<Vec<f64>>, LstmState, ForwardCache), LstmError> {
    let ones = DVector::from_element(p.hidden_size(), 1.0);
    forward_with_mask(p, inputs, initial, |_| ones.clone())
}

/// Mean squared loss of the cached predictions against the targets:
/// mean over every channel-time cell.
pub fn cache_loss(cache: &ForwardCache, targets: &[Vec<f64>]) -> Result<f64, LstmError> {
    if targets.len() != cache.preds.len() {
        return Err(LstmError::StaleCache);
    }
    let c = cache.preds[0].len();
    let mut acc = 0.0;
    for (pred, targ) in cache.preds.iter().zip(targets) {
        if targ.len() != c {
            return Err(LstmError::StaleCache);
        }
        for (p, t) in pred.iter().zip(targ) {
            acc += (p - t).powi(2);
        }
    }
    Ok(acc / (targets.len() * c) as f64)
}

/// Convenience wrapper: forward pass plus [`cache_loss`].
pub fn sequence_loss(
    p: &LstmParams,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<f64, LstmError> {
    let (_, _, cache) = forward(p, inputs, &LstmState::zeros(p.hidden_size()))?;
    cache_loss(&cache, targets)
}

/// Exact BPTT gradients of the mean squared loss (mean over all
/// channel-time cells) with respect to every parameter.
pub fn backward(
    p: &LstmParams,
    cache: &ForwardCache,
    targets: &[Vec<f64>],
) -> Result<LstmGrads, LstmError> {
    if cache.steps.is_empty() || targets.len() != cache.steps.len() {
        return Err(LstmError::StaleCache);
    }
    let c_dim = p.input_size();
    let h_dim = p.hidden_size();
    for t in targets {
        if t.len() != c_dim {
            return Err(LstmError::StaleCache);
        }
    }
    let denom = (targets.len() * c_dim) as f64;
    let mut g = LstmGrads::zeros(c_dim, h_dim);
    let mut dh_next = DVector::zeros(h_dim);
    let mut dc_next = DVector::zeros(h_dim);
    for (t, step) in cache.steps.iter().enumerate().rev() {
        let target = DVector::from_column_slice(&targets[t]);
        let dpred = (&cache.preds[t] - target) * (2.0 / denom);
        let h_masked = step.h.component_mul(&step.mask);
        g.w_out.ger(1.0, &dpred, &h_masked, 1.0);
        g.b_out += &dpred;
        let dh = (p.w_out.tr_mul(&dpred)).component_mul(&step.mask) + &dh_next;
        let d_o = dh.component_mul(&step.tanh_c);
        let dc = dh.component_mul(&step.o).component_mul(
            &step.tanh_c.map(|v| 1.0 - v * v),
        ) + &dc_next;
        let df = dc.component_mul(&step.c_prev);
        let di = dc.component_mul(&step.ctilde);
        let dct = dc.component_mul(&step.i);
        let dzf = df.component_mul(&step.f.map(|v| v * (1.0 - v)));
        let dzi = di.component_mul(&step.i.map(|v| v * (1.0 - v)));
        let dzo = d_o.component_mul(&step.o.map(|v| v * (1.0 - v)));
        let dzc = dct.component_mul(&step.ctilde.map(|v| 1.0 - v * v));
        g.w_xf.ger(1.0, &dzf, &step.x, 1.0);
        g.w_xi.ger(1.0, &dzi, &step.x, 1.0);
        g.w_xo.ger(1.0, &dzo, &step.x, 1.0);
        g.w_xc.ger(1.0, &dzc, &step.x, 1.0);
        g.w_hf.ger(1.0, &dzf, &step.h_prev, 1.0);
        g.w_hi.ger(1.0, &dzi, &step.h_prev, 1.0);
        g.w_ho.ger(1.0, &dzo, &step.h_prev, 1.0);
        g.w_hc.ger(1.0, &dzc, &step.h_prev, 1.0);
        g.b_f += &dzf;
        g.b_i += &dzi;
        g.b_o += &dzo;
        g.b_c += &dzc;
        dh_next = p.w_hf.tr_mul(&dzf)
            + p.w_hi.tr_mul(&dzi)
            + p.w_ho.tr_mul(&dzo)
            + p.w_hc.tr_mul(&dzc);
        dc_next = dc.component_mul(&step.f);
    }
    Ok(g)
}

fn accumulate_scaled(acc: &mut LstmGrads, g: &LstmGrads, scale: f64) {
    for (a, b) in acc.slices_mut().into_iter().zip(g.slices()) {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y * scale;
        }
    }
}

fn grad_norm(g: &LstmGrads) -> f64 {
    g.slices()
        .into_iter()
        .flat_map(|s| s.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Adaptive-moment optimizer state.
struct Adam {
    m: LstmGrads,
    v: LstmGrads,
    t: usize,
}

impl Adam {
    fn new(c: usize, h: usize) -> Self {
        Self {
            m: LstmGrads::zeros(c, h),
            v: LstmGrads::zeros(c, h),
            t: 0,
        }
    }

    fn update(&mut self, params: &mut LstmParams, grads: &LstmGrads, lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let bc1 = 1.0 - B1.powi(self.t as i32);
        let bc2 = 1.0 - B2.powi(self.t as i32);
        let mut p_slices = params.slices_mut();
        let mut m_slices = self.m.slices_mut();
        let mut v_slices = self.v.slices_mut();
        let g_slices = grads.slices();
        for k in 0..g_slices.len() {
            let p = &mut p_slices[k];
            let m = &mut m_slices[k];
            let v = &mut v_slices[k];
            let g = g_slices[k];
            for idx in 0..g.len() {
                m[idx] = B1 * m[idx] + (1.0 - B1) * g[idx];
                v[idx] = B2 * v[idx] + (1.0 - B2) * g[idx] * g[idx];
                let mhat = m[idx] / bc1;
                let vhat = v[idx] / bc2;
                p[idx] -= lr * mhat / (vhat.sqrt() + EPS);
            }
        }
    }
}

/// Mean loss and its gradients over a batch of independent segments.
///
/// Each segment is a contiguous supervised sequence; state resets between
/// segments, and the loss is the mean over every channel-time cell across
/// all of them. With dropout active, per-segment masks come from the given
/// seed.
pub fn segment_gradients(
    p: &LstmParams,
    segments: &[SupervisedWindows],
    dropout: f64,
    mask_seed: u64,
) -> Result<(f64, LstmGrads), LstmError> {
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(LstmError::EmptyInput);
    }
    let c = p.input_size();
    let h = p.hidden_size();
    let total_cells: usize = segments.iter().map(|s| s.len() * c).sum();
    let mut grads = LstmGrads::zeros(c, h);
    let mut sse = 0.0;
    for (si, seg) in segments.iter().enumerate() {
        let zero = LstmState::zeros(h);
        let (_, _, cache) = if dropout > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(substream(mask_seed, &[si as u64]));
            let keep = 1.0 - dropout;
            forward_with_mask(p, &seg.inputs, &zero, |_| {
                DVector::from_fn(h, |_, _| {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
            })?
        } else {
            forward(p, &seg.inputs, &zero)?
        };
        let seg_cells = (seg.len() * c) as f64;
        sse += cache_loss(&cache, &seg.targets)? * seg_cells;
        let g = backward(p, &cache, &seg.targets)?;
        accumulate_scaled(&mut grads, &g, seg_cells / total_cells as f64);
    }
    Ok((sse / total_cells as f64, grads))
}

/// Trains on one contiguous sequence of supervised pairs.
pub fn train(
    windows: &SupervisedWindows,
    cfg: &TrainConfig,
) -> Result<(LstmParams, Vec<f64>), LstmError> {
    train_segments(std::slice::from_ref(windows), cfg)
}

/// Trains on a batch of contiguous segments (the k-fold harness hands the
/// train side of a fold over as one or two segments around the held-out
/// block). Returns the trained parameters and the per-epoch loss curve.
pub fn train_segments(
    segments: &[SupervisedWindows],
    cfg: &TrainConfig,
) -> Result<(LstmParams, Vec<f64>), LstmError> {
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(LstmError::EmptyInput);
    }
    let c = segments[0].num_channels();
    let mut params = LstmParams::init(c, cfg.hidden_size, cfg.seed);
    let mut adam = Adam::new(c, cfg.hidden_size);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mask_seed = substream(cfg.seed, &[0xd0, epoch as u64]);
        let (loss, mut grads) = segment_gradients(&params, segments, cfg.dropout, mask_seed)?;
        if !loss.is_finite() {
            return Err(LstmError::Divergence { epoch, loss });
        }
        curve.push(loss);
        let norm = grad_norm(&grads);
        if norm > cfg.grad_clip {
            let scale = cfg.grad_clip / norm;
            for s in grads.slices_mut() {
                for v in s.iter_mut() {
                    *v *= scale;
                }
            }
        }
        adam.update(&mut params, &grads, cfg.learning_rate);
    }
    Ok((params, curve))
}

/// Teacher-forced one-step-ahead prediction: the state advances on the
/// observed value at each step, and the output at step t is the forecast
/// for step t+1. Prediction count equals observation count.
pub fn predict_updating(p: &LstmParams, observed: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, LstmError> {
    let (preds, _, _) = forward(p, observed, &LstmState::zeros(p.hidden_size()))?;
    Ok(preds)
}

/// Free-running closed-loop rollout: the state is threaded through the
/// observed warmup, then each prediction is fed back as the next input.
/// Returns `horizon` predictions, the first of which is for the step right
/// after the warmup.
pub fn predict_free_running(
    p: &LstmParams,
    warmup: &[Vec<f64>],
    horizon: usize,
) -> Result<Vec<Vec<f64>>, LstmError> {
    if warmup.is_empty() {
        return Err(LstmError::EmptyInput);
    }
    let mut state = LstmState::zeros(p.hidden_size());
    let mut last = DVector::zeros(p.input_size());
    for x in warmup {
        check_input(p, x)?;
        state = cell_step(p, x, &state)?;
        last = &p.w_out * &state.h + &p.b_out;
    }
    let mut preds = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let fed: Vec<f64> = last.iter().cloned().collect();
        preds.push(fed.clone());
        state = cell_step(p, &fed, &state)?;
        last = &p.w_out * &state.h + &p.b_out;
    }
    Ok(preds)
}
