//! Simulation and one-step-ahead forecasting of beamformed uniform-linear-array signals.
//!
//! The crate is organized as a pipeline:
//!
//! * [`array`] synthesizes received snapshots for a ULA: steering vectors,
//!   rectangular-pulse basebands, plane-wave superposition, additive noise.
//! * [`beamformer`] estimates covariance matrices and computes Bartlett and
//!   MVDR weights, beamformed outputs, SINR, and beampatterns.
//! * [`timeseries`] converts complex beamformer output into standardized
//!   real-valued supervised sequences and provides RMSE and k-fold splits.
//! * [`lstm`] is a from-scratch LSTM regressor trained by full-sequence BPTT.
//! * [`nar`] is a tapped-delay-line feedforward regressor trained by
//!   Levenberg-Marquardt with an analytic Jacobian.
//! * [`harness`] drives end-to-end experiments: dataset generation, k-fold
//!   sweeps over incident angle, azimuth span, and antenna count, and result
//!   files (CSV tables plus SVG charts).
//!
//! Every random choice flows through an explicit integer seed; there is no
//! global RNG, so identical configurations reproduce identical outputs down
//! to the byte. With the default `parallel` feature, sweep cells run on a
//! rayon pool; disabling the feature yields an otherwise identical
//! sequential build.

pub mod array;
pub mod beamformer;
pub mod config;
pub mod exec;
pub mod harness;
pub mod lstm;
pub mod nar;
pub mod plot;
pub mod seeds;
pub mod timeseries;
