//! Covariance estimation and beamforming weights.
//!
//! The MVDR (Capon) weights minimize output power subject to unit gain
//! toward the look direction; with a rank-1 desired signal they reduce to a
//! single Hermitian solve, V = A^{-1} b / (b^H A^{-1} b). Bartlett weights
//! are the distortionless-normalized matched filter b / ||b||^2.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::array::{steering_vector, ArrayConfig, SnapshotMatrix};

#[derive(Debug, Error)]
pub enum BeamformError {
    #[error("snapshot matrix has no samples")]
    EmptyInput,
    #[error("covariance solve failed; diagonal loading too small")]
    SingularCovariance,
    #[error("steering vector has zero norm")]
    ZeroSteeringVector,
    #[error("dimension mismatch: weights {weights} vs {other}")]
    DimensionMismatch { weights: usize, other: usize },
    #[error("nonpositive output power in SINR denominator")]
    DegenerateDenominator,
}

/// N x N Hermitian covariance with the diagonal loading that was added.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    pub data: DMatrix<Complex64>,
    pub loading: f64,
}

/// Complex beamforming weight vector V; the beamformer output is V^H X(t).
#[derive(Debug, Clone)]
pub struct BeamWeights {
    pub data: DVector<Complex64>,
}

impl BeamWeights {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.len() == 0
    }

    /// Writes the weights as CSV with columns `n,re,im`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "n,re,im")?;
        for (n, v) in self.data.iter().enumerate() {
            writeln!(out, "{n},{:.17e},{:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Default diagonal loading for an estimated covariance: 1e-6 * trace / N.
pub fn default_loading(sample_cov: &DMatrix<Complex64>) -> f64 {
    let n = sample_cov.nrows();
    let trace: f64 = (0..n).map(|i| sample_cov[(i, i)].re).sum();
    1e-6 * trace / n as f64
}

/// Sample covariance (1/T) sum_t x_t x_t^H plus `diagonal_loading * I`.
pub fn sample_covariance(
    x: &SnapshotMatrix,
    diagonal_loading: f64,
) -> Result<CovarianceMatrix, BeamformError> {
    let t = x.num_snapshots();
    if t == 0 {
        return Err(BeamformError::EmptyInput);
    }
    let n = x.num_elements();
    // (X^H X)[i][j] = sum_t conj(X[t,i]) X[t,j]; the snapshot outer-product
    // sum wants the conjugate of that.
    let mut a = (x.data.adjoint() * &x.data).conjugate() / Complex64::new(t as f64, 0.0);
    // Symmetrize to keep the Hermitian invariant exact against roundoff.
    let herm = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    a = herm;
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re + diagonal_loading, 0.0);
    }
    Ok(CovarianceMatrix {
        data: a,
        loading: diagonal_loading,
    })
}

/// Solves A y = b on the loaded Hermitian covariance, Cholesky first with an
/// LU fallback for matrices that are only marginally definite.
fn solve_hermitian(
    a: &CovarianceMatrix,
    b: &DVector<Complex64>,
) -> Result<DVector<Complex64>, BeamformError> {
    if let Some(chol) = a.data.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    let lu = a.data.clone().lu();
    match lu.solve(b) {
        Some(y) if y.iter().all(|v| v.re.is_finite() && v.im.is_finite()) => Ok(y),
        _ => Err(BeamformError::SingularCovariance),
    }
}

/// MVDR weights V = A^{-1} b_s / (b_s^H A^{-1} b_s).
///
/// The distortionless constraint V^H b_s = 1 holds by construction; the
/// solve quality only affects how well interference is rejected.
pub fn mvdr_weights(
    a_in: &CovarianceMatrix,
    b_s: &DVector<Complex64>,
) -> Result<BeamWeights, BeamformError> {
    if b_s.norm_squared() <= 0.0 {
        return Err(BeamformError::ZeroSteeringVector);
    }
    if a_in.data.nrows() != b_s.len() {
        return Err(BeamformError::DimensionMismatch {
            weights: a_in.data.nrows(),
            other: b_s.len(),
        });
    }
    let y = solve_hermitian(a_in, b_s)?;
    let denom = b_s.dotc(&y);
    if !denom.re.is_finite() || !denom.im.is_finite() || denom.norm() < 1e-300 {
        return Err(BeamformError::SingularCovariance);
    }
    Ok(BeamWeights { data: y / denom })
}

/// Bartlett (matched-filter) weights V = b_s / ||b_s||^2.
pub fn bartlett_weights(b_s: &DVector<Complex64>) -> Result<BeamWeights, BeamformError> {
    let norm2 = b_s.norm_squared();
    if norm2 <= 0.0 {
        return Err(BeamformError::ZeroSteeringVector);
    }
    Ok(BeamWeights {
        data: b_s / Complex64::new(norm2, 0.0),
    })
}

/// Beamformer output R[t] = V^H X(t) = sum_n conj(V[n]) X[t][n].
pub fn beamform(v: &BeamWeights, x: &SnapshotMatrix) -> Result<Vec<Complex64>, BeamformError> {
    if v.len() != x.num_elements() {
        return Err(BeamformError::DimensionMismatch {
            weights: v.len(),
            other: x.num_elements(),
        });
    }
    Ok((0..x.num_snapshots())
        .map(|t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..v.len() {
                acc += v.data[n].conj() * x.data[(t, n)];
            }
            acc
        })
        .collect())
}

/// Output SINR in dB: 10 log10( sigma_s^2 |V^H b_s|^2 / (V^H A_in V) ).
pub fn sinr(
    v: &BeamWeights,
    sigma_s2: f64,
    b_s: &DVector<Complex64>,
    a_in: &CovarianceMatrix,
) -> Result<f64, BeamformError> {
    if v.len() != b_s.len() || v.len() != a_in.data.nrows() {
        return Err(BeamformError::DimensionMismatch {
            weights: v.len(),
            other: b_s.len(),
        });
    }
    let signal = sigma_s2 * v.data.dotc(b_s).norm_sqr();
    let denom = v.data.dotc(&(&a_in.data * &v.data)).re;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(BeamformError::DegenerateDenominator);
    }
    Ok(10.0 * (signal / denom).log10())
}

/// Beampattern over an azimuth grid, in dB normalized so the peak is 0 dB.
pub fn beampattern(v: &BeamWeights, cfg: &ArrayConfig, azimuth_grid_deg: &[f64]) -> Vec<f64> {
    let mut gains: Vec<f64> = azimuth_grid_deg
        .iter()
        .map(|&az| {
            let a = steering_vector(cfg, az, 0.0);
            let mag = v.data.dotc(&a).norm().max(1e-300);
            20.0 * mag.log10()
        })
        .collect();
    let peak = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for g in &mut gains {
        *g -= peak;
    }
    gains
}

/// Writes a beampattern as CSV with columns `azimuth_deg,gain_db`.
pub fn write_beampattern_csv<W: Write>(
    grid_deg: &[f64],
    gains_db: &[f64],
    out: &mut W,
) -> io::Result<()> {
    writeln!(out, "azimuth_deg,gain_db")?;
    for (az, g) in grid_deg.iter().zip(gains_db) {
        writeln!(out, "{az},{:.17e}", g)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Independent complex linear solver: Gaussian elimination with partial
    /// pivoting, no factorization machinery shared with the implementation.
    fn gauss_solve(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> DVector<Complex64> {
        let n = a.nrows();
        let mut m = a.clone();
        let mut rhs = b.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm()))
                .unwrap();
            if pivot != col {
                m.swap_rows(col, pivot);
                rhs.swap_rows(col, pivot);
            }
            for row in col + 1..n {
                let factor = m[(row, col)] / m[(col, col)];
                for k in col..n {
                    let v = m[(col, k)];
                    m[(row, k)] -= factor * v;
                }
                let v = rhs[col];
                rhs[row] -= factor * v;
            }
        }
        let mut y = DVector::from_element(n, cx(0.0, 0.0));
        for row in (0..n).rev() {
            let mut acc = rhs[row];
            for k in row + 1..n {
                acc -= m[(row, k)] * y[k];
            }
            y[row] = acc / m[(row, row)];
        }
        y
    }

    fn random_steering(rng: &mut ChaCha8Rng, n: usize) -> (ArrayConfig, DVector<Complex64>, f64) {
        let cfg = ArrayConfig {
            num_elements: n,
            ..Default::default()
        };
        let az = rng.random_range(-80.0..80.0);
        (cfg.clone(), steering_vector(&cfg, az, 0.0), az)
    }

    /// Interference-plus-noise covariance: inr * a_i a_i^H + I.
    fn interference_covariance(cfg: &ArrayConfig, az_deg: f64, inr_db: f64) -> CovarianceMatrix {
        let a_i = steering_vector(cfg, az_deg, 0.0);
        let inr = 10f64.powf(inr_db / 10.0);
        let n = cfg.num_elements;
        let mut data = &a_i * a_i.adjoint() * Complex64::new(inr, 0.0);
        for i in 0..n {
            data[(i, i)] += cx(1.0, 0.0);
        }
        CovarianceMatrix { data, loading: 0.0 }
    }

    #[test]
    fn covariance_of_single_snapshot_is_outer_product() {
        let x = SnapshotMatrix {
            data: DMatrix::from_row_slice(1, 2, &[cx(1.0, 0.0), cx(0.0, 1.0)]),
            sample_rate_hz: 1.0,
        };
        let a = sample_covariance(&x, 0.0).unwrap();
        assert_relative_eq!(a.data[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(a.data[(0, 1)].im, -1.0, epsilon = 1e-15);
        assert_relative_eq!(a.data[(1, 0)].im, 1.0, epsilon = 1e-15);
        assert_relative_eq!(a.data[(1, 1)].re, 1.0, epsilon = 1e-15);
        assert!(a.data[(0, 0)].im.abs() < 1e-15);
        assert!(a.data[(0, 1)].re.abs() < 1e-15);
    }

    #[test]
    fn covariance_is_hermitian_psd_for_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let t = rng.random_range(1..40usize);
            let n = rng.random_range(1..10usize);
            let data = DMatrix::from_fn(t, n, |_, _| {
                cx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let x = SnapshotMatrix { data, sample_rate_hz: 1.0 };
            let a = sample_covariance(&x, 0.0).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let d = a.data[(i, j)] - a.data[(j, i)].conj();
                    assert!(d.norm() < 1e-10, "not Hermitian at ({i},{j})");
                }
            }
            let trace: f64 = (0..n).map(|i| a.data[(i, i)].re).sum();
            let eig = a.data.clone().symmetric_eigen();
            for ev in eig.eigenvalues.iter() {
                assert!(*ev >= -1e-8 * trace.max(1.0), "negative eigenvalue {ev}");
            }
        }
    }

    #[test]
    fn loading_shifts_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = DMatrix::from_fn(12, 5, |_, _| {
            cx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let x = SnapshotMatrix { data, sample_rate_hz: 1.0 };
        let plain = sample_covariance(&x, 0.0).unwrap();
        let loaded = sample_covariance(&x, 0.7).unwrap();
        let mut e0: Vec<f64> = plain.data.symmetric_eigen().eigenvalues.iter().cloned().collect();
        let mut e1: Vec<f64> = loaded.data.symmetric_eigen().eigenvalues.iter().cloned().collect();
        e0.sort_by(f64::total_cmp);
        e1.sort_by(f64::total_cmp);
        for (a, b) in e0.iter().zip(&e1) {
            assert_relative_eq!(a + 0.7, *b, epsilon = 1e-9);
        }
    }

    #[test]
    fn covariance_of_white_noise_approaches_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = 10_000;
        let n = 4;
        let data = DMatrix::from_fn(t, n, |_, _| {
            let re: f64 = rng.sample(rand_distr::StandardNormal);
            let im: f64 = rng.sample(rand_distr::StandardNormal);
            cx(re / 2f64.sqrt(), im / 2f64.sqrt())
        });
        let x = SnapshotMatrix { data, sample_rate_hz: 1.0 };
        let a = sample_covariance(&x, 0.0).unwrap();
        let mut dist2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { cx(1.0, 0.0) } else { cx(0.0, 0.0) };
                dist2 += (a.data[(i, j)] - want).norm_sqr();
            }
        }
        assert!(dist2.sqrt() < 0.1 * n as f64, "Frobenius distance {}", dist2.sqrt());
    }

    #[test]
    fn mvdr_on_identity_is_matched_filter() {
        let cfg = ArrayConfig { num_elements: 4, ..Default::default() };
        let b = steering_vector(&cfg, 0.0, 0.0);
        let a = CovarianceMatrix {
            data: DMatrix::identity(4, 4),
            loading: 0.0,
        };
        let v = mvdr_weights(&a, &b).unwrap();
        for w in v.data.iter() {
            assert_relative_eq!(w.re, 0.25, epsilon = 1e-12);
            assert!(w.im.abs() < 1e-12);
        }
    }

    #[test]
    fn mvdr_is_scale_invariant_in_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let (cfg, b, _) = random_steering(&mut rng, 6);
            let a1 = interference_covariance(&cfg, rng.random_range(-80.0..80.0), 20.0);
            let scale = rng.random_range(0.1..50.0);
            let a2 = CovarianceMatrix {
                data: &a1.data * Complex64::new(scale, 0.0),
                loading: 0.0,
            };
            let v1 = mvdr_weights(&a1, &b).unwrap();
            let v2 = mvdr_weights(&a2, &b).unwrap();
            for (x, y) in v1.data.iter().zip(v2.data.iter()) {
                assert_relative_eq!(x.re, y.re, epsilon = 1e-10);
                assert_relative_eq!(x.im, y.im, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn mvdr_matches_independent_gauss_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = [4usize, 8, 16][rng.random_range(0..3usize)];
            let (cfg, b, look) = random_steering(&mut rng, n);
            let mut az_i = rng.random_range(-80.0..80.0);
            if (az_i - look).abs() < 10.0 {
                az_i += 20.0;
            }
            let a = interference_covariance(&cfg, az_i, 30.0);
            let v = mvdr_weights(&a, &b).unwrap();
            let y = gauss_solve(&a.data, &b);
            let denom = b.dotc(&y);
            let want = y / denom;
            for (got, w) in v.data.iter().zip(want.iter()) {
                assert!((got - w).norm() < 1e-8, "solver mismatch");
            }
        }
    }

    #[test]
    fn mvdr_distortionless_constraint_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(92);
        for _ in 0..100 {
            let n = [4usize, 16, 64][rng.random_range(0..3usize)];
            let (cfg, b, look) = random_steering(&mut rng, n);
            let mut az_i = rng.random_range(-80.0..80.0);
            if (az_i - look).abs() < 8.0 {
                az_i -= 25.0;
            }
            let a = interference_covariance(&cfg, az_i, rng.random_range(0.0..30.0));
            let v = mvdr_weights(&a, &b).unwrap();
            let c = v.data.dotc(&b);
            assert!((c - cx(1.0, 0.0)).norm() <= 1e-8);
        }
    }

    #[test]
    fn singular_covariance_is_reported() {
        let a = CovarianceMatrix {
            data: DMatrix::from_element(3, 3, cx(0.0, 0.0)),
            loading: 0.0,
        };
        let b = DVector::from_element(3, cx(1.0, 0.0));
        assert!(matches!(
            mvdr_weights(&a, &b),
            Err(BeamformError::SingularCovariance)
        ));
    }

    #[test]
    fn bartlett_normalizes_to_unit_gain() {
        let b = DVector::from_element(8, cx(1.0, 0.0));
        let v = bartlett_weights(&b).unwrap();
        for w in v.data.iter() {
            assert_relative_eq!(w.re, 0.125, epsilon = 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let b = DVector::from_fn(5, |_, _| cx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let v = bartlett_weights(&b).unwrap();
            assert!((v.data.dotc(&b) - cx(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn bartlett_equals_mvdr_on_white_noise() {
        let cfg = ArrayConfig { num_elements: 7, ..Default::default() };
        let b = steering_vector(&cfg, 33.0, 0.0);
        let a = CovarianceMatrix { data: DMatrix::identity(7, 7), loading: 0.0 };
        let mv = mvdr_weights(&a, &b).unwrap();
        let bt = bartlett_weights(&b).unwrap();
        for (x, y) in mv.data.iter().zip(bt.data.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn bartlett_rejects_zero_vector() {
        let b = DVector::from_element(4, cx(0.0, 0.0));
        assert!(matches!(
            bartlett_weights(&b),
            Err(BeamformError::ZeroSteeringVector)
        ));
    }

    #[test]
    fn beamform_with_basis_weight_selects_column() {
        let mut data = DMatrix::from_element(3, 2, cx(0.0, 0.0));
        data[(0, 0)] = cx(1.0, 2.0);
        data[(1, 0)] = cx(-3.0, 0.5);
        data[(2, 1)] = cx(9.0, 9.0);
        let x = SnapshotMatrix { data, sample_rate_hz: 1.0 };
        let mut e1 = DVector::from_element(2, cx(0.0, 0.0));
        e1[0] = cx(1.0, 0.0);
        let out = beamform(&BeamWeights { data: e1 }, &x).unwrap();
        assert_eq!(out[0], cx(1.0, 2.0));
        assert_eq!(out[1], cx(-3.0, 0.5));
        assert_eq!(out[2], cx(0.0, 0.0));
    }

    #[test]
    fn beamform_recovers_waveform_distortionless() {
        let cfg = ArrayConfig { num_elements: 16, ..Default::default() };
        let b = steering_vector(&cfg, 45.0, 0.0);
        let waveform: Vec<Complex64> = (0..20).map(|t| cx((t as f64 * 0.3).sin(), 0.2)).collect();
        let src = crate::array::PlaneWaveSource {
            azimuth_deg: 45.0,
            elevation_deg: 0.0,
            waveform: waveform.clone(),
            kind: crate::array::SourceKind::Desired,
        };
        let x = crate::array::collect_plane_waves(&cfg, &[src], 20).unwrap();
        let a = interference_covariance(&cfg, -20.0, 10.0);
        let v = mvdr_weights(&a, &b).unwrap();
        let out = beamform(&v, &x).unwrap();
        for (got, want) in out.iter().zip(&waveform) {
            assert!((got - want).norm() < 1e-10);
        }
    }

    #[test]
    fn beamform_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = 9;
        let n = 5;
        let data = DMatrix::from_fn(t, n, |_, _| cx(rng.random::<f64>(), rng.random::<f64>()));
        let x = SnapshotMatrix { data, sample_rate_hz: 1.0 };
        let v = BeamWeights {
            data: DVector::from_fn(n, |_, _| cx(rng.random::<f64>(), rng.random::<f64>())),
        };
        let got = beamform(&v, &x).unwrap();
        for ti in 0..t {
            let mut acc = cx(0.0, 0.0);
            for ni in 0..n {
                acc += v.data[ni].conj() * x.data[(ti, ni)];
            }
            assert!((got[ti] - acc).norm() < 1e-12);
        }
    }

    #[test]
    fn beamform_rejects_dimension_mismatch() {
        let x = SnapshotMatrix {
            data: DMatrix::from_element(2, 3, cx(0.0, 0.0)),
            sample_rate_hz: 1.0,
        };
        let v = BeamWeights { data: DVector::from_element(2, cx(1.0, 0.0)) };
        assert!(matches!(
            beamform(&v, &x),
            Err(BeamformError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sinr_white_noise_equals_array_gain() {
        for n in [2usize, 4, 8, 16] {
            let b = DVector::from_fn(n, |i, _| Complex64::from_polar(1.0, 0.3 * i as f64));
            let v = bartlett_weights(&b).unwrap();
            let a = CovarianceMatrix { data: DMatrix::identity(n, n), loading: 0.0 };
            let s = sinr(&v, 1.0, &b, &a).unwrap();
            assert_relative_eq!(s, 10.0 * (n as f64).log10(), epsilon = 1e-9);
        }
    }

    #[test]
    fn sinr_doubles_signal_power_adds_three_db() {
        let cfg = ArrayConfig { num_elements: 8, ..Default::default() };
        let b = steering_vector(&cfg, 10.0, 0.0);
        let a = interference_covariance(&cfg, 50.0, 20.0);
        let v = mvdr_weights(&a, &b).unwrap();
        let s1 = sinr(&v, 1.0, &b, &a).unwrap();
        let s2 = sinr(&v, 2.0, &b, &a).unwrap();
        assert_relative_eq!(s2 - s1, 3.0103, epsilon = 1e-4);
    }

    #[test]
    fn mvdr_sinr_beats_bartlett_on_colored_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..100 {
            let (cfg, b, look) = random_steering(&mut rng, 8);
            let mut az_i = rng.random_range(-80.0..80.0);
            if (az_i - look).abs() < 5.0 {
                az_i += 15.0;
            }
            let a = interference_covariance(&cfg, az_i, rng.random_range(5.0..35.0));
            let mv = mvdr_weights(&a, &b).unwrap();
            let bt = bartlett_weights(&b).unwrap();
            let s_mv = sinr(&mv, 1.0, &b, &a).unwrap();
            let s_bt = sinr(&bt, 1.0, &b, &a).unwrap();
            assert!(s_mv >= s_bt - 1e-9, "MVDR {s_mv} dB < Bartlett {s_bt} dB");
        }
    }

    #[test]
    fn beampattern_peaks_at_look_direction() {
        let cfg = ArrayConfig { num_elements: 16, ..Default::default() };
        let b = steering_vector(&cfg, 0.0, 0.0);
        let v = bartlett_weights(&b).unwrap();
        let grid: Vec<f64> = (-90..=90).map(|d| d as f64).collect();
        let pat = beampattern(&v, &cfg, &grid);
        let (imax, _) = pat
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(grid[imax], 0.0);
        assert_relative_eq!(pat[imax], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn beampattern_symmetric_for_broadside_weights() {
        let cfg = ArrayConfig { num_elements: 12, ..Default::default() };
        let b = steering_vector(&cfg, 0.0, 0.0);
        let v = bartlett_weights(&b).unwrap();
        let grid: Vec<f64> = (-60..=60).map(|d| d as f64).collect();
        let pat = beampattern(&v, &cfg, &grid);
        let m = grid.len() - 1;
        for i in 0..grid.len() {
            assert_relative_eq!(pat[i], pat[m - i], epsilon = 1e-9);
        }
    }

    #[test]
    fn beampattern_nulls_interferer() {
        let cfg = ArrayConfig { num_elements: 16, ..Default::default() };
        let b = steering_vector(&cfg, 0.0, 0.0);
        let a = interference_covariance(&cfg, -40.0, 30.0);
        let v = mvdr_weights(&a, &b).unwrap();
        let grid: Vec<f64> = (0..=720).map(|i| -90.0 + i as f64 * 0.25).collect();
        let pat = beampattern(&v, &cfg, &grid);
        // Deepest grid point within 10 degrees of the interferer must sit
        // within 2 degrees of it.
        let (imin, _) = grid
            .iter()
            .enumerate()
            .filter(|(_, az)| (**az - -40.0).abs() <= 10.0)
            .map(|(i, _)| (i, pat[i]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(
            (grid[imin] - -40.0).abs() <= 2.0,
            "null at {} deg",
            grid[imin]
        );
    }

    #[test]
    fn null_depth_meets_bound() {
        // Interferer 30 degrees off the look direction at INR 30 dB: the
        // pattern at the interferer sits at least 25 dB below the look gain.
        let cfg = ArrayConfig { num_elements: 16, ..Default::default() };
        let look = 10.0;
        let az_i = 40.0;
        let b = steering_vector(&cfg, look, 0.0);
        let a = interference_covariance(&cfg, az_i, 30.0);
        let v = mvdr_weights(&a, &b).unwrap();
        let gain = |az: f64| {
            let s = steering_vector(&cfg, az, 0.0);
            20.0 * v.data.dotc(&s).norm().max(1e-300).log10()
        };
        assert!(gain(az_i) - gain(look) <= -25.0);
    }

    #[test]
    fn weight_csv_round_trips() {
        let v = BeamWeights {
            data: DVector::from_vec(vec![cx(0.5, -0.25), cx(1.0 / 3.0, 2e-12)]),
        };
        let mut buf = Vec::new();
        v.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "n,re,im");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "0");
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.5);
        assert_eq!(row[2].parse::<f64>().unwrap(), -0.25);
        let row2: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row2[1].parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}
