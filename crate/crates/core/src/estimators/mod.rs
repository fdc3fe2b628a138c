//! Gaussian state estimators that expose their innovation as a residual.
//!
//! Both the unscented filter and the linear Kalman baseline emit an
//! [`UpdateResult`] with the same shape so the detector never needs to know
//! which one produced the residual.

mod kf;
mod sigma;
mod ukf;

pub use kf::{kf_step, KalmanFilter, LinearModel};
pub use sigma::{psd_sqrt, select_sigma_points, SigmaSet};
pub use ukf::{ukf_predict, ukf_update, Prediction, UnscentedFilter};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SYMMETRY_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("covariance is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("covariance is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix square root failed even with 1e-3 jitter:\n{0}")]
    SqrtFailed(DMatrix<f64>),
    #[error("sigma spread n + lambda = {0} must be positive")]
    BadSpread(f64),
    #[error("innovation covariance P_yy is singular; raise the r_meas floor")]
    SingularInnovation,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Mean and covariance of a Gaussian state estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    /// Builds a belief after checking shape, symmetry and semi-definiteness.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, EstimatorError> {
        let b = Self { mean, cov };
        b.check()?;
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn check(&self) -> Result<(), EstimatorError> {
        let n = self.mean.len();
        if self.cov.nrows() != n || self.cov.ncols() != n {
            return Err(EstimatorError::Dimension { what: "covariance", expected: n, got: self.cov.nrows() });
        }
        if self.mean.iter().chain(self.cov.iter()).any(|x| !x.is_finite()) {
            return Err(EstimatorError::NonFinite("belief"));
        }
        let asym = (&self.cov - self.cov.transpose()).amax();
        if asym >= SYMMETRY_TOL {
            return Err(EstimatorError::NotSymmetric(asym));
        }
        let min_eigenvalue = symmetrize(&self.cov).symmetric_eigenvalues().min();
        if min_eigenvalue < -PSD_TOL {
            return Err(EstimatorError::NotPsd { min_eigenvalue });
        }
        Ok(())
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Unscented-transform tuning: spread `phi`, secondary scale `kappa`, and
/// `beta_prior` for prior knowledge of the distribution (2 for Gaussians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtParams {
    pub phi: f64,
    pub kappa: f64,
    pub beta_prior: f64,
}

impl UtParams {
    /// `kappa = 3 - n`, `beta_prior = 2`.
    pub fn standard(n: usize, phi: f64) -> Self {
        Self { phi, kappa: 3.0 - n as f64, beta_prior: 2.0 }
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.phi * self.phi * (n as f64 + self.kappa) - n as f64
    }
}

/// State transition `f(x, u)` and measurement map `h(x)`.
pub trait ProcessModel {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn measurement_dim(&self) -> usize;
    fn predict_state(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    fn measure(&self, x: &DVector<f64>) -> DVector<f64>;
}

/// Posterior belief plus the innovation and gain that produced it.
#[derive(Debug, Clone)]
pub struct UpdateResult {
    pub belief: GaussianBelief,
    pub residual: DVector<f64>,
    pub kalman_gain: DMatrix<f64>,
}

/// Additive noise covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub q_proc: DMatrix<f64>,
    pub r_meas: DMatrix<f64>,
}

/// Floor applied to every diagonal entry of the measurement covariance.
pub const R_MEAS_FLOOR: f64 = 1e-6;

impl NoiseModel {
    pub fn diagonal(q_diag: &[f64], r_diag: &[f64]) -> Self {
        Self {
            q_proc: DMatrix::from_diagonal(&DVector::from_column_slice(q_diag)),
            r_meas: DMatrix::from_diagonal(&DVector::from_iterator(
                r_diag.len(),
                r_diag.iter().map(|r| r.max(R_MEAS_FLOOR)),
            )),
        }
    }
}

/// Solves `K * S = P_xy` for the gain through a Cholesky factor of `S`.
pub(crate) fn gain(p_xy: &DMatrix<f64>, p_yy: &DMatrix<f64>) -> Result<DMatrix<f64>, EstimatorError> {
    let chol = symmetrize(p_yy).cholesky().ok_or(EstimatorError::SingularInnovation)?;
    // K = P_xy S^-1  <=>  S K^T = P_xy^T
    let kt = chol.solve(&p_xy.transpose());
    if kt.iter().any(|x| !x.is_finite()) {
        return Err(EstimatorError::SingularInnovation);
    }
    Ok(kt.transpose())
}

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<(), EstimatorError> {
    if expected == got {
        Ok(())
    } else {
        Err(EstimatorError::Dimension { what, expected, got })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn belief_validation() {
        let ok = GaussianBelief::new(DVector::from_vec(vec![1.0, 2.0]), DMatrix::identity(2, 2));
        assert!(ok.is_ok());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(GaussianBelief::new(DVector::zeros(2), asym), Err(EstimatorError::NotSymmetric(_))));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(GaussianBelief::new(DVector::zeros(2), indefinite), Err(EstimatorError::NotPsd { .. })));
        assert!(GaussianBelief::new(DVector::zeros(3), DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn lambda_and_standard_kappa() {
        let p = UtParams::standard(2, 1.0);
        assert_eq!(p.kappa, 1.0);
        assert_eq!(p.lambda(2), 1.0);
        assert_eq!(UtParams::standard(3, 1.0).lambda(3), 0.0);
    }

    #[test]
    fn r_floor_applies() {
        let n = NoiseModel::diagonal(&[1e-3; 3], &[0.0, 0.01, 1e-8]);
        assert_eq!(n.r_meas[(0, 0)], R_MEAS_FLOOR);
        assert_eq!(n.r_meas[(1, 1)], 0.01);
        assert_eq!(n.r_meas[(2, 2)], R_MEAS_FLOOR);
    }
}
