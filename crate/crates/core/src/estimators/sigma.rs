use nalgebra::{DMatrix, DVector};

use super::{symmetrize, EstimatorError, GaussianBelief, UtParams};

const JITTER_START: f64 = 1e-9;
const JITTER_MAX: f64 = 1e-3;

/// Weighted sigma-point ensemble of a belief.
#[derive(Debug, Clone)]
pub struct SigmaSet {
    pub points: Vec<DVector<f64>>,
    pub w_mean: Vec<f64>,
    pub w_cov: Vec<f64>,
}

impl SigmaSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weighted_mean(&self) -> DVector<f64> {
        weighted_mean(&self.points, &self.w_mean)
    }

    pub fn weighted_cov(&self, mean: &DVector<f64>) -> DMatrix<f64> {
        weighted_cross(&self.points, mean, &self.points, mean, &self.w_cov)
    }
}

pub(crate) fn weighted_mean(points: &[DVector<f64>], w: &[f64]) -> DVector<f64> {
    let mut acc = DVector::zeros(points[0].len());
    for (p, wi) in points.iter().zip(w) {
        acc.axpy(*wi, p, 1.0);
    }
    acc
}

/// `Σ w_i (a_i - a_mean)(b_i - b_mean)^T`.
pub(crate) fn weighted_cross(
    a: &[DVector<f64>],
    a_mean: &DVector<f64>,
    b: &[DVector<f64>],
    b_mean: &DVector<f64>,
    w: &[f64],
) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(a_mean.len(), b_mean.len());
    for ((ai, bi), wi) in a.iter().zip(b).zip(w) {
        let da = ai - a_mean;
        let db = bi - b_mean;
        acc.ger(*wi, &da, &db, 1.0);
    }
    acc
}

/// Lower-triangular `L` with `L L^T = A` for a symmetric positive
/// semi-definite `A`. Zero pivots are allowed when the rest of their column
/// vanishes, so singular covariances (including the zero matrix) factor
/// without jitter.
fn semidefinite_cholesky(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let scale = a.diagonal().amax();
    let pivot_tol = 1e-13 * scale;
    let column_tol = 1e-9 * scale;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if !d.is_finite() || d < -pivot_tol {
            return None;
        }
        if d <= pivot_tol {
            for i in j + 1..n {
                let v = a[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
                if v.abs() > column_tol {
                    return None;
                }
            }
            continue;
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in j + 1..n {
            let v = a[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = v / root;
        }
    }
    Some(l)
}

/// Matrix square root of the symmetrized `a`, escalating a diagonal jitter
/// from 1e-9 to 1e-3 by factors of ten when the plain factorization fails.
pub fn psd_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>, EstimatorError> {
    let sym = symmetrize(a);
    if let Some(l) = semidefinite_cholesky(&sym) {
        return Ok(l);
    }
    let n = sym.nrows();
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let bumped = &sym + DMatrix::<f64>::identity(n, n) * jitter;
        if let Some(l) = semidefinite_cholesky(&bumped) {
            return Ok(l);
        }
        jitter *= 10.0;
    }
    Err(EstimatorError::SqrtFailed(sym))
}

/// Draws the 2n+1 sigma points and their mean/covariance weights.
pub fn select_sigma_points(belief: &GaussianBelief, params: &UtParams) -> Result<SigmaSet, EstimatorError> {
    let n = belief.dim();
    let lambda = params.lambda(n);
    let spread = n as f64 + lambda;
    if !(spread > 0.0) {
        return Err(EstimatorError::BadSpread(spread));
    }
    let root = psd_sqrt(&(&belief.cov * spread))?;

    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(belief.mean.clone());
    for i in 0..n {
        points.push(&belief.mean + root.column(i));
    }
    for i in 0..n {
        points.push(&belief.mean - root.column(i));
    }

    let w_i = 1.0 / (2.0 * spread);
    let w0_mean = lambda / spread;
    let w0_cov = w0_mean + (1.0 - params.phi * params.phi + params.beta_prior);
    let mut w_mean = vec![w_i; 2 * n + 1];
    let mut w_cov = vec![w_i; 2 * n + 1];
    w_mean[0] = w0_mean;
    w_cov[0] = w0_cov;
    Ok(SigmaSet { points, w_mean, w_cov })
}
