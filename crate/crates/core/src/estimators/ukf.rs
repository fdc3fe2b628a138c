use nalgebra::{DMatrix, DVector};

use super::sigma::{weighted_cross, weighted_mean};
use super::{
    check_dim, gain, select_sigma_points, symmetrize, EstimatorError, GaussianBelief, NoiseModel, ProcessModel,
    SigmaSet, UpdateResult, UtParams,
};

/// Predicted state and measurement statistics for one UKF cycle.
#[derive(Debug, Clone)]
pub struct Prediction {
    /// `x̄^{k+1|k}` and `P^{k+1|k}` (process noise included).
    pub state: GaussianBelief,
    pub y_mean: DVector<f64>,
    /// Innovation covariance, measurement noise included.
    pub p_yy: DMatrix<f64>,
    pub p_xy: DMatrix<f64>,
    /// Sigma points redrawn from the predicted belief and their images under
    /// `h`; kept so callers can audit the sums.
    pub sigma: SigmaSet,
    pub y_points: Vec<DVector<f64>>,
}

fn finite(what: &'static str, v: &DVector<f64>) -> Result<(), EstimatorError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(EstimatorError::NonFinite(what))
    }
}

/// Propagates the sigma points of `belief` through `f`, adds process noise,
/// then redraws points from the predicted belief and maps them through `h`.
pub fn ukf_predict<M: ProcessModel + ?Sized>(
    belief: &GaussianBelief,
    params: &UtParams,
    model: &M,
    u: &DVector<f64>,
    noise: &NoiseModel,
) -> Result<Prediction, EstimatorError> {
    let n = model.state_dim();
    let m = model.measurement_dim();
    check_dim("belief", n, belief.dim())?;
    check_dim("control", model.control_dim(), u.len())?;
    check_dim("q_proc", n, noise.q_proc.nrows())?;
    check_dim("r_meas", m, noise.r_meas.nrows())?;

    let prior = select_sigma_points(belief, params)?;
    let propagated = prior
        .points
        .iter()
        .map(|x| {
            let fx = model.predict_state(x, u);
            check_dim("f(x, u)", n, fx.len())?;
            finite("f(x, u)", &fx)?;
            Ok(fx)
        })
        .collect::<Result<Vec<_>, EstimatorError>>()?;
    let x_mean = weighted_mean(&propagated, &prior.w_mean);
    let p = weighted_cross(&propagated, &x_mean, &propagated, &x_mean, &prior.w_cov) + &noise.q_proc;
    let state = GaussianBelief { mean: x_mean, cov: symmetrize(&p) };

    let sigma = select_sigma_points(&state, params)?;
    let y_points = sigma
        .points
        .iter()
        .map(|x| {
            let hx = model.measure(x);
            check_dim("h(x)", m, hx.len())?;
            finite("h(x)", &hx)?;
            Ok(hx)
        })
        .collect::<Result<Vec<_>, EstimatorError>>()?;
    let y_mean = weighted_mean(&y_points, &sigma.w_mean);
    let p_yy = weighted_cross(&y_points, &y_mean, &y_points, &y_mean, &sigma.w_cov) + &noise.r_meas;
    let p_xy = weighted_cross(&sigma.points, &state.mean, &y_points, &y_mean, &sigma.w_cov);

    Ok(Prediction { state, y_mean, p_yy: symmetrize(&p_yy), p_xy, sigma, y_points })
}

/// Measurement update; the residual `y - ȳ` is returned for the detector.
pub fn ukf_update(prediction: &Prediction, y: &DVector<f64>) -> Result<UpdateResult, EstimatorError> {
    check_dim("measurement", prediction.y_mean.len(), y.len())?;
    finite("measurement", y)?;
    let k = gain(&prediction.p_xy, &prediction.p_yy)?;
    let residual = y - &prediction.y_mean;
    let mean = &prediction.state.mean + &k * &residual;
    let cov = symmetrize(&(&prediction.state.cov - &k * prediction.p_xy.transpose()));
    Ok(UpdateResult { belief: GaussianBelief { mean, cov }, residual, kalman_gain: k })
}

/// Stateful UKF around a process model.
#[derive(Debug, Clone)]
pub struct UnscentedFilter<M> {
    pub belief: GaussianBelief,
    pub params: UtParams,
    pub noise: NoiseModel,
    pub model: M,
}

impl<M: ProcessModel> UnscentedFilter<M> {
    pub fn new(model: M, belief: GaussianBelief, params: UtParams, noise: NoiseModel) -> Result<Self, EstimatorError> {
        check_dim("belief", model.state_dim(), belief.dim())?;
        belief.check()?;
        Ok(Self { belief, params, noise, model })
    }

    /// Predict with control `u`, then update with reading `y`.
    pub fn step(&mut self, u: &DVector<f64>, y: &DVector<f64>) -> Result<UpdateResult, EstimatorError> {
        let prediction = ukf_predict(&self.belief, &self.params, &self.model, u, &self.noise)?;
        let result = ukf_update(&prediction, y)?;
        self.belief = result.belief.clone();
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::LinearModel;

    struct Identity(usize);

    impl ProcessModel for Identity {
        fn state_dim(&self) -> usize {
            self.0
        }
        fn control_dim(&self) -> usize {
            0
        }
        fn measurement_dim(&self) -> usize {
            self.0
        }
        fn predict_state(&self, x: &DVector<f64>, _: &DVector<f64>) -> DVector<f64> {
            x.clone()
        }
        fn measure(&self, x: &DVector<f64>) -> DVector<f64> {
            x.clone()
        }
    }

    struct Broken;

    impl ProcessModel for Broken {
        fn state_dim(&self) -> usize {
            2
        }
        fn control_dim(&self) -> usize {
            0
        }
        fn measurement_dim(&self) -> usize {
            1
        }
        fn predict_state(&self, x: &DVector<f64>, _: &DVector<f64>) -> DVector<f64> {
            DVector::from_element(x.len() + 1, 0.0)
        }
        fn measure(&self, x: &DVector<f64>) -> DVector<f64> {
            x.rows(0, 1).into()
        }
    }

    fn belief() -> GaussianBelief {
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]);
        GaussianBelief::new(DVector::from_vec(vec![1.0, -2.0, 0.5]), cov).unwrap()
    }

    fn zero_noise(n: usize) -> NoiseModel {
        NoiseModel { q_proc: DMatrix::zeros(n, n), r_meas: DMatrix::zeros(n, n) }
    }

    #[test]
    fn identity_propagation_keeps_belief() {
        let b = belief();
        let pred =
            ukf_predict(&b, &UtParams::standard(3, 1.0), &Identity(3), &DVector::zeros(0), &zero_noise(3)).unwrap();
        assert!((&pred.state.mean - &b.mean).amax() < 1e-12);
        assert!((&pred.state.cov - &b.cov).amax() < 1e-12);
        assert!((&pred.p_xy - &b.cov).amax() < 1e-12);
        assert!((&pred.p_yy - &b.cov).amax() < 1e-12);
    }

    #[test]
    fn p_yy_matches_direct_resummation() {
        let model = LinearModel::new(
            DMatrix::from_row_slice(3, 3, &[1.0, 0.05, 0.0, 0.0, 0.9, 0.1, 0.0, 0.0, 0.0]),
            DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0]),
            DVector::zeros(3),
            DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]),
        )
        .unwrap();
        let noise = NoiseModel::diagonal(&[1e-3; 3], &[0.01, 0.02]);
        let pred =
            ukf_predict(&belief(), &UtParams::standard(3, 1.0), &model, &DVector::from_vec(vec![0.3]), &noise).unwrap();
        let s = &pred.sigma;
        let mut ybar = [0.0; 2];
        for (y, w) in pred.y_points.iter().zip(&s.w_mean) {
            ybar[0] += w * y[0];
            ybar[1] += w * y[1];
        }
        let mut pyy = [[0.0; 2]; 2];
        for (y, w) in pred.y_points.iter().zip(&s.w_cov) {
            let d = [y[0] - ybar[0], y[1] - ybar[1]];
            for i in 0..2 {
                for j in 0..2 {
                    pyy[i][j] += w * d[i] * d[j];
                }
            }
        }
        pyy[0][0] += 0.01;
        pyy[1][1] += 0.02;
        for i in 0..2 {
            for j in 0..2 {
                assert!((pred.p_yy[(i, j)] - pyy[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_innovation_keeps_predicted_mean() {
        let noise = NoiseModel::diagonal(&[1e-3; 3], &[0.01; 3]);
        let pred =
            ukf_predict(&belief(), &UtParams::standard(3, 1.0), &Identity(3), &DVector::zeros(0), &noise).unwrap();
        let upd = ukf_update(&pred, &pred.y_mean.clone()).unwrap();
        assert_eq!(upd.residual.amax(), 0.0);
        assert_eq!(upd.belief.mean, pred.state.mean);
        upd.belief.check().unwrap();
        assert!(upd.belief.cov.trace() <= pred.state.cov.trace());
    }

    #[test]
    fn scalar_update_algebra() {
        // P_xy = P_yy = 2 with R already folded in: K = 1, P+ = P - 2
        let pred = Prediction {
            state: GaussianBelief { mean: DVector::from_vec(vec![1.0]), cov: DMatrix::from_element(1, 1, 3.0) },
            y_mean: DVector::from_vec(vec![1.0]),
            p_yy: DMatrix::from_element(1, 1, 2.0),
            p_xy: DMatrix::from_element(1, 1, 2.0),
            sigma: SigmaSet { points: vec![], w_mean: vec![], w_cov: vec![] },
            y_points: vec![],
        };
        let upd = ukf_update(&pred, &DVector::from_vec(vec![1.5])).unwrap();
        assert!((upd.kalman_gain[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((upd.belief.cov[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((upd.belief.mean[0] - 1.5).abs() < 1e-15);
        assert!((upd.residual[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn singular_innovation_is_reported() {
        let pred =
            ukf_predict(&belief(), &UtParams::standard(3, 1.0), &Identity(3), &DVector::zeros(0), &zero_noise(3))
                .map(|mut p| {
                    p.p_yy = DMatrix::zeros(3, 3);
                    p
                })
                .unwrap();
        assert!(matches!(ukf_update(&pred, &DVector::zeros(3)), Err(EstimatorError::SingularInnovation)));
    }

    #[test]
    fn model_dimension_mismatch_is_an_error() {
        let b = GaussianBelief::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let noise = NoiseModel::diagonal(&[1e-3; 2], &[0.01]);
        let err = ukf_predict(&b, &UtParams::standard(2, 1.0), &Broken, &DVector::zeros(0), &noise).unwrap_err();
        assert!(matches!(err, EstimatorError::Dimension { what: "f(x, u)", .. }));
    }
}
