use nalgebra::{DMatrix, DVector};

use super::{check_dim, gain, symmetrize, EstimatorError, GaussianBelief, NoiseModel, ProcessModel, UpdateResult};
use crate::vehicle_sim::{VehicleParams, CALIBRATION_AIR_N, CALIBRATION_ROLL_N};

/// Affine model `x' = A x + B u + c`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub c: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        offset: DVector<f64>,
        c: DMatrix<f64>,
    ) -> Result<Self, EstimatorError> {
        let n = a.nrows();
        check_dim("A columns", n, a.ncols())?;
        check_dim("B rows", n, b.nrows())?;
        check_dim("offset", n, offset.len())?;
        check_dim("C columns", n, c.ncols())?;
        Ok(Self { a, b, offset, c })
    }

    /// Constant-resistance longitudinal model over `x = [speed, yaw_rate, accel]`
    /// with control `[u_unified, steer]`:
    ///
    /// ```text
    /// accel' = a_max (2u - 1) - r_travel / M
    /// speed' = speed + dt * accel'
    /// yaw'   = yaw
    /// ```
    ///
    /// and the measurement reordered to `[accel, speed, yaw_rate]`.
    pub fn longitudinal(params: &VehicleParams, r_travel_n: f64) -> Self {
        let dt = params.dt_s;
        let a_max = params.max_traction_mps2;
        let drift = -(a_max + r_travel_n / params.mass_kg);
        #[rustfmt::skip]
        let a = DMatrix::from_row_slice(3, 3, &[
            1.0, 0.0, 0.0,
            0.0, 1.0, 0.0,
            0.0, 0.0, 0.0,
        ]);
        #[rustfmt::skip]
        let b = DMatrix::from_row_slice(3, 2, &[
            2.0 * a_max * dt, 0.0,
            0.0,              0.0,
            2.0 * a_max,      0.0,
        ]);
        let offset = DVector::from_vec(vec![dt * drift, 0.0, drift]);
        Self { a, b, offset, c: state_to_measurement() }
    }

    /// Baseline with the tabulated flat-road resistance (air + roll + grade = 340.5 N).
    pub fn table_baseline(params: &VehicleParams) -> Self {
        Self::longitudinal(params, table_r_travel())
    }
}

/// `r_air + r_roll + r_grad` with no slope.
pub fn table_r_travel() -> f64 {
    let r_grad = 0.0;
    CALIBRATION_AIR_N + CALIBRATION_ROLL_N + r_grad
}

/// Maps `[speed, yaw_rate, accel]` onto the `[accel, speed, yaw_rate]` sensor order.
pub(crate) fn state_to_measurement() -> DMatrix<f64> {
    #[rustfmt::skip]
    let c = DMatrix::from_row_slice(3, 3, &[
        0.0, 0.0, 1.0,
        1.0, 0.0, 0.0,
        0.0, 1.0, 0.0,
    ]);
    c
}

impl ProcessModel for LinearModel {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    fn control_dim(&self) -> usize {
        self.b.ncols()
    }
    fn measurement_dim(&self) -> usize {
        self.c.nrows()
    }
    fn predict_state(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u + &self.offset
    }
    fn measure(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }
}

/// One linear Kalman predict/update cycle.
pub fn kf_step(
    belief: &GaussianBelief,
    u: &DVector<f64>,
    y: &DVector<f64>,
    model: &LinearModel,
    noise: &NoiseModel,
) -> Result<UpdateResult, EstimatorError> {
    check_dim("belief", model.state_dim(), belief.dim())?;
    check_dim("control", model.control_dim(), u.len())?;
    check_dim("measurement", model.measurement_dim(), y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(EstimatorError::NonFinite("measurement"));
    }

    let x_pred = model.predict_state(&belief.mean, u);
    let p_pred = symmetrize(&(&model.a * &belief.cov * model.a.transpose() + &noise.q_proc));
    let y_pred = model.measure(&x_pred);
    let p_xy = &p_pred * model.c.transpose();
    let s = &model.c * &p_xy + &noise.r_meas;
    let k = gain(&p_xy, &s)?;
    let residual = y - y_pred;
    let mean = x_pred + &k * &residual;
    let cov = symmetrize(&(&p_pred - &k * p_xy.transpose()));
    Ok(UpdateResult { belief: GaussianBelief { mean, cov }, residual, kalman_gain: k })
}

/// Stateful wrapper around [`kf_step`].
#[derive(Debug, Clone)]
pub struct KalmanFilter {
    pub belief: GaussianBelief,
    pub model: LinearModel,
    pub noise: NoiseModel,
}

impl KalmanFilter {
    pub fn new(model: LinearModel, belief: GaussianBelief, noise: NoiseModel) -> Result<Self, EstimatorError> {
        check_dim("belief", model.state_dim(), belief.dim())?;
        belief.check()?;
        Ok(Self { belief, model, noise })
    }

    pub fn step(&mut self, u: &DVector<f64>, y: &DVector<f64>) -> Result<UpdateResult, EstimatorError> {
        let result = kf_step(&self.belief, u, y, &self.model, &self.noise)?;
        self.belief = result.belief.clone();
        Ok(result)
    }
}
