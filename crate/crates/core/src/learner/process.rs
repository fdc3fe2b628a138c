use nalgebra::DVector;

use super::mlp::MlpModel;
use crate::estimators::ProcessModel;
use crate::vehicle_sim::VehicleParams;

/// Learned dynamics over `x = [speed, yaw_rate, accel]` with control
/// `[u_unified, steer]`. The network predicts the next acceleration; speed
/// follows by integrating it over one step and yaw rate is held.
#[derive(Debug, Clone)]
pub struct MlpProcess {
    pub model: MlpModel,
    pub dt_s: f64,
}

pub fn as_process_model(model: MlpModel, params: &VehicleParams) -> MlpProcess {
    MlpProcess { model, dt_s: params.dt_s }
}

impl MlpProcess {
    pub fn input(x: &DVector<f64>, u: &DVector<f64>) -> [f64; 5] {
        [u[0], u[1], x[0], x[1], x[2]]
    }
}

impl ProcessModel for MlpProcess {
    fn state_dim(&self) -> usize {
        3
    }
    fn control_dim(&self) -> usize {
        2
    }
    fn measurement_dim(&self) -> usize {
        3
    }
    fn predict_state(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let accel = self.model.forward(&Self::input(x, u));
        DVector::from_vec(vec![(x[0] + accel * self.dt_s).max(0.0), x[1], accel])
    }
    fn measure(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![x[2], x[0], x[1]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(accel: f64) -> MlpProcess {
        let mut m = MlpModel::zeros();
        m.b2 = accel;
        as_process_model(m, &VehicleParams::default())
    }

    #[test]
    fn zero_accel_holds_speed() {
        let p = constant(0.0);
        let next = p.predict_state(&DVector::from_vec(vec![5.0, 0.2, 1.0]), &DVector::from_vec(vec![0.5, 0.0]));
        assert_eq!(next.as_slice(), &[5.0, 0.2, 0.0]);
    }

    #[test]
    fn speed_clamps_at_zero() {
        let p = constant(-1.0);
        let next = p.predict_state(&DVector::from_vec(vec![0.01, 0.0, 0.0]), &DVector::from_vec(vec![0.0, 0.0]));
        assert_eq!(next[0], 0.0);
        assert_eq!(next[2], -1.0);
    }

    #[test]
    fn measurement_reorders_state() {
        let p = constant(0.0);
        let y = p.measure(&DVector::from_vec(vec![12.0, 0.1, -0.4]));
        assert_eq!(y.as_slice(), &[-0.4, 12.0, 0.1]);
    }
}
