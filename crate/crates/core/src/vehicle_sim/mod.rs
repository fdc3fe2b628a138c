//! Discrete-time longitudinal vehicle model.
//!
//! The traction side maps the unified throttle/brake signal affinely onto an
//! acceleration `a_f = a_max * (2u - 1)`; the resistance side is the lumped
//! air/rolling/grade travel resistance. Yaw rate follows steering through a
//! first-order lag and only exists so the learned model has a realistic third
//! state input.

mod log;
mod scenario;

pub(crate) use log::noise_rng;
pub use log::{run_log, write_log_csv, LogRecord, LOG_CSV_HEADER};
pub use scenario::{generate_scenario, DrivingStyle, Interpolation, Keyframe, Scenario, DEFAULT_NOISE_STD};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.81;

/// Prediction horizon of the learned model: acceleration 50 ms after the input.
pub const PREDICTION_HORIZON_S: f64 = 0.05;

/// Air-drag force at the calibration speed (N).
pub const CALIBRATION_AIR_N: f64 = 68.9;
/// Rolling-resistance force at the calibration speed (N).
pub const CALIBRATION_ROLL_N: f64 = 271.6;
/// Speed at which the lumped coefficients reproduce the two forces above.
pub const CALIBRATION_SPEED_MPS: f64 = 15.0;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid vehicle parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("command field `{field}` = {value} outside its range")]
    CommandOutOfRange { field: &'static str, value: f64 },
    #[error("scenario lasts {duration_s} s, shorter than one {horizon_s} s prediction horizon")]
    ScenarioTooShort { duration_s: f64, horizon_s: f64 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Lumped vehicle coefficients plus the integration step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    pub mass_kg: f64,
    /// ½ρC_dA, N·s²/m².
    pub air_drag_coeff: f64,
    /// C_r·M·g folded into one coefficient, N·s/m.
    pub roll_coeff: f64,
    pub grade_angle_rad: f64,
    pub dt_s: f64,
    /// Traction acceleration at full throttle (and its negative at full brake).
    pub max_traction_mps2: f64,
    /// Steady-state yaw rate per unit steer per m/s.
    pub steer_gain: f64,
    pub yaw_time_constant_s: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self::calibrated(CALIBRATION_SPEED_MPS)
    }
}

impl VehicleParams {
    /// Default sedan with resistance coefficients chosen so that the air and
    /// rolling forces at `speed_mps` equal the calibration forces.
    pub fn calibrated(speed_mps: f64) -> Self {
        Self {
            mass_kg: 1500.0,
            air_drag_coeff: CALIBRATION_AIR_N / (speed_mps * speed_mps),
            roll_coeff: CALIBRATION_ROLL_N / speed_mps,
            grade_angle_rad: 0.0,
            dt_s: PREDICTION_HORIZON_S,
            max_traction_mps2: 4.0,
            steer_gain: 0.05,
            yaw_time_constant_s: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("mass_kg", self.mass_kg),
            ("dt_s", self.dt_s),
            ("max_traction_mps2", self.max_traction_mps2),
            ("yaw_time_constant_s", self.yaw_time_constant_s),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::InvalidParam { field, reason: format!("{v} must be > 0") });
            }
        }
        let non_negative = [("air_drag_coeff", self.air_drag_coeff), ("roll_coeff", self.roll_coeff)];
        for (field, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::InvalidParam { field, reason: format!("{v} must be >= 0") });
            }
        }
        if !self.grade_angle_rad.is_finite() || !self.steer_gain.is_finite() {
            return Err(SimError::InvalidParam {
                field: "grade_angle_rad/steer_gain",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    /// Travel resistance split into its parts at speed `v`.
    pub fn resistance(&self, speed_mps: f64) -> Resistance {
        Resistance {
            air_n: self.air_drag_coeff * speed_mps * speed_mps,
            roll_n: self.roll_coeff * speed_mps,
            grade_n: self.mass_kg * GRAVITY * self.grade_angle_rad.sin(),
        }
    }

    /// Traction acceleration for a unified control value.
    pub fn traction_accel(&self, unified: f64) -> f64 {
        self.max_traction_mps2 * (2.0 * unified - 1.0)
    }

    /// Unified control that holds `speed_mps` steady, if reachable.
    pub fn equilibrium_control(&self, speed_mps: f64) -> Option<f64> {
        let needed = self.resistance(speed_mps).total() / self.mass_kg;
        let u = (needed / self.max_traction_mps2 + 1.0) / 2.0;
        (0.0..=1.0).contains(&u).then_some(u)
    }

    /// Number of integration steps spanning the 50 ms prediction horizon.
    pub fn horizon_steps(&self) -> usize {
        ((PREDICTION_HORIZON_S / self.dt_s).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resistance {
    pub air_n: f64,
    pub roll_n: f64,
    pub grade_n: f64,
}

impl Resistance {
    pub fn total(&self) -> f64 {
        self.air_n + self.roll_n + self.grade_n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub speed_mps: f64,
    pub yaw_rate_rps: f64,
    pub accel_mps2: f64,
    pub time_s: f64,
}

impl VehicleState {
    pub fn at_speed(speed_mps: f64) -> Self {
        Self { speed_mps: speed_mps.max(0.0), ..Self::default() }
    }
}

/// Raw driver command. Throttle and brake are folded into the unified signal
/// before they reach the powertrain.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlCommand {
    pub throttle: f64,
    pub brake: f64,
    pub steer: f64,
}

impl ControlCommand {
    pub fn new(throttle: f64, brake: f64, steer: f64) -> Result<Self, SimError> {
        let cmd = Self { throttle, brake, steer };
        cmd.validate()?;
        Ok(cmd)
    }

    /// Inverse of the unified signal: `u > 0.5` is throttle, `u < 0.5` brake.
    pub fn from_unified(unified: f64, steer: f64) -> Self {
        let u = unified.clamp(0.0, 1.0);
        Self { throttle: (2.0 * u - 1.0).max(0.0), brake: (1.0 - 2.0 * u).max(0.0), steer: steer.clamp(-1.0, 1.0) }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let unit = [("throttle", self.throttle), ("brake", self.brake)];
        for (field, value) in unit {
            if !(0.0..=1.0).contains(&value) {
                return Err(SimError::CommandOutOfRange { field, value });
            }
        }
        if !(-1.0..=1.0).contains(&self.steer) {
            return Err(SimError::CommandOutOfRange { field: "steer", value: self.steer });
        }
        Ok(())
    }

    /// `(T - B + 1) / 2`.
    pub fn unified(&self) -> f64 {
        unified_signal(self.throttle, self.brake)
    }

    /// Actuator vector `[throttle, brake, steer]` (p = 3).
    pub fn to_vector(&self) -> [f64; 3] {
        [self.throttle, self.brake, self.steer]
    }

    pub fn from_vector(v: [f64; 3]) -> Self {
        Self { throttle: v[0], brake: v[1], steer: v[2] }
    }
}

pub(crate) fn unified_signal(throttle: f64, brake: f64) -> f64 {
    (throttle - brake + 1.0) / 2.0
}

/// Sensor reading in the fixed order `[accel, speed, yaw_rate]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Measurement {
    pub accel_mps2: f64,
    pub speed_mps: f64,
    pub yaw_rate_rps: f64,
    pub time_s: f64,
}

impl Measurement {
    pub const DIM: usize = 3;

    pub fn to_vector(&self) -> [f64; 3] {
        [self.accel_mps2, self.speed_mps, self.yaw_rate_rps]
    }

    pub fn from_vector(v: [f64; 3], time_s: f64) -> Self {
        Self { accel_mps2: v[0], speed_mps: v[1], yaw_rate_rps: v[2], time_s }
    }
}

/// Advances the vehicle by one `dt`.
pub fn step(params: &VehicleParams, state: &VehicleState, cmd: &ControlCommand) -> VehicleState {
    let v = state.speed_mps;
    let a_f = params.traction_accel(cmd.unified());
    let accel = a_f - params.resistance(v).total() / params.mass_kg;
    let dt = params.dt_s;
    let yaw_target = params.steer_gain * cmd.steer * v;
    VehicleState {
        speed_mps: (v + accel * dt).max(0.0),
        yaw_rate_rps: state.yaw_rate_rps + dt * (yaw_target - state.yaw_rate_rps) / params.yaw_time_constant_s,
        accel_mps2: accel,
        time_s: state.time_s + dt,
    }
}

/// Emits a noisy `[accel, speed, yaw_rate]` reading. Three normals are drawn
/// per call regardless of the noise level so the stream stays aligned.
pub fn measure<R: Rng + ?Sized>(state: &VehicleState, noise_std: [f64; 3], rng: &mut R) -> Measurement {
    let mut noise = [0.0; 3];
    for (n, std) in noise.iter_mut().zip(noise_std) {
        let z: f64 = rng.sample(StandardNormal);
        *n = std * z;
    }
    Measurement {
        accel_mps2: state.accel_mps2 + noise[0],
        speed_mps: state.speed_mps + noise[1],
        yaw_rate_rps: state.yaw_rate_rps + noise[2],
        time_s: state.time_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn calibration_reproduces_table_forces() {
        let p = VehicleParams::default();
        let r = p.resistance(CALIBRATION_SPEED_MPS);
        assert!((r.air_n - 68.9).abs() < 1e-9);
        assert!((r.roll_n - 271.6).abs() < 1e-9);
        assert_eq!(r.grade_n, 0.0);
        assert!((r.total() - 340.5).abs() < 1e-9);
    }

    #[test]
    fn equilibrium_at_calibration_speed() {
        let p = VehicleParams::default();
        // a_f * M = 340.5 N
        let a_f = 340.5 / p.mass_kg;
        let u = (a_f / p.max_traction_mps2 + 1.0) / 2.0;
        let cmd = ControlCommand::from_unified(u, 0.0);
        let next = step(&p, &VehicleState::at_speed(CALIBRATION_SPEED_MPS), &cmd);
        assert!(next.accel_mps2.abs() < 1e-12, "accel {}", next.accel_mps2);
    }

    #[test]
    fn rest_stays_at_rest_with_neutral_command() {
        let p = VehicleParams::default();
        let cmd = ControlCommand::new(0.0, 0.0, 0.0).unwrap();
        let next = step(&p, &VehicleState::default(), &cmd);
        assert_eq!(next.accel_mps2, 0.0);
        assert_eq!(next.speed_mps, 0.0);
    }

    #[test]
    fn ten_mps_matches_hand_evaluation() {
        let p = VehicleParams::default();
        let cmd = ControlCommand::new(0.3, 0.0, 0.0).unwrap();
        let next = step(&p, &VehicleState::at_speed(10.0), &cmd);
        // u = 0.65 -> a_f = 4 * 0.3 = 1.2
        // air = 68.9 * (10/15)^2, roll = 271.6 * (10/15)
        let air = 68.9 * 100.0 / 225.0;
        let roll = 271.6 * 10.0 / 15.0;
        let expected = 1.2 - (air + roll) / 1500.0;
        assert!((next.accel_mps2 - expected).abs() < 1e-12);
        assert!((next.speed_mps - (10.0 + expected * 0.05)).abs() < 1e-12);
        assert!((next.time_s - 0.05).abs() < 1e-15);
    }

    #[test]
    fn speed_is_clamped_at_zero() {
        let p = VehicleParams::default();
        let cmd = ControlCommand::new(0.0, 1.0, 0.0).unwrap();
        let next = step(&p, &VehicleState::at_speed(0.05), &cmd);
        assert_eq!(next.speed_mps, 0.0);
    }

    #[test]
    fn full_brake_speed_never_increases() {
        let p = VehicleParams::default();
        let cmd = ControlCommand::new(0.0, 1.0, 0.3).unwrap();
        let mut s = VehicleState::at_speed(30.0);
        for _ in 0..400 {
            let next = step(&p, &s, &cmd);
            assert!(next.speed_mps <= s.speed_mps);
            s = next;
        }
        assert_eq!(s.speed_mps, 0.0);
    }

    #[test]
    fn equilibrium_control_holds_speed() {
        let p = VehicleParams::default();
        for v in [0.0, 3.0, 12.5, 15.0, 27.0] {
            let u = p.equilibrium_control(v).unwrap();
            let next = step(&p, &VehicleState::at_speed(v), &ControlCommand::from_unified(u, 0.0));
            assert!(next.accel_mps2.abs() < 1e-9);
            assert!((next.speed_mps - v).abs() < 1e-9 * p.dt_s);
        }
    }

    #[test]
    fn measure_is_exact_at_zero_noise() {
        let s = VehicleState { speed_mps: 5.0, yaw_rate_rps: 0.1, accel_mps2: 1.2, time_s: 3.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = measure(&s, [0.0; 3], &mut rng);
        assert_eq!(m.to_vector(), [1.2, 5.0, 0.1]);
        assert_eq!(m.time_s, 3.0);
    }

    #[test]
    fn measure_is_reproducible_for_a_seed() {
        let s = VehicleState { speed_mps: 5.0, yaw_rate_rps: 0.1, accel_mps2: 1.2, time_s: 0.0 };
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            (0..10).map(|_| measure(&s, [0.1, 0.1, 0.01], &mut rng).to_vector()).collect::<Vec<_>>()
        };
        let (a, b) = (draw(), draw());
        for (x, y) in a.iter().zip(&b) {
            for (p, q) in x.iter().zip(y) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
        }
    }

    #[test]
    fn measurement_noise_has_requested_std() {
        let s = VehicleState { speed_mps: 5.0, yaw_rate_rps: 0.1, accel_mps2: 1.2, time_s: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let xs: Vec<[f64; 3]> = (0..n).map(|_| measure(&s, [0.1, 0.0, 0.0], &mut rng).to_vector()).collect();
        let mean = xs.iter().map(|x| x[0]).sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x[0] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() - 0.1).abs() < 0.005, "std {}", var.sqrt());
        assert!(xs.iter().all(|x| x[1] == 5.0 && x[2] == 0.1));
    }

    #[test]
    fn command_validation() {
        assert!(ControlCommand::new(1.1, 0.0, 0.0).is_err());
        assert!(ControlCommand::new(0.5, -0.1, 0.0).is_err());
        assert!(ControlCommand::new(0.5, 0.0, -1.5).is_err());
        let c = ControlCommand::from_unified(0.25, 2.0);
        assert_eq!((c.throttle, c.brake, c.steer), (0.0, 0.5, 1.0));
        assert_eq!(c.unified(), 0.25);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = VehicleParams::default();
        p.mass_kg = 0.0;
        assert!(p.validate().is_err());
        let mut p = VehicleParams::default();
        p.roll_coeff = -1.0;
        assert!(p.validate().is_err());
        assert!(VehicleParams::default().validate().is_ok());
    }
}
