use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::attacks::{AttackSchedule, AttackTargets};
use crate::detector::DetectorConfig;
use crate::learner::{OnlineAdaptConfig, TrainConfig};
use crate::vehicle_sim::{generate_scenario, DrivingStyle, Scenario, VehicleParams, DEFAULT_NOISE_STD};

/// Actuator vector length: `[throttle, brake, steer]`.
pub const ACTUATOR_DIM: usize = 3;
/// Sensor vector length: `[accel, speed, yaw_rate]`.
pub const SENSOR_DIM: usize = 3;

/// Everything one invocation needs, read from a TOML file. Every section and
/// field is optional and falls back to its default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub vehicle: VehicleParams,
    pub scenario: ScenarioSection,
    pub attack: AttackSection,
    pub filter: FilterSection,
    pub detector: DetectorConfig,
    pub sweep: SweepSection,
    pub learner: LearnerSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub style: DrivingStyle,
    pub duration_s: f64,
    pub noise_std: [f64; 3],
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self { style: DrivingStyle::Aggressive, duration_s: 60.0, noise_std: DEFAULT_NOISE_STD }
    }
}

/// PWM DoS schedule plus 1-based target indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSection {
    pub enabled: bool,
    pub start_s: f64,
    pub period_s: f64,
    pub duty: f64,
    pub end_s: Option<f64>,
    pub targets: TargetLists,
}

/// `targets = { actuator = [1], sensor = [] }`
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetLists {
    pub actuator: Vec<usize>,
    pub sensor: Vec<usize>,
}

impl Default for AttackSection {
    fn default() -> Self {
        let s = AttackSchedule::default();
        Self {
            enabled: true,
            start_s: s.start_s,
            period_s: s.pwm_period_s,
            duty: s.pwm_duty,
            end_s: s.end_s,
            targets: TargetLists { actuator: vec![1, 2, 3], sensor: Vec::new() },
        }
    }
}

impl AttackSection {
    pub fn schedule(&self) -> Result<AttackSchedule, HarnessError> {
        Ok(AttackSchedule::new(self.start_s, self.period_s, self.duty, self.end_s)?)
    }

    pub fn targets(&self) -> Result<AttackTargets, HarnessError> {
        Ok(AttackTargets::new(
            self.targets.actuator.iter().copied(),
            ACTUATOR_DIM,
            self.targets.sensor.iter().copied(),
            SENSOR_DIM,
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    Kf,
    UkfMl,
    Both,
}

impl EstimatorChoice {
    pub fn needs_model(self) -> bool {
        self != Self::Kf
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub estimator: EstimatorChoice,
    /// Weight file for the learned model; defaults to `<out>/model.txt`.
    pub model_path: Option<PathBuf>,
    /// Sigma-point spread.
    pub phi: f64,
    /// Process-noise diagonal over `[speed, yaw_rate, accel]`.
    pub q_diag: [f64; 3],
    /// Constant travel resistance of the baseline model; the tabulated
    /// flat-road value when absent.
    pub r_travel_n: Option<f64>,
    pub online: OnlineAdaptConfig,
    pub online_lr: f64,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            estimator: EstimatorChoice::Both,
            model_path: None,
            phi: 1.0,
            q_diag: [1e-3; 3],
            r_travel_n: None,
            online: OnlineAdaptConfig::default(),
            online_lr: 1e-3,
        }
    }
}

/// Threshold grid: `count` evenly spaced values on `[scale*t1_min, scale*t1_max]`,
/// unless an explicit list is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub t1_min: f64,
    pub t1_max: f64,
    pub count: usize,
    pub scale: f64,
    pub thresholds: Option<Vec<f64>>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { t1_min: 10.0, t1_max: 25.0, count: 30, scale: 1.0, thresholds: None }
    }
}

impl SweepSection {
    pub fn t1_list(&self) -> Vec<f64> {
        if let Some(list) = &self.thresholds {
            return list.clone();
        }
        let (lo, hi) = (self.scale * self.t1_min, self.scale * self.t1_max);
        if self.count == 1 {
            return vec![lo];
        }
        let last = (self.count - 1) as f64;
        // Endpoints are hit exactly.
        (0..self.count).map(|i| if i + 1 == self.count { hi } else { lo + (hi - lo) * i as f64 / last }).collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let list = self.t1_list();
        if list.is_empty() {
            return Err(HarnessError::Config("sweep threshold list is empty".into()));
        }
        if list.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(HarnessError::Config(format!("sweep thresholds must be positive: {list:?}")));
        }
        if self.thresholds.is_none() && !(self.t1_min <= self.t1_max && self.scale > 0.0) {
            return Err(HarnessError::Config("sweep needs t1_min <= t1_max and scale > 0".into()));
        }
        Ok(())
    }
}

/// Offline training data and optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub train_fraction: f64,
    /// One clean log per (seed, style) pair.
    pub train_seeds: Vec<u64>,
    pub train_styles: Vec<DrivingStyle>,
    pub train_duration_s: f64,
}

impl Default for LearnerSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            base_lr: t.base_lr,
            train_fraction: t.train_fraction,
            train_seeds: vec![1001, 1002],
            train_styles: vec![DrivingStyle::Cruise, DrivingStyle::StopAndGo, DrivingStyle::Aggressive],
            train_duration_s: 120.0,
        }
    }
}

impl LearnerSection {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            base_lr: self.base_lr,
            train_fraction: self.train_fraction,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 7, out_dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Driving scenario for `run.seed` with the configured noise.
    pub fn build_scenario(&self) -> Result<Scenario, HarnessError> {
        let mut scenario = generate_scenario(self.run.seed, self.scenario.duration_s, self.scenario.style)?;
        scenario.noise_std = self.scenario.noise_std;
        Ok(scenario)
    }

    pub fn model_path(&self) -> PathBuf {
        self.filter.model_path.clone().unwrap_or_else(|| self.run.out_dir.join("model.txt"))
    }

    /// Checks everything that does not touch the filesystem.
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.vehicle.validate()?;
        if !(self.scenario.duration_s.is_finite() && self.scenario.duration_s > 0.0) {
            return Err(HarnessError::Config(format!("scenario.duration_s = {}", self.scenario.duration_s)));
        }
        if self.scenario.noise_std.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(HarnessError::Config(format!("scenario.noise_std = {:?}", self.scenario.noise_std)));
        }
        self.attack.schedule()?;
        self.attack.targets()?;
        if !(self.filter.phi.is_finite() && self.filter.phi > 0.0) {
            return Err(HarnessError::Config(format!("filter.phi = {}", self.filter.phi)));
        }
        if self.filter.q_diag.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
            return Err(HarnessError::Config(format!("filter.q_diag = {:?}", self.filter.q_diag)));
        }
        if !(self.filter.online.s_rate.is_finite() && self.filter.online.s_rate > 0.0) {
            return Err(HarnessError::Config(format!("filter.online.s_rate = {}", self.filter.online.s_rate)));
        }
        if !(self.filter.online_lr.is_finite() && self.filter.online_lr >= 0.0) {
            return Err(HarnessError::Config(format!("filter.online_lr = {}", self.filter.online_lr)));
        }
        self.detector.validate()?;
        self.sweep.validate()?;
        self.learner.train_config(0).validate()?;
        if self.learner.train_seeds.is_empty() || self.learner.train_styles.is_empty() {
            return Err(HarnessError::Config("learner needs at least one seed and one style".into()));
        }
        Ok(())
    }

    /// Fails when the learned model is required but its file is missing.
    pub fn check_model_available(&self) -> Result<(), HarnessError> {
        let path = self.model_path();
        if self.filter.estimator.needs_model() && !path.is_file() {
            return Err(HarnessError::Config(format!(
                "model file {} not found; run `vehids train` first or set filter.model_path",
                path.display()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_parse() {
        let cfg = RunConfig::from_toml(
            r#"
            [scenario]
            style = "cruise"
            duration_s = 30.0

            [attack]
            targets = { actuator = [], sensor = [1, 2] }
            duty = 1.0

            [filter]
            estimator = "kf"

            [detector]
            t1 = 20.0

            [sweep]
            thresholds = [12.0, 14.0]

            [run]
            seed = 3
            "#,
        )
        .unwrap();
        assert_eq!(cfg.scenario.style, DrivingStyle::Cruise);
        assert_eq!(cfg.attack.targets.sensor, vec![1, 2]);
        assert!(cfg.attack.targets.actuator.is_empty());
        assert_eq!(cfg.filter.estimator, EstimatorChoice::Kf);
        assert_eq!(cfg.detector.t1, 20.0);
        assert_eq!(cfg.detector.window_n, 40);
        assert_eq!(cfg.sweep.t1_list(), vec![12.0, 14.0]);
        assert_eq!(cfg.run.seed, 3);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        for text in [
            "[scenario]\nspeed = 3",
            "[bogus]\nx = 1",
            "[attack]\ntargets = { actuator = [4] }",
            "[attack]\nduty = 1.5",
            "[attack]\nend_s = 10.0",
            "[detector]\nt1 = -1.0",
            "[sweep]\nthresholds = []",
            "[vehicle]\nmass_kg = 0.0",
            "[filter]\nestimator = \"lstm\"",
            "not toml at all [",
        ] {
            let err = RunConfig::from_toml(text).unwrap_err();
            assert!(err.is_config_error(), "{text}: {err}");
        }
    }

    #[test]
    fn default_grid_spans_both_endpoints() {
        let list = SweepSection::default().t1_list();
        assert_eq!(list.len(), 30);
        assert_eq!(list[0], 10.0);
        assert_eq!(list[29], 25.0);
        assert!(list.windows(2).all(|w| w[1] > w[0]));
        let scaled = SweepSection { scale: 2.0, ..SweepSection::default() }.t1_list();
        assert_eq!((scaled[0], scaled[29]), (20.0, 50.0));
    }

    #[test]
    fn missing_model_is_reported() {
        let mut cfg = RunConfig::default();
        cfg.filter.model_path = Some(PathBuf::from("/nonexistent/model.txt"));
        assert!(cfg.check_model_available().unwrap_err().is_config_error());
        cfg.filter.estimator = EstimatorChoice::Kf;
        assert!(cfg.check_model_available().is_ok());
    }
}
