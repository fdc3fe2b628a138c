use nalgebra::{DMatrix, DVector};

use super::config::RunConfig;
use super::metrics::StepLabel;
use super::HarnessError;
use crate::attacks::{attack_actuator, attack_sensor, AttackSchedule, AttackTargets};
use crate::detector::Detector;
use crate::estimators::{
    EstimatorError, GaussianBelief, KalmanFilter, LinearModel, NoiseModel, UnscentedFilter, UpdateResult, UtParams,
};
use crate::learner::{
    as_process_model, samples_from_log, train_offline, MlpModel, MlpProcess, OnlineAdapter, TrainReport, TrainingSample,
};
use crate::vehicle_sim::{
    generate_scenario, measure, noise_rng, run_log, step, ControlCommand, Measurement, VehicleState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Kf,
    UkfMl,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Kf => "kf",
            Self::UkfMl => "ukf_ml",
        }
    }
}

/// One detector step. Row `k` describes time `t_k`: the plant state and the
/// (possibly blocked) reading taken then, the residual of the filter cycle
/// that consumed that reading, and the command issued right after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub time_s: f64,
    pub command: ControlCommand,
    pub state: VehicleState,
    pub measurement: Measurement,
    /// The reading at `t_k` was blocked, or the command it reflects was.
    pub attack_active: bool,
    pub residual: [f64; 3],
    pub s1: f64,
    pub s2: f64,
    pub alarm: bool,
}

#[derive(Debug, Clone)]
pub struct EstimatorRun {
    pub kind: EstimatorKind,
    pub records: Vec<StepRecord>,
    pub online_applied: usize,
    pub online_skipped: usize,
    pub rejected_residuals: usize,
}

impl EstimatorRun {
    pub fn labels(&self) -> Vec<StepLabel> {
        self.records.iter().map(|r| StepLabel { t: r.time_s, truth: r.attack_active, predicted: r.alarm }).collect()
    }

    pub fn residuals(&self) -> Vec<[f64; 3]> {
        self.records.iter().map(|r| r.residual).collect()
    }

    pub fn truth(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.attack_active).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub seed: u64,
    pub runs: Vec<EstimatorRun>,
}

impl ExperimentOutput {
    pub fn run(&self, kind: EstimatorKind) -> Option<&EstimatorRun> {
        self.runs.iter().find(|r| r.kind == kind)
    }
}

/// Plant trajectory shared by every estimator.
struct Trace {
    /// Reading at `t_0`, used only to initialize the filters.
    y0: Measurement,
    /// Command issued at `t_0`.
    c0: ControlCommand,
    ticks: Vec<Tick>,
}

struct Tick {
    time_s: f64,
    state: VehicleState,
    measurement: Measurement,
    command: ControlCommand,
    attack_active: bool,
}

fn simulate(cfg: &RunConfig) -> Result<Trace, HarnessError> {
    let params = &cfg.vehicle;
    let scenario = cfg.build_scenario()?;
    let (schedule, targets) = if cfg.attack.enabled {
        (cfg.attack.schedule()?, cfg.attack.targets()?)
    } else {
        (AttackSchedule::default(), AttackTargets::default())
    };
    let active = |t: f64| cfg.attack.enabled && schedule.is_active(t);
    let hits_actuators = !targets.actuators().is_empty();
    let hits_sensors = !targets.sensors().is_empty();

    let mut rng = noise_rng(scenario.seed);
    let read = |state: &VehicleState, rng: &mut _| {
        let m = measure(state, scenario.noise_std, rng);
        Measurement::from_vector(attack_sensor(m.to_vector(), &targets, active(state.time_s)), state.time_s)
    };
    let issue = |state: &VehicleState| {
        let cmd = scenario.command_at(state.time_s);
        let applied = ControlCommand::from_vector(attack_actuator(cmd.to_vector(), &targets, active(state.time_s)));
        (cmd, applied)
    };

    let ticks_n = (scenario.duration_s / params.dt_s).round() as usize;
    let mut state = VehicleState::at_speed(scenario.initial_speed_mps);
    let y0 = read(&state, &mut rng);
    let (c0, applied0) = issue(&state);
    let mut prev_time = state.time_s;
    state = step(params, &state, &applied0);

    let mut ticks = Vec::with_capacity(ticks_n);
    for k in 1..=ticks_n {
        state.time_s = k as f64 * params.dt_s;
        let measurement = read(&state, &mut rng);
        let attack_active = (hits_sensors && active(state.time_s)) || (hits_actuators && active(prev_time));
        let (command, applied) = issue(&state);
        ticks.push(Tick { time_s: state.time_s, state, measurement, command, attack_active });
        prev_time = state.time_s;
        state = step(params, &state, &applied);
    }
    Ok(Trace { y0, c0, ticks })
}

fn control(cmd: &ControlCommand) -> DVector<f64> {
    DVector::from_vec(vec![cmd.unified(), cmd.steer])
}

fn observation(m: &Measurement) -> DVector<f64> {
    DVector::from_column_slice(&m.to_vector())
}

fn initial_belief(y0: &Measurement, noise: &NoiseModel) -> Result<GaussianBelief, HarnessError> {
    let mean = DVector::from_vec(vec![y0.speed_mps.max(0.0), y0.yaw_rate_rps, y0.accel_mps2]);
    // Sensor order is [accel, speed, yaw]; state order is [speed, yaw, accel].
    let r = &noise.r_meas;
    let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![r[(1, 1)], r[(2, 2)], r[(0, 0)]])) + &noise.q_proc;
    GaussianBelief::new(mean, cov).map_err(|source| HarnessError::Step { estimator: "init", step: 0, source })
}

fn noise_model(cfg: &RunConfig) -> NoiseModel {
    let r: Vec<f64> = cfg.scenario.noise_std.iter().map(|s| s * s).collect();
    NoiseModel::diagonal(&cfg.filter.q_diag, &r)
}

enum Filter {
    Kf(KalmanFilter),
    Ukf { filter: Box<UnscentedFilter<MlpProcess>>, adapter: OnlineAdapter },
}

impl Filter {
    fn belief(&self) -> &GaussianBelief {
        match self {
            Self::Kf(f) => &f.belief,
            Self::Ukf { filter, .. } => &filter.belief,
        }
    }

    fn step(&mut self, u: &DVector<f64>, y: &DVector<f64>) -> Result<UpdateResult, EstimatorError> {
        match self {
            Self::Kf(f) => f.step(u, y),
            Self::Ukf { filter, .. } => filter.step(u, y),
        }
    }
}

fn run_estimator(
    cfg: &RunConfig,
    trace: &Trace,
    kind: EstimatorKind,
    model: Option<&MlpModel>,
) -> Result<EstimatorRun, HarnessError> {
    let noise = noise_model(cfg);
    let belief = initial_belief(&trace.y0, &noise)?;
    let wrap = |step: usize| move |source| HarnessError::Step { estimator: kind.name(), step, source };
    let mut filter = match kind {
        EstimatorKind::Kf => {
            let model = match cfg.filter.r_travel_n {
                Some(r) => LinearModel::longitudinal(&cfg.vehicle, r),
                None => LinearModel::table_baseline(&cfg.vehicle),
            };
            Filter::Kf(KalmanFilter::new(model, belief, noise).map_err(wrap(0))?)
        }
        EstimatorKind::UkfMl => {
            let model = model.ok_or_else(|| HarnessError::Config("ukf_ml needs a trained model".into()))?;
            let process = as_process_model(model.clone(), &cfg.vehicle);
            let params = UtParams::standard(3, cfg.filter.phi);
            let filter = UnscentedFilter::new(process, belief, params, noise).map_err(wrap(0))?;
            let adapter = OnlineAdapter::new(cfg.filter.online, cfg.filter.online_lr);
            Filter::Ukf { filter: Box::new(filter), adapter }
        }
    };
    let mut detector = Detector::new(cfg.detector.clone())?;

    let mut records = Vec::with_capacity(trace.ticks.len());
    let mut prev_cmd = trace.c0;
    for (k, tick) in trace.ticks.iter().enumerate() {
        let u = control(&prev_cmd);
        let y = observation(&tick.measurement);
        let prior_mean = filter.belief().mean.clone();
        let result = filter.step(&u, &y).map_err(wrap(k + 1))?;
        let residual = [result.residual[0], result.residual[1], result.residual[2]];

        if let Filter::Ukf { filter, adapter } = &mut filter {
            let sample =
                TrainingSample { input: MlpProcess::input(&prior_mean, &u), target: tick.measurement.accel_mps2 };
            adapter.online_update(&mut filter.model.model, &sample, &residual);
        }

        detector.push_residual(&residual);
        records.push(StepRecord {
            time_s: tick.time_s,
            command: tick.command,
            state: tick.state,
            measurement: tick.measurement,
            attack_active: tick.attack_active,
            residual,
            s1: detector.s1(),
            s2: detector.s2(),
            alarm: detector.alarm().is_attack(),
        });
        prev_cmd = tick.command;
    }

    let (online_applied, online_skipped) = match &filter {
        Filter::Ukf { adapter, .. } => (adapter.applied, adapter.skipped),
        Filter::Kf(_) => (0, 0),
    };
    Ok(EstimatorRun { kind, records, online_applied, online_skipped, rejected_residuals: detector.rejected() })
}

/// Simulates the configured scenario under attack once and runs every
/// selected estimator over the same reading stream.
pub fn run_experiment(cfg: &RunConfig, model: Option<&MlpModel>) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate()?;
    let trace = simulate(cfg)?;
    let kinds: &[EstimatorKind] = match cfg.filter.estimator {
        super::EstimatorChoice::Kf => &[EstimatorKind::Kf],
        super::EstimatorChoice::UkfMl => &[EstimatorKind::UkfMl],
        super::EstimatorChoice::Both => &[EstimatorKind::Kf, EstimatorKind::UkfMl],
    };
    let runs = kinds.iter().map(|&kind| run_estimator(cfg, &trace, kind, model)).collect::<Result<_, _>>()?;
    Ok(ExperimentOutput { seed: cfg.run.seed, runs })
}

/// Clean logs for every configured (seed, style) pair, then offline training.
pub fn train_model(cfg: &RunConfig, seed: u64) -> Result<TrainReport, HarnessError> {
    cfg.validate()?;
    let horizon = cfg.vehicle.horizon_steps();
    let mut samples = Vec::new();
    for &log_seed in &cfg.learner.train_seeds {
        for &style in &cfg.learner.train_styles {
            let mut scenario = generate_scenario(log_seed, cfg.learner.train_duration_s, style)?;
            scenario.noise_std = cfg.scenario.noise_std;
            samples.extend(samples_from_log(&run_log(&cfg.vehicle, &scenario)?, horizon));
        }
    }
    Ok(train_offline(&samples, &cfg.learner.train_config(seed))?)
}
