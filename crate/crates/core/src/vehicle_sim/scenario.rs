use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{step, ControlCommand, SimError, VehicleParams, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivingStyle {
    Cruise,
    StopAndGo,
    Aggressive,
}

impl std::str::FromStr for DrivingStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cruise" => Ok(Self::Cruise),
            "stop_and_go" => Ok(Self::StopAndGo),
            "aggressive" => Ok(Self::Aggressive),
            other => Err(format!("unknown driving style `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Piecewise constant: the latest keyframe holds until the next one.
    Hold,
    /// Linear in the unified signal and steer; throttle and brake are split
    /// back out so they are never applied together.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub time_s: f64,
    pub command: ControlCommand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub duration_s: f64,
    pub seed: u64,
    pub initial_speed_mps: f64,
    pub keyframes: Vec<Keyframe>,
    pub interpolation: Interpolation,
    /// Per-channel measurement noise, ordered `[accel, speed, yaw_rate]`.
    pub noise_std: [f64; 3],
}

pub const DEFAULT_NOISE_STD: [f64; 3] = [0.1, 0.1, 0.01];

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(SimError::InvalidScenario(format!("duration_s = {}", self.duration_s)));
        }
        if self.keyframes.is_empty() {
            return Err(SimError::InvalidScenario("no keyframes".into()));
        }
        if self.keyframes.windows(2).any(|w| w[1].time_s <= w[0].time_s) {
            return Err(SimError::InvalidScenario("keyframe times must increase".into()));
        }
        if self.noise_std.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(SimError::InvalidScenario(format!("noise_std {:?}", self.noise_std)));
        }
        for k in &self.keyframes {
            k.command.validate()?;
        }
        Ok(())
    }

    /// Driver command at time `t`.
    pub fn command_at(&self, t: f64) -> ControlCommand {
        let idx = self.keyframes.partition_point(|k| k.time_s <= t);
        if idx == 0 {
            return self.keyframes[0].command;
        }
        let prev = &self.keyframes[idx - 1];
        match (self.interpolation, self.keyframes.get(idx)) {
            (Interpolation::Linear, Some(next)) => {
                let w = (t - prev.time_s) / (next.time_s - prev.time_s);
                let u = prev.command.unified() + w * (next.command.unified() - prev.command.unified());
                let steer = prev.command.steer + w * (next.command.steer - prev.command.steer);
                ControlCommand::from_unified(u, steer)
            }
            _ => prev.command,
        }
    }
}

struct StyleProfile {
    gap_s: (f64, f64),
    gain: f64,
    jitter: f64,
    steer_std: f64,
}

impl DrivingStyle {
    fn profile(self) -> StyleProfile {
        match self {
            Self::Cruise => StyleProfile { gap_s: (3.0, 5.0), gain: 0.03, jitter: 0.02, steer_std: 0.05 },
            Self::StopAndGo => StyleProfile { gap_s: (2.0, 4.0), gain: 0.08, jitter: 0.05, steer_std: 0.15 },
            Self::Aggressive => StyleProfile { gap_s: (1.0, 2.5), gain: 0.25, jitter: 0.15, steer_std: 0.35 },
        }
    }

    fn initial_speed(self) -> f64 {
        match self {
            Self::Cruise => 15.0,
            Self::StopAndGo => 0.0,
            Self::Aggressive => 12.0,
        }
    }

    fn target_speed(self, segment: usize, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Self::Cruise => rng.random_range(12.0..18.0),
            Self::StopAndGo if segment % 2 == 1 => 0.0,
            Self::StopAndGo => rng.random_range(8.0..14.0),
            Self::Aggressive => rng.random_range(0.0..26.0),
        }
    }
}

/// Builds a deterministic keyframe schedule from a synthetic driver.
///
/// The driver picks a target speed per segment and steers the unified signal
/// toward it with a style-dependent proportional gain plus jitter, planning
/// against the default vehicle.
pub fn generate_scenario(seed: u64, duration_s: f64, style: DrivingStyle) -> Result<Scenario, SimError> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(SimError::InvalidScenario(format!("duration_s = {duration_s}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profile = style.profile();
    let jitter = Normal::new(0.0, profile.jitter).expect("finite std");
    let steer_noise = Normal::new(0.0, profile.steer_std).expect("finite std");
    let plant = VehicleParams::default();

    let mut state = VehicleState::at_speed(style.initial_speed());
    let mut keyframes = Vec::new();
    let mut t = 0.0;
    let mut segment = 0;
    let mut target = style.target_speed(segment, &mut rng);
    let mut segment_end = rng.random_range(6.0..12.0);
    while t < duration_s {
        if t >= segment_end {
            segment += 1;
            target = style.target_speed(segment, &mut rng);
            segment_end = t + rng.random_range(6.0..12.0);
        }
        let base = plant.equilibrium_control(target).unwrap_or(1.0);
        let u = (base + profile.gain * (target - state.speed_mps) + jitter.sample(&mut rng)).clamp(0.0, 1.0);
        let steer = steer_noise.sample(&mut rng).clamp(-1.0, 1.0);
        let command = ControlCommand::from_unified(u, steer);
        keyframes.push(Keyframe { time_s: t, command });

        let gap = rng.random_range(profile.gap_s.0..profile.gap_s.1);
        let steps = (gap / plant.dt_s).round() as usize;
        for _ in 0..steps {
            state = step(&plant, &state, &command);
        }
        t += steps as f64 * plant.dt_s;
    }

    Ok(Scenario {
        duration_s,
        seed,
        initial_speed_mps: style.initial_speed(),
        keyframes,
        interpolation: Interpolation::Linear,
        noise_std: DEFAULT_NOISE_STD,
    })
}
