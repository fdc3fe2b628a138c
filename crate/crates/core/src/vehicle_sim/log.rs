use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{measure, step, ControlCommand, Measurement, Scenario, SimError, VehicleParams, VehicleState};

pub const LOG_CSV_HEADER: &str = "time_s,throttle,brake,steer,u,speed,yaw_rate,accel,meas_accel,meas_speed,meas_yaw";

/// Measurement noise uses its own stream so changing the scenario generator
/// never shifts the noise samples of a given seed.
const NOISE_STREAM: u64 = 0x6e6f_6973_655f_7631;

pub(crate) fn noise_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ NOISE_STREAM)
}

/// One simulator tick: the state at `time_s`, the command issued then, the
/// reading taken then, and the true acceleration one prediction horizon later.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub state: VehicleState,
    pub command: ControlCommand,
    pub measurement: Measurement,
    pub label_accel: f64,
}

/// Simulates `scenario` without attacks, one record per `dt`.
pub fn run_log(params: &VehicleParams, scenario: &Scenario) -> Result<Vec<LogRecord>, SimError> {
    params.validate()?;
    scenario.validate()?;
    let horizon = params.horizon_steps();
    let ticks = (scenario.duration_s / params.dt_s).round() as usize;
    if ticks == 0 || scenario.duration_s < horizon as f64 * params.dt_s {
        return Err(SimError::ScenarioTooShort {
            duration_s: scenario.duration_s,
            horizon_s: horizon as f64 * params.dt_s,
        });
    }

    let mut rng = noise_rng(scenario.seed);
    let mut states = Vec::with_capacity(ticks + horizon);
    let mut commands = Vec::with_capacity(ticks + horizon);
    let mut state = VehicleState::at_speed(scenario.initial_speed_mps);
    for k in 0..ticks + horizon {
        // Keep time on the grid instead of accumulating dt.
        state.time_s = k as f64 * params.dt_s;
        let cmd = scenario.command_at(state.time_s);
        states.push(state);
        commands.push(cmd);
        state = step(params, &state, &cmd);
    }

    Ok((0..ticks)
        .map(|k| LogRecord {
            state: states[k],
            command: commands[k],
            measurement: measure(&states[k], scenario.noise_std, &mut rng),
            label_accel: states[k + horizon].accel_mps2,
        })
        .collect())
}

pub fn write_log_csv<W: Write>(mut out: W, records: &[LogRecord]) -> io::Result<()> {
    writeln!(out, "{LOG_CSV_HEADER}")?;
    for r in records {
        let (s, c, m) = (&r.state, &r.command, &r.measurement);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.time_s,
            c.throttle,
            c.brake,
            c.steer,
            c.unified(),
            s.speed_mps,
            s.yaw_rate_rps,
            s.accel_mps2,
            m.accel_mps2,
            m.speed_mps,
            m.yaw_rate_rps
        )?;
    }
    Ok(())
}
