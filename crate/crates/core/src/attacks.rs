//! DoS masking of actuator commands and sensor readings.
//!
//! A blocked component reads as 0. Activation follows a PWM pattern that
//! starts at `start_s` and repeats every `pwm_period_s`, on for the first
//! `pwm_duty` fraction of each period.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AttackError {
    #[error("invalid attack schedule: {0}")]
    InvalidSchedule(String),
    #[error("{kind} index {index} outside 1..={dim}")]
    IndexOutOfRange { kind: &'static str, index: usize, dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSchedule {
    pub start_s: f64,
    pub pwm_period_s: f64,
    pub pwm_duty: f64,
    /// `None` keeps the attack running to the end of the run.
    pub end_s: Option<f64>,
}

impl Default for AttackSchedule {
    fn default() -> Self {
        Self { start_s: 20.0, pwm_period_s: 2.0, pwm_duty: 0.5, end_s: Some(60.0) }
    }
}

impl AttackSchedule {
    pub fn new(start_s: f64, pwm_period_s: f64, pwm_duty: f64, end_s: Option<f64>) -> Result<Self, AttackError> {
        let s = Self { start_s, pwm_period_s, pwm_duty, end_s };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if !(self.start_s.is_finite() && self.start_s >= 0.0) {
            return Err(AttackError::InvalidSchedule(format!("start_s = {}", self.start_s)));
        }
        if !(self.pwm_period_s.is_finite() && self.pwm_period_s > 0.0) {
            return Err(AttackError::InvalidSchedule(format!("pwm_period_s = {}", self.pwm_period_s)));
        }
        if !(0.0..=1.0).contains(&self.pwm_duty) {
            return Err(AttackError::InvalidSchedule(format!("pwm_duty = {}", self.pwm_duty)));
        }
        if let Some(end) = self.end_s {
            if !(end > self.start_s) {
                return Err(AttackError::InvalidSchedule(format!("end_s = {end} must exceed start_s")));
            }
        }
        Ok(())
    }

    pub fn is_active(&self, t: f64) -> bool {
        if t < self.start_s || self.end_s.is_some_and(|end| t >= end) {
            return false;
        }
        (t - self.start_s).rem_euclid(self.pwm_period_s) < self.pwm_duty * self.pwm_period_s
    }
}

/// Blocked component sets, 1-based to match the usual Γ notation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttackTargets {
    actuators: BTreeSet<usize>,
    sensors: BTreeSet<usize>,
}

impl AttackTargets {
    pub fn new(
        actuators: impl IntoIterator<Item = usize>,
        actuator_dim: usize,
        sensors: impl IntoIterator<Item = usize>,
        sensor_dim: usize,
    ) -> Result<Self, AttackError> {
        let collect = |kind, items: &mut dyn Iterator<Item = usize>, dim| {
            items
                .map(|index| {
                    if (1..=dim).contains(&index) {
                        Ok(index)
                    } else {
                        Err(AttackError::IndexOutOfRange { kind, index, dim })
                    }
                })
                .collect::<Result<BTreeSet<_>, _>>()
        };
        Ok(Self {
            actuators: collect("actuator", &mut actuators.into_iter(), actuator_dim)?,
            sensors: collect("sensor", &mut sensors.into_iter(), sensor_dim)?,
        })
    }

    pub fn actuators(&self) -> &BTreeSet<usize> {
        &self.actuators
    }

    pub fn sensors(&self) -> &BTreeSet<usize> {
        &self.sensors
    }

    pub fn is_empty(&self) -> bool {
        self.actuators.is_empty() && self.sensors.is_empty()
    }
}

fn mask<const N: usize>(mut v: [f64; N], blocked: &BTreeSet<usize>, active: bool) -> [f64; N] {
    if active {
        for &i in blocked {
            v[i - 1] = 0.0;
        }
    }
    v
}

/// Command actually delivered to the plant.
pub fn attack_actuator<const P: usize>(cmd: [f64; P], targets: &AttackTargets, active: bool) -> [f64; P] {
    mask(cmd, &targets.actuators, active)
}

/// Reading actually delivered to the monitor.
pub fn attack_sensor<const M: usize>(y: [f64; M], targets: &AttackTargets, active: bool) -> [f64; M] {
    mask(y, &targets.sensors, active)
}
