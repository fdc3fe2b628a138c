//! Residual-based denial-of-service detection for a longitudinal vehicle model.
//!
//! A plant simulator produces noisy sensor streams, attack injection blocks
//! actuator or sensor channels on a PWM schedule, and two state estimators
//! (a constant-resistance Kalman filter and an unscented filter driven by a
//! learned MLP) feed their residuals to a sliding-window CUSUM detector.

pub mod attacks;
pub mod detector;
pub mod estimators;
pub mod harness;
pub mod learner;
pub mod vehicle_sim;
