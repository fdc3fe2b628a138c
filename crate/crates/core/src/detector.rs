//! Sliding-window CUSUM detector over filter residuals.
//!
//! Two statistics are computed over the last `N` residuals:
//!
//! ```text
//! s1 = Σ w_r1ᵀ r_i                      (weighted sum)
//! s2 = Σ (r_i - r̄)ᵀ W_r2 (r_i - r̄)      (weighted dispersion)
//! ```
//!
//! and the alarm fires when `|s1| > t1` and `s2 > t2`, with `t2 = gamma * t1`.
//! Nothing is latched: the flag is recomputed on every push.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DetectorError {
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub window_n: usize,
    pub w_r1: Vec<f64>,
    /// Row-major `m × m` weight matrix.
    pub w_r2: Vec<Vec<f64>>,
    pub t1: f64,
    pub gamma: f64,
}

/// Ratio between the two thresholds.
pub const DEFAULT_GAMMA: f64 = 0.04;

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window_n: 40,
            w_r1: vec![1.0, 0.01, 0.0],
            w_r2: vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.01, 0.0], vec![0.0, 0.0, 0.0]],
            t1: 13.33,
            gamma: DEFAULT_GAMMA,
        }
    }
}

impl DetectorConfig {
    pub fn dim(&self) -> usize {
        self.w_r1.len()
    }

    pub fn t2(&self) -> f64 {
        self.gamma * self.t1
    }

    pub fn with_t1(&self, t1: f64) -> Self {
        Self { t1, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        let bad = |m: String| Err(DetectorError::InvalidConfig(m));
        if self.window_n < 2 {
            return bad(format!("window_n = {} must be >= 2", self.window_n));
        }
        if !(self.t1.is_finite() && self.t1 > 0.0) {
            return bad(format!("t1 = {} must be > 0", self.t1));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad(format!("gamma = {} must be > 0", self.gamma));
        }
        let m = self.dim();
        if m == 0 || self.w_r1.iter().any(|w| !w.is_finite()) {
            return bad("w_r1 must be a non-empty finite vector".into());
        }
        if self.w_r2.len() != m || self.w_r2.iter().any(|row| row.len() != m) {
            return bad(format!("w_r2 must be {m}x{m}"));
        }
        let w2 = DMatrix::from_fn(m, m, |i, j| self.w_r2[i][j]);
        if w2.iter().any(|w| !w.is_finite()) || (&w2 - w2.transpose()).amax() > 1e-12 {
            return bad("w_r2 must be finite and symmetric".into());
        }
        if w2.symmetric_eigenvalues().min() < -1e-12 {
            return bad("w_r2 must be positive semi-definite".into());
        }
        Ok(())
    }
}

/// Alarm state: `S_n` (no attack) or `S_p` (attack detected).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alarm {
    #[default]
    Normal,
    Attack,
}

impl Alarm {
    pub fn is_attack(self) -> bool {
        self == Alarm::Attack
    }

    pub fn flag(self) -> u8 {
        self as u8
    }
}

/// Weighted residual sum over the window.
pub fn test1<'a>(window: impl IntoIterator<Item = &'a [f64]>, w_r1: &[f64]) -> f64 {
    window.into_iter().map(|r| r.iter().zip(w_r1).map(|(ri, wi)| ri * wi).sum::<f64>()).sum()
}

/// Weighted dispersion about the window mean; 0 for fewer than two residuals.
pub fn test2<'a>(window: impl IntoIterator<Item = &'a [f64]> + Clone, w_r2: &[Vec<f64>]) -> f64 {
    let count = window.clone().into_iter().count();
    if count < 2 {
        return 0.0;
    }
    let m = w_r2.len();
    let mut mean = vec![0.0; m];
    for r in window.clone() {
        for (acc, ri) in mean.iter_mut().zip(r) {
            *acc += ri;
        }
    }
    mean.iter_mut().for_each(|x| *x /= count as f64);
    let mut total = 0.0;
    let mut d = vec![0.0; m];
    for r in window {
        for i in 0..m {
            d[i] = r[i] - mean[i];
        }
        for i in 0..m {
            for j in 0..m {
                total += d[i] * w_r2[i][j] * d[j];
            }
        }
    }
    total
}

/// `S_p` iff `|s1| > t1` and `s2 > t2`.
pub fn alarm(s1: f64, s2: f64, cfg: &DetectorConfig) -> Alarm {
    if s1.abs() > cfg.t1 && s2 > cfg.t2() {
        Alarm::Attack
    } else {
        Alarm::Normal
    }
}

/// Streaming detector state for one residual channel set.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: DetectorConfig,
    window: VecDeque<Vec<f64>>,
    s1: f64,
    s2: f64,
    flag: Alarm,
    rejected: usize,
}

impl Detector {
    pub fn new(cfg: DetectorConfig) -> Result<Self, DetectorError> {
        cfg.validate()?;
        Ok(Self {
            window: VecDeque::with_capacity(cfg.window_n + 1),
            cfg,
            s1: 0.0,
            s2: 0.0,
            flag: Alarm::Normal,
            rejected: 0,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    /// Appends `r`, evicts the oldest residual beyond `N`, and refreshes the
    /// statistics and flag. Non-finite or wrongly sized residuals are counted
    /// and ignored; returns whether `r` was accepted.
    pub fn push_residual(&mut self, r: &[f64]) -> bool {
        if r.len() != self.cfg.dim() || r.iter().any(|x| !x.is_finite()) {
            self.rejected += 1;
            return false;
        }
        self.window.push_back(r.to_vec());
        if self.window.len() > self.cfg.window_n {
            self.window.pop_front();
        }
        let slices = || self.window.iter().map(Vec::as_slice);
        self.s1 = test1(slices(), &self.cfg.w_r1);
        self.s2 = test2(slices(), &self.cfg.w_r2);
        // Alarms are held off until the window has filled once.
        self.flag = if self.is_warm() { alarm(self.s1, self.s2, &self.cfg) } else { Alarm::Normal };
        true
    }

    pub fn s1(&self) -> f64 {
        self.s1
    }

    pub fn s2(&self) -> f64 {
        self.s2
    }

    pub fn alarm(&self) -> Alarm {
        self.flag
    }

    pub fn is_warm(&self) -> bool {
        self.window.len() >= self.cfg.window_n
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    pub fn window(&self) -> impl Iterator<Item = &[f64]> {
        self.window.iter().map(Vec::as_slice)
    }
}
