use serde::{Deserialize, Serialize};

use super::mlp::{Adam, MlpModel, PARAM_COUNT};
use super::train::TrainingSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OnlineAdaptConfig {
    /// Residual scale `S_rate` inside the sigmoid gate.
    pub s_rate: f64,
    pub enabled: bool,
}

impl Default for OnlineAdaptConfig {
    fn default() -> Self {
        Self { s_rate: 1.0, enabled: true }
    }
}

/// Residual-gated learning-rate factor `l = 1 - 1/(1 + exp(-S_rate * ||r||_2))`.
///
/// Evaluated as `e / (1 + e)` with `e = exp(-S_rate * ||r||)`, which is the same
/// quantity without the cancellation near zero.
pub fn adaptive_rate(residual: &[f64], s_rate: f64) -> f64 {
    let norm = residual.iter().map(|r| r * r).sum::<f64>().sqrt();
    let e = (-s_rate * norm).exp();
    e / (1.0 + e)
}

/// Outcome of one online adaptation call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineStep {
    pub rate: f64,
    pub applied: bool,
}

/// Keeps the optimizer state for streaming single-sample updates of one model.
#[derive(Debug, Clone)]
pub struct OnlineAdapter {
    pub cfg: OnlineAdaptConfig,
    pub base_lr: f64,
    adam: Adam,
    pub applied: usize,
    /// Updates dropped because the gradient was not finite.
    pub skipped: usize,
}

impl OnlineAdapter {
    pub fn new(cfg: OnlineAdaptConfig, base_lr: f64) -> Self {
        Self { cfg, base_lr, adam: Adam::new(PARAM_COUNT), applied: 0, skipped: 0 }
    }

    /// One Adam step on the squared error of `sample`, with step size
    /// `base_lr * adaptive_rate(residual)`.
    pub fn online_update(&mut self, model: &mut MlpModel, sample: &TrainingSample, residual: &[f64]) -> OnlineStep {
        let rate = adaptive_rate(residual, self.cfg.s_rate);
        if !self.cfg.enabled {
            return OnlineStep { rate, applied: false };
        }
        let (out, g) = model.output_gradient(&sample.input);
        let err = out - sample.target;
        let mut grad = [0.0; PARAM_COUNT];
        for (gi, d) in grad.iter_mut().zip(g.iter()) {
            *gi = 2.0 * err * d;
        }
        if !grad.iter().all(|x| x.is_finite()) || !rate.is_finite() {
            self.skipped += 1;
            return OnlineStep { rate, applied: false };
        }
        let mut params = model.to_flat();
        self.adam.step(&mut params, &grad, self.base_lr * rate);
        if params.iter().all(|x| x.is_finite()) {
            model.set_flat(&params);
            self.applied += 1;
            OnlineStep { rate, applied: true }
        } else {
            self.skipped += 1;
            OnlineStep { rate, applied: false }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rate_at_zero_residual_is_half() {
        assert_eq!(adaptive_rate(&[0.0, 0.0, 0.0], 1.0), 0.5);
    }

    #[test]
    fn rate_saturates_to_zero() {
        assert!(adaptive_rate(&[1e3], 1.0) < 1e-300);
        assert!(adaptive_rate(&[100.0], 1.0) < 1e-40);
    }

    #[test]
    fn rate_at_unit_residual() {
        let expected = 1.0 - 1.0 / (1.0 + (-1.0f64).exp());
        assert!((adaptive_rate(&[0.6, 0.8], 1.0) - expected).abs() < 1e-15);
        assert!((expected - 0.268_941_421_369_995).abs() < 1e-12);
    }

    #[test]
    fn huge_residual_leaves_weights_unchanged() {
        let mut model = MlpModel::init(1);
        let before = model.clone();
        let mut adapter = OnlineAdapter::new(OnlineAdaptConfig::default(), 1e-3);
        let sample = TrainingSample::new(0.8, 0.0, 10.0, 0.0, 0.5, 3.0);
        let step = adapter.online_update(&mut model, &sample, &[100.0, 0.0, 0.0]);
        assert!(step.applied);
        assert!(1e-3 * step.rate < 1e-40);
        for (a, b) in model.to_flat().iter().zip(before.to_flat().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_error_sample_is_a_fixed_point() {
        let mut model = MlpModel::init(2);
        let input = [0.5, 0.0, 8.0, 0.0, 0.1];
        let sample = TrainingSample { input, target: model.forward(&input) };
        let before = model.clone();
        let mut adapter = OnlineAdapter::new(OnlineAdaptConfig::default(), 1e-3);
        adapter.online_update(&mut model, &sample, &[0.0; 3]);
        assert_eq!(model, before);
    }

    #[test]
    fn disabled_adaptation_never_touches_the_model() {
        let mut model = MlpModel::init(3);
        let before = model.clone();
        let mut adapter = OnlineAdapter::new(OnlineAdaptConfig { s_rate: 1.0, enabled: false }, 1e-3);
        for k in 0..50 {
            let sample = TrainingSample::new(0.7, 0.1, k as f64, 0.0, 0.2, -1.0);
            assert!(!adapter.online_update(&mut model, &sample, &[0.01; 3]).applied);
        }
        assert_eq!(model, before);
    }

    #[test]
    fn non_finite_gradient_is_skipped_and_counted() {
        let mut model = MlpModel::init(4);
        let before = model.clone();
        let mut adapter = OnlineAdapter::new(OnlineAdaptConfig::default(), 1e-3);
        let sample = TrainingSample::new(0.7, 0.1, 5.0, 0.0, 0.2, f64::NAN);
        assert!(!adapter.online_update(&mut model, &sample, &[0.1; 3]).applied);
        assert_eq!(adapter.skipped, 1);
        assert_eq!(model, before);
    }

    proptest! {
        #[test]
        fn rate_in_half_open_unit_half(r in prop::collection::vec(-50.0f64..50.0, 3), s in 0.01f64..5.0) {
            let l = adaptive_rate(&r, s);
            prop_assert!(l > 0.0 && l <= 0.5);
        }

        #[test]
        fn rate_monotone_in_norm(mut norms in prop::collection::vec(0.0f64..100.0, 2..50), s in 0.01f64..5.0) {
            norms.sort_by(f64::total_cmp);
            let rates: Vec<f64> = norms.iter().map(|n| adaptive_rate(&[*n], s)).collect();
            prop_assert!(rates.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
