use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Adam, MlpInput, MlpModel, HIDDEN_DIM, INPUT_DIM, PARAM_COUNT};
use super::LearnError;
use crate::vehicle_sim::LogRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub base_lr: f64,
    pub train_fraction: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { base_lr: 0.001, train_fraction: 0.8, epochs: 1000, batch_size: 64, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |what: &str| Err(LearnError::InvalidConfig(what.to_string()));
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must be in (0, 1)");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be >= 1");
        }
        if !(self.base_lr.is_finite() && self.base_lr > 0.0) {
            return bad("base_lr must be > 0");
        }
        Ok(())
    }
}

/// One supervised pair: current command and state, acceleration one horizon later.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSample {
    pub input: MlpInput,
    pub target: f64,
}

impl TrainingSample {
    pub fn new(unified: f64, steer: f64, speed: f64, yaw_rate: f64, accel: f64, target: f64) -> Self {
        Self { input: [unified, steer, speed, yaw_rate, accel], target }
    }

    fn channels(&self) -> [f64; INPUT_DIM + 1] {
        let mut c = [0.0; INPUT_DIM + 1];
        c[..INPUT_DIM].copy_from_slice(&self.input);
        c[INPUT_DIM] = self.target;
        c
    }
}

/// Pairs each record's command and sensor reading with the measured
/// acceleration `horizon` records later.
pub fn samples_from_log(log: &[LogRecord], horizon: usize) -> Vec<TrainingSample> {
    log.iter()
        .zip(log.iter().skip(horizon))
        .map(|(now, later)| {
            let m = &now.measurement;
            TrainingSample::new(
                now.command.unified(),
                now.command.steer,
                m.speed_mps,
                m.yaw_rate_rps,
                m.accel_mps2,
                later.measurement.accel_mps2,
            )
        })
        .filter(|s| s.channels().iter().all(|x| x.is_finite()))
        .collect()
}

/// Drops samples with any channel more than three standard deviations from
/// that channel's mean. Constant channels never trigger.
pub fn remove_outliers(samples: &[TrainingSample]) -> Vec<TrainingSample> {
    let stats = ChannelStats::of(samples.iter().map(TrainingSample::channels));
    samples
        .iter()
        .filter(|s| {
            s.channels()
                .iter()
                .zip(stats.mean.iter().zip(&stats.std))
                .all(|(x, (mu, sd))| *sd == 0.0 || (x - mu).abs() <= 3.0 * sd)
        })
        .copied()
        .collect()
}

struct ChannelStats<const N: usize> {
    mean: [f64; N],
    std: [f64; N],
}

impl<const N: usize> ChannelStats<N> {
    fn of(rows: impl Iterator<Item = [f64; N]> + Clone) -> Self {
        let n = rows.clone().count().max(1) as f64;
        let mut mean = [0.0; N];
        for r in rows.clone() {
            for i in 0..N {
                mean[i] += r[i] / n;
            }
        }
        let mut std = [0.0; N];
        for r in rows {
            for i in 0..N {
                std[i] += (r[i] - mean[i]).powi(2) / n;
            }
        }
        std.iter_mut().for_each(|s| *s = s.sqrt());
        Self { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: MlpModel,
    pub curve: Vec<EpochLoss>,
    pub n_train: usize,
    pub n_val: usize,
    pub outliers_dropped: usize,
    /// Training-set MSE of the freshly initialized network.
    pub initial_train_mse: f64,
}

impl TrainReport {
    pub fn final_val_rmse(&self) -> f64 {
        self.curve.last().map_or(f64::NAN, |e| e.val_mse.sqrt())
    }
}

pub fn write_loss_csv<W: std::io::Write>(mut out: W, curve: &[EpochLoss]) -> std::io::Result<()> {
    writeln!(out, "epoch,train_mse,val_mse")?;
    for e in curve {
        writeln!(out, "{},{},{}", e.epoch, e.train_mse, e.val_mse)?;
    }
    Ok(())
}

/// Number of training samples for a split of `n`.
pub fn split_sizes(n: usize, train_fraction: f64) -> (usize, usize) {
    let n_train = ((n as f64) * train_fraction).round() as usize;
    let n_train = n_train.clamp(1, n.saturating_sub(1).max(1));
    (n_train, n - n_train)
}

/// Mini-batch Adam on the mean-squared error.
///
/// Inputs and target are standardized with training-set statistics while
/// optimizing; the affine scaling is folded back into the first and last
/// layer afterwards, so the returned model consumes raw inputs.
pub fn train_offline(samples: &[TrainingSample], cfg: &TrainConfig) -> Result<TrainReport, LearnError> {
    cfg.validate()?;
    let clean = remove_outliers(samples);
    let need = 10 * cfg.batch_size;
    if clean.len() < need {
        return Err(LearnError::InsufficientData { have: clean.len(), need });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..clean.len()).collect();
    order.shuffle(&mut rng);
    let (n_train, n_val) = split_sizes(clean.len(), cfg.train_fraction);
    let train: Vec<TrainingSample> = order[..n_train].iter().map(|&i| clean[i]).collect();
    let val: Vec<TrainingSample> = order[n_train..].iter().map(|&i| clean[i]).collect();

    let scaler = Scaler::fit(&train);
    let train_s: Vec<TrainingSample> = train.iter().map(|s| scaler.apply(s)).collect();
    let val_s: Vec<TrainingSample> = val.iter().map(|s| scaler.apply(s)).collect();

    let mut model = MlpModel::init(cfg.seed);
    let mut params = model.to_flat();
    let mut adam = Adam::new(PARAM_COUNT);
    let mut idx: Vec<usize> = (0..train_s.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    let target_var = scaler.target_std * scaler.target_std;
    let initial_train_mse = mse(&model, &train_s) * target_var;

    for epoch in 1..=cfg.epochs {
        idx.shuffle(&mut rng);
        for batch in idx.chunks(cfg.batch_size) {
            let mut grad = [0.0; PARAM_COUNT];
            for &i in batch {
                let s = &train_s[i];
                let (out, g) = model.output_gradient(&s.input);
                let scale = 2.0 * (out - s.target) / batch.len() as f64;
                for (acc, gi) in grad.iter_mut().zip(g.iter()) {
                    *acc += scale * gi;
                }
            }
            adam.step(&mut params, &grad, cfg.base_lr);
            model.set_flat(&params);
        }
        let train_mse = mse(&model, &train_s) * target_var;
        let val_mse = mse(&model, &val_s) * target_var;
        if !train_mse.is_finite() || !val_mse.is_finite() || !model.is_finite() {
            return Err(LearnError::Diverged { epoch });
        }
        curve.push(EpochLoss { epoch, train_mse, val_mse });
    }

    Ok(TrainReport {
        model: scaler.fold(&model),
        curve,
        n_train,
        n_val,
        outliers_dropped: samples.len() - clean.len(),
        initial_train_mse,
    })
}

pub fn mse(model: &MlpModel, samples: &[TrainingSample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| (model.forward(&s.input) - s.target).powi(2)).sum::<f64>() / samples.len() as f64
}

struct Scaler {
    mean: [f64; INPUT_DIM],
    std: [f64; INPUT_DIM],
    target_mean: f64,
    target_std: f64,
}

impl Scaler {
    fn fit(samples: &[TrainingSample]) -> Self {
        let stats = ChannelStats::of(samples.iter().map(TrainingSample::channels));
        let guard = |s: f64| if s > 1e-12 { s } else { 1.0 };
        let mut mean = [0.0; INPUT_DIM];
        let mut std = [0.0; INPUT_DIM];
        for i in 0..INPUT_DIM {
            mean[i] = stats.mean[i];
            std[i] = guard(stats.std[i]);
        }
        Self { mean, std, target_mean: stats.mean[INPUT_DIM], target_std: guard(stats.std[INPUT_DIM]) }
    }

    fn apply(&self, s: &TrainingSample) -> TrainingSample {
        let mut input = s.input;
        for i in 0..INPUT_DIM {
            input[i] = (input[i] - self.mean[i]) / self.std[i];
        }
        TrainingSample { input, target: (s.target - self.target_mean) / self.target_std }
    }

    /// Rewrites a network trained on scaled data as one on raw data.
    fn fold(&self, m: &MlpModel) -> MlpModel {
        let mut out = m.clone();
        for j in 0..HIDDEN_DIM {
            let mut shift = 0.0;
            for i in 0..INPUT_DIM {
                out.w1[j][i] = m.w1[j][i] / self.std[i];
                shift += out.w1[j][i] * self.mean[i];
            }
            out.b1[j] = m.b1[j] - shift;
            out.w2[j] = m.w2[j] * self.target_std;
        }
        out.b2 = m.b2 * self.target_std + self.target_mean;
        out
    }
}
