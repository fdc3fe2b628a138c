use super::experiment::EstimatorRun;
use super::metrics::{score, ConfusionMetrics, StepLabel};
use super::HarnessError;
use crate::detector::{alarm, Detector, DetectorConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub estimator: &'static str,
    pub t1: f64,
    pub t2: f64,
    pub metrics: ConfusionMetrics,
}

/// Detector statistics replayed from a residual log. They do not depend on
/// the thresholds, so one replay serves a whole sweep.
struct Replay {
    times: Vec<f64>,
    truth: Vec<bool>,
    stats: Vec<Option<(f64, f64)>>,
}

fn replay(run: &EstimatorRun, cfg: &DetectorConfig) -> Result<Replay, HarnessError> {
    let mut det = Detector::new(cfg.clone())?;
    let mut stats = Vec::with_capacity(run.records.len());
    for r in &run.records {
        det.push_residual(&r.residual);
        stats.push(det.is_warm().then(|| (det.s1(), det.s2())));
    }
    Ok(Replay { times: run.records.iter().map(|r| r.time_s).collect(), truth: run.truth(), stats })
}

fn score_replay(rep: &Replay, cfg: &DetectorConfig) -> Result<ConfusionMetrics, HarnessError> {
    let labels: Vec<StepLabel> = rep
        .stats
        .iter()
        .zip(&rep.truth)
        .zip(&rep.times)
        .map(|((s, &truth), &t)| StepLabel {
            t,
            truth,
            predicted: s.is_some_and(|(s1, s2)| alarm(s1, s2, cfg).is_attack()),
        })
        .collect();
    score(&labels, cfg.t1)
}

/// Scores a logged run under a different detector config without re-simulating.
pub fn rescore(run: &EstimatorRun, cfg: &DetectorConfig) -> Result<ConfusionMetrics, HarnessError> {
    score_replay(&replay(run, cfg)?, cfg)
}

/// One row per (estimator, t1), with `t2 = gamma * t1`.
pub fn sweep_thresholds(
    runs: &[EstimatorRun],
    base: &DetectorConfig,
    t1_list: &[f64],
) -> Result<Vec<SweepRow>, HarnessError> {
    if t1_list.is_empty() {
        return Err(HarnessError::Config("sweep threshold list is empty".into()));
    }
    let mut rows = Vec::with_capacity(runs.len() * t1_list.len());
    for run in runs {
        let rep = replay(run, base)?;
        for &t1 in t1_list {
            let cfg = base.with_t1(t1);
            cfg.validate()?;
            rows.push(SweepRow { estimator: run.kind.name(), t1, t2: cfg.t2(), metrics: score_replay(&rep, &cfg)? });
        }
    }
    Ok(rows)
}

/// Highest-F1 row for `estimator`; the lowest threshold wins ties.
pub fn best_row<'a>(rows: &'a [SweepRow], estimator: &str) -> Option<&'a SweepRow> {
    rows.iter().filter(|r| r.estimator == estimator).fold(None, |best: Option<&SweepRow>, r| match best {
        Some(b) if b.metrics.f1 >= r.metrics.f1 => Some(b),
        _ => Some(r),
    })
}
