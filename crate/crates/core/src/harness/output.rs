use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use super::experiment::{EstimatorRun, ExperimentOutput};
use super::metrics::score;
use super::sweep::{best_row, SweepRow};
use super::HarnessError;
use crate::detector::DetectorConfig;

pub const RUN_CSV_HEADER: &str = "time_s,throttle,brake,steer,u,speed,yaw_rate,accel,meas_accel,meas_speed,meas_yaw,\
attack_active,r_accel,r_speed,r_yaw,s1,s2,alarm";

pub const SWEEP_CSV_HEADER: &str = "estimator,t1,t2,tp,fp,tn,fn,f1";

/// Version of every JSON document written by the harness.
pub const SCHEMA_VERSION: u32 = 1;

pub fn write_run_csv<W: Write>(mut out: W, run: &EstimatorRun) -> std::io::Result<()> {
    writeln!(out, "{RUN_CSV_HEADER}")?;
    for r in &run.records {
        let (c, s, m) = (&r.command, &r.state, &r.measurement);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.time_s,
            c.throttle,
            c.brake,
            c.steer,
            c.unified(),
            s.speed_mps,
            s.yaw_rate_rps,
            s.accel_mps2,
            m.accel_mps2,
            m.speed_mps,
            m.yaw_rate_rps,
            u8::from(r.attack_active),
            r.residual[0],
            r.residual[1],
            r.residual[2],
            r.s1,
            r.s2,
            u8::from(r.alarm),
        )?;
    }
    Ok(())
}

/// Rates, not counts, in the four confusion columns.
pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        let m = &r.metrics;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.estimator, r.t1, r.t2, m.tp_rate, m.fp_rate, m.tn_rate, m.fn_rate, m.f1
        )?;
    }
    Ok(())
}

/// Per-estimator summary of a run at the configured thresholds. Metrics are
/// `null` when the run holds only one truth class (for example no attack);
/// the alarm count is always present.
pub fn metrics_json(output: &ExperimentOutput, detector: &DetectorConfig) -> Value {
    let estimators: Vec<Value> = output
        .runs
        .iter()
        .map(|run| {
            let labels = run.labels();
            json!({
                "estimator": run.kind.name(),
                "steps": labels.len(),
                "attack_steps": labels.iter().filter(|l| l.truth).count(),
                "alarm_steps": labels.iter().filter(|l| l.predicted).count(),
                "metrics": score(&labels, detector.t1).ok(),
                "online_updates": run.online_applied,
                "online_skipped": run.online_skipped,
                "rejected_residuals": run.rejected_residuals,
            })
        })
        .collect();
    json!({
        "schema": SCHEMA_VERSION,
        "seed": output.seed,
        "t1": detector.t1,
        "t2": detector.t2(),
        "estimators": estimators,
    })
}

/// Best-F1 operating point per estimator.
pub fn report_json(seed: u64, rows: &[SweepRow]) -> Value {
    let mut names: Vec<&str> = rows.iter().map(|r| r.estimator).collect();
    names.dedup();
    let estimators: Vec<Value> = names
        .iter()
        .filter_map(|name| best_row(rows, name))
        .map(|b| {
            json!({
                "estimator": b.estimator,
                "t1": b.t1,
                "t2": b.t2,
                "tp_rate": b.metrics.tp_rate,
                "fp_rate": b.metrics.fp_rate,
                "tn_rate": b.metrics.tn_rate,
                "fn_rate": b.metrics.fn_rate,
                "f1": b.metrics.f1,
            })
        })
        .collect();
    json!({ "schema": SCHEMA_VERSION, "seed": seed, "best": estimators })
}

/// Writes to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let io_err = |source| HarnessError::Io { path: path.display().to_string(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}

pub fn to_json_bytes(value: &Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("json values always serialize");
    bytes.push(b'\n');
    bytes
}
