use serde::Serialize;

use super::HarnessError;

/// Ground truth and detector output for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLabel {
    pub t: f64,
    pub truth: bool,
    pub predicted: bool,
}

/// Per-step confusion rates, each normalized within its truth class, plus the
/// raw counts they came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfusionMetrics {
    pub threshold: f64,
    pub tp_rate: f64,
    pub fp_rate: f64,
    pub tn_rate: f64,
    pub fn_rate: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Scores a label stream that contains both truth classes.
pub fn score(labels: &[StepLabel], threshold: f64) -> Result<ConfusionMetrics, HarnessError> {
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for l in labels {
        match (l.truth, l.predicted) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    let pos = tp + fn_;
    let neg = tn + fp;
    if pos == 0 || neg == 0 {
        return Err(HarnessError::Metrics(format!(
            "label stream needs both classes, found {pos} positive and {neg} negative steps"
        )));
    }
    let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
    Ok(ConfusionMetrics {
        threshold,
        tp_rate: tp as f64 / pos as f64,
        fn_rate: fn_ as f64 / pos as f64,
        tn_rate: tn as f64 / neg as f64,
        fp_rate: fp as f64 / neg as f64,
        f1,
        tp,
        fp,
        tn,
        fn_,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(pairs: &[(bool, bool)]) -> Vec<StepLabel> {
        pairs.iter().enumerate().map(|(k, &(truth, predicted))| StepLabel { t: k as f64, truth, predicted }).collect()
    }

    #[test]
    fn perfect_detector() {
        let labels = stream(&[(true, true), (false, false), (true, true), (false, false)]);
        let m = score(&labels, 1.0).unwrap();
        assert_eq!((m.tp_rate, m.tn_rate, m.fp_rate, m.fn_rate, m.f1), (1.0, 1.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn inverted_detector() {
        let labels = stream(&[(true, false), (false, true), (true, false), (false, true)]);
        let m = score(&labels, 1.0).unwrap();
        assert_eq!((m.tp_rate, m.tn_rate, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_counted_ten_labels() {
        // 4 positives (3 hit, 1 missed), 6 negatives (2 false alarms).
        let labels = stream(&[
            (true, true),
            (true, true),
            (true, false),
            (true, true),
            (false, true),
            (false, false),
            (false, true),
            (false, false),
            (false, false),
            (false, false),
        ]);
        let m = score(&labels, 12.5).unwrap();
        assert_eq!((m.tp, m.fp, m.tn, m.fn_), (3, 2, 4, 1));
        assert_eq!(m.tp_rate, 0.75);
        assert_eq!(m.fn_rate, 0.25);
        assert!((m.fp_rate - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.tn_rate - 2.0 / 3.0).abs() < 1e-15);
        // precision 3/5, recall 3/4
        assert!((m.f1 - 2.0 * 0.6 * 0.75 / 1.35).abs() < 1e-12);
        assert_eq!(m.threshold, 12.5);
    }

    #[test]
    fn single_class_stream_is_an_error() {
        assert!(score(&stream(&[(false, false), (false, true)]), 1.0).is_err());
        assert!(score(&stream(&[(true, true)]), 1.0).is_err());
        assert!(score(&[], 1.0).is_err());
    }

    #[test]
    fn no_alarms_gives_zero_f1() {
        let m = score(&stream(&[(true, false), (false, false)]), 1.0).unwrap();
        assert_eq!(m.f1, 0.0);
        assert_eq!(m.tn_rate + m.fp_rate, 1.0);
    }
}
