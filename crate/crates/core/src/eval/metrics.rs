//! Confusion counts, classification metrics, error transitions between two
//! systems, and ablation delta tables. Verifiable is the positive class.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{Claim, Label};
use crate::detect::{ParseStatus, Prediction};
use crate::error::{Error, Result};

/// Delta tables flag cells whose magnitude exceeds this many points.
pub const DEFAULT_FLAG_THRESHOLD: f64 = 3.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, predicted: Label, gold: Label) {
        match (predicted.is_verifiable(), gold.is_verifiable()) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn error_distribution(&self) -> ErrorDistribution {
        let n = self.total() as f64;
        let share = |x: usize| if n > 0.0 { x as f64 / n } else { 0.0 };
        ErrorDistribution {
            fp: self.fp,
            fn_: self.fn_,
            fp_share: share(self.fp),
            fn_share: share(self.fn_),
            total_errors: self.fp + self.fn_,
            error_share: share(self.fp + self.fn_),
            fp_fn_ratio: fp_fn_ratio(self),
        }
    }
}

fn fp_fn_ratio(cm: &ConfusionMatrix) -> Option<f64> {
    (cm.fn_ > 0).then(|| cm.fp as f64 / cm.fn_ as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDistribution {
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp_share: f64,
    pub fn_share: f64,
    pub total_errors: usize,
    pub error_share: f64,
    pub fp_fn_ratio: Option<f64>,
}

impl fmt::Display for ErrorDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ratio = self
            .fp_fn_ratio
            .map_or("undefined".to_string(), |r| format!("{r:.2}"));
        write!(
            f,
            "FP {} ({:.1}%)  FN {} ({:.1}%)  FP/FN {}  errors {} ({:.1}%)",
            self.fp,
            self.fp_share * 100.0,
            self.fn_,
            self.fn_share * 100.0,
            ratio,
            self.total_errors,
            self.error_share * 100.0
        )
    }
}

/// Which F1 a report carries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Mode {
    /// F1 of the verifiable class.
    #[default]
    Positive,
    /// Unweighted mean of both classes' F1.
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fp_fn_ratio: Option<f64>,
}

fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let ratio = |num: usize, den: usize| if den > 0 { num as f64 / den as f64 } else { 0.0 };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f1)
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricReport> {
    metrics_with(cm, F1Mode::Positive)
}

pub fn metrics_with(cm: &ConfusionMatrix, mode: F1Mode) -> Result<MetricReport> {
    let n = cm.total();
    if n == 0 {
        return Err(Error::InvalidArgument("confusion matrix is empty".into()));
    }
    let (precision, recall, pos_f1) = prf(cm.tp, cm.fp, cm.fn_);
    let f1 = match mode {
        F1Mode::Positive => pos_f1,
        F1Mode::Macro => {
            let (_, _, neg_f1) = prf(cm.tn, cm.fn_, cm.fp);
            (pos_f1 + neg_f1) / 2.0
        }
    };
    Ok(MetricReport {
        n,
        accuracy: (cm.tp + cm.tn) as f64 / n as f64,
        precision,
        recall,
        f1,
        fp_fn_ratio: fp_fn_ratio(cm),
    })
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={}  Acc {:.2}  P {:.2}  R {:.2}  F1 {:.2}",
            self.n,
            self.accuracy * 100.0,
            self.precision * 100.0,
            self.recall * 100.0,
            self.f1 * 100.0
        )
    }
}

fn gold_index(gold: &[Claim]) -> Result<HashMap<&str, Label>> {
    let mut map = HashMap::with_capacity(gold.len());
    for claim in gold {
        if map.insert(claim.id.as_str(), claim.gold()?).is_some() {
            return Err(Error::IdMismatch(format!("duplicate gold id `{}`", claim.id)));
        }
    }
    Ok(map)
}

fn pred_index(preds: &[Prediction]) -> Result<HashMap<&str, Label>> {
    let mut map = HashMap::with_capacity(preds.len());
    for p in preds {
        if map.insert(p.claim_id.as_str(), p.label).is_some() {
            return Err(Error::IdMismatch(format!("duplicate prediction for `{}`", p.claim_id)));
        }
    }
    Ok(map)
}

fn check_same_ids(preds: &HashMap<&str, Label>, gold: &HashMap<&str, Label>) -> Result<()> {
    if preds.len() != gold.len() {
        return Err(Error::IdMismatch(format!(
            "{} predictions vs {} gold claims",
            preds.len(),
            gold.len()
        )));
    }
    if let Some(id) = preds.keys().find(|id| !gold.contains_key(*id)) {
        return Err(Error::IdMismatch(format!("prediction `{id}` has no gold claim")));
    }
    Ok(())
}

pub fn confusion(preds: &[Prediction], gold: &[Claim]) -> Result<ConfusionMatrix> {
    let gold = gold_index(gold)?;
    let preds = pred_index(preds)?;
    check_same_ids(&preds, &gold)?;
    let mut cm = ConfusionMatrix::default();
    for (id, predicted) in &preds {
        cm.record(*predicted, gold[id]);
    }
    Ok(cm)
}

/// Predicts `label` for every claim, e.g. the majority-class baseline.
pub fn constant_predictions(claims: &[Claim], label: Label, system_tag: &str) -> Vec<Prediction> {
    claims
        .iter()
        .map(|c| Prediction {
            claim_id: c.id.clone(),
            label,
            parse_status: ParseStatus::Clean,
            system_tag: system_tag.to_string(),
            raw_response: label.answer().to_string(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub n: usize,
    /// Baseline wrong, system right.
    pub fixed: usize,
    /// Baseline right, system wrong.
    pub regressed: usize,
    pub both_right: usize,
    pub both_wrong: usize,
    /// Baseline false negatives the system gets right.
    pub fixed_fn: usize,
    /// Baseline false positives the system gets right.
    pub fixed_fp: usize,
    /// New false positives introduced by the system.
    pub new_fp: usize,
    /// New false negatives introduced by the system.
    pub new_fn: usize,
    /// System FP minus baseline FP.
    pub net_fp_delta: i64,
    /// System FN minus baseline FN.
    pub net_fn_delta: i64,
}

impl TransitionReport {
    pub fn fixed_share(&self) -> f64 {
        self.fixed as f64 / self.n.max(1) as f64
    }

    pub fn regressed_share(&self) -> f64 {
        self.regressed as f64 / self.n.max(1) as f64
    }
}

pub fn transitions(baseline: &[Prediction], system: &[Prediction], gold: &[Claim]) -> Result<TransitionReport> {
    let gold = gold_index(gold)?;
    let base = pred_index(baseline)?;
    let sys = pred_index(system)?;
    check_same_ids(&base, &gold)?;
    check_same_ids(&sys, &gold)?;

    let mut r = TransitionReport {
        n: gold.len(),
        ..Default::default()
    };
    let (mut base_cm, mut sys_cm) = (ConfusionMatrix::default(), ConfusionMatrix::default());
    for (id, &truth) in &gold {
        let (b, s) = (base[id], sys[id]);
        base_cm.record(b, truth);
        sys_cm.record(s, truth);
        match (b == truth, s == truth) {
            (true, true) => r.both_right += 1,
            (false, false) => r.both_wrong += 1,
            (false, true) => {
                r.fixed += 1;
                if truth.is_verifiable() {
                    r.fixed_fn += 1;
                } else {
                    r.fixed_fp += 1;
                }
            }
            (true, false) => {
                r.regressed += 1;
                if truth.is_verifiable() {
                    r.new_fn += 1;
                } else {
                    r.new_fp += 1;
                }
            }
        }
    }
    r.net_fp_delta = sys_cm.fp as i64 - base_cm.fp as i64;
    r.net_fn_delta = sys_cm.fn_ as i64 - base_cm.fn_ as i64;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub metric: String,
    /// Percentage points, `b - a`.
    pub delta: f64,
    pub flagged: bool,
}

/// Absorbs representation error such as 100 * (0.535 - 0.5) = 3.5000000000000031.
const FLAG_EPSILON: f64 = 1e-9;

/// Per-metric change from `a` (original) to `b` (variant) in percentage
/// points; flagged when `|delta| > threshold`.
pub fn delta_table(a: &MetricReport, b: &MetricReport, threshold: f64) -> Vec<DeltaRow> {
    [
        ("accuracy", a.accuracy, b.accuracy),
        ("precision", a.precision, b.precision),
        ("recall", a.recall, b.recall),
        ("f1", a.f1, b.f1),
    ]
    .into_iter()
    .map(|(metric, x, y)| {
        let delta = 100.0 * (y - x);
        DeltaRow {
            metric: metric.to_string(),
            delta,
            flagged: delta.abs() > threshold + FLAG_EPSILON,
        }
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationStep {
    pub from: String,
    pub to: String,
    pub deltas: Vec<DeltaRow>,
}

/// Incremental deltas along an ordered chain of systems, e.g.
/// baseline, raw extracts, summaries.
pub fn ablation_chain(arms: &[(String, MetricReport)], threshold: f64) -> Vec<AblationStep> {
    arms.windows(2)
        .map(|w| AblationStep {
            from: w[0].0.clone(),
            to: w[1].0.clone(),
            deltas: delta_table(&w[0].1, &w[1].1, threshold),
        })
        .collect()
}

pub fn render_delta_table(rows: &[DeltaRow]) -> String {
    rows.iter()
        .map(|r| {
            format!(
                "{:<10} {:>+8.2}{}",
                r.metric,
                r.delta,
                if r.flagged { " *" } else { "" }
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, Split};

    fn report(accuracy: f64, precision: f64, recall: f64, f1: f64) -> MetricReport {
        MetricReport {
            n: 10,
            accuracy,
            precision,
            recall,
            f1,
            fp_fn_ratio: None,
        }
    }

    fn claims(labels: &[Label]) -> Vec<Claim> {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| Claim::new(format!("c{i}"), "x", Dataset::CT22, Split::Test, Some(*l)).unwrap())
            .collect()
    }

    fn preds(labels: &[Label]) -> Vec<Prediction> {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| Prediction {
                claim_id: format!("c{i}"),
                label: *l,
                parse_status: ParseStatus::Clean,
                system_tag: "t".into(),
                raw_response: l.answer().into(),
            })
            .collect()
    }

    use Label::{NonVerifiable as N, Verifiable as V};

    #[test]
    fn hand_metrics() {
        let cm = ConfusionMatrix { tp: 3, fp: 1, fn_: 2, tn: 4 };
        let m = metrics(&cm).unwrap();
        assert!((m.precision - 0.75).abs() < 1e-12);
        assert!((m.recall - 0.6).abs() < 1e-12);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.accuracy - 0.7).abs() < 1e-12);
        assert!(metrics(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn macro_f1_switch() {
        let cm = ConfusionMatrix { tp: 3, fp: 1, fn_: 2, tn: 4 };
        // negative class: P = 4/6, R = 4/5, F1 = 8/11
        let m = metrics_with(&cm, F1Mode::Macro).unwrap();
        assert!((m.f1 - (2.0 / 3.0 + 8.0 / 11.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn six_item_tally() {
        // gold:  V V V N N N
        // pred:  V N V V N V  -> tp 2, fn 1, fp 2, tn 1
        let cm = confusion(&preds(&[V, N, V, V, N, V]), &claims(&[V, V, V, N, N, N])).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 2, fp: 2, fn_: 1, tn: 1 });
        let perfect = confusion(&preds(&[V, N]), &claims(&[V, N])).unwrap();
        assert_eq!((perfect.fp, perfect.fn_), (0, 0));
    }

    #[test]
    fn id_mismatch_and_unlabeled() {
        assert!(matches!(
            confusion(&preds(&[V]), &claims(&[V, N])),
            Err(Error::IdMismatch(_))
        ));
        let mut gold = claims(&[V]);
        gold[0].gold_label = None;
        assert!(matches!(confusion(&preds(&[V]), &gold), Err(Error::Unlabeled(_))));
    }

    #[test]
    fn five_item_transitions() {
        // gold      V V N N V
        // baseline  N V V N V   (FN, ok, FP, ok, ok)
        // system    V N N V V   (ok, FN, ok, FP, ok)
        let gold = claims(&[V, V, N, N, V]);
        let r = transitions(&preds(&[N, V, V, N, V]), &preds(&[V, N, N, V, V]), &gold).unwrap();
        assert_eq!((r.fixed, r.regressed, r.both_right, r.both_wrong), (2, 2, 1, 0));
        assert_eq!((r.fixed_fn, r.fixed_fp, r.new_fn, r.new_fp), (1, 1, 1, 1));
        assert_eq!((r.net_fp_delta, r.net_fn_delta), (0, 0));
        let same = transitions(&preds(&[N, V, V, N, V]), &preds(&[N, V, V, N, V]), &gold).unwrap();
        assert_eq!((same.fixed, same.regressed), (0, 0));
    }

    #[test]
    fn delta_flags() {
        let a = report(0.5, 0.5, 0.5, 0.5);
        assert!(delta_table(&a, &a, 3.5).iter().all(|r| r.delta == 0.0 && !r.flagged));
        let b = report(0.535, 0.5395, 0.5, 0.5);
        let rows = delta_table(&a, &b, DEFAULT_FLAG_THRESHOLD);
        assert!(!rows[0].flagged, "exactly 3.5 is not flagged");
        assert!(rows[1].flagged);
        assert!((rows[1].delta - 3.95).abs() < 1e-9);
    }

    #[test]
    fn chain_steps() {
        let arms = vec![
            ("BL".to_string(), report(0.6, 0.6, 0.6, 0.6)),
            ("Raw".to_string(), report(0.5, 0.6, 0.6, 0.6)),
            ("G4o".to_string(), report(0.55, 0.6, 0.6, 0.6)),
        ];
        let steps = ablation_chain(&arms, 3.5);
        assert_eq!(steps.len(), 2);
        assert!((steps[0].deltas[0].delta + 10.0).abs() < 1e-9);
        assert!(steps[0].deltas[0].flagged);
        assert!((steps[1].deltas[0].delta - 5.0).abs() < 1e-9);
    }
}
