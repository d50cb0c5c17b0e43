//! Screening metrics: confusion counts, sensitivity / specificity /
//! balanced accuracy, the empirical ROC curve and the operating points
//! picked from it.
//!
//! A score is predicted positive when `score >= threshold`. The ROC curve
//! keeps integer counts so that its trapezoidal area is computed exactly and
//! coincides with the Mann-Whitney pairwise statistic.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }
}

pub fn confusion(scores: &[f64], labels: &[bool], threshold: f64) -> Result<ConfusionCounts> {
    if scores.len() != labels.len() {
        return Err(Error::Input(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y) {
            (true, true) => c.tp += 1,
            (false, true) => c.fn_ += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// `(Sen, Spe, BAcc)` with `Sen = TP/(TP+FN)`, `Spe = TN/(TN+FP)` and
/// `BAcc = (Sen + Spe)/2`.
pub fn sen_spe_bacc(c: &ConfusionCounts) -> Result<(f64, f64, f64)> {
    if c.positives() == 0 || c.negatives() == 0 {
        return Err(Error::Metric(
            "sensitivity and specificity need both classes present".into(),
        ));
    }
    let sen = c.tp as f64 / c.positives() as f64;
    let spe = c.tn as f64 / c.negatives() as f64;
    Ok((sen, spe, balanced_accuracy(sen, spe)))
}

pub fn balanced_accuracy(sen: f64, spe: f64) -> f64 {
    (sen + spe) / 2.0
}

/// One operating point; counts are those predicted positive at `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub sensitivity: f64,
    pub specificity: f64,
}

impl RocPoint {
    pub fn bacc(&self) -> f64 {
        balanced_accuracy(self.sensitivity, self.specificity)
    }
}

/// Empirical ROC curve. Points are ordered by strictly decreasing
/// threshold; the first point is the `+∞` sentinel (Sen 0, Spe 1) and the
/// last, at the smallest score, always has Sen 1 and Spe 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    points: Vec<RocPoint>,
    positives: usize,
    negatives: usize,
}

/// A selected operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub bacc: f64,
}

impl From<&RocPoint> for OperatingPoint {
    fn from(p: &RocPoint) -> Self {
        Self {
            threshold: p.threshold,
            sensitivity: p.sensitivity,
            specificity: p.specificity,
            bacc: p.bacc(),
        }
    }
}

pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::Input(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Input(format!("score {s} is not finite")));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Metric(
            "ROC analysis needs both classes present".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let point = |threshold, tp: usize, fp: usize| RocPoint {
        threshold,
        tp,
        fp,
        sensitivity: tp as f64 / positives as f64,
        specificity: (negatives - fp) as f64 / negatives as f64,
    };
    let mut points = vec![point(f64::INFINITY, 0, 0)];
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(point(threshold, tp, fp));
    }
    Ok(RocCurve {
        points,
        positives,
        negatives,
    })
}

impl RocCurve {
    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    pub fn positives(&self) -> usize {
        self.positives
    }

    pub fn negatives(&self) -> usize {
        self.negatives
    }

    /// `threshold,sensitivity,specificity` rows, one per operating point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,sensitivity,specificity\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6}",
                fmt_threshold(p.threshold),
                p.sensitivity,
                p.specificity
            );
        }
        out
    }
}

fn fmt_threshold(t: f64) -> String {
    if t.is_infinite() {
        "inf".to_string()
    } else {
        format!("{t:.6}")
    }
}

/// Trapezoidal area under the curve in the `(1 − Spe, Sen)` plane.
///
/// The sum is carried out on integer counts, so the result equals
/// `P(score⁺ > score⁻) + ½ P(tie)` exactly.
pub fn auc(curve: &RocCurve) -> f64 {
    let twice_area: u128 = curve
        .points
        .windows(2)
        .map(|w| ((w[1].fp - w[0].fp) * (w[1].tp + w[0].tp)) as u128)
        .sum();
    twice_area as f64 / (2 * curve.positives as u128 * curve.negatives as u128) as f64
}

/// The point with the highest balanced accuracy, ties going to the higher
/// sensitivity.
pub fn best_bacc_point(curve: &RocCurve) -> OperatingPoint {
    let best = curve
        .points
        .iter()
        .fold(None::<&RocPoint>, |best, p| match best {
            Some(b) if (b.bacc(), b.sensitivity) >= (p.bacc(), p.sensitivity) => Some(b),
            _ => Some(p),
        })
        .expect("a curve always has points");
    best.into()
}

/// Highest specificity among points with `Sen >= floor`; this is the point
/// with the least achievable sensitivity at or above the floor. BAcc uses
/// the achieved sensitivity.
pub fn spe_at_sensitivity(curve: &RocCurve, floor: f64) -> Result<OperatingPoint> {
    if !(floor > 0.0 && floor <= 1.0) {
        return Err(Error::Parameter(format!(
            "sensitivity floor must lie in (0, 1], got {floor}"
        )));
    }
    let p = curve
        .points
        .iter()
        .find(|p| p.sensitivity >= floor)
        .expect("the last point has sensitivity 1");
    Ok(p.into())
}

/// AUC plus the max-BAcc operating point for one score set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreeningSummary {
    pub auc: f64,
    pub best: OperatingPoint,
}

pub fn summarize(scores: &[f64], labels: &[bool]) -> Result<ScreeningSummary> {
    let curve = roc_curve(scores, labels)?;
    Ok(ScreeningSummary {
        auc: auc(&curve),
        best: best_bacc_point(&curve),
    })
}

/// `name auc=… bacc=… sen=… spe=… threshold=…` with four decimals.
pub fn report_line(name: &str, summary: &ScreeningSummary) -> String {
    format!(
        "{name}\tauc={:.4}\tbacc={:.4}\tsen={:.4}\tspe={:.4}\tthreshold={}",
        summary.auc,
        summary.best.bacc,
        summary.best.sensitivity,
        summary.best.specificity,
        fmt_threshold(summary.best.threshold)
    )
}
