//! Confusion counts under the pointwise, point-adjusted (pa%K) and
//! window-based regimes, and the precision/recall/FDR/F_β derived from them.
//!
//! Counts are integers; every ratio is derived in one place
//! ([`derive_metric`]) so the zero-denominator convention is shared by all
//! three families. A ratio whose denominator is zero is `None` and
//! contributes 0 to the F-score.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{segments_of, LabelSeries, SubjectRecord, WindowSpec};

/// Counting regime that produced a [`ConfusionCounts`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Pointwise,
    PaK,
    Windowed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub regime: Regime,
}

impl ConfusionCounts {
    pub fn zero(regime: Regime) -> Self {
        Self {
            tp: 0,
            fp: 0,
            fn_: 0,
            regime,
        }
    }

    /// Field-wise sum. Both sides must share a regime.
    pub fn merge(self, other: Self) -> Self {
        debug_assert_eq!(self.regime, other.regime);
        Self {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            regime: self.regime,
        }
    }
}

/// Metric family together with its hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MetricFamily {
    Pointwise,
    /// Point adjustment requiring at least fraction `k` of a segment.
    PaK { k: f64 },
    Windowed { window: WindowSpec },
}

impl MetricFamily {
    pub fn regime(&self) -> Regime {
        match self {
            MetricFamily::Pointwise => Regime::Pointwise,
            MetricFamily::PaK { .. } => Regime::PaK,
            MetricFamily::Windowed { .. } => Regime::Windowed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    #[serde(flatten)]
    pub family: MetricFamily,
    pub beta: f64,
}

impl MetricSpec {
    pub fn new(family: MetricFamily, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidSpec(format!("beta must be positive, got {beta}")));
        }
        if let MetricFamily::PaK { k } = family {
            if !(0.0..=1.0).contains(&k) {
                return Err(Error::InvalidSpec(format!("K must lie in [0, 1], got {k}")));
            }
        }
        if let MetricFamily::Windowed { window } = family {
            WindowSpec::new(window.duration, window.mode)?;
        }
        Ok(Self { family, beta })
    }

    pub fn pointwise(beta: f64) -> Result<Self> {
        Self::new(MetricFamily::Pointwise, beta)
    }

    pub fn pa(k: f64) -> Result<Self> {
        Self::new(MetricFamily::PaK { k }, 1.0)
    }

    pub fn windowed(window: WindowSpec) -> Result<Self> {
        Self::new(MetricFamily::Windowed { window }, 1.0)
    }

    /// Display name, e.g. `F1`, `F_beta=0.5`, `F1_pa50%`, `F1_w,10s`.
    pub fn label(&self) -> String {
        let head = if self.beta == 1.0 {
            "F1".to_string()
        } else {
            format!("F_beta={}", self.beta)
        };
        match self.family {
            MetricFamily::Pointwise => head,
            MetricFamily::PaK { k: 0.0 } => format!("{head}_pa"),
            MetricFamily::PaK { k } => format!("{head}_pa{}%", k * 100.0),
            MetricFamily::Windowed { window } => {
                let mode = match window.mode {
                    crate::series::WindowMode::Radius => "",
                    crate::series::WindowMode::Span => "(span)",
                };
                format!("{head}_w,{}{mode}", format_duration(window.duration))
            }
        }
    }

    /// Hyperparameters as a compact `key=value` list.
    pub fn param(&self) -> String {
        match self.family {
            MetricFamily::Pointwise => format!("beta={}", self.beta),
            MetricFamily::PaK { k } => format!("k={k};beta={}", self.beta),
            MetricFamily::Windowed { window } => format!(
                "w={};mode={};beta={}",
                format_duration(window.duration),
                match window.mode {
                    crate::series::WindowMode::Radius => "radius",
                    crate::series::WindowMode::Span => "span",
                },
                self.beta
            ),
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// `600` → `10min`, `30` → `30s`, `0.5` → `0.5s`.
pub fn format_duration(seconds: f64) -> String {
    if seconds >= 60.0 && seconds % 60.0 == 0.0 {
        format!("{}min", seconds / 60.0)
    } else {
        format!("{seconds}s")
    }
}

/// Scores derived from one [`ConfusionCounts`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub metric: String,
    pub spec: MetricSpec,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub fdr: Option<f64>,
    pub f_score: f64,
    pub counts: ConfusionCounts,
    /// No events and no predictions.
    pub degenerate_empty: bool,
}

fn check_pair(y: &LabelSeries, yhat: &LabelSeries) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::MalformedRecord {
            subject: None,
            reason: format!(
                "truth has length {} but predictions have length {}",
                y.len(),
                yhat.len()
            ),
        });
    }
    Ok(())
}

pub fn pointwise_counts(y: &LabelSeries, yhat: &LabelSeries) -> Result<ConfusionCounts> {
    check_pair(y, yhat)?;
    Ok(pointwise_raw(y.values(), yhat.values()))
}

fn pointwise_raw(y: &[bool], yhat: &[bool]) -> ConfusionCounts {
    let mut c = ConfusionCounts::zero(Regime::Pointwise);
    for (&truth, &pred) in y.iter().zip(yhat) {
        match (truth, pred) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    c
}

/// Point-adjusted counts. A true segment is credited in full when the
/// fraction of its samples predicted positive is at least `k` and non-zero.
/// False positives are the unadjusted pointwise ones.
pub fn pa_counts(y: &LabelSeries, yhat: &LabelSeries, k: f64) -> Result<ConfusionCounts> {
    check_pair(y, yhat)?;
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::InvalidSpec(format!("K must lie in [0, 1], got {k}")));
    }
    Ok(pa_raw(y.values(), yhat.values(), k))
}

fn pa_raw(y: &[bool], yhat: &[bool], k: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::zero(Regime::PaK);
    for seg in segments_of(y) {
        let hits = yhat[seg.range()].iter().filter(|&&p| p).count();
        let fraction = hits as f64 / seg.len() as f64;
        if hits > 0 && fraction >= k {
            c.tp += seg.len() as u64;
        } else {
            c.tp += hits as u64;
            c.fn_ += (seg.len() - hits) as u64;
        }
    }
    c.fp = y
        .iter()
        .zip(yhat)
        .filter(|(&truth, &pred)| pred && !truth)
        .count() as u64;
    c
}

/// Window-based counts with the window radius taken from `window` at the
/// truth series' sampling rate.
pub fn window_counts(
    y: &LabelSeries,
    yhat: &LabelSeries,
    window: &WindowSpec,
) -> Result<ConfusionCounts> {
    check_pair(y, yhat)?;
    Ok(window_raw(
        y.values(),
        yhat.values(),
        window.radius_samples(y.rate()),
    ))
}

/// Window-based counts with an explicit radius in samples.
pub fn window_counts_radius(
    y: &LabelSeries,
    yhat: &LabelSeries,
    radius: usize,
) -> Result<ConfusionCounts> {
    check_pair(y, yhat)?;
    Ok(window_raw(y.values(), yhat.values(), radius))
}

fn prefix_counts(v: &[bool]) -> Vec<usize> {
    let mut prefix = Vec::with_capacity(v.len() + 1);
    prefix.push(0);
    let mut acc = 0;
    for &x in v {
        acc += usize::from(x);
        prefix.push(acc);
    }
    prefix
}

fn window_raw(y: &[bool], yhat: &[bool], radius: usize) -> ConfusionCounts {
    let len = y.len();
    let y_prefix = prefix_counts(y);
    let yhat_prefix = prefix_counts(yhat);
    let ones_in = |prefix: &[usize], t: usize| {
        let w = crate::series::window_indices(t, radius, len);
        prefix[w.end() + 1] - prefix[*w.start()]
    };

    let mut c = ConfusionCounts::zero(Regime::Windowed);
    for t in 0..len {
        if yhat[t] {
            if ones_in(&y_prefix, t) > 0 {
                c.tp += 1;
            } else {
                c.fp += 1;
            }
        }
        if y[t] && ones_in(&yhat_prefix, t) == 0 {
            c.fn_ += 1;
        }
    }
    c
}

/// Counts for `spec`'s regime.
pub fn counts_for(y: &LabelSeries, yhat: &LabelSeries, spec: &MetricSpec) -> Result<ConfusionCounts> {
    match spec.family {
        MetricFamily::Pointwise => pointwise_counts(y, yhat),
        MetricFamily::PaK { k } => pa_counts(y, yhat, k),
        MetricFamily::Windowed { window } => window_counts(y, yhat, &window),
    }
}

/// `(1 + β²)·P·R / (β²·P + R)`, or 0 when the denominator vanishes.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

fn ratio(num: u64, denom: u64) -> Option<f64> {
    (denom > 0).then(|| num as f64 / denom as f64)
}

pub fn derive_metric(spec: &MetricSpec, counts: ConfusionCounts) -> MetricResult {
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    let fdr = ratio(counts.fp, counts.tp + counts.fp);
    let f_score = match (precision, recall) {
        (Some(p), Some(r)) => f_beta(p, r, spec.beta),
        _ => 0.0,
    };
    MetricResult {
        metric: spec.label(),
        spec: *spec,
        precision,
        recall,
        fdr,
        f_score,
        counts,
        degenerate_empty: counts.tp == 0 && counts.fp == 0 && counts.fn_ == 0,
    }
}

/// Scores one subject under every spec, in the order given.
pub fn evaluate_subject(
    record: &SubjectRecord,
    specs: &[MetricSpec],
    delta: f64,
) -> Result<Vec<MetricResult>> {
    if specs.is_empty() {
        return Err(Error::InvalidSpec("no metric specifications given".into()));
    }
    let predictions = record.resolve_predictions(delta)?;
    evaluate_predictions(&record.truth, &predictions, specs).map_err(|e| match e {
        Error::MalformedRecord { subject: None, reason } => Error::MalformedRecord {
            subject: Some(record.subject_id.clone()),
            reason,
        },
        other => other,
    })
}

/// Scores hard predictions against truth under every spec.
pub fn evaluate_predictions(
    truth: &LabelSeries,
    predictions: &LabelSeries,
    specs: &[MetricSpec],
) -> Result<Vec<MetricResult>> {
    specs
        .iter()
        .map(|spec| Ok(derive_metric(spec, counts_for(truth, predictions, spec)?)))
        .collect()
}
