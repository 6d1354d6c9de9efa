//! Label and probability series, event segments and window arithmetic.
//!
//! Everything here is a pure function over immutable data. The metric
//! families in [`crate::metrics`] are built on [`extract_segments`] and
//! [`window_indices`].

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_rate(rate: f64) -> Result<()> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidRate(rate))
    }
}

/// Binary event indicators sampled at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSeries {
    values: Vec<bool>,
    rate: f64,
}

impl LabelSeries {
    /// Builds a series from 0/1 integers.
    pub fn new(values: &[u8], rate: f64) -> Result<Self> {
        check_rate(rate)?;
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        let values = values
            .iter()
            .enumerate()
            .map(|(index, &value)| match value {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::InvalidLabel { index, value }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { values, rate })
    }

    pub fn from_bools(values: Vec<bool>, rate: f64) -> Result<Self> {
        check_rate(rate)?;
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        Ok(Self { values, rate })
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    /// Fraction of samples labeled as events.
    pub fn prevalence(&self) -> f64 {
        self.positives() as f64 / self.len() as f64
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.values.iter().map(|&v| u8::from(v)).collect()
    }
}

/// Model event probabilities sampled at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySeries {
    values: Vec<f64>,
    rate: f64,
}

impl ProbabilitySeries {
    pub fn new(values: Vec<f64>, rate: f64) -> Result<Self> {
        check_rate(rate)?;
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::ProbabilityOutOfRange { index, value });
        }
        Ok(Self { values, rate })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A maximal run of positive labels, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventSegment {
    pub start: usize,
    pub end: usize,
}

impl EventSegment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    /// Segments always hold at least one sample.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn range(&self) -> RangeInclusive<usize> {
        self.start..=self.end
    }
}

/// How a window duration maps onto a tolerance around each sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// `±duration` around the sample.
    #[default]
    Radius,
    /// `duration` is the full width; the radius is half of it, rounded down.
    Span,
}

/// A temporal tolerance expressed in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub duration: f64,
    #[serde(default)]
    pub mode: WindowMode,
}

impl WindowSpec {
    pub fn new(duration: f64, mode: WindowMode) -> Result<Self> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "window duration must be non-negative, got {duration}"
            )));
        }
        Ok(Self { duration, mode })
    }

    pub fn radius(duration: f64) -> Result<Self> {
        Self::new(duration, WindowMode::Radius)
    }

    /// Radius in samples at the given rate.
    pub fn radius_samples(&self, rate: f64) -> usize {
        let samples = seconds_to_samples(self.duration, rate);
        match self.mode {
            WindowMode::Radius => samples,
            WindowMode::Span => samples / 2,
        }
    }
}

/// Per-subject evaluation unit: ground truth plus probabilities and/or hard predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub truth: LabelSeries,
    pub probabilities: Option<ProbabilitySeries>,
    pub predictions: Option<LabelSeries>,
}

impl SubjectRecord {
    pub fn new(
        subject_id: impl Into<String>,
        truth: LabelSeries,
        probabilities: Option<ProbabilitySeries>,
        predictions: Option<LabelSeries>,
    ) -> Result<Self> {
        let subject_id = subject_id.into();
        let malformed = |reason: String| Error::MalformedRecord {
            subject: Some(subject_id.clone()),
            reason,
        };
        if probabilities.is_none() && predictions.is_none() {
            return Err(malformed("neither probabilities nor predictions given".into()));
        }
        if let Some(p) = &probabilities {
            if p.len() != truth.len() || p.rate() != truth.rate() {
                return Err(malformed(format!(
                    "probabilities have length {} at {} Hz, truth has length {} at {} Hz",
                    p.len(),
                    p.rate(),
                    truth.len(),
                    truth.rate()
                )));
            }
        }
        if let Some(p) = &predictions {
            if p.len() != truth.len() || p.rate() != truth.rate() {
                return Err(malformed(format!(
                    "predictions have length {} at {} Hz, truth has length {} at {} Hz",
                    p.len(),
                    p.rate(),
                    truth.len(),
                    truth.rate()
                )));
            }
        }
        Ok(Self {
            subject_id,
            truth,
            probabilities,
            predictions,
        })
    }

    /// Hard predictions, thresholding the probabilities at `delta` when none were given.
    pub fn resolve_predictions(&self, delta: f64) -> Result<LabelSeries> {
        match (&self.predictions, &self.probabilities) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(probs)) => threshold_predictions(probs, delta),
            (None, None) => Err(Error::MalformedRecord {
                subject: Some(self.subject_id.clone()),
                reason: "neither probabilities nor predictions given".into(),
            }),
        }
    }
}

/// Returns the maximal runs of consecutive positive labels, in order.
pub fn extract_segments(labels: &LabelSeries) -> Vec<EventSegment> {
    segments_of(labels.values())
}

pub(crate) fn segments_of(values: &[bool]) -> Vec<EventSegment> {
    let mut segments = Vec::new();
    let mut open: Option<usize> = None;
    for (t, &v) in values.iter().enumerate() {
        match (v, open) {
            (true, None) => open = Some(t),
            (false, Some(start)) => {
                segments.push(EventSegment { start, end: t - 1 });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        segments.push(EventSegment {
            start,
            end: values.len() - 1,
        });
    }
    segments
}

/// Hard predictions: a sample is an event iff its probability is at least `delta`.
pub fn threshold_predictions(probs: &ProbabilitySeries, delta: f64) -> Result<LabelSeries> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidThreshold(delta));
    }
    let values = probs.values().iter().map(|&p| p >= delta).collect();
    LabelSeries::from_bools(values, probs.rate())
}

/// Window `w_t` of radius `radius` samples around `t`, clamped to `[0, len - 1]`.
pub fn window_indices(t: usize, radius: usize, len: usize) -> RangeInclusive<usize> {
    debug_assert!(t < len, "sample index {t} out of bounds for length {len}");
    t.saturating_sub(radius)..=t.saturating_add(radius).min(len - 1)
}

/// Round-half-up of `duration * rate`.
pub fn seconds_to_samples(duration: f64, rate: f64) -> usize {
    debug_assert!(duration >= 0.0 && rate > 0.0);
    (duration * rate + 0.5).floor() as usize
}

/// Parses a human duration such as `10s`, `0.5s`, `5min`, `1h` or `250ms`
/// into seconds. A bare number is taken as seconds.
pub fn parse_duration(text: &str) -> Result<f64> {
    let text = text.trim();
    let split = text
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    let value: f64 = number
        .parse()
        .map_err(|_| Error::InvalidDuration(text.to_string()))?;
    let scale = match unit.trim() {
        "" | "s" | "sec" | "secs" => 1.0,
        "ms" => 1e-3,
        "m" | "min" | "mins" => 60.0,
        "h" | "hr" | "hrs" => 3600.0,
        _ => return Err(Error::InvalidDuration(text.to_string())),
    };
    Ok(value * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[u8]) -> LabelSeries {
        LabelSeries::new(v, 4.0).unwrap()
    }

    fn seg(start: usize, end: usize) -> EventSegment {
        EventSegment { start, end }
    }

    #[test]
    fn segments_of_mixed_series() {
        assert_eq!(
            extract_segments(&labels(&[0, 1, 1, 0, 1])),
            vec![seg(1, 2), seg(4, 4)]
        );
        assert!(extract_segments(&labels(&[0, 0, 0])).is_empty());
        assert_eq!(extract_segments(&labels(&[1, 1, 1, 1])), vec![seg(0, 3)]);
    }

    #[test]
    fn threshold_is_inclusive() {
        let p = ProbabilitySeries::new(vec![0.4, 0.6, 0.501], 4.0).unwrap();
        assert_eq!(threshold_predictions(&p, 0.501).unwrap().to_u8(), [0, 1, 1]);

        let p = ProbabilitySeries::new(vec![0.7, 0.72], 4.0).unwrap();
        assert_eq!(threshold_predictions(&p, 0.71).unwrap().to_u8(), [0, 1]);

        let p = ProbabilitySeries::new(vec![0.0, 0.3, 1.0], 4.0).unwrap();
        assert_eq!(threshold_predictions(&p, 0.0).unwrap().to_u8(), [1, 1, 1]);
        assert!(threshold_predictions(&p, 1.5).is_err());
    }

    #[test]
    fn window_clamps_at_edges() {
        assert_eq!(window_indices(5, 2, 100), 3..=7);
        assert_eq!(window_indices(0, 2, 100), 0..=2);
        assert_eq!(window_indices(99, 2, 100), 97..=99);
        assert_eq!(window_indices(3, 0, 5), 3..=3);
        assert_eq!(window_indices(1, usize::MAX, 5), 0..=4);
    }

    #[test]
    fn seconds_round_half_up() {
        assert_eq!(seconds_to_samples(10.0, 4.0), 40);
        assert_eq!(seconds_to_samples(0.0, 4.0), 0);
        assert_eq!(seconds_to_samples(0.3, 4.0), 1);
        assert_eq!(seconds_to_samples(0.125, 4.0), 1);
        assert_eq!(seconds_to_samples(1200.0, 4.0), 4800);
    }

    #[test]
    fn durations() {
        assert_eq!(parse_duration("10s").unwrap(), 10.0);
        assert_eq!(parse_duration("5min").unwrap(), 300.0);
        assert_eq!(parse_duration("60min").unwrap(), 3600.0);
        assert_eq!(parse_duration("1h").unwrap(), 3600.0);
        assert_eq!(parse_duration("0.3s").unwrap(), 0.3);
        assert_eq!(parse_duration("250ms").unwrap(), 0.25);
        assert_eq!(parse_duration("7").unwrap(), 7.0);
        assert!(parse_duration("ten").is_err());
        assert!(parse_duration("10 parsecs").is_err());
        assert!(parse_duration("-1s").is_err());
    }

    #[test]
    fn span_mode_halves_radius() {
        let w = WindowSpec::new(10.0, WindowMode::Span).unwrap();
        assert_eq!(w.radius_samples(1.0), 5);
        let w = WindowSpec::new(2.75, WindowMode::Span).unwrap();
        // 11 samples at 4 Hz, radius 5
        assert_eq!(w.radius_samples(4.0), 5);
        assert!(WindowSpec::radius(-1.0).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(matches!(
            LabelSeries::new(&[0, 2], 4.0),
            Err(Error::InvalidLabel { index: 1, value: 2 })
        ));
        assert!(matches!(LabelSeries::new(&[], 4.0), Err(Error::EmptySeries)));
        assert!(matches!(LabelSeries::new(&[1], 0.0), Err(Error::InvalidRate(_))));
        assert!(matches!(
            ProbabilitySeries::new(vec![0.2, 1.2], 4.0),
            Err(Error::ProbabilityOutOfRange { index: 1, .. })
        ));
        assert!(ProbabilitySeries::new(vec![f64::NAN], 4.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn segments_cover_exactly_the_positives(v in proptest::collection::vec(any::<bool>(), 1..64)) {
                let s = LabelSeries::from_bools(v.clone(), 1.0).unwrap();
                let segs = extract_segments(&s);
                let mut covered = vec![false; v.len()];
                for (i, sg) in segs.iter().enumerate() {
                    prop_assert!(sg.start <= sg.end && sg.end < v.len());
                    if i > 0 {
                        // disjoint and maximal: at least one zero between segments
                        prop_assert!(segs[i - 1].end + 1 < sg.start);
                    }
                    for t in sg.range() {
                        covered[t] = true;
                    }
                }
                prop_assert_eq!(covered, v.clone());
                let rises = v.windows(2).filter(|w| !w[0] && w[1]).count();
                prop_assert!(segs.len() <= rises + 1);
            }

            #[test]
            fn window_bounds_monotone_in_t(radius in 0usize..20, len in 1usize..60) {
                let mut prev = window_indices(0, radius, len);
                prop_assert!(prev.contains(&0));
                for t in 1..len {
                    let cur = window_indices(t, radius, len);
                    prop_assert!(cur.contains(&t));
                    prop_assert!(cur.start() >= prev.start() && cur.end() >= prev.end());
                    prev = cur;
                }
            }

            #[test]
            fn threshold_monotone_in_delta(
                p in proptest::collection::vec(0.0f64..=1.0, 1..40),
                a in 0.0f64..=1.0,
                b in 0.0f64..=1.0,
            ) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let probs = ProbabilitySeries::new(p, 4.0).unwrap();
                let low = threshold_predictions(&probs, lo).unwrap();
                let high = threshold_predictions(&probs, hi).unwrap();
                for (l, h) in low.values().iter().zip(high.values()) {
                    prop_assert!(!h || *l);
                }
            }
        }
    }
}
