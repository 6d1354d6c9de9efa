//! Reference predictors: a uniform-random probability series and a null
//! baseline that scores exactly 0 on every metric.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ConfusionCounts, MetricResult, MetricSpec};
use crate::series::ProbabilitySeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineKind {
    Random { seed: u64 },
    Null,
}

/// I.i.d. uniform probabilities in `[0, 1)`, reproducible from `seed`.
pub fn random_baseline(length: usize, rate: f64, seed: u64) -> Result<ProbabilitySeries> {
    if length == 0 {
        return Err(Error::EmptySeries);
    }
    let mut rng = crate::rng::seeded_rng(seed);
    let values = (0..length).map(|_| rng.random::<f64>()).collect();
    ProbabilitySeries::new(values, rate)
}

/// Zero scores for every spec, built directly rather than from a prediction series.
pub fn null_baseline_scores(specs: &[MetricSpec]) -> Result<Vec<MetricResult>> {
    if specs.is_empty() {
        return Err(Error::InvalidSpec("no metric specifications given".into()));
    }
    Ok(specs
        .iter()
        .map(|spec| MetricResult {
            metric: spec.label(),
            spec: *spec,
            precision: None,
            recall: None,
            fdr: None,
            f_score: 0.0,
            counts: ConfusionCounts::zero(spec.family.regime()),
            degenerate_empty: false,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{pointwise_counts, Regime};
    use crate::series::{threshold_predictions, LabelSeries, WindowSpec};

    #[test]
    fn random_baseline_is_deterministic() {
        let a = random_baseline(5, 4.0, 11).unwrap();
        let b = random_baseline(5, 4.0, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_baseline(5, 4.0, 12).unwrap());
        assert!(random_baseline(0, 4.0, 1).is_err());
    }

    fn positive_rate(delta: f64, seed: u64) -> f64 {
        let probs = random_baseline(1_000_000, 4.0, seed).unwrap();
        threshold_predictions(&probs, delta).unwrap().prevalence()
    }

    #[test]
    fn positive_rate_tracks_threshold() {
        // sd of the rate at n = 1e6 is at most 5e-4
        assert!((positive_rate(0.501, 3) - 0.499).abs() < 0.002);
        assert!((positive_rate(0.71, 4) - 0.29).abs() < 0.002);
    }

    #[test]
    fn random_precision_matches_prevalence() {
        // dense truth with prevalence 0.3
        let n = 200_000;
        let truth: Vec<bool> = (0..n).map(|t| t % 10 < 3).collect();
        let truth = LabelSeries::from_bools(truth, 4.0).unwrap();
        let probs = random_baseline(n, 4.0, 99).unwrap();
        let pred = threshold_predictions(&probs, 0.5).unwrap();
        let c = pointwise_counts(&truth, &pred).unwrap();
        let precision = c.tp as f64 / (c.tp + c.fp) as f64;
        // sd ≈ sqrt(0.21 / 1e5) ≈ 1.45e-3
        assert!((precision - 0.3).abs() < 0.005, "precision {precision}");
    }

    #[test]
    fn null_scores_are_zero() {
        let specs = [
            MetricSpec::pointwise(1.0).unwrap(),
            MetricSpec::windowed(WindowSpec::radius(30.0).unwrap()).unwrap(),
            MetricSpec::pa(0.0).unwrap(),
        ];
        let out = null_baseline_scores(&specs).unwrap();
        assert_eq!(out.len(), 3);
        for (r, spec) in out.iter().zip(&specs) {
            assert_eq!(r.f_score, 0.0);
            assert_eq!(r.precision, None);
            assert_eq!(r.recall, None);
            assert_eq!(r.counts.tp + r.counts.fp + r.counts.fn_, 0);
            assert_eq!(r.counts.regime, spec.family.regime());
        }
        assert_eq!(out[1].counts.regime, Regime::Windowed);
        assert!(null_baseline_scores(&[]).is_err());
    }
}
