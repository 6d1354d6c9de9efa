//! Subject-level significance testing.
//!
//! Scores are rounded to two decimals once, before differencing. The
//! permutation test flips the sign of each per-subject difference; when all
//! `2^n` sign vectors fit under the replicate cap they are enumerated and the
//! p-value is the plain fraction of assignments at least as extreme as the
//! observed mean (so `n = 9` with equal differences gives `2/512`). Above the
//! cap, `cap` random sign vectors are drawn and the smoothed estimate
//! `(1 + count) / (1 + cap)` is reported.
//!
//! Replicate `b` always draws from ChaCha stream `b`, so the parallel loops
//! below return exactly what a sequential loop would.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream};

pub const DEFAULT_REPLICATES: usize = 10_000;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Rounds to two decimals, half away from zero.
pub fn round2(x: f64) -> f64 {
    hundredths(x) as f64 / 100.0
}

fn hundredths(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

/// Per-subject differences `round2(x_i) - round2(y_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceVector {
    values: Vec<f64>,
}

impl DifferenceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Misaligned("no subjects".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("differences must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Differences of positionally aligned per-subject scores.
pub fn paired_differences(model: &[f64], baseline: &[f64]) -> Result<DifferenceVector> {
    if model.len() != baseline.len() {
        return Err(Error::Misaligned(format!(
            "{} model scores vs {} baseline scores",
            model.len(),
            baseline.len()
        )));
    }
    DifferenceVector::new(
        model
            .iter()
            .zip(baseline)
            .map(|(&x, &y)| (hundredths(x) - hundredths(y)) as f64 / 100.0)
            .collect(),
    )
}

/// Aligns two `(subject, score)` lists by subject id, in the order of `model`.
pub fn align_by_subject<S: AsRef<str>>(
    model: &[(S, f64)],
    baseline: &[(S, f64)],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if model.len() != baseline.len() {
        return Err(Error::Misaligned(format!(
            "{} model subjects vs {} baseline subjects",
            model.len(),
            baseline.len()
        )));
    }
    let mut lookup = std::collections::HashMap::with_capacity(baseline.len());
    for (id, score) in baseline {
        if lookup.insert(id.as_ref(), *score).is_some() {
            return Err(Error::Misaligned(format!(
                "duplicate subject '{}'",
                id.as_ref()
            )));
        }
    }
    let mut xs = Vec::with_capacity(model.len());
    let mut ys = Vec::with_capacity(model.len());
    for (id, score) in model {
        let other = lookup.remove(id.as_ref()).ok_or_else(|| {
            Error::Misaligned(format!("subject '{}' missing from baseline", id.as_ref()))
        })?;
        xs.push(*score);
        ys.push(other);
    }
    Ok((xs, ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub p_value: f64,
    pub b_used: usize,
    pub exhaustive: bool,
}

fn exhaustive_size(n: usize, cap: usize) -> Option<usize> {
    if n >= usize::BITS as usize - 1 {
        return None;
    }
    let total = 1usize << n;
    (total <= cap).then_some(total)
}

/// Two-sided sign-flip permutation test on the mean difference.
pub fn permutation_test(d: &DifferenceVector, cap: usize, seed: u64) -> PermutationResult {
    let values = d.values();
    let observed = values.iter().sum::<f64>().abs();
    // mathematically tied sums may differ by rounding in the last bits
    let tol = 1e-9 * values.iter().map(|v| v.abs()).sum::<f64>();
    let extreme = |sum: f64| sum.abs() >= observed - tol;

    if let Some(total) = exhaustive_size(d.n(), cap) {
        let count = (0..total)
            .into_par_iter()
            .filter(|&mask| {
                let sum: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| if mask >> i & 1 == 1 { -v } else { v })
                    .sum();
                extreme(sum)
            })
            .count();
        return PermutationResult {
            p_value: count as f64 / total as f64,
            b_used: total,
            exhaustive: true,
        };
    }

    let count = (0..cap as u64)
        .into_par_iter()
        .filter(|&b| {
            let mut rng = substream(seed, b);
            let sum: f64 = values
                .iter()
                .map(|&v| if rng.random::<bool>() { -v } else { v })
                .sum();
            extreme(sum)
        })
        .count();
    PermutationResult {
        p_value: (1 + count) as f64 / (1 + cap) as f64,
        b_used: cap,
        exhaustive: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub lo: f64,
    pub hi: f64,
    pub b_used: usize,
}

/// `min(C(2n - 1, n), cap)`: the number of distinct resamples, capped.
pub fn bootstrap_replicates(n: usize, cap: usize) -> usize {
    // C(2n-1, n) = prod_{i=1..n} (n - 1 + i) / i, exact at every step
    let mut c: u128 = 1;
    for i in 1..=n as u128 {
        c = c * (n as u128 - 1 + i) / i;
        if c > cap as u128 {
            return cap;
        }
    }
    c as usize
}

/// Linear interpolation between order statistics at `h = (len - 1) * q`.
pub fn percentile_linear(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty sample");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// 95% percentile bootstrap interval for the mean difference.
pub fn bootstrap_ci(d: &DifferenceVector, cap: usize, seed: u64) -> BootstrapCI {
    let values = d.values();
    let n = d.n();
    let b = bootstrap_replicates(n, cap).max(1);
    let mut means: Vec<f64> = (0..b as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r);
            (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);

    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = percentile_linear(&means, 0.025).clamp(min, max);
    let hi = percentile_linear(&means, 0.975).clamp(min, max);
    BootstrapCI { lo, hi, b_used: b }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stars {
    #[default]
    #[serde(rename = "")]
    None,
    #[serde(rename = "*")]
    One,
    #[serde(rename = "**")]
    Two,
    #[serde(rename = "***")]
    Three,
}

impl Stars {
    pub fn for_p(p: f64) -> Self {
        if p < 0.001 {
            Stars::Three
        } else if p < 0.01 {
            Stars::Two
        } else if p < 0.05 {
            Stars::One
        } else {
            Stars::None
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    #[default]
    None,
    /// Every rounded model score is 0.00.
    AllZero,
    /// Every rounded model score is 1.00.
    AllOne,
}

/// Outcome of testing one metric on one dataset against both baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceCell {
    /// The larger of the two p-values.
    pub p_reported: f64,
    pub p_random: f64,
    pub p_null: f64,
    pub mean_diff_random: f64,
    pub mean_diff_null: f64,
    pub ci_vs_random: BootstrapCI,
    pub stars: Stars,
    pub fail_random: bool,
    pub fail_null: bool,
    pub degenerate: Degeneracy,
    pub n_subjects: usize,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub cap: usize,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            cap: DEFAULT_REPLICATES,
            seed: 0,
        }
    }
}

/// The model must beat both baselines: each side's test has to reject at
/// `alpha` with a positive mean difference. Stars come from the larger
/// p-value and are only awarded when neither side fails.
pub fn combined_significance(
    model: &[f64],
    random: &[f64],
    null: &[f64],
    config: &TestConfig,
) -> Result<SignificanceCell> {
    let d_random = paired_differences(model, random)?;
    let d_null = paired_differences(model, null)?;

    let rounded: Vec<i64> = model.iter().map(|&x| hundredths(x)).collect();
    let degenerate = if rounded.iter().all(|&x| x == 0) {
        Degeneracy::AllZero
    } else if rounded.iter().all(|&x| x == 100) {
        Degeneracy::AllOne
    } else {
        Degeneracy::None
    };

    let (perm_random, perm_null) = if degenerate == Degeneracy::AllZero {
        let one = PermutationResult {
            p_value: 1.0,
            b_used: 0,
            exhaustive: true,
        };
        (one, one)
    } else {
        (
            permutation_test(&d_random, config.cap, derive_seed(config.seed, 1)),
            permutation_test(&d_null, config.cap, derive_seed(config.seed, 2)),
        )
    };
    let ci_vs_random = bootstrap_ci(&d_random, config.cap, derive_seed(config.seed, 3));

    let fails = |p: f64, mean: f64| !(p < config.alpha && mean > 0.0);
    let fail_random = fails(perm_random.p_value, d_random.mean());
    let fail_null = fails(perm_null.p_value, d_null.mean());
    let p_reported = perm_random.p_value.max(perm_null.p_value);
    let stars = if fail_random || fail_null {
        Stars::None
    } else {
        Stars::for_p(p_reported)
    };

    Ok(SignificanceCell {
        p_reported,
        p_random: perm_random.p_value,
        p_null: perm_null.p_value,
        mean_diff_random: d_random.mean(),
        mean_diff_null: d_null.mean(),
        ci_vs_random,
        stars,
        fail_random,
        fail_null,
        degenerate,
        n_subjects: model.len(),
        exhaustive: perm_random.exhaustive && perm_null.exhaustive,
    })
}
