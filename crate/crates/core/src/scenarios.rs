//! Six synthetic scenarios that pin down how the metric families disagree,
//! each with machine-checkable expectations. Used as a built-in validation
//! corpus.
//!
//! Series are sampled at 1 Hz, so a window of `n` seconds is `n` steps.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{evaluate_predictions, MetricFamily, MetricResult, MetricSpec};
use crate::series::{LabelSeries, WindowSpec};

pub const SCENARIO_RATE: f64 = 1.0;
pub const DEFAULT_LENGTH: usize = 200;
pub const MIN_LENGTH: usize = 80;
pub const EQ_TOLERANCE: f64 = 1e-9;
/// Density of the random prediction series in [`ScenarioId::RandomOverPoint`].
pub const RANDOM_DENSITY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    PerfectMatch,
    PointForLongEvent,
    FragmentedShifted,
    NearMiss,
    WindowOverPoint,
    RandomOverPoint,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 6] = [
        ScenarioId::PerfectMatch,
        ScenarioId::PointForLongEvent,
        ScenarioId::FragmentedShifted,
        ScenarioId::NearMiss,
        ScenarioId::WindowOverPoint,
        ScenarioId::RandomOverPoint,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioId::PerfectMatch => "perfect_match",
            ScenarioId::PointForLongEvent => "point_for_long_event",
            ScenarioId::FragmentedShifted => "fragmented_shifted",
            ScenarioId::NearMiss => "near_miss",
            ScenarioId::WindowOverPoint => "window_over_point",
            ScenarioId::RandomOverPoint => "random_over_point",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// Which metrics of the evaluated set an expectation applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    /// Every metric.
    All,
    /// Every metric except the windowed ones.
    NonWindowed,
    /// Pointwise F1 (β = 1).
    F1,
    /// Pointwise F_β with β ≠ 1.
    FBeta,
    /// Classic point adjustment (K = 0).
    Pa,
    /// pa%K with K > 0.
    PaK,
    Windowed,
}

impl Selector {
    fn matches(&self, spec: &MetricSpec) -> bool {
        match (self, spec.family) {
            (Selector::All, _) => true,
            (Selector::NonWindowed, f) => !matches!(f, MetricFamily::Windowed { .. }),
            (Selector::F1, MetricFamily::Pointwise) => spec.beta == 1.0,
            (Selector::FBeta, MetricFamily::Pointwise) => spec.beta != 1.0,
            (Selector::Pa, MetricFamily::PaK { k }) => k == 0.0,
            (Selector::PaK, MetricFamily::PaK { k }) => k > 0.0,
            (Selector::Windowed, MetricFamily::Windowed { .. }) => true,
            _ => false,
        }
    }
}

/// Right-hand side of a comparison: a constant or every metric picked by a selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Value(f64),
    Metric(Selector),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Eq(Bound),
    Lt(Bound),
    Gt(Bound),
    /// Strictly between the two values.
    Between(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub subject: Selector,
    pub check: Check,
}

impl Expectation {
    fn new(subject: Selector, check: Check) -> Self {
        Self { subject, check }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: ScenarioId,
    pub truth: LabelSeries,
    pub prediction: LabelSeries,
    pub expectations: Vec<Expectation>,
}

fn series(len: usize, ones: impl IntoIterator<Item = usize>) -> Result<LabelSeries> {
    let mut v = vec![false; len];
    for t in ones {
        v[t] = true;
    }
    LabelSeries::from_bools(v, SCENARIO_RATE)
}

/// Builds scenario `id` on a series of `length` steps centred at `length / 2`.
/// Only [`ScenarioId::RandomOverPoint`] uses `seed`.
pub fn generate_scenario(id: ScenarioId, length: usize, seed: u64) -> Result<Scenario> {
    use Bound::{Metric, Value};
    use Check::*;
    use Selector::*;

    if length < MIN_LENGTH {
        return Err(Error::InvalidSpec(format!(
            "scenario length must be at least {MIN_LENGTH}, got {length}"
        )));
    }
    let c = length / 2;
    let e = Expectation::new;

    let (truth, prediction, expectations) = match id {
        ScenarioId::PerfectMatch => (
            series(length, c - 10..c + 10)?,
            series(length, c - 10..c + 10)?,
            vec![e(All, Eq(Value(1.0)))],
        ),
        ScenarioId::PointForLongEvent => (
            // 60-step event, one predicted point inside it
            series(length, c - 30..c + 30)?,
            series(length, [c - 10])?,
            vec![
                e(Pa, Eq(Value(1.0))),
                e(F1, Lt(Value(0.2))),
                e(FBeta, Lt(Value(0.2))),
                e(PaK, Lt(Value(0.2))),
                e(Windowed, Between(0.0, 1.0)),
                e(Windowed, Lt(Metric(Pa))),
                e(Windowed, Gt(Metric(F1))),
            ],
        ),
        ScenarioId::FragmentedShifted => (
            series(length, c - 20..c + 10)?,
            // two fragments, the second running 5 steps past the event
            series(length, (c - 15..c - 5).chain(c..c + 15))?,
            vec![
                e(Windowed, Eq(Value(1.0))),
                e(NonWindowed, Lt(Value(1.0))),
            ],
        ),
        ScenarioId::NearMiss => (
            series(length, [c])?,
            series(length, [c + 5])?,
            vec![e(NonWindowed, Eq(Value(0.0))), e(Windowed, Gt(Value(0.0)))],
        ),
        ScenarioId::WindowOverPoint => (
            series(length, [c])?,
            series(length, c - 10..c + 26)?,
            vec![
                e(Windowed, Between(0.0, 1.0)),
                e(Windowed, Gt(Metric(F1))),
                e(NonWindowed, Lt(Value(0.2))),
            ],
        ),
        ScenarioId::RandomOverPoint => {
            let mut rng = crate::rng::seeded_rng(seed);
            let mut pred: Vec<bool> = (0..length).map(|_| rng.random_bool(RANDOM_DENSITY)).collect();
            pred[c] = false;
            if !(c - 5..=c + 5).any(|t| pred[t]) {
                pred[c + 3] = true;
            }
            (
                series(length, [c])?,
                LabelSeries::from_bools(pred, SCENARIO_RATE)?,
                vec![
                    e(NonWindowed, Eq(Value(0.0))),
                    e(Windowed, Between(0.0, 0.5)),
                ],
            )
        }
    };
    Ok(Scenario {
        id,
        truth,
        prediction,
        expectations,
    })
}

/// The metric set of the suite: F1, F_β per beta, pa%K per K, and F1_w with
/// a radius of `window_steps`.
pub fn suite_metrics(window_steps: usize, betas: &[f64], k_values: &[f64]) -> Result<Vec<MetricSpec>> {
    let mut specs = vec![MetricSpec::pointwise(1.0)?];
    for &b in betas {
        specs.push(MetricSpec::pointwise(b)?);
    }
    for &k in k_values {
        specs.push(MetricSpec::pa(k)?);
    }
    specs.push(MetricSpec::windowed(WindowSpec::radius(
        window_steps as f64 / SCENARIO_RATE,
    )?)?);
    Ok(specs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionOutcome {
    pub expectation: Expectation,
    pub metric: String,
    pub value: f64,
    pub description: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub id: ScenarioId,
    pub length: usize,
    pub results: Vec<MetricResult>,
    pub assertions: Vec<AssertionOutcome>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub rng_algorithm: String,
    pub window_steps: usize,
    pub betas: Vec<f64>,
    pub k_values: Vec<f64>,
    pub seed: u64,
    pub scenarios: Vec<ScenarioOutcome>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub window_steps: usize,
    pub betas: Vec<f64>,
    pub k_values: Vec<f64>,
    pub length: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            window_steps: 10,
            betas: vec![0.5, 2.0],
            k_values: vec![0.5, 0.0],
            length: DEFAULT_LENGTH,
            seed: 0,
        }
    }
}

fn check_one(check: &Check, value: f64, results: &[MetricResult]) -> Vec<(String, bool)> {
    let against = |bound: &Bound| -> Vec<(String, f64)> {
        match bound {
            Bound::Value(v) => vec![(format!("{v}"), *v)],
            Bound::Metric(sel) => results
                .iter()
                .filter(|r| sel.matches(&r.spec))
                .map(|r| (format!("{} ({})", r.metric, r.f_score), r.f_score))
                .collect(),
        }
    };
    match check {
        Check::Eq(b) => against(b)
            .into_iter()
            .map(|(name, v)| (format!("= {name}"), (value - v).abs() <= EQ_TOLERANCE))
            .collect(),
        Check::Lt(b) => against(b)
            .into_iter()
            .map(|(name, v)| (format!("< {name}"), value < v))
            .collect(),
        Check::Gt(b) => against(b)
            .into_iter()
            .map(|(name, v)| (format!("> {name}"), value > v))
            .collect(),
        Check::Between(lo, hi) => vec![(format!("in ({lo}, {hi})"), *lo < value && value < *hi)],
    }
}

/// Evaluates one scenario against `specs`. Failed expectations are recorded, not raised.
pub fn evaluate_scenario(scenario: &Scenario, specs: &[MetricSpec]) -> Result<ScenarioOutcome> {
    let results = evaluate_predictions(&scenario.truth, &scenario.prediction, specs)?;
    let mut assertions = Vec::new();
    for exp in &scenario.expectations {
        let subjects: Vec<&MetricResult> =
            results.iter().filter(|r| exp.subject.matches(&r.spec)).collect();
        if subjects.is_empty() {
            assertions.push(AssertionOutcome {
                expectation: *exp,
                metric: format!("{:?}", exp.subject),
                value: f64::NAN,
                description: "no evaluated metric matches".into(),
                passed: false,
            });
        }
        for r in subjects {
            let checks = check_one(&exp.check, r.f_score, &results);
            if checks.is_empty() {
                assertions.push(AssertionOutcome {
                    expectation: *exp,
                    metric: r.metric.clone(),
                    value: r.f_score,
                    description: "comparison target not evaluated".into(),
                    passed: false,
                });
            }
            for (description, passed) in checks {
                assertions.push(AssertionOutcome {
                    expectation: *exp,
                    metric: r.metric.clone(),
                    value: r.f_score,
                    description: format!("{} {description}", r.metric),
                    passed,
                });
            }
        }
    }
    let passed = assertions.iter().all(|a| a.passed);
    Ok(ScenarioOutcome {
        id: scenario.id,
        length: scenario.truth.len(),
        results,
        assertions,
        passed,
    })
}

/// Generates and evaluates all six scenarios.
pub fn run_scenario_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let specs = suite_metrics(config.window_steps, &config.betas, &config.k_values)?;
    let scenarios = ScenarioId::ALL
        .iter()
        .map(|&id| {
            let scenario = generate_scenario(id, config.length, config.seed)?;
            evaluate_scenario(&scenario, &specs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        schema_version: crate::SCHEMA_VERSION,
        tool_version: crate::TOOL_VERSION.to_string(),
        rng_algorithm: crate::rng::RNG_ALGORITHM.to_string(),
        window_steps: config.window_steps,
        betas: config.betas.clone(),
        k_values: config.k_values.clone(),
        seed: config.seed,
        passed: scenarios.iter().all(|s| s.passed),
        scenarios,
    })
}

/// Writes the generated scenarios as an evaluation CSV (`subject_id,t,y,p,yhat`),
/// one subject per scenario.
pub fn write_corpus_csv<W: std::io::Write>(config: &SuiteConfig, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subject_id", "t", "y", "p", "yhat"])
        .map_err(csv_io)?;
    for id in ScenarioId::ALL {
        let s = generate_scenario(id, config.length, config.seed)?;
        for (t, (&y, &p)) in s.truth.values().iter().zip(s.prediction.values()).enumerate() {
            w.write_record([
                id.as_str(),
                &t.to_string(),
                if y { "1" } else { "0" },
                "",
                if p { "1" } else { "0" },
            ])
            .map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
