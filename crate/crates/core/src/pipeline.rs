//! End-to-end evaluation of a dataset: per-subject metrics for the model and
//! both baselines, pooled metrics, and one significance cell per metric.
//!
//! Pooled metrics sum the confusion counts over subjects and derive the
//! ratios once (micro-averaging). Significance is tested on the per-subject
//! F-scores.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{null_baseline_scores, random_baseline};
use crate::dataset::{load_dataset, DatasetFormat};
use crate::error::{Error, Result};
use crate::metrics::{derive_metric, evaluate_predictions, ConfusionCounts, MetricResult, MetricSpec};
use crate::rng::{derive_seed, name_tag};
use crate::series::{threshold_predictions, SubjectRecord, WindowMode, WindowSpec};
use crate::stats::{combined_significance, SignificanceCell, TestConfig};

/// Seed-derivation tags keeping subject and metric streams apart.
const SUBJECT_DOMAIN: u64 = 0x7375_626a;
const METRIC_DOMAIN: u64 = 0x6d65_7472;

pub const DEFAULT_WINDOWS: [f64; 6] = [10.0, 30.0, 60.0, 300.0, 1200.0, 3600.0];
pub const DEFAULT_K_VALUES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_BETAS: [f64; 3] = [0.5, 1.0, 2.0];
pub const DEFAULT_RATE: f64 = 4.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Markdown,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidSpec(format!("unknown output format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub input: PathBuf,
    pub format: DatasetFormat,
    /// Name used in plot data and report headings.
    pub dataset: String,
    pub delta: f64,
    pub windows: Vec<WindowSpec>,
    pub k_values: Vec<f64>,
    pub betas: Vec<f64>,
    /// Apply every beta to the pa%K and windowed families too, not only pointwise.
    pub beta_all_families: bool,
    pub alpha: f64,
    pub seed: u64,
    pub rate: f64,
    /// Replicate cap for the permutation test and the bootstrap.
    pub replicates: usize,
    pub output: OutputFormat,
}

impl EvalConfig {
    /// Defaults matching the usual window and K grids.
    pub fn new(input: impl Into<PathBuf>, format: DatasetFormat, delta: f64) -> Self {
        let input = input.into();
        let dataset = input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("dataset")
            .to_string();
        Self {
            input,
            format,
            dataset,
            delta,
            windows: DEFAULT_WINDOWS
                .iter()
                .map(|&d| WindowSpec {
                    duration: d,
                    mode: WindowMode::Radius,
                })
                .collect(),
            k_values: DEFAULT_K_VALUES.to_vec(),
            betas: DEFAULT_BETAS.to_vec(),
            beta_all_families: false,
            alpha: crate::stats::DEFAULT_ALPHA,
            seed: 0,
            rate: DEFAULT_RATE,
            replicates: crate::stats::DEFAULT_REPLICATES,
            output: OutputFormat::Json,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidThreshold(self.delta));
        }
        if self.windows.is_empty() {
            return Err(Error::InvalidSpec("at least one window is required".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::InvalidRate(self.rate));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidSpec("replicate cap must be positive".into()));
        }
        self.metric_specs().map(|_| ())
    }

    /// Pointwise F_β for every beta, then pa%K for every K, then F1_w for
    /// every window. Duplicates are dropped.
    pub fn metric_specs(&self) -> Result<Vec<MetricSpec>> {
        let family_betas: &[f64] = if self.beta_all_families { &self.betas } else { &[1.0] };
        let mut specs = Vec::new();
        for &b in &self.betas {
            specs.push(MetricSpec::pointwise(b)?);
        }
        for &b in family_betas {
            for &k in &self.k_values {
                specs.push(MetricSpec::new(crate::metrics::MetricFamily::PaK { k }, b)?);
            }
        }
        for &b in family_betas {
            for &window in &self.windows {
                specs.push(MetricSpec::new(crate::metrics::MetricFamily::Windowed { window }, b)?);
            }
        }
        let mut seen = std::collections::HashSet::new();
        specs.retain(|s| seen.insert(s.label()));
        if specs.is_empty() {
            return Err(Error::InvalidSpec("no metrics configured".into()));
        }
        Ok(specs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectReport {
    pub subject_id: String,
    pub length: usize,
    pub prevalence: f64,
    pub random_seed: u64,
    pub model: Vec<MetricResult>,
    pub random: Vec<MetricResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledReport {
    pub model: Vec<MetricResult>,
    pub random: Vec<MetricResult>,
    pub null: Vec<MetricResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSignificance {
    pub metric: String,
    pub spec: MetricSpec,
    pub cell: SignificanceCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub rng_algorithm: String,
    pub seed: u64,
    pub dataset: String,
    pub config: EvalConfig,
    pub metrics: Vec<MetricSpec>,
    pub subjects: Vec<SubjectReport>,
    pub pooled: PooledReport,
    pub significance: Vec<MetricSignificance>,
}

/// Seed of the random baseline for one subject; depends only on the global
/// seed and the subject id.
pub fn subject_seed(seed: u64, subject_id: &str) -> u64 {
    derive_seed(derive_seed(seed, SUBJECT_DOMAIN), name_tag(subject_id))
}

fn metric_seed(seed: u64, label: &str) -> u64 {
    derive_seed(derive_seed(seed, METRIC_DOMAIN), name_tag(label))
}

pub fn run_evaluation(config: &EvalConfig) -> Result<EvaluationReport> {
    config.validate()?;
    let records = load_dataset(&config.input, config.format, config.rate)?;
    evaluate_records(records, config)
}

/// Runs the pipeline on already loaded records.
pub fn evaluate_records(mut records: Vec<SubjectRecord>, config: &EvalConfig) -> Result<EvaluationReport> {
    config.validate()?;
    if records.is_empty() {
        return Err(Error::MalformedRecord {
            subject: None,
            reason: "dataset contains no subjects".into(),
        });
    }
    records.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    if let Some(w) = records.windows(2).find(|w| w[0].subject_id == w[1].subject_id) {
        return Err(Error::Misaligned(format!("duplicate subject '{}'", w[0].subject_id)));
    }
    let specs = config.metric_specs()?;

    let subjects = records
        .par_iter()
        .map(|rec| evaluate_one(rec, &specs, config))
        .collect::<Result<Vec<_>>>()?;

    let pool = |pick: fn(&SubjectReport) -> &Vec<MetricResult>| -> Vec<MetricResult> {
        specs
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let counts = subjects
                    .iter()
                    .map(|s| pick(s)[i].counts)
                    .fold(ConfusionCounts::zero(spec.family.regime()), ConfusionCounts::merge);
                derive_metric(spec, counts)
            })
            .collect()
    };
    let pooled = PooledReport {
        model: pool(|s| &s.model),
        random: pool(|s| &s.random),
        null: null_baseline_scores(&specs)?,
    };

    let null_scores = vec![0.0; subjects.len()];
    let significance = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let model: Vec<f64> = subjects.iter().map(|s| s.model[i].f_score).collect();
            let random: Vec<f64> = subjects.iter().map(|s| s.random[i].f_score).collect();
            let label = spec.label();
            let test = TestConfig {
                alpha: config.alpha,
                cap: config.replicates,
                seed: metric_seed(config.seed, &label),
            };
            Ok(MetricSignificance {
                cell: combined_significance(&model, &random, &null_scores, &test)?,
                metric: label,
                spec: *spec,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EvaluationReport {
        schema_version: crate::SCHEMA_VERSION,
        tool_version: crate::TOOL_VERSION.to_string(),
        rng_algorithm: crate::rng::RNG_ALGORITHM.to_string(),
        seed: config.seed,
        dataset: config.dataset.clone(),
        config: config.clone(),
        metrics: specs,
        subjects,
        pooled,
        significance,
    })
}

fn evaluate_one(rec: &SubjectRecord, specs: &[MetricSpec], config: &EvalConfig) -> Result<SubjectReport> {
    let model = crate::metrics::evaluate_subject(rec, specs, config.delta)?;
    let random_seed = subject_seed(config.seed, &rec.subject_id);
    let probs = random_baseline(rec.truth.len(), rec.truth.rate(), random_seed)?;
    let random_pred = threshold_predictions(&probs, config.delta)?;
    let random = evaluate_predictions(&rec.truth, &random_pred, specs)?;
    Ok(SubjectReport {
        subject_id: rec.subject_id.clone(),
        length: rec.truth.len(),
        prevalence: rec.truth.prevalence(),
        random_seed,
        model,
        random,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::LabelSeries;
    use crate::stats::Degeneracy;

    fn record(id: &str, y: &[u8], yhat: &[u8], rate: f64) -> SubjectRecord {
        SubjectRecord::new(
            id,
            LabelSeries::new(y, rate).unwrap(),
            None,
            Some(LabelSeries::new(yhat, rate).unwrap()),
        )
        .unwrap()
    }

    fn config() -> EvalConfig {
        EvalConfig::new("mem.csv", DatasetFormat::Csv, 0.5)
    }

    #[test]
    fn default_metric_grid() {
        let labels: Vec<String> = config().metric_specs().unwrap().iter().map(|s| s.label()).collect();
        assert_eq!(
            labels,
            [
                "F_beta=0.5", "F1", "F_beta=2", "F1_pa", "F1_pa25%", "F1_pa50%", "F1_pa75%",
                "F1_pa100%", "F1_w,10s", "F1_w,30s", "F1_w,1min", "F1_w,5min", "F1_w,20min",
                "F1_w,60min"
            ]
        );
        let mut c = config();
        c.beta_all_families = true;
        assert_eq!(c.metric_specs().unwrap().len(), 3 + 3 * 5 + 3 * 6);
    }

    #[test]
    fn single_perfect_subject() {
        let y = [0, 0, 1, 1, 0, 0, 0, 1, 0, 0];
        let report = evaluate_records(vec![record("only", &y, &y, 4.0)], &config()).unwrap();
        for r in &report.subjects[0].model {
            assert_eq!(r.f_score, 1.0, "{}", r.metric);
        }
        for s in &report.significance {
            // 2 sign vectors, both as extreme
            assert_eq!(s.cell.p_reported, 1.0);
            assert_eq!(s.cell.degenerate, Degeneracy::AllOne);
            assert!(s.cell.stars == crate::stats::Stars::None);
        }
    }

    #[test]
    fn pooled_counts_are_sums() {
        let recs = vec![
            record("a", &[0, 1, 1, 0, 0, 0, 1, 0], &[0, 0, 1, 0, 1, 0, 0, 0], 1.0),
            record("b", &[1, 0, 0, 0, 0, 0, 0, 1], &[0, 1, 0, 0, 0, 0, 1, 1], 1.0),
            record("c", &[0, 0, 0, 0, 0, 0, 0, 0], &[0, 0, 0, 1, 0, 0, 0, 0], 1.0),
        ];
        let mut cfg = config();
        cfg.rate = 1.0;
        cfg.windows = vec![WindowSpec::radius(1.0).unwrap(), WindowSpec::radius(3.0).unwrap()];
        let report = evaluate_records(recs, &cfg).unwrap();
        for (i, pooled) in report.pooled.model.iter().enumerate() {
            let sum = report
                .subjects
                .iter()
                .map(|s| s.model[i].counts)
                .fold(ConfusionCounts::zero(pooled.counts.regime), ConfusionCounts::merge);
            assert_eq!(pooled.counts, sum, "{}", pooled.metric);
        }
        assert_eq!(report.pooled.null.iter().map(|r| r.f_score).sum::<f64>(), 0.0);
    }

    #[test]
    fn subject_order_and_seeds_are_stable() {
        let a = record("a", &[0, 1, 0, 0], &[0, 1, 0, 0], 4.0);
        let b = record("b", &[1, 0, 0, 0], &[1, 0, 0, 0], 4.0);
        let z = record("z", &[0, 0, 1, 0], &[0, 0, 0, 0], 4.0);
        let r1 = evaluate_records(vec![b.clone(), a.clone()], &config()).unwrap();
        let r2 = evaluate_records(vec![z, a, b], &config()).unwrap();
        assert_eq!(r1.subjects[0].subject_id, "a");
        // adding a subject leaves the others' baselines untouched
        assert_eq!(r1.subjects[0].random, r2.subjects[0].random);
        assert_eq!(r1.subjects[1].random, r2.subjects[1].random);
    }

    #[test]
    fn rejects_bad_config_and_input() {
        let mut c = config();
        c.delta = 1.5;
        assert!(c.validate().is_err());
        let mut c = config();
        c.windows.clear();
        assert!(c.validate().is_err());
        assert!(evaluate_records(vec![], &config()).is_err());
        let a = record("a", &[0, 1], &[0, 1], 4.0);
        assert!(evaluate_records(vec![a.clone(), a], &config()).is_err());
    }
}
