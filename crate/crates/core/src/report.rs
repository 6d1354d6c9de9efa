//! Rendering evaluation reports as JSON, Markdown or flat CSV, and writing
//! plot data for grouped bar charts.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{MetricFamily, MetricResult};
use crate::pipeline::{EvaluationReport, OutputFormat};
use crate::stats::{Degeneracy, SignificanceCell};

pub const FAIL_RANDOM: &str = "∼R";
pub const FAIL_NULL: &str = "∼0";
pub const ALL_ZERO: &str = "†";
pub const ALL_ONE: &str = "‡";

pub fn render_report(report: &EvaluationReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => render_json(report),
        OutputFormat::Markdown => Ok(render_markdown(report)),
        OutputFormat::Csv => render_csv(report),
    }
}

pub fn render_json(report: &EvaluationReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// Fixed 3-decimal rendering that never prints `-0.000`.
fn fixed3(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0 + 0.0;
    format!("{r:.3}")
}

fn fixed4(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{:.4}", (v * 1e4).round() / 1e4 + 0.0))
}

/// p-value with stars, or with failure markers when either side fails:
/// `0.008**`, `<0.001***`, `1.000^∼R,∼0`.
pub fn format_p_cell(cell: &SignificanceCell) -> String {
    let mut out = if cell.p_reported < 0.001 {
        "<0.001".to_string()
    } else {
        fixed3(cell.p_reported)
    };
    out.push_str(cell.stars.as_str());
    let fails: Vec<&str> = [(cell.fail_random, FAIL_RANDOM), (cell.fail_null, FAIL_NULL)]
        .into_iter()
        .filter_map(|(f, m)| f.then_some(m))
        .collect();
    if !fails.is_empty() {
        out.push('^');
        out.push_str(&fails.join(","));
    }
    out
}

/// Bootstrap interval against the random baseline, with `†`/`‡` for
/// all-zero/all-one model scores.
pub fn format_ci_cell(cell: &SignificanceCell) -> String {
    let mut out = format!(
        "[{}, {}]",
        fixed3(cell.ci_vs_random.lo),
        fixed3(cell.ci_vs_random.hi)
    );
    match cell.degenerate {
        Degeneracy::None => {}
        Degeneracy::AllZero => out.push_str(ALL_ZERO),
        Degeneracy::AllOne => out.push_str(ALL_ONE),
    }
    out
}

/// Table of p-values and confidence intervals, one row per metric.
pub fn significance_table(report: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "| Metric | p-value | 95% CI |");
    let _ = writeln!(s, "|---|---|---|");
    for m in &report.significance {
        let _ = writeln!(s, "| {} | {} | {} |", m.metric, format_p_cell(&m.cell), format_ci_cell(&m.cell));
    }
    s
}

fn group_name(family: &MetricFamily) -> &'static str {
    match family {
        MetricFamily::Pointwise => "Standard Metrics",
        MetricFamily::PaK { .. } => "Point-Adjusted Metrics",
        MetricFamily::Windowed { .. } => "Windowed Metrics",
    }
}

fn quantity_label(metric: &str, quantity: &str) -> String {
    match metric.find('_') {
        Some(i) if metric.starts_with("F1_") => format!("{quantity}{}", &metric[i..]),
        _ => format!("{quantity}({metric})"),
    }
}

/// Pooled scores grouped by family: F, precision and recall for model and random.
pub fn pooled_table(report: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "| Metric | Model | Random |");
    let _ = writeln!(s, "|---|---|---|");
    let mut group = "";
    let rows = report.pooled.model.iter().zip(&report.pooled.random);
    for (model, random) in rows {
        let g = group_name(&model.spec.family);
        if g != group {
            let _ = writeln!(s, "| **{g}** | | |");
            group = g;
        }
        let _ = writeln!(s, "| {} | {} | {} |", model.metric, fixed4(Some(model.f_score)), fixed4(Some(random.f_score)));
        // precision and recall do not depend on beta
        if model.spec.beta != 1.0 {
            continue;
        }
        let _ = writeln!(
            s,
            "| {} | {} | {} |",
            quantity_label(&model.metric, "Prec"),
            fixed4(model.precision),
            fixed4(random.precision)
        );
        let _ = writeln!(
            s,
            "| {} | {} | {} |",
            quantity_label(&model.metric, "Rec"),
            fixed4(model.recall),
            fixed4(random.recall)
        );
    }
    s
}

pub fn render_markdown(report: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Evaluation report: {}\n", report.dataset);
    let _ = writeln!(
        s,
        "{} subjects, δ = {}, α = {}, seed = {}, {} ({})\n",
        report.subjects.len(),
        report.config.delta,
        report.config.alpha,
        report.seed,
        report.tool_version,
        report.rng_algorithm
    );
    let _ = writeln!(s, "## Combined significance (model vs random and null)\n");
    s.push_str(&significance_table(report));
    let _ = writeln!(
        s,
        "\nStars (*** p<0.001, ** p<0.01, * p<0.05) appear only when both tests are significant. \
         {FAIL_RANDOM}: not better than random; {FAIL_NULL}: not better than null; \
         {ALL_ZERO}: all scores 0; {ALL_ONE}: all scores 1. \
         CI: 95% bootstrap interval of the mean difference to the random baseline.\n"
    );
    let _ = writeln!(s, "## Pooled scores\n");
    s.push_str(&pooled_table(report));
    s
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Flat rows: `metric,param,scope,source,quantity,value`; `scope` is a
/// subject id or `pooled`.
pub fn render_csv(report: &EvaluationReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "param", "scope", "source", "quantity", "value"])
        .map_err(csv_err)?;
    let mut emit = |scope: &str, source: &str, r: &MetricResult| -> Result<()> {
        let param = r.spec.param();
        for (quantity, value) in [
            ("f_score", r.f_score.to_string()),
            ("precision", opt(r.precision)),
            ("recall", opt(r.recall)),
            ("fdr", opt(r.fdr)),
        ] {
            w.write_record([r.metric.as_str(), &param, scope, source, quantity, &value])
                .map_err(csv_err)?;
        }
        Ok(())
    };
    for subject in &report.subjects {
        for r in &subject.model {
            emit(&subject.subject_id, "model", r)?;
        }
        for r in &subject.random {
            emit(&subject.subject_id, "random", r)?;
        }
    }
    for r in &report.pooled.model {
        emit("pooled", "model", r)?;
    }
    for r in &report.pooled.random {
        emit("pooled", "random", r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Plot data (`dataset,metric,model,value`) with the pooled F-score of the
/// model and of the random baseline for every metric.
pub fn write_plot_data<W: Write>(report: &EvaluationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dataset", "metric", "model", "value"]).map_err(csv_err)?;
    for (model, random) in report.pooled.model.iter().zip(&report.pooled.random) {
        for (name, r) in [("model", model), ("random", random)] {
            w.write_record([
                report.dataset.as_str(),
                r.metric.as_str(),
                name,
                &r.f_score.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_plot_data(report: &EvaluationReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_plot_data(report, std::io::BufWriter::new(file))
}
