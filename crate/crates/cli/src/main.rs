use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, CommandFactory, FromArgMatches, Parser, Subcommand};

use evtol::dataset::DatasetFormat;
use evtol::pipeline::{self, EvalConfig, OutputFormat};
use evtol::report::{emit_plot_data, render_report};
use evtol::scenarios::{run_scenario_suite, write_corpus_csv, SuiteConfig};
use evtol::series::{parse_duration, WindowMode, WindowSpec};

/// Event-detection metrics (pointwise, pa%K, window-based F1) with
/// subject-level significance tests against random and null baselines.
#[derive(Debug, Parser)]
#[command(name = "evtol")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a dataset of per-subject labels and predictions.
    Evaluate(EvaluateArgs),
    /// Run the built-in synthetic scenario suite.
    Scenarios(ScenarioArgs),
}

#[derive(Debug, clap::Args)]
struct EvaluateArgs {
    /// Input file: CSV (`subject_id,t,y,p[,yhat]`) or JSONL.
    #[arg(long)]
    input: PathBuf,
    /// Input format; inferred from the file extension when omitted.
    #[arg(long, value_parser = ["csv", "jsonl"])]
    format: Option<String>,
    /// Threshold: a sample is predicted as an event iff p >= delta.
    /// Also applied to the random baseline.
    #[arg(long)]
    delta: f64,
    /// Window tolerance such as 10s, 5min or 1h. Repeatable.
    /// Defaults to 10s 30s 1min 5min 20min 60min.
    #[arg(long = "window", action = ArgAction::Append, value_parser = parse_seconds)]
    windows: Vec<f64>,
    /// Whether a window duration is a radius (±w) or a total span.
    #[arg(long, default_value = "radius", value_parser = ["radius", "span"])]
    window_mode: String,
    /// pa%K thresholds. Repeatable. Defaults to 0 0.25 0.5 0.75 1.
    #[arg(long = "k", action = ArgAction::Append)]
    k_values: Vec<f64>,
    /// F_beta weights. Repeatable. Defaults to 0.5 1 2.
    #[arg(long = "beta", action = ArgAction::Append)]
    betas: Vec<f64>,
    /// Apply every beta to the pa%K and windowed families as well.
    #[arg(long)]
    beta_all_families: bool,
    #[arg(long, default_value_t = evtol::stats::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sampling rate in Hz.
    #[arg(long, default_value_t = pipeline::DEFAULT_RATE)]
    rate: f64,
    /// Replicate cap for the permutation test and the bootstrap.
    #[arg(long, default_value_t = evtol::stats::DEFAULT_REPLICATES)]
    replicates: usize,
    /// Dataset name for headings and plot data; defaults to the input file stem.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, default_value = "json", value_parser = ["json", "markdown", "md", "csv"])]
    output_format: String,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write plot data (dataset,metric,model,value) to this file.
    #[arg(long)]
    emit_plot: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct ScenarioArgs {
    /// JSON suite report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Window radius in steps.
    #[arg(long, default_value_t = 10)]
    window_steps: usize,
    /// F_beta weights besides F1. Defaults to 0.5 2.
    #[arg(long = "beta", action = ArgAction::Append)]
    betas: Vec<f64>,
    /// pa%K thresholds. Defaults to 0.5 0.
    #[arg(long = "k", action = ArgAction::Append)]
    k_values: Vec<f64>,
    #[arg(long, default_value_t = evtol::scenarios::DEFAULT_LENGTH)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the scenario series as an evaluation CSV.
    #[arg(long)]
    export_corpus: Option<PathBuf>,
}

fn parse_seconds(s: &str) -> Result<f64, String> {
    parse_duration(s).map_err(|e| e.to_string())
}

fn write_output(path: Option<&Path>, text: &str) -> evtol::Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> evtol::Result<()> {
    let format = match args.format.as_deref() {
        Some(f) => f.parse()?,
        None => DatasetFormat::from_path(&args.input).ok_or_else(|| {
            evtol::Error::InvalidSpec(format!(
                "cannot infer the format of {}; pass --format",
                args.input.display()
            ))
        })?,
    };
    let mut config = EvalConfig::new(&args.input, format, args.delta);
    let mode = match args.window_mode.as_str() {
        "span" => WindowMode::Span,
        _ => WindowMode::Radius,
    };
    if !args.windows.is_empty() {
        config.windows = args
            .windows
            .iter()
            .map(|&d| WindowSpec::new(d, mode))
            .collect::<evtol::Result<_>>()?;
    } else {
        for w in &mut config.windows {
            w.mode = mode;
        }
    }
    if !args.k_values.is_empty() {
        config.k_values = args.k_values;
    }
    if !args.betas.is_empty() {
        config.betas = args.betas;
    }
    if let Some(name) = args.dataset {
        config.dataset = name;
    }
    config.beta_all_families = args.beta_all_families;
    config.alpha = args.alpha;
    config.seed = args.seed;
    config.rate = args.rate;
    config.replicates = args.replicates;
    config.output = args.output_format.parse::<OutputFormat>()?;

    let report = pipeline::run_evaluation(&config)?;
    write_output(args.out.as_deref(), &render_report(&report, config.output)?)?;
    if let Some(path) = args.emit_plot {
        emit_plot_data(&report, &path)?;
    }
    Ok(())
}

fn scenarios(args: ScenarioArgs) -> evtol::Result<()> {
    let defaults = SuiteConfig::default();
    let config = SuiteConfig {
        window_steps: args.window_steps,
        betas: if args.betas.is_empty() { defaults.betas } else { args.betas },
        k_values: if args.k_values.is_empty() { defaults.k_values } else { args.k_values },
        length: args.length,
        seed: args.seed,
    };
    let report = run_scenario_suite(&config)?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write_output(args.out.as_deref(), &json)?;
    if let Some(path) = args.export_corpus {
        write_corpus_csv(&config, std::io::BufWriter::new(fs::File::create(path)?))?;
    }
    for s in &report.scenarios {
        let failed = s.assertions.iter().filter(|a| !a.passed).count();
        eprintln!(
            "{:<22} {} ({} assertions, {failed} failed)",
            s.id.as_str(),
            if s.passed { "pass" } else { "FAIL" },
            s.assertions.len()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(
        format!(
            "{} (rng {})",
            env!("CARGO_PKG_VERSION"),
            evtol::rng::RNG_ALGORITHM
        )
        .into_boxed_str(),
    );
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Evaluate(args) => evaluate(args),
        Command::Scenarios(args) => scenarios(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
