use std::io::Write;

use evtol::dataset::DatasetFormat;
use evtol::pipeline::{evaluate_records, run_evaluation, EvalConfig, OutputFormat};
use evtol::report::{render_report, write_plot_data};
use evtol::scenarios::{run_scenario_suite, write_corpus_csv, SuiteConfig};
use evtol::series::{LabelSeries, SubjectRecord, WindowSpec};

fn temp_file(name: &str, contents: &[u8]) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("evtol-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::File::create(&path).unwrap().write_all(contents).unwrap();
    path
}

#[test]
fn scenario_corpus_round_trips_through_csv() {
    let suite_cfg = SuiteConfig::default();
    let suite = run_scenario_suite(&suite_cfg).unwrap();
    assert!(suite.passed);

    let mut corpus = Vec::new();
    write_corpus_csv(&suite_cfg, &mut corpus).unwrap();
    let path = temp_file("scenarios.csv", &corpus);

    let mut cfg = EvalConfig::new(&path, DatasetFormat::Csv, 0.5);
    cfg.rate = 1.0;
    cfg.betas = vec![1.0, 0.5, 2.0];
    cfg.k_values = vec![0.5, 0.0];
    cfg.windows = vec![WindowSpec::radius(10.0).unwrap()];
    cfg.replicates = 2_000;
    let report = run_evaluation(&cfg).unwrap();

    assert_eq!(report.subjects.len(), 6);
    for scenario in &suite.scenarios {
        let subject = report
            .subjects
            .iter()
            .find(|s| s.subject_id == scenario.id.as_str())
            .unwrap();
        assert_eq!(subject.model, scenario.results, "{}", scenario.id);
    }
}

#[test]
fn sparse_offset_events_only_windowed_credit() {
    // one event per 100_000 samples at 4 Hz, predicted 2 s (8 samples) late
    let rate = 4.0;
    let len = 100_000;
    let records: Vec<SubjectRecord> = (0..3)
        .map(|i| {
            let at = 20_000 + 15_000 * i;
            let mut y = vec![0u8; len];
            let mut p = vec![0u8; len];
            y[at] = 1;
            p[at + 8] = 1;
            SubjectRecord::new(
                format!("s{i}"),
                LabelSeries::new(&y, rate).unwrap(),
                None,
                Some(LabelSeries::new(&p, rate).unwrap()),
            )
            .unwrap()
        })
        .collect();
    assert_eq!(records[0].truth.prevalence(), 1e-5);

    let mut cfg = EvalConfig::new("sparse.csv", DatasetFormat::Csv, 0.501);
    cfg.replicates = 1_000;
    let report = evaluate_records(records, &cfg).unwrap();
    let pooled = |label: &str| {
        report.pooled.model.iter().find(|r| r.metric == label).unwrap().f_score
    };
    assert_eq!(pooled("F1"), 0.0);
    assert_eq!(pooled("F1_pa"), 0.0);
    assert_eq!(pooled("F1_w,10s"), 1.0);
    for s in &report.subjects {
        let f = |label: &str| s.model.iter().find(|r| r.metric == label).unwrap().f_score;
        assert_eq!(f("F1"), 0.0);
        assert_eq!(f("F1_w,10s"), 1.0);
    }
    // the random baseline is far from the sparse events' precision
    let random_f1 = report.pooled.random.iter().find(|r| r.metric == "F1").unwrap().f_score;
    assert!(random_f1 < 0.01);
}

fn small_report() -> evtol::pipeline::EvaluationReport {
    let text = "subject_id,t,y,p\n\
                a,0,0,0.1\na,1,1,0.9\na,2,0,0.7\na,3,0,0.2\na,4,1,0.3\na,5,0,0.1\n\
                b,0,1,0.8\nb,1,1,0.4\nb,2,0,0.3\nb,3,0,0.9\nb,4,0,0.1\nb,5,0,0.2\n";
    let path = temp_file("small.csv", text.as_bytes());
    let mut cfg = EvalConfig::new(&path, DatasetFormat::Csv, 0.5);
    cfg.rate = 1.0;
    cfg.windows = vec![WindowSpec::radius(1.0).unwrap(), WindowSpec::radius(2.0).unwrap()];
    cfg.seed = 11;
    run_evaluation(&cfg).unwrap()
}

#[test]
fn json_report_is_deterministic() {
    let a = render_report(&small_report(), OutputFormat::Json).unwrap();
    let b = render_report(&small_report(), OutputFormat::Json).unwrap();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["rng_algorithm"], evtol::rng::RNG_ALGORITHM);
}

fn column_pairs(data: &[u8], a: usize, b: usize) -> Vec<(String, String)> {
    csv::Reader::from_reader(data)
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[a].to_string(), r[b].to_string())
        })
        .collect()
}

#[test]
fn every_metric_in_every_output() {
    let report = small_report();
    let labels: Vec<String> = report.metrics.iter().map(|s| s.label()).collect();
    for s in &report.subjects {
        let got: Vec<&str> = s.model.iter().map(|r| r.metric.as_str()).collect();
        assert_eq!(got, labels);
        assert_eq!(s.random.len(), labels.len());
    }
    assert_eq!(report.pooled.model.len(), labels.len());
    assert_eq!(report.significance.len(), labels.len());

    let mut plot = Vec::new();
    write_plot_data(&report, &mut plot).unwrap();
    let plot_rows = column_pairs(&plot, 1, 2);
    let csv = render_report(&report, OutputFormat::Csv).unwrap();
    let csv_rows = column_pairs(csv.as_bytes(), 0, 2);
    for label in &labels {
        assert!(plot_rows.contains(&(label.clone(), "model".into())), "{label}");
        assert!(plot_rows.contains(&(label.clone(), "random".into())), "{label}");
        assert!(csv_rows.contains(&(label.clone(), "pooled".into())), "{label}");
        for s in &report.subjects {
            assert!(csv_rows.contains(&(label.clone(), s.subject_id.clone())), "{label}");
        }
    }
    let md = render_report(&report, OutputFormat::Markdown).unwrap();
    for label in &labels {
        assert!(md.contains(&format!("| {label} |")), "{label}");
    }
}

#[test]
fn plot_values_equal_pooled_values() {
    let report = small_report();
    let mut plot = Vec::new();
    write_plot_data(&report, &mut plot).unwrap();
    let mut rdr = csv::Reader::from_reader(plot.as_slice());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2 * report.metrics.len());
    for row in rows {
        assert_eq!(&row[0], "small");
        let value: f64 = row[3].parse().unwrap();
        let pool = match &row[2] {
            "model" => &report.pooled.model,
            "random" => &report.pooled.random,
            other => panic!("unexpected model {other}"),
        };
        let expected = pool.iter().find(|r| r.metric == row[1]).unwrap().f_score;
        assert_eq!(value.to_bits(), expected.to_bits());
    }
}

#[test]
fn empty_metric_list_gives_header_only_plot() {
    let mut report = small_report();
    report.pooled.model.clear();
    report.pooled.random.clear();
    let mut plot = Vec::new();
    write_plot_data(&report, &mut plot).unwrap();
    assert_eq!(String::from_utf8(plot).unwrap(), "dataset,metric,model,value\n");
}

#[test]
fn missing_file_is_an_error() {
    let cfg = EvalConfig::new("/nonexistent/evtol.csv", DatasetFormat::Csv, 0.5);
    assert!(matches!(run_evaluation(&cfg), Err(evtol::Error::Io(_))));
}
