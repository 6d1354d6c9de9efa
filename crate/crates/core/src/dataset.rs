//! Loading per-subject records from CSV or JSONL.
//!
//! CSV: header row with `subject_id,t,y` plus `p` and/or `yhat`. `t` is the
//! 0-based sample index and must count up from 0 within each subject; rows
//! of different subjects may interleave. A row may leave `p` empty when
//! `yhat` is given.
//!
//! JSONL: one object per line, `{"subject_id": .., "y": [..], "p": [..]}`
//! with `yhat` as an optional or alternative array of hard predictions.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{LabelSeries, ProbabilitySeries, SubjectRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    Csv,
    Jsonl,
}

impl DatasetFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(DatasetFormat::Csv),
            "jsonl" | "ndjson" => Some(DatasetFormat::Jsonl),
            _ => None,
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DatasetFormat::Csv),
            "jsonl" => Ok(DatasetFormat::Jsonl),
            other => Err(Error::InvalidSpec(format!("unknown input format '{other}'"))),
        }
    }
}

pub fn load_dataset(path: &Path, format: DatasetFormat, rate: f64) -> Result<Vec<SubjectRecord>> {
    let file = File::open(path)?;
    match format {
        DatasetFormat::Csv => read_csv(file, rate),
        DatasetFormat::Jsonl => read_jsonl(BufReader::new(file), rate),
    }
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Default)]
struct Accum {
    y: Vec<u8>,
    p: Vec<f64>,
    yhat: Vec<u8>,
    has_p: Option<bool>,
    has_yhat: Option<bool>,
}

fn parse_label(field: &str, what: &str, line: u64) -> Result<u8> {
    match field {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(parse_err(line, format!("{what} must be 0 or 1, got '{other}'"))),
    }
}

fn set_presence(slot: &mut Option<bool>, present: bool, column: &str, subject: &str, line: u64) -> Result<()> {
    match *slot {
        None => {
            *slot = Some(present);
            Ok(())
        }
        Some(prev) if prev == present => Ok(()),
        Some(_) => Err(parse_err(
            line,
            format!("column '{column}' is filled for only some rows of subject '{subject}'"),
        )),
    }
}

pub fn read_csv<R: Read>(input: R, rate: f64) -> Result<Vec<SubjectRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, format!("unreadable header: {e}")))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| column(name).ok_or_else(|| parse_err(1, format!("missing column '{name}'")));
    let subject_col = require("subject_id")?;
    let t_col = require("t")?;
    let y_col = require("y")?;
    let p_col = column("p");
    let yhat_col = column("yhat");
    if p_col.is_none() && yhat_col.is_none() {
        return Err(parse_err(1, "missing column 'p' (or 'yhat')"));
    }

    let mut order: Vec<String> = Vec::new();
    let mut subjects: HashMap<String, Accum> = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, format!("malformed row: {e}"))
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let get = |i: usize| row.get(i).unwrap_or("");

        let subject = get(subject_col);
        if subject.is_empty() {
            return Err(parse_err(line, "empty subject_id"));
        }
        let acc = subjects.entry(subject.to_string()).or_insert_with(|| {
            order.push(subject.to_string());
            Accum::default()
        });

        let t: usize = get(t_col)
            .parse()
            .map_err(|_| parse_err(line, format!("t must be a non-negative integer, got '{}'", get(t_col))))?;
        if t != acc.y.len() {
            return Err(parse_err(
                line,
                format!(
                    "non-contiguous t for subject '{subject}': expected {}, got {t}",
                    acc.y.len()
                ),
            ));
        }
        acc.y.push(parse_label(get(y_col), "y", line)?);

        let p_field = p_col.map(get).unwrap_or("");
        set_presence(&mut acc.has_p, !p_field.is_empty(), "p", subject, line)?;
        if !p_field.is_empty() {
            let p: f64 = p_field
                .parse()
                .map_err(|_| parse_err(line, format!("p must be a number, got '{p_field}'")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(parse_err(line, format!("probability out of range ({p})")));
            }
            acc.p.push(p);
        }

        let yhat_field = yhat_col.map(get).unwrap_or("");
        set_presence(&mut acc.has_yhat, !yhat_field.is_empty(), "yhat", subject, line)?;
        if !yhat_field.is_empty() {
            acc.yhat.push(parse_label(yhat_field, "yhat", line)?);
        }
        if p_field.is_empty() && yhat_field.is_empty() {
            return Err(parse_err(line, "row has neither p nor yhat"));
        }
    }

    order
        .into_iter()
        .map(|id| {
            let acc = subjects.remove(&id).expect("subject recorded in order");
            let truth = LabelSeries::new(&acc.y, rate)?;
            let probs = (acc.has_p == Some(true))
                .then(|| ProbabilitySeries::new(acc.p, rate))
                .transpose()?;
            let preds = (acc.has_yhat == Some(true))
                .then(|| LabelSeries::new(&acc.yhat, rate))
                .transpose()?;
            SubjectRecord::new(id, truth, probs, preds)
        })
        .collect()
}

#[derive(Deserialize)]
struct JsonSubject {
    subject_id: String,
    y: Vec<u8>,
    #[serde(default)]
    p: Option<Vec<f64>>,
    #[serde(default)]
    yhat: Option<Vec<u8>>,
}

pub fn read_jsonl<R: BufRead>(input: R, rate: f64) -> Result<Vec<SubjectRecord>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: JsonSubject =
            serde_json::from_str(&line).map_err(|e| parse_err(line_no, format!("invalid JSON: {e}")))?;
        if !seen.insert(raw.subject_id.clone()) {
            return Err(parse_err(line_no, format!("duplicate subject '{}'", raw.subject_id)));
        }
        let at_line = |e: Error| parse_err(line_no, e.to_string());
        let truth = LabelSeries::new(&raw.y, rate).map_err(at_line)?;
        if let Some(p) = &raw.p {
            if p.len() != raw.y.len() {
                return Err(parse_err(
                    line_no,
                    format!("y has {} values but p has {}", raw.y.len(), p.len()),
                ));
            }
            if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(parse_err(line_no, format!("probability out of range ({bad})")));
            }
        }
        if let Some(yhat) = &raw.yhat {
            if yhat.len() != raw.y.len() {
                return Err(parse_err(
                    line_no,
                    format!("y has {} values but yhat has {}", raw.y.len(), yhat.len()),
                ));
            }
        }
        let probs = raw.p.map(|p| ProbabilitySeries::new(p, rate)).transpose().map_err(at_line)?;
        let preds = raw
            .yhat
            .map(|v| LabelSeries::new(&v, rate))
            .transpose()
            .map_err(at_line)?;
        out.push(SubjectRecord::new(raw.subject_id, truth, probs, preds).map_err(at_line)?);
    }
    Ok(out)
}
