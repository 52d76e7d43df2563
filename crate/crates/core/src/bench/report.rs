use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_err, Aggregate, BenchError, Report, TaskResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    /// One JSON record per line: every task result, then every aggregate.
    Jsonl,
    /// Tab-separated summary, one row per config.
    Tsv,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Task(TaskResult),
    Aggregate(Aggregate),
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

/// Rows are configs; each category (with its split, when set) contributes
/// TC, T, L, timeout-rate and ill-posed columns.
pub fn summary_table(report: &Report) -> String {
    let mut groups: Vec<String> = Vec::new();
    let mut configs: Vec<&str> = Vec::new();
    let key = |a: &Aggregate| if a.split.is_empty() { a.category.clone() } else { format!("{}/{}", a.category, a.split) };
    for a in &report.aggregates {
        if !groups.contains(&key(a)) {
            groups.push(key(a));
        }
        if !configs.contains(&a.config.as_str()) {
            configs.push(&a.config);
        }
    }
    groups.sort();
    let mut out = String::from("config");
    for g in &groups {
        let g = if g.is_empty() { "all" } else { g };
        for m in ["TC", "T", "L", "timeouts", "ill-posed"] {
            out.push_str(&format!("\t{g} {m}"));
        }
    }
    out.push('\n');
    for c in configs {
        out.push_str(c);
        for g in &groups {
            match report.aggregates.iter().find(|a| a.config == c && &key(a) == g) {
                Some(a) => out.push_str(&format!("\t{}\t{}\t{}\t{}\t{}", cell(a.tc), cell(a.time), cell(a.length), cell(a.timeout_rate), a.ill_posed)),
                None => out.push_str("\t-\t-\t-\t-\t-"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn emit_report(report: &Report, path: &Path, format: ReportFormat) -> Result<(), BenchError> {
    let io = io_err(path);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(&io)?);
    match format {
        ReportFormat::Jsonl => {
            let records = report.results.iter().cloned().map(Record::Task).chain(report.aggregates.iter().cloned().map(Record::Aggregate));
            for r in records {
                serde_json::to_writer(&mut f, &r).map_err(|e| BenchError::Io(e.to_string()))?;
                f.write_all(b"\n").map_err(&io)?;
            }
        }
        ReportFormat::Tsv => f.write_all(summary_table(report).as_bytes()).map_err(&io)?,
    }
    f.flush().map_err(&io)
}

/// Reads a JSONL dump written by [`emit_report`].
pub fn load_report(path: &Path) -> Result<Report, BenchError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut report = Report::default();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        match serde_json::from_str(line).map_err(|e| BenchError::CorruptReport { line: i + 1, message: e.to_string() })? {
            Record::Task(t) => report.results.push(t),
            Record::Aggregate(a) => report.aggregates.push(a),
        }
    }
    Ok(report)
}
