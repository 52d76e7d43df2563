//! Corpus runner, the evaluation metrics and the heuristic baselines.

mod baselines;
mod metrics;
mod report;
mod run;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guidance::{AbstractionConfig, Coords};
use crate::planner::SearchConfig;

pub use baselines::{baseline_knn_scores, baseline_random_scores};
pub use metrics::{aggregate, metric_len, metric_tc, metric_time, Aggregate};
pub use report::{emit_report, load_report, summary_table, ReportFormat};
pub use run::{run_corpus, run_task};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("no tasks in the metric's denominator")]
    EmptyDenominator,
    #[error("coordinates missing for object {0}")]
    MissingCoords(String),
    #[error("duplicate task id {0}")]
    DuplicateId(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("corrupt report record at line {line}: {message}")]
    CorruptReport { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> BenchError + '_ {
    move |e| BenchError::Io(format!("{}: {e}", path.display()))
}

/// Where a task's PDDL comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TaskSource {
    Paths { domain: PathBuf, problem: PathBuf },
    Text { domain: String, problem: String },
}

impl TaskSource {
    pub fn texts(&self) -> Result<(String, String), BenchError> {
        match self {
            TaskSource::Text { domain, problem } => Ok((domain.clone(), problem.clone())),
            TaskSource::Paths { domain, problem } => {
                let d = std::fs::read_to_string(domain).map_err(io_err(domain))?;
                let p = std::fs::read_to_string(problem).map_err(io_err(problem))?;
                Ok((d, p))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub source: TaskSource,
    pub coords: Option<Coords>,
    pub labels: Option<BTreeMap<String, u8>>,
    pub category: String,
    pub split: String,
}

impl CorpusEntry {
    pub fn from_text(id: impl Into<String>, domain: &str, problem: &str) -> CorpusEntry {
        CorpusEntry {
            id: id.into(),
            source: TaskSource::Text { domain: domain.to_string(), problem: problem.to_string() },
            coords: None,
            labels: None,
            category: String::new(),
            split: String::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn new(entries: Vec<CorpusEntry>) -> Result<Corpus, BenchError> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(BenchError::DuplicateId(e.id.clone()));
            }
        }
        Ok(Corpus { entries })
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Manifest lines are whitespace separated:
    /// `id domain problem [category [split]] [coords=FILE] [labels=FILE]`.
    /// Relative paths resolve against the manifest's directory; coordinate
    /// and label files are JSON objects keyed by object name. `#` starts a
    /// comment.
    pub fn load(path: &Path) -> Result<Corpus, BenchError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Corpus::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Corpus, BenchError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| BenchError::Manifest { line: i + 1, message };
            let mut positional = Vec::new();
            let (mut coords, mut labels) = (None, None);
            for field in line.split_whitespace() {
                if let Some(f) = field.strip_prefix("coords=") {
                    let p = base.join(f);
                    let text = std::fs::read_to_string(&p).map_err(io_err(&p))?;
                    coords = Some(serde_json::from_str(&text).map_err(|e| bad(format!("{f}: {e}")))?);
                } else if let Some(f) = field.strip_prefix("labels=") {
                    let p = base.join(f);
                    let text = std::fs::read_to_string(&p).map_err(io_err(&p))?;
                    labels = Some(serde_json::from_str(&text).map_err(|e| bad(format!("{f}: {e}")))?);
                } else if field.contains('=') {
                    return Err(bad(format!("unknown field {field}")));
                } else {
                    positional.push(field);
                }
            }
            if !(3..=5).contains(&positional.len()) {
                return Err(bad(format!("expected 3 to 5 positional fields, found {}", positional.len())));
            }
            entries.push(CorpusEntry {
                id: positional[0].to_string(),
                source: TaskSource::Paths { domain: base.join(positional[1]), problem: base.join(positional[2]) },
                coords,
                labels,
                category: positional.get(3).unwrap_or(&"").to_string(),
                split: positional.get(4).unwrap_or(&"").to_string(),
            });
        }
        Corpus::new(entries)
    }
}

/// Source of importance scores for a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Guidance {
    None,
    Model(PathBuf),
    Random(u64),
    Knn(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    pub search: SearchConfig,
    pub guidance: Guidance,
    pub abstraction: AbstractionConfig,
    /// Seconds per task for the whole pipeline; overrides `search.timeout`.
    pub timeout: f64,
    /// Worker threads.
    pub parallelism: usize,
}

impl RunConfig {
    pub fn new(name: impl Into<String>, search: SearchConfig, guidance: Guidance) -> RunConfig {
        RunConfig { name: name.into(), timeout: search.timeout, search, guidance, abstraction: AbstractionConfig::default(), parallelism: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Solved,
    Unsolvable,
    Timeout,
    /// Excluded from metric denominators.
    IllPosed(String),
    /// The task could not be run (unreadable file, missing model, ...).
    /// Counts as a failure.
    Error(String),
}

impl Status {
    pub fn label(&self) -> &str {
        match self {
            Status::Solved => "solved",
            Status::Unsolvable => "unsolvable",
            Status::Timeout => "timeout",
            Status::IllPosed(_) => "ill-posed",
            Status::Error(_) => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub id: String,
    pub config: String,
    pub category: String,
    pub split: String,
    pub status: Status,
    pub wall_seconds: f64,
    /// Present iff solved.
    pub plan_length: Option<usize>,
    pub backoff_rounds: usize,
    /// Objects in the last task planned on.
    pub objects_kept: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub results: Vec<TaskResult>,
    pub aggregates: Vec<Aggregate>,
}

impl Report {
    /// A report whose aggregates are computed from `results`.
    pub fn from_results(results: Vec<TaskResult>) -> Report {
        let aggregates = aggregate(&results);
        Report { results, aggregates }
    }

    pub fn for_config(&self, config: &str) -> Vec<&TaskResult> {
        self.results.iter().filter(|r| r.config == config).collect()
    }
}
