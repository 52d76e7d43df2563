//! Problem generators and importance labelling.

mod blocks;
mod household;
mod label;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guidance::Coords;
use crate::pddl::{load_task_text, GroundTask, PddlError};

pub use blocks::{gen_blocks, BlocksSpec, GeneratedProblem, DEFAULT_MAX_GOAL_HEIGHT};
pub use household::{gen_household, Category, HouseholdSpec, CATEGORIES};
pub use label::{label_greedy, label_regression, solvable_with, GreedyConfig, Labeling, Provenance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatagenError {
    #[error("infeasible spec: {0}")]
    InfeasibleSpec(String),
    #[error("validating planner cannot solve the full task {0}")]
    BaseUnsolvable(String),
    #[error("regression search failed on {0}")]
    RegressionFailed(String),
    #[error("corrupt record at line {line}: {message}")]
    CorruptRecord { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Pddl(#[from] PddlError),
}

/// A task with per-object importance labels, stored with its PDDL text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledProblem {
    pub domain: String,
    pub problem: String,
    pub labels: std::collections::BTreeMap<String, u8>,
    pub provenance: Provenance,
    #[serde(default)]
    pub coords: Option<Coords>,
}

impl LabeledProblem {
    pub fn new(domain: String, problem: String, labeling: Labeling, coords: Option<Coords>) -> LabeledProblem {
        LabeledProblem { domain, problem, labels: labeling.labels, provenance: labeling.provenance, coords }
    }

    pub fn task(&self) -> Result<GroundTask, DatagenError> {
        Ok(load_task_text(&self.domain, &self.problem)?.2)
    }

    pub fn label_vector(&self, task: &GroundTask) -> Vec<f64> {
        task.objects.iter().map(|o| f64::from(self.labels.get(&o.name).copied().unwrap_or(0))).collect()
    }
}

/// One JSON record per line.
pub fn save_dataset(path: &Path, problems: &[LabeledProblem]) -> Result<(), DatagenError> {
    let io = |e: std::io::Error| DatagenError::Io(format!("{}: {e}", path.display()));
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for p in problems {
        serde_json::to_writer(&mut f, p).map_err(|e| DatagenError::Io(e.to_string()))?;
        f.write_all(b"\n").map_err(io)?;
    }
    f.flush().map_err(io)
}

pub fn parse_dataset(text: &str) -> Result<Vec<LabeledProblem>, DatagenError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| DatagenError::CorruptRecord { line: i + 1, message: e.to_string() }))
        .collect()
}

pub fn load_dataset(path: &Path) -> Result<Vec<LabeledProblem>, DatagenError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatagenError::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(&text)
}
