//! Typed STRIPS PDDL: reading, writing, disjunction compilation and grounding.

mod compile;
mod ground;
mod model;
mod parser;
pub mod sexpr;
mod write;

use std::path::Path;

pub use compile::{compile_disjunctions, source_name, SPLIT_MARK};
pub use ground::{
    ground, ground_with, validate_problem, GroundAction, GroundAtom, GroundTask, GroundingOptions, ProblemStatus,
    TaskObject, DEFAULT_GROUNDING_CAP,
};
pub use model::*;
pub use parser::{parse_domain, parse_problem, SUPPORTED_REQUIREMENTS};
pub use sexpr::{LexProblem, Position};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PddlError {
    #[error("lex error at {position}: {problem}")]
    Lex { position: Position, problem: LexProblem },
    #[error("syntax error{}: {message}", position.map(|p| format!(" at {p}")).unwrap_or_default())]
    Syntax { position: Option<Position>, message: String },
    #[error("unknown type '{0}'")]
    UnknownType(String),
    #[error("duplicate name '{0}'")]
    DuplicateName(String),
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("undeclared object '{0}'")]
    UndeclaredObject(String),
    #[error("unknown predicate '{0}'")]
    UnknownPredicate(String),
    #[error("predicate '{predicate}' expects {expected} arguments, found {found}")]
    ArityMismatch { predicate: String, expected: usize, found: usize },
    #[error("problem is for domain '{found}', expected '{expected}'")]
    DomainMismatch { expected: String, found: String },
    #[error("variable '{variable}' is not a parameter of '{action}'")]
    UndeclaredVariable { action: String, variable: String },
    #[error("grounding exceeded {cap} actions")]
    GroundingExplosion { cap: usize },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

fn read_file(path: &Path) -> Result<String, PddlError> {
    std::fs::read_to_string(path).map_err(|e| PddlError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Parses, compiles and grounds a domain/problem pair given as text.
pub fn load_task_text(domain: &str, problem: &str) -> Result<(DomainModel, ProblemModel, GroundTask), PddlError> {
    let domain = compile_disjunctions(&parse_domain(domain)?);
    let problem = parse_problem(problem, &domain)?;
    let task = ground(&domain, &problem)?;
    Ok((domain, problem, task))
}

pub fn load_task(domain: &Path, problem: &Path) -> Result<(DomainModel, ProblemModel, GroundTask), PddlError> {
    load_task_text(&read_file(domain)?, &read_file(problem)?)
}

pub fn load_domain(path: &Path) -> Result<DomainModel, PddlError> {
    parse_domain(&read_file(path)?)
}

pub fn load_problem(path: &Path, domain: &DomainModel) -> Result<ProblemModel, PddlError> {
    parse_problem(&read_file(path)?, domain)
}
