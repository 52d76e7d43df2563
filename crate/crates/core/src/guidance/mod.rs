//! Object-relation graphs, learned importance scoring, projective
//! abstraction and the threshold backoff loop.

mod abstraction;
mod graph;
mod model;
mod train;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nnet::NnetError;

pub use abstraction::{abstract_task, plan_top_k, plan_with_guidance, plan_with_scores, project, AbstractionConfig, GuidedResult, Projection};
pub use graph::{encode_problem, FeatureSchema, ProblemGraph, SpatialMode};
pub use model::{forward_gat, forward_ploi, EncoderKind, GuidanceModel};
pub use train::{example_program, loss_ploi, relation_labels, train, TrainConfig, TrainingExample};

/// Object name to (x, y) grid position.
pub type Coords = BTreeMap<String, (i64, i64)>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuidanceError {
    #[error("feature schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("spatial features need coordinates for object {0}")]
    MissingCoords(String),
    #[error("k = {k} is smaller than the {goal_objects} goal objects")]
    KTooSmall { k: usize, goal_objects: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Nnet(#[from] NnetError),
}

/// Per-object (and, for attention models, per-edge) importance in [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceScores {
    pub object_scores: Vec<f64>,
    /// Aligned with `edges`; absent for message-passing models and baselines.
    pub relation_scores: Option<Vec<f64>>,
    /// (sender, receiver) object indices of each scored edge.
    pub edges: Vec<(usize, usize)>,
}

impl ImportanceScores {
    pub fn objects_only(object_scores: Vec<f64>) -> ImportanceScores {
        ImportanceScores { object_scores, relation_scores: None, edges: Vec::new() }
    }

    pub fn uniform(n: usize, value: f64) -> ImportanceScores {
        ImportanceScores::objects_only(vec![value; n])
    }

    /// `name score` lines in object order.
    pub fn dump(&self, names: &[String]) -> String {
        let mut s = String::new();
        for (n, v) in names.iter().zip(&self.object_scores) {
            s.push_str(&format!("{n} {v:.6}\n"));
        }
        s
    }
}
