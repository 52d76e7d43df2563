use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::{EncoderKind, GuidanceError, GuidanceModel, ProblemGraph};
use crate::nnet::{self, adam_step, AdamState, NnetError, ParamStore, Tape, Var, CLIP};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    pub graph: ProblemGraph,
    /// 1.0 for objects in the sufficient set, 0.0 otherwise.
    pub labels: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Positive-class weight; the dataset's negative fraction when unset.
    pub lambda: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: nnet::DEFAULT_EPOCHS, lr: nnet::DEFAULT_LEARNING_RATE, lambda: None }
    }
}

/// `−Σ λ p log s + (1−λ)(1−p) log(1−s)` with `s` clipped to `[1e-7, 1−1e-7]`.
pub fn loss_ploi(scores: &[f64], labels: &[f64], lambda: f64) -> f64 {
    scores
        .iter()
        .zip(labels)
        .map(|(&s, &p)| {
            let s = s.clamp(CLIP, 1.0 - CLIP);
            -(lambda * p * s.ln() + (1.0 - lambda) * (1.0 - p) * (1.0 - s).ln())
        })
        .sum()
}

/// An edge is relevant iff both of its endpoints are.
pub fn relation_labels(graph: &ProblemGraph, labels: &[f64]) -> Vec<f64> {
    graph
        .senders
        .iter()
        .zip(&graph.receivers)
        .map(|(&s, &r)| if labels[s] > 0.5 && labels[r] > 0.5 { 1.0 } else { 0.0 })
        .collect()
}

fn negative_fraction(labels: impl Iterator<Item = f64>) -> f64 {
    let (mut neg, mut total) = (0usize, 0usize);
    for l in labels {
        total += 1;
        neg += usize::from(l < 0.5);
    }
    if total == 0 || neg == 0 || neg == total {
        0.5
    } else {
        neg as f64 / total as f64
    }
}

struct Prepared {
    graph: ProblemGraph,
    labels: Rc<[f64]>,
    rel_labels: Rc<[f64]>,
}

/// Total training loss of `model` (with `params`) on one example.
fn example_loss(
    tape: &mut Tape,
    model: &GuidanceModel,
    params: &ParamStore,
    ex: &Prepared,
    lambda: f64,
    lambda_rel: f64,
) -> Result<Var, NnetError> {
    let (node, rel) = model.logits(tape, params, &ex.graph)?;
    let loss = tape.weighted_bce(node, ex.labels.clone(), lambda)?;
    match rel {
        Some(r) if !ex.rel_labels.is_empty() => {
            let lr = tape.weighted_bce(r, ex.rel_labels.clone(), lambda_rel)?;
            tape.add(loss, lr)
        }
        _ => Ok(loss),
    }
}

/// The loss of one example as a differentiable program, for gradient checks.
pub fn example_program<'a>(
    model: &'a GuidanceModel,
    ex: &'a TrainingExample,
    lambda: f64,
) -> impl Fn(&mut Tape, &ParamStore) -> Result<Var, NnetError> + 'a {
    let prepared = Prepared {
        graph: ex.graph.clone(),
        labels: ex.labels.clone().into(),
        rel_labels: relation_labels(&ex.graph, &ex.labels).into(),
    };
    move |tape, params| example_loss(tape, model, params, &prepared, lambda, lambda)
}

/// Full-batch Adam on the summed loss. Returns the trained model and the loss
/// before each epoch's update.
pub fn train(model: GuidanceModel, data: &[TrainingExample], cfg: &TrainConfig) -> Result<(GuidanceModel, Vec<f64>), GuidanceError> {
    let fp = model.schema.fingerprint();
    let dv = model.schema.node_dim();
    let de = model.schema.edge_dim();
    for ex in data {
        if ex.graph.node_features.cols() != dv || (ex.graph.n_edges() > 0 && ex.graph.edge_features.cols() != de) {
            return Err(GuidanceError::SchemaMismatch { expected: fp, found: "graph with different feature widths".into() });
        }
        if ex.labels.len() != ex.graph.n_nodes {
            return Err(GuidanceError::InvalidConfig(format!("{} labels for {} objects", ex.labels.len(), ex.graph.n_nodes)));
        }
    }
    let prepared: Vec<Prepared> = data
        .iter()
        .map(|ex| Prepared {
            graph: ex.graph.clone(),
            labels: ex.labels.clone().into(),
            rel_labels: if model.kind == EncoderKind::Gat { relation_labels(&ex.graph, &ex.labels).into() } else { Rc::from(Vec::new()) },
        })
        .collect();
    let lambda = cfg.lambda.unwrap_or_else(|| negative_fraction(prepared.iter().flat_map(|p| p.labels.iter().copied())));
    let lambda_rel = cfg.lambda.unwrap_or_else(|| negative_fraction(prepared.iter().flat_map(|p| p.rel_labels.iter().copied())));
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(GuidanceError::InvalidConfig(format!("lambda {lambda} outside (0, 1]")));
    }
    let mut model = model;
    let mut adam = AdamState::new(&model.params, cfg.lr);
    let mut trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let mut total = 0.0;
        let mut grads = model.params.zeros_like();
        for ex in &prepared {
            let mut tape = Tape::new();
            let loss = example_loss(&mut tape, &model, &model.params, ex, lambda, lambda_rel)?;
            total += tape.value(loss).data[0];
            let g = tape.backward(loss, &model.params)?;
            for ((_, acc), (_, d)) in grads.iter_mut().zip(g.iter()) {
                acc.data.iter_mut().zip(&d.data).for_each(|(a, b)| *a += b);
            }
        }
        trace.push(total);
        adam_step(&mut model.params, &grads, &mut adam)?;
    }
    Ok((model, trace))
}
