//! Dense f64 tensors, a reverse-mode tape, segment aggregation and Adam.

mod adam;
mod io;
mod tape;
mod tensor;

use std::rc::Rc;

use thiserror::Error;

pub use adam::{adam_step, AdamState};
pub use io::{decode_weights, encode_weights, load_weights, load_weights_for, save_weights, WeightsFile, WEIGHTS_MAGIC, WEIGHTS_VERSION};
pub use tape::{Segments, Tape, Var, CLIP};
pub use tensor::{xavier, ParamStore, Tensor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnetError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("index {index} out of range for {len} segments")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("loss is not a scalar")]
    NonScalarLoss,
    #[error("missing parameter {0}")]
    MissingParam(String),
    #[error("corrupt weights file: {0}")]
    CorruptFile(String),
    #[error("feature schema mismatch: weights were trained for {found}, current schema is {expected}")]
    SchemaMismatch { expected: String, found: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub const DEFAULT_HIDDEN: usize = 16;
pub const DEFAULT_ROUNDS: usize = 3;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;
pub const DEFAULT_EPOCHS: usize = 700;

/// Records `relu(x·W1ᵀ + b1)·W2ᵀ + b2` on the tape.
pub fn mlp(tape: &mut Tape, params: &ParamStore, prefix: &str, x: Var) -> Result<Var, NnetError> {
    let w1 = tape.param(params, &format!("{prefix}.W1"))?;
    let b1 = tape.param(params, &format!("{prefix}.b1"))?;
    let w2 = tape.param(params, &format!("{prefix}.W2"))?;
    let b2 = tape.param(params, &format!("{prefix}.b2"))?;
    let h = tape.linear(x, w1, Some(b1))?;
    let h = tape.relu(h);
    tape.linear(h, w2, Some(b2))
}

pub fn forward_mlp(params: &ParamStore, prefix: &str, input: &Tensor) -> Result<Tensor, NnetError> {
    let mut tape = Tape::new();
    let x = tape.input(input.clone());
    let y = mlp(&mut tape, params, prefix, x)?;
    Ok(tape.value(y).clone())
}

#[derive(Clone, Debug, PartialEq)]
pub enum AggregationMode {
    Mean,
    WeightedMean(Vec<f64>),
}

pub fn segment_aggregate(values: &Tensor, segment_of: &[usize], n_segments: usize, mode: &AggregationMode) -> Result<Tensor, NnetError> {
    let mut tape = Tape::new();
    let x = tape.input(values.clone());
    let seg: Segments = Rc::from(segment_of);
    let y = match mode {
        AggregationMode::Mean => tape.segment_mean(x, seg, n_segments)?,
        AggregationMode::WeightedMean(w) => {
            let w = tape.input(Tensor::matrix(w.len(), 1, w.clone()));
            tape.segment_weighted_mean(x, w, seg, n_segments)?
        }
    };
    Ok(tape.value(y).clone())
}

/// Runs `program` on a fresh tape and differentiates its scalar result.
pub fn evaluate_with_gradients<F>(program: F, params: &ParamStore) -> Result<(f64, ParamStore), NnetError>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var, NnetError>,
{
    let mut tape = Tape::new();
    let loss = program(&mut tape, params)?;
    let grads = tape.backward(loss, params)?;
    Ok((tape.value(loss).data[0], grads))
}

fn evaluate<F>(program: &F, params: &ParamStore) -> Result<(f64, u64), NnetError>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var, NnetError>,
{
    let mut tape = Tape::new();
    let loss = program(&mut tape, params)?;
    let v = tape.value(loss);
    if v.len() != 1 {
        return Err(NnetError::NonScalarLoss);
    }
    Ok((v.data[0], tape.kink_signature()))
}

/// Summary of a finite-difference comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst_param: Option<(String, usize)>,
    pub checked: usize,
}

/// Compares analytic gradients with finite differences for every scalar
/// parameter. Central differences are used when the activation pattern is
/// the same at θ−ε, θ and θ+ε; otherwise a second-order one-sided stencil on
/// the side that stays on the same piece, shrinking ε if neither does.
/// Disagreement within the rounding resolution of the difference quotient
/// (a few ulps of the loss divided by the step) is not counted.
pub fn grad_check<F>(program: F, params: &ParamStore, eps: f64) -> Result<GradCheck, NnetError>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var, NnetError>,
{
    let (_, analytic) = evaluate_with_gradients(&program, params)?;
    let (f0, sig0) = evaluate(&program, params)?;
    let mut probe = params.clone();
    let mut report = GradCheck { max_rel_error: 0.0, worst_param: None, checked: 0 };
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in names {
        let n = params.require(&name)?.len();
        for i in 0..n {
            let theta = params.require(&name)?.data[i];
            let at = |delta: f64, probe: &mut ParamStore| -> Result<(f64, u64), NnetError> {
                probe.get_mut(&name).expect("present").data[i] = theta + delta;
                let r = evaluate(&program, probe);
                probe.get_mut(&name).expect("present").data[i] = theta;
                r
            };
            let mut h = eps;
            let mut numeric = None;
            for _ in 0..6 {
                let (fp, sp) = at(h, &mut probe)?;
                let (fm, sm) = at(-h, &mut probe)?;
                if sp == sig0 && sm == sig0 {
                    numeric = Some(((fp - fm) / (2.0 * h), 4.0 * f64::EPSILON * f0.abs() / h));
                    break;
                }
                if sp == sig0 {
                    let (fp2, sp2) = at(2.0 * h, &mut probe)?;
                    if sp2 == sig0 {
                        numeric = Some(((4.0 * (fp - f0) - (fp2 - f0)) / (2.0 * h), 10.0 * f64::EPSILON * f0.abs() / h));
                        break;
                    }
                }
                if sm == sig0 {
                    let (fm2, sm2) = at(-2.0 * h, &mut probe)?;
                    if sm2 == sig0 {
                        numeric = Some(((4.0 * (f0 - fm) - (f0 - fm2)) / (2.0 * h), 10.0 * f64::EPSILON * f0.abs() / h));
                        break;
                    }
                }
                h /= 10.0;
            }
            let Some((b, resolution)) = numeric else { continue };
            let a = analytic.require(&name)?.data[i];
            let rel = ((a - b).abs() - resolution).max(0.0) / a.abs().max(b.abs()).max(1e-8);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_param = Some((name.clone(), i));
            }
        }
    }
    Ok(report)
}
