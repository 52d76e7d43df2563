use std::collections::BTreeMap;
use std::path::Path;
use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GuidanceError, ImportanceScores, ProblemGraph};
use super::graph::FeatureSchema;
use crate::nnet::{self, mlp, NnetError, ParamStore, Segments, Tape, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncoderKind {
    /// Edge MLP, mean aggregation, node MLP.
    PloiMP,
    /// Attention-weighted aggregation with an extra relation head.
    Gat,
}

impl std::str::FromStr for EncoderKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ploi" | "ploimp" | "mp" => Ok(EncoderKind::PloiMP),
            "gat" => Ok(EncoderKind::Gat),
            _ => Err(format!("unknown encoder '{s}'")),
        }
    }
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::PloiMP => "ploi",
            EncoderKind::Gat => "gat",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GuidanceModel {
    pub kind: EncoderKind,
    pub params: ParamStore,
    pub schema: FeatureSchema,
    pub rounds: usize,
    pub hidden: usize,
}

impl GuidanceModel {
    /// Fresh model with seeded Xavier weights, one set per round.
    pub fn new(kind: EncoderKind, schema: FeatureSchema, rounds: usize, hidden: usize, seed: u64) -> GuidanceModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamStore::new();
        let (dv, de, h) = (schema.node_dim(), schema.edge_dim(), hidden);
        for r in 0..rounds {
            let d = if r == 0 { dv } else { h };
            match kind {
                EncoderKind::PloiMP => p.init_mlp(&format!("r{r}.edge"), de + 2 * d, h, h, &mut rng),
                EncoderKind::Gat => {
                    p.init_mlp(&format!("r{r}.attn"), 2 * d, h, 1, &mut rng);
                    p.init_mlp(&format!("r{r}.msg"), d + de, h, h, &mut rng);
                }
            }
            p.init_mlp(&format!("r{r}.node"), d + h, h, h, &mut rng);
        }
        let d = if rounds == 0 { dv } else { h };
        p.init_mlp("head.node", d, h, 1, &mut rng);
        if kind == EncoderKind::Gat {
            p.init_mlp("head.rel", de + 2 * d, h, 1, &mut rng);
        }
        GuidanceModel { kind, params: p, schema, rounds, hidden }
    }

    pub fn default_for(kind: EncoderKind, schema: FeatureSchema, seed: u64) -> GuidanceModel {
        GuidanceModel::new(kind, schema, nnet::DEFAULT_ROUNDS, nnet::DEFAULT_HIDDEN, seed)
    }

    /// Records the forward pass; returns node logits `[n, 1]` and, for GAT,
    /// edge logits `[m, 1]`.
    pub fn logits(&self, tape: &mut Tape, params: &ParamStore, graph: &ProblemGraph) -> Result<(Var, Option<Var>), NnetError> {
        let n = graph.n_nodes;
        let senders: Segments = Rc::from(graph.senders.as_slice());
        let receivers: Segments = Rc::from(graph.receivers.as_slice());
        let e = tape.input(graph.edge_features.clone());
        let mut v = tape.input(graph.node_features.clone());
        for r in 0..self.rounds {
            let vr = tape.gather_rows(v, receivers.clone())?;
            let vs = tape.gather_rows(v, senders.clone())?;
            let agg = match self.kind {
                EncoderKind::PloiMP => {
                    let x = tape.concat(&[e, vr, vs])?;
                    let msg = mlp(tape, params, &format!("r{r}.edge"), x)?;
                    tape.segment_mean(msg, receivers.clone(), n)?
                }
                EncoderKind::Gat => {
                    let x = tape.concat(&[vr, vs])?;
                    let logit = mlp(tape, params, &format!("r{r}.attn"), x)?;
                    let shifted = tape.sub_segment_max(logit, &receivers, n)?;
                    let alpha = tape.exp(shifted);
                    let x = tape.concat(&[vs, e])?;
                    let msg = mlp(tape, params, &format!("r{r}.msg"), x)?;
                    tape.segment_weighted_mean(msg, alpha, receivers.clone(), n)?
                }
            };
            let x = tape.concat(&[v, agg])?;
            v = mlp(tape, params, &format!("r{r}.node"), x)?;
        }
        let node = mlp(tape, params, "head.node", v)?;
        let rel = match self.kind {
            EncoderKind::PloiMP => None,
            EncoderKind::Gat => {
                let vr = tape.gather_rows(v, receivers)?;
                let vs = tape.gather_rows(v, senders)?;
                let x = tape.concat(&[e, vr, vs])?;
                Some(mlp(tape, params, "head.rel", x)?)
            }
        };
        Ok((node, rel))
    }

    pub fn score(&self, graph: &ProblemGraph) -> Result<ImportanceScores, GuidanceError> {
        let mut tape = Tape::new();
        let (node, rel) = self.logits(&mut tape, &self.params, graph)?;
        let node = tape.sigmoid(node);
        let object_scores = tape.value(node).data.clone();
        let relation_scores = rel.map(|r| {
            let s = tape.sigmoid(r);
            tape.value(s).data.clone()
        });
        Ok(ImportanceScores { object_scores, relation_scores, edges: graph.edges() })
    }

    fn meta(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("kind".into(), self.kind.name().into());
        m.insert("rounds".into(), self.rounds.to_string());
        m.insert("hidden".into(), self.hidden.to_string());
        m.insert("schema".into(), serde_json::to_string(&self.schema).expect("schema serializes"));
        m
    }

    pub fn save(&self, path: &Path) -> Result<(), GuidanceError> {
        Ok(nnet::save_weights(path, &self.params, &self.schema.fingerprint(), &self.meta())?)
    }

    pub fn load(path: &Path) -> Result<GuidanceModel, GuidanceError> {
        let w = nnet::load_weights(path)?;
        let field = |k: &str| w.meta.get(k).ok_or_else(|| NnetError::CorruptFile(format!("missing metadata field {k}")));
        let bad = |k: &str| NnetError::CorruptFile(format!("bad metadata field {k}"));
        let kind: EncoderKind = field("kind")?.parse().map_err(|_| bad("kind"))?;
        let rounds: usize = field("rounds")?.parse().map_err(|_| bad("rounds"))?;
        let hidden: usize = field("hidden")?.parse().map_err(|_| bad("hidden"))?;
        let schema: FeatureSchema = serde_json::from_str(field("schema")?).map_err(|_| bad("schema"))?;
        if schema.fingerprint() != w.fingerprint {
            return Err(NnetError::CorruptFile("schema metadata disagrees with fingerprint".into()).into());
        }
        let template = GuidanceModel::new(kind, schema.clone(), rounds, hidden, 0);
        for (name, t) in template.params.iter() {
            let got = w.store.require(name)?;
            if got.shape != t.shape {
                return Err(NnetError::ShapeMismatch(format!("{name}: file {:?}, model {:?}", got.shape, t.shape)).into());
            }
        }
        if w.store.len() != template.params.len() {
            return Err(NnetError::CorruptFile("unexpected tensors in weights file".into()).into());
        }
        Ok(GuidanceModel { kind, params: w.store, schema, rounds, hidden })
    }

    /// Loads a model and rejects it unless it was trained for `schema`.
    pub fn load_for(path: &Path, schema: &FeatureSchema) -> Result<GuidanceModel, GuidanceError> {
        let m = GuidanceModel::load(path)?;
        if m.schema.fingerprint() != schema.fingerprint() {
            return Err(GuidanceError::SchemaMismatch { expected: schema.fingerprint(), found: m.schema.fingerprint() });
        }
        Ok(m)
    }
}

fn require_kind(model: &GuidanceModel, kind: EncoderKind) -> Result<(), GuidanceError> {
    if model.kind != kind {
        return Err(GuidanceError::InvalidConfig(format!("model is {}, expected {}", model.kind.name(), kind.name())));
    }
    Ok(())
}

pub fn forward_ploi(model: &GuidanceModel, graph: &ProblemGraph) -> Result<ImportanceScores, GuidanceError> {
    require_kind(model, EncoderKind::PloiMP)?;
    model.score(graph)
}

pub fn forward_gat(model: &GuidanceModel, graph: &ProblemGraph) -> Result<ImportanceScores, GuidanceError> {
    require_kind(model, EncoderKind::Gat)?;
    model.score(graph)
}
