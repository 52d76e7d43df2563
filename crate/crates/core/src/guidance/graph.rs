use std::fmt::Write;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Coords, GuidanceError};
use crate::nnet::Tensor;
use crate::pddl::{DomainModel, GroundTask, PredicateSchema};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpatialMode {
    Off,
    /// Manhattan distance on every edge.
    AllEdges,
    /// Distance only on edges carrying a goal relation, 0 elsewhere.
    GoalEdges,
}

impl std::str::FromStr for SpatialMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "off" | "none" | "false" => Ok(SpatialMode::Off),
            "all" | "all-edges" | "true" => Ok(SpatialMode::AllEdges),
            "goal" | "goal-edges" => Ok(SpatialMode::GoalEdges),
            _ => Err(format!("unknown spatial mode '{s}'")),
        }
    }
}

/// Which predicates and types become node and edge features, in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub unary: Vec<String>,
    pub binary: Vec<String>,
    pub types: Vec<String>,
    pub spatial: SpatialMode,
}

impl FeatureSchema {
    fn from_parts(predicates: &[PredicateSchema], types: &[String], spatial: SpatialMode) -> FeatureSchema {
        let pick = |k: usize| predicates.iter().filter(|p| p.arity() == k).map(|p| p.name.clone()).collect();
        FeatureSchema { unary: pick(1), binary: pick(2), types: types.to_vec(), spatial }
    }

    pub fn from_domain(domain: &DomainModel, spatial: SpatialMode) -> FeatureSchema {
        FeatureSchema::from_parts(&domain.predicates, &domain.type_names(), spatial)
    }

    pub fn from_task(task: &GroundTask, spatial: SpatialMode) -> FeatureSchema {
        FeatureSchema::from_parts(&task.predicates, &task.type_names, spatial)
    }

    pub fn node_dim(&self) -> usize {
        self.types.len() + 2 * self.unary.len()
    }

    pub fn edge_dim(&self) -> usize {
        4 * self.binary.len() + usize::from(self.spatial != SpatialMode::Off)
    }

    /// Hex SHA-256 prefix of the canonical schema text.
    pub fn fingerprint(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "u:{}|b:{}|t:{}|s:{:?}", self.unary.join(","), self.binary.join(","), self.types.join(","), self.spatial);
        Sha256::digest(s.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Object-centric encoding of a task. Related object pairs are connected in
/// both directions; edge (u, v) carries the relations over (u, v) followed
/// by the relations over (v, u).
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemGraph {
    pub n_nodes: usize,
    pub node_features: Tensor,
    pub senders: Vec<usize>,
    pub receivers: Vec<usize>,
    pub edge_features: Tensor,
    pub object_names: Vec<String>,
}

impl ProblemGraph {
    pub fn n_edges(&self) -> usize {
        self.senders.len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.senders.iter().copied().zip(self.receivers.iter().copied()).collect()
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> ProblemGraph {
        let n = self.n_nodes;
        let d = self.node_features.cols();
        let mut nf = vec![0.0; n * d];
        let mut names = vec![String::new(); n];
        for i in 0..n {
            nf[perm[i] * d..(perm[i] + 1) * d].copy_from_slice(self.node_features.row(i));
            names[perm[i]] = self.object_names[i].clone();
        }
        ProblemGraph {
            n_nodes: n,
            node_features: Tensor::matrix(n, d, nf),
            senders: self.senders.iter().map(|&s| perm[s]).collect(),
            receivers: self.receivers.iter().map(|&r| perm[r]).collect(),
            edge_features: self.edge_features.clone(),
            object_names: names,
        }
    }
}

pub fn encode_problem(task: &GroundTask, schema: &FeatureSchema, coords: Option<&Coords>) -> Result<ProblemGraph, GuidanceError> {
    let own = FeatureSchema::from_task(task, schema.spatial);
    if own != *schema {
        return Err(GuidanceError::SchemaMismatch { expected: schema.fingerprint(), found: own.fingerprint() });
    }
    let n = task.objects.len();
    let nt = schema.types.len();
    let nu = schema.unary.len();
    let nb = schema.binary.len();
    let slot = |names: &[String], p: &str| names.iter().position(|x| x == p);
    let unary_slot: Vec<Option<usize>> = task.predicates.iter().map(|p| slot(&schema.unary, &p.name).filter(|_| p.arity() == 1)).collect();
    let binary_slot: Vec<Option<usize>> = task.predicates.iter().map(|p| slot(&schema.binary, &p.name).filter(|_| p.arity() == 2)).collect();

    let dv = schema.node_dim();
    let mut nf = vec![0.0; n * dv];
    for (i, o) in task.objects.iter().enumerate() {
        if let Some(t) = slot(&schema.types, &o.type_name) {
            nf[i * dv + t] = 1.0;
        }
    }
    let mut pair_bits: FxHashMap<(usize, usize), Vec<f64>> = FxHashMap::default();
    let goal_atoms = task.goal_pos.iter().chain(&task.goal_neg);
    for (offset, atoms) in [(0usize, task.init.iter().collect::<Vec<_>>()), (1, goal_atoms.collect())] {
        for &a in atoms {
            let atom = &task.atoms[a];
            if let Some(u) = unary_slot[atom.predicate] {
                nf[atom.args[0] * dv + nt + offset * nu + u] = 1.0;
            } else if let Some(b) = binary_slot[atom.predicate] {
                let (x, y) = (atom.args[0], atom.args[1]);
                if x == y {
                    continue;
                }
                let key = (x.min(y), x.max(y));
                let bits = pair_bits.entry(key).or_insert_with(|| vec![0.0; 4 * nb]);
                let dir = usize::from(x > y);
                bits[dir * 2 * nb + offset * nb + b] = 1.0;
            }
        }
    }
    let mut pairs: Vec<_> = pair_bits.into_iter().collect();
    pairs.sort_unstable_by_key(|p| p.0);

    let de = schema.edge_dim();
    let position = |i: usize| -> Result<(i64, i64), GuidanceError> {
        let name = &task.objects[i].name;
        coords.and_then(|c| c.get(name)).copied().ok_or_else(|| GuidanceError::MissingCoords(name.clone()))
    };
    let mut senders = Vec::with_capacity(2 * pairs.len());
    let mut receivers = Vec::with_capacity(2 * pairs.len());
    let mut ef = Vec::with_capacity(2 * pairs.len() * de);
    for ((lo, hi), bits) in &pairs {
        let (fwd, bwd) = bits.split_at(2 * nb);
        let dist = match schema.spatial {
            SpatialMode::Off => None,
            mode => {
                let has_goal = fwd[nb..].iter().chain(&bwd[nb..]).any(|&v| v > 0.0);
                if mode == SpatialMode::GoalEdges && !has_goal {
                    Some(0.0)
                } else {
                    let (a, b) = (position(*lo)?, position(*hi)?);
                    Some(((a.0 - b.0).abs() + (a.1 - b.1).abs()) as f64)
                }
            }
        };
        for (s, r, first, second) in [(*lo, *hi, fwd, bwd), (*hi, *lo, bwd, fwd)] {
            senders.push(s);
            receivers.push(r);
            ef.extend_from_slice(first);
            ef.extend_from_slice(second);
            ef.extend(dist);
        }
    }
    let m = senders.len();
    Ok(ProblemGraph {
        n_nodes: n,
        node_features: Tensor::matrix(n, dv, nf),
        senders,
        receivers,
        edge_features: Tensor::matrix(m, de, ef),
        object_names: task.objects.iter().map(|o| o.name.clone()).collect(),
    })
}
