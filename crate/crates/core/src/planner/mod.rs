//! Forward state-space search with delete-relaxation heuristics.

mod relaxed;
mod search;

use std::fmt::Write;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::pddl::{GroundAction, GroundTask};

pub use relaxed::{build_rpg, extract_relaxed_plan, h_add, h_ff, h_max, Evaluator, RelaxedIndex, RelaxedPlanningGraph};
pub use search::{search, search_until};

/// A set of true atoms; everything else is false.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State {
    bits: FixedBitSet,
}

impl State {
    pub fn empty(n_atoms: usize) -> State {
        State { bits: FixedBitSet::with_capacity(n_atoms) }
    }

    pub fn from_atoms(n_atoms: usize, atoms: impl IntoIterator<Item = usize>) -> State {
        let mut s = State::empty(n_atoms);
        for a in atoms {
            s.bits.insert(a);
        }
        s
    }

    pub fn initial(task: &GroundTask) -> State {
        State::from_atoms(task.num_atoms(), task.init.iter().copied())
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.bits.contains(atom)
    }

    pub fn insert(&mut self, atom: usize) {
        self.bits.insert(atom);
    }

    pub fn remove(&mut self, atom: usize) {
        self.bits.set(atom, false);
    }

    pub fn atoms(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    pub fn satisfies_goal(&self, task: &GroundTask) -> bool {
        task.goal_pos.iter().all(|&g| self.contains(g)) && !task.goal_neg.iter().any(|&g| self.contains(g))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("action '{0}' is not applicable")]
    NotApplicable(String),
    #[error("line {line}: unknown action '{text}'")]
    UnknownAction { line: usize, text: String },
}

pub fn applicable(state: &State, action: &GroundAction) -> bool {
    action.pre_pos.iter().all(|&p| state.contains(p)) && !action.pre_neg.iter().any(|&p| state.contains(p))
}

pub fn apply(state: &State, action: &GroundAction) -> Result<State, PlanError> {
    if !applicable(state, action) {
        return Err(PlanError::NotApplicable(format!("{} {:?}", action.schema, action.args)));
    }
    let mut next = state.clone();
    apply_in_place(&mut next, action);
    Ok(next)
}

pub(crate) fn apply_in_place(state: &mut State, action: &GroundAction) {
    for &d in &action.del {
        state.remove(d);
    }
    for &a in &action.add {
        state.insert(a);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<usize>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// One `(name arg ...)` line per step.
    pub fn to_text(&self, task: &GroundTask) -> String {
        let mut s = String::new();
        for &a in &self.steps {
            let _ = writeln!(s, "{}", task.action_name(a));
        }
        s
    }

    /// Reads the text form back. Compiled disjunct variants share a printed
    /// name, so each line resolves to the first variant applicable in the
    /// state reached so far (or the first variant if none is).
    pub fn parse(task: &GroundTask, text: &str) -> Result<Plan, PlanError> {
        let mut by_name: rustc_hash::FxHashMap<String, Vec<usize>> = Default::default();
        for i in 0..task.actions.len() {
            by_name.entry(task.action_name(i)).or_default().push(i);
        }
        let mut state = State::initial(task);
        let mut steps = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with(';') {
                continue;
            }
            let key = line.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ");
            let cands = by_name.get(&key).ok_or(PlanError::UnknownAction { line: n + 1, text: line.to_string() })?;
            let pick = cands.iter().copied().find(|&a| applicable(&state, &task.actions[a])).unwrap_or(cands[0]);
            apply_in_place(&mut state, &task.actions[pick]);
            steps.push(pick);
        }
        Ok(Plan { steps })
    }
}

/// Simulates the plan from the initial state; true iff every step is
/// applicable and the goal holds at the end.
pub fn validate_plan(task: &GroundTask, plan: &Plan) -> bool {
    let mut state = State::initial(task);
    for &a in &plan.steps {
        match task.actions.get(a) {
            Some(action) if applicable(&state, action) => apply_in_place(&mut state, action),
            _ => return false,
        }
    }
    state.satisfies_goal(task)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Gbfs,
    Ehc,
    AStar,
    UniformCost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heuristic {
    Blind,
    HAdd,
    HMax,
    HFF,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "gbfs" => Ok(Strategy::Gbfs),
            "ehc" => Ok(Strategy::Ehc),
            "astar" | "a*" => Ok(Strategy::AStar),
            "ucs" | "uniform" | "uniformcost" | "dijkstra" => Ok(Strategy::UniformCost),
            _ => Err(format!("unknown strategy '{s}'")),
        }
    }
}

impl std::str::FromStr for Heuristic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "blind" => Ok(Heuristic::Blind),
            "hadd" | "add" => Ok(Heuristic::HAdd),
            "hmax" | "max" => Ok(Heuristic::HMax),
            "hff" | "ff" => Ok(Heuristic::HFF),
            _ => Err(format!("unknown heuristic '{s}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieBreak {
    Fifo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub strategy: Strategy,
    pub heuristic: Heuristic,
    /// EHC: restrict the escape search to helpful actions first. GBFS with
    /// h_FF: add a preferred-successor open list.
    pub helpful_actions: bool,
    /// GBFS: add a type-based exploration open list.
    #[serde(default)]
    pub exploration: bool,
    /// GBFS: deferred evaluation.
    #[serde(default)]
    pub lazy: bool,
    /// Seconds of wall clock.
    pub timeout: f64,
    pub tie_break: TieBreak,
    pub max_expansions: Option<u64>,
}

pub const DEFAULT_TIMEOUT: f64 = 10.0;

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            strategy: Strategy::Gbfs,
            heuristic: Heuristic::HFF,
            helpful_actions: false,
            exploration: false,
            lazy: false,
            timeout: DEFAULT_TIMEOUT,
            tie_break: TieBreak::Fifo,
            max_expansions: None,
        }
    }
}

impl SearchConfig {
    pub fn gbfs_ff(timeout: f64) -> Self {
        SearchConfig { timeout, ..Default::default() }
    }

    /// GBFS with h_FF, preferred successors, type-based exploration and
    /// deferred evaluation.
    pub fn enhanced_gbfs(timeout: f64) -> Self {
        SearchConfig { helpful_actions: true, exploration: true, lazy: true, ..SearchConfig::gbfs_ff(timeout) }
    }

    pub fn uniform_cost(timeout: f64) -> Self {
        SearchConfig { strategy: Strategy::UniformCost, heuristic: Heuristic::Blind, timeout, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.strategy == Strategy::Ehc && self.heuristic == Heuristic::Blind {
            return Err("EHC requires a non-blind heuristic".into());
        }
        if !(self.timeout > 0.0) {
            return Err("timeout must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Solved(Plan),
    Unsolvable,
    Timeout,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub expanded: u64,
    pub generated: u64,
    pub evaluations: u64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub outcome: Outcome,
    pub stats: SearchStats,
}

impl SearchResult {
    pub fn plan(&self) -> Option<&Plan> {
        match &self.outcome {
            Outcome::Solved(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_solved(&self) -> bool {
        matches!(self.outcome, Outcome::Solved(_))
    }

    pub fn status_label(&self) -> &'static str {
        match self.outcome {
            Outcome::Solved(_) => "solved",
            Outcome::Unsolvable => "unsolvable",
            Outcome::Timeout => "timeout",
        }
    }
}
