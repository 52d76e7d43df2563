//! Backward search from the goal through STRIPS regression.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::pddl::{GroundAction, GroundTask};
use crate::planner::{validate_plan, Outcome, Plan, RelaxedIndex, SearchResult, SearchStats};

pub const DEFAULT_EXPANSION_BUDGET: u64 = 1_000_000;

/// Atoms required true (`pos`) and false (`neg`); both sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PartialState {
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

impl PartialState {
    pub fn new(mut pos: Vec<usize>, mut neg: Vec<usize>) -> Result<PartialState, RegressError> {
        pos.sort_unstable();
        pos.dedup();
        neg.sort_unstable();
        neg.dedup();
        let s = PartialState { pos, neg };
        if s.is_consistent() {
            Ok(s)
        } else {
            Err(RegressError::InconsistentSubgoal)
        }
    }

    pub fn goal(task: &GroundTask) -> Result<PartialState, RegressError> {
        PartialState::new(task.goal_pos.clone(), task.goal_neg.clone())
    }

    pub fn is_consistent(&self) -> bool {
        !self.pos.iter().any(|p| self.neg.binary_search(p).is_ok())
    }

    /// Atoms of `pos` missing from init plus atoms of `neg` present in init.
    pub fn distance_to_init(&self, task: &GroundTask) -> usize {
        let in_init = |a: &usize| task.init.binary_search(a).is_ok();
        self.pos.iter().filter(|a| !in_init(a)).count() + self.neg.iter().filter(|a| in_init(a)).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegressError {
    #[error("regression produced an inconsistent subgoal")]
    InconsistentSubgoal,
}

/// A subgoal with the actions regressed so far, most recent first.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionNode {
    pub subgoal: PartialState,
    pub trail: Vec<usize>,
}

fn contains(sorted: &[usize], x: usize) -> bool {
    sorted.binary_search(&x).is_ok()
}

/// Relevant (adds a required atom or deletes a forbidden one) and
/// non-conflicting (deletes no required atom, adds no forbidden one).
pub fn regressable(subgoal: &PartialState, action: &GroundAction) -> bool {
    (action.add.iter().any(|&a| contains(&subgoal.pos, a)) || action.del.iter().any(|&d| contains(&subgoal.neg, d)))
        && !action.del.iter().any(|&d| contains(&subgoal.pos, d))
        && !action.add.iter().any(|&a| contains(&subgoal.neg, a))
}

pub fn regress(subgoal: &PartialState, action: &GroundAction) -> Result<PartialState, RegressError> {
    let pos: Vec<usize> =
        subgoal.pos.iter().copied().filter(|p| !action.add.contains(p)).chain(action.pre_pos.iter().copied()).collect();
    let neg: Vec<usize> =
        subgoal.neg.iter().copied().filter(|p| !action.del.contains(p)).chain(action.pre_neg.iter().copied()).collect();
    PartialState::new(pos, neg)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressConfig {
    pub timeout: f64,
    pub max_expansions: u64,
}

impl Default for RegressConfig {
    fn default() -> Self {
        RegressConfig { timeout: crate::planner::DEFAULT_TIMEOUT, max_expansions: DEFAULT_EXPANSION_BUDGET }
    }
}

pub fn regression_search(task: &GroundTask, timeout: f64) -> SearchResult {
    regression_search_with(task, &RegressConfig { timeout, ..Default::default() })
}

/// Greedy best-first search over subgoals ordered by their distance to init.
pub fn regression_search_with(task: &GroundTask, config: &RegressConfig) -> SearchResult {
    let start = Instant::now();
    let deadline = start + Duration::from_secs_f64(config.timeout.max(0.0));
    let mut stats = SearchStats::default();
    let outcome = run(task, config, deadline, &mut stats);
    stats.wall_seconds = start.elapsed().as_secs_f64();
    SearchResult { outcome, stats }
}

fn run(task: &GroundTask, config: &RegressConfig, deadline: Instant, stats: &mut SearchStats) -> Outcome {
    let Ok(root) = PartialState::goal(task) else {
        return Outcome::Unsolvable;
    };
    let index = RelaxedIndex::new(task);
    let mut nodes: Vec<(PartialState, u32, u32)> = Vec::new();
    let mut seen: FxHashMap<PartialState, u32> = FxHashMap::default();
    let mut open = BinaryHeap::new();
    let mut counter = 0u64;
    let h0 = root.distance_to_init(task);
    stats.evaluations += 1;
    seen.insert(root.clone(), 0);
    nodes.push((root, u32::MAX, u32::MAX));
    open.push(Reverse((h0, counter, 0u32)));
    let mut relevant = Vec::new();
    while let Some(Reverse((h, _, id))) = open.pop() {
        if h == 0 {
            // Walking towards the root yields the actions in forward order.
            let mut steps = Vec::new();
            let mut cur = id;
            while nodes[cur as usize].1 != u32::MAX {
                steps.push(nodes[cur as usize].2 as usize);
                cur = nodes[cur as usize].1;
            }
            let plan = Plan { steps };
            if validate_plan(task, &plan) {
                return Outcome::Solved(plan);
            }
            continue;
        }
        if stats.expanded >= config.max_expansions || Instant::now() >= deadline {
            return Outcome::Timeout;
        }
        stats.expanded += 1;
        let subgoal = nodes[id as usize].0.clone();
        relevant.clear();
        for &p in &subgoal.pos {
            relevant.extend(index.achievers(p).iter().map(|&a| a as usize));
        }
        for &p in &subgoal.neg {
            relevant.extend(index.deleters(p).iter().map(|&a| a as usize));
        }
        relevant.sort_unstable();
        relevant.dedup();
        for &a in &relevant {
            let action = &task.actions[a];
            if !regressable(&subgoal, action) {
                continue;
            }
            let Ok(next) = regress(&subgoal, action) else { continue };
            if seen.contains_key(&next) {
                continue;
            }
            stats.generated += 1;
            stats.evaluations += 1;
            let nh = next.distance_to_init(task);
            let nid = nodes.len() as u32;
            seen.insert(next.clone(), nid);
            nodes.push((next, id, a as u32));
            counter += 1;
            open.push(Reverse((nh, counter, nid)));
        }
    }
    Outcome::Unsolvable
}
