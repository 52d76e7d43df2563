//! Delete-relaxation heuristics: h_add, h_max, the relaxed planning graph and
//! FF relaxed-plan extraction. Only positive preconditions and positive goal
//! atoms take part; every action counts as unit cost.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Heuristic, State};
use crate::pddl::GroundTask;

const UNREACHED: u32 = u32::MAX;

/// Achiever and consumer tables shared by all relaxation computations.
#[derive(Clone, Debug)]
pub struct RelaxedIndex {
    pre_of: Vec<Vec<u32>>,
    add_of: Vec<Vec<u32>>,
    del_of: Vec<Vec<u32>>,
    n_pre: Vec<u32>,
    no_pre: Vec<u32>,
}

impl RelaxedIndex {
    pub fn new(task: &GroundTask) -> RelaxedIndex {
        let n = task.num_atoms();
        let mut pre_of = vec![Vec::new(); n];
        let mut add_of = vec![Vec::new(); n];
        let mut del_of = vec![Vec::new(); n];
        let mut n_pre = Vec::with_capacity(task.actions.len());
        let mut no_pre = Vec::new();
        for (i, a) in task.actions.iter().enumerate() {
            for &p in &a.pre_pos {
                pre_of[p].push(i as u32);
            }
            for &q in &a.add {
                add_of[q].push(i as u32);
            }
            for &q in &a.del {
                del_of[q].push(i as u32);
            }
            n_pre.push(a.pre_pos.len() as u32);
            if a.pre_pos.is_empty() {
                no_pre.push(i as u32);
            }
        }
        RelaxedIndex { pre_of, add_of, del_of, n_pre, no_pre }
    }

    /// Actions adding `atom`, ascending.
    pub fn achievers(&self, atom: usize) -> &[u32] {
        &self.add_of[atom]
    }

    /// Actions deleting `atom`, ascending.
    pub fn deleters(&self, atom: usize) -> &[u32] {
        &self.del_of[atom]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelaxedPlanningGraph {
    /// First fact layer containing each atom, `None` if never reached.
    pub fact_layer: Vec<Option<u32>>,
    /// First action layer in which each action is applicable.
    pub action_layer: Vec<Option<u32>>,
    /// Number of fact layers built (at least one).
    pub n_layers: u32,
    pub goal_reached: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RelaxedError {
    #[error("goal unreachable in the delete relaxation")]
    GoalUnreachableInRelaxation,
}

/// Cost-combination rule for the generalized Dijkstra fixpoint.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Combine {
    Sum,
    Max,
}

/// Reusable scratch space over one task. Cheap to evaluate repeatedly.
pub struct Evaluator<'a> {
    task: &'a GroundTask,
    index: RelaxedIndex,
    cost: Vec<f64>,
    acc: Vec<f64>,
    counter: Vec<u32>,
    fact_layer: Vec<u32>,
    action_layer: Vec<u32>,
    layer_actions: Vec<Vec<u32>>,
    selected: Vec<bool>,
    helpful: Vec<usize>,
    heap: BinaryHeap<Reverse<(u64, u32)>>,
    pub evaluations: u64,
}

impl<'a> Evaluator<'a> {
    pub fn new(task: &'a GroundTask) -> Evaluator<'a> {
        let n = task.num_atoms();
        let m = task.actions.len();
        Evaluator {
            task,
            index: RelaxedIndex::new(task),
            cost: vec![f64::INFINITY; n],
            acc: vec![0.0; m],
            counter: vec![0; m],
            fact_layer: vec![UNREACHED; n],
            action_layer: vec![UNREACHED; m],
            layer_actions: Vec::new(),
            selected: vec![false; m],
            helpful: Vec::new(),
            heap: BinaryHeap::new(),
            evaluations: 0,
        }
    }

    pub fn task(&self) -> &'a GroundTask {
        self.task
    }

    pub fn index(&self) -> &RelaxedIndex {
        &self.index
    }

    /// Heuristic value of `state`; `f64::INFINITY` for relaxed dead ends.
    /// After an `HFF` evaluation, [`Evaluator::helpful`] holds the helpful actions.
    pub fn evaluate(&mut self, h: Heuristic, state: &State) -> f64 {
        self.evaluations += 1;
        match h {
            Heuristic::Blind => {
                if state.satisfies_goal(self.task) {
                    0.0
                } else {
                    1.0
                }
            }
            Heuristic::HAdd => self.dijkstra(state, Combine::Sum),
            Heuristic::HMax => self.dijkstra(state, Combine::Max),
            Heuristic::HFF => {
                if !self.layers(state) {
                    self.helpful.clear();
                    return f64::INFINITY;
                }
                self.extract() as f64
            }
        }
    }

    pub fn helpful(&self) -> &[usize] {
        &self.helpful
    }

    fn dijkstra(&mut self, state: &State, mode: Combine) -> f64 {
        let task = self.task;
        let goal = &task.goal_pos;
        if goal.iter().all(|&g| state.contains(g)) {
            return 0.0;
        }
        self.cost.iter_mut().for_each(|c| *c = f64::INFINITY);
        self.acc.iter_mut().for_each(|c| *c = 0.0);
        self.counter.copy_from_slice(&self.index.n_pre);
        self.heap.clear();
        for a in state.atoms() {
            self.cost[a] = 0.0;
            self.heap.push(Reverse((0f64.to_bits(), a as u32)));
        }
        for i in 0..self.index.no_pre.len() {
            let a = self.index.no_pre[i] as usize;
            self.fire(a, 1.0);
        }
        let mut open_goals = goal.iter().filter(|&&g| !state.contains(g)).count();
        let mut done = vec![false; task.num_atoms()];
        while let Some(Reverse((bits, p))) = self.heap.pop() {
            let p = p as usize;
            let c = f64::from_bits(bits);
            if done[p] || c > self.cost[p] {
                continue;
            }
            done[p] = true;
            if goal.binary_search(&p).is_ok() && c > 0.0 {
                open_goals -= 1;
                if open_goals == 0 {
                    break;
                }
            }
            for k in 0..self.index.pre_of[p].len() {
                let a = self.index.pre_of[p][k] as usize;
                self.acc[a] = match mode {
                    Combine::Sum => self.acc[a] + c,
                    Combine::Max => self.acc[a].max(c),
                };
                self.counter[a] -= 1;
                if self.counter[a] == 0 {
                    let v = 1.0 + self.acc[a];
                    self.fire(a, v);
                }
            }
        }
        let mut total: f64 = 0.0;
        for &g in goal {
            let c = self.cost[g];
            if c.is_infinite() {
                return f64::INFINITY;
            }
            total = match mode {
                Combine::Sum => total + c,
                Combine::Max => total.max(c),
            };
        }
        total
    }

    fn fire(&mut self, a: usize, value: f64) {
        for &q in &self.task.actions[a].add {
            if value < self.cost[q] {
                self.cost[q] = value;
                self.heap.push(Reverse((value.to_bits(), q as u32)));
            }
        }
    }

    /// Builds fact/action layers until every positive goal atom is present
    /// or nothing new appears. Returns whether the goal was reached.
    fn layers(&mut self, state: &State) -> bool {
        let task = self.task;
        self.fact_layer.iter_mut().for_each(|l| *l = UNREACHED);
        self.action_layer.iter_mut().for_each(|l| *l = UNREACHED);
        self.counter.copy_from_slice(&self.index.n_pre);
        for l in &mut self.layer_actions {
            l.clear();
        }
        let mut frontier: Vec<usize> = state.atoms().collect();
        for &a in &frontier {
            self.fact_layer[a] = 0;
        }
        let mut open_goals = task.goal_pos.iter().filter(|&&g| self.fact_layer[g] == UNREACHED).count();
        let mut layer = 0u32;
        let mut first = true;
        while open_goals > 0 {
            if self.layer_actions.len() <= layer as usize {
                self.layer_actions.push(Vec::new());
            }
            let mut fresh = std::mem::take(&mut self.layer_actions[layer as usize]);
            if first {
                for &a in &self.index.no_pre {
                    self.action_layer[a as usize] = 0;
                    fresh.push(a);
                }
                first = false;
            }
            for &p in &frontier {
                for &a in &self.index.pre_of[p] {
                    let a = a as usize;
                    self.counter[a] -= 1;
                    if self.counter[a] == 0 {
                        self.action_layer[a] = layer;
                        fresh.push(a as u32);
                    }
                }
            }
            let mut next = Vec::new();
            for &a in &fresh {
                for &q in &task.actions[a as usize].add {
                    if self.fact_layer[q] == UNREACHED {
                        self.fact_layer[q] = layer + 1;
                        next.push(q);
                        if task.goal_pos.binary_search(&q).is_ok() {
                            open_goals -= 1;
                        }
                    }
                }
            }
            self.layer_actions[layer as usize] = fresh;
            if next.is_empty() {
                return open_goals == 0;
            }
            frontier = next;
            layer += 1;
        }
        true
    }

    /// Backward extraction over the layers from [`Evaluator::layers`].
    fn extract(&mut self) -> usize {
        let task = self.task;
        self.helpful.clear();
        let top = task.goal_pos.iter().map(|&g| self.fact_layer[g]).max().unwrap_or(0) as usize;
        let mut goals_at: Vec<Vec<usize>> = vec![Vec::new(); top + 1];
        let mut queued = rustc_hash::FxHashSet::default();
        for &g in &task.goal_pos {
            let l = self.fact_layer[g] as usize;
            if l > 0 && queued.insert(g) {
                goals_at[l].push(g);
            }
        }
        let mut chosen = Vec::new();
        for layer in (1..=top).rev() {
            let mut goals = std::mem::take(&mut goals_at[layer]);
            goals.sort_unstable();
            let mut achieved = rustc_hash::FxHashSet::default();
            for g in goals {
                if achieved.contains(&g) {
                    continue;
                }
                let want = layer as u32 - 1;
                let difficulty = |a: usize| -> u32 { task.actions[a].pre_pos.iter().map(|&p| self.fact_layer[p]).sum() };
                let a = self.index.add_of[g]
                    .iter()
                    .map(|&a| a as usize)
                    .filter(|&a| self.action_layer[a] == want)
                    .min_by_key(|&a| (difficulty(a), a))
                    .expect("layered achiever exists");
                if !self.selected[a] {
                    self.selected[a] = true;
                    chosen.push(a);
                }
                for &q in &task.actions[a].add {
                    achieved.insert(q);
                }
                for &p in &task.actions[a].pre_pos {
                    let l = self.fact_layer[p] as usize;
                    if l > 0 && queued.insert(p) {
                        goals_at[l].push(p);
                    }
                }
            }
        }
        for &a in &chosen {
            self.selected[a] = false;
            if self.action_layer[a] == 0 {
                self.helpful.push(a);
            }
        }
        self.helpful.sort_unstable();
        chosen.len()
    }

    fn snapshot(&self) -> RelaxedPlanningGraph {
        let opt = |v: &[u32]| v.iter().map(|&l| (l != UNREACHED).then_some(l)).collect();
        let fact_layer: Vec<Option<u32>> = opt(&self.fact_layer);
        let n_layers = fact_layer.iter().flatten().max().map_or(1, |m| m + 1);
        let goal_reached = self.task.goal_pos.iter().all(|&g| fact_layer[g].is_some());
        RelaxedPlanningGraph { fact_layer, action_layer: opt(&self.action_layer), n_layers, goal_reached }
    }
}

pub fn h_add(state: &State, task: &GroundTask) -> f64 {
    Evaluator::new(task).evaluate(Heuristic::HAdd, state)
}

pub fn h_max(state: &State, task: &GroundTask) -> f64 {
    Evaluator::new(task).evaluate(Heuristic::HMax, state)
}

pub fn h_ff(state: &State, task: &GroundTask) -> f64 {
    Evaluator::new(task).evaluate(Heuristic::HFF, state)
}

pub fn build_rpg(state: &State, task: &GroundTask) -> RelaxedPlanningGraph {
    let mut e = Evaluator::new(task);
    e.layers(state);
    e.snapshot()
}

/// Relaxed-plan length and the helpful (layer-0 selected) actions.
pub fn extract_relaxed_plan(
    task: &GroundTask,
    rpg: &RelaxedPlanningGraph,
) -> Result<(usize, Vec<usize>), RelaxedError> {
    if !rpg.goal_reached {
        return Err(RelaxedError::GoalUnreachableInRelaxation);
    }
    let mut e = Evaluator::new(task);
    for (slot, l) in e.fact_layer.iter_mut().zip(&rpg.fact_layer) {
        *slot = l.unwrap_or(UNREACHED);
    }
    for (slot, l) in e.action_layer.iter_mut().zip(&rpg.action_layer) {
        *slot = l.unwrap_or(UNREACHED);
    }
    let n = e.extract();
    Ok((n, e.helpful.clone()))
}
