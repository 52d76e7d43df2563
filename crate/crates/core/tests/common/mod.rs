//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use rand::Rng;
use relplan::pddl::{GroundAction, GroundAtom, GroundTask, PredicateSchema, TaskObject};

pub type Set = BTreeSet<usize>;

fn holds(state: &Set, a: &GroundAction) -> bool {
    a.pre_pos.iter().all(|p| state.contains(p)) && a.pre_neg.iter().all(|p| !state.contains(p))
}

fn step(state: &Set, a: &GroundAction) -> Set {
    let mut s: Set = state.iter().copied().filter(|x| !a.del.contains(x)).collect();
    s.extend(a.add.iter().copied());
    s
}

pub fn goal_holds(task: &GroundTask, s: &Set) -> bool {
    task.goal_pos.iter().all(|g| s.contains(g)) && task.goal_neg.iter().all(|g| !s.contains(g))
}

/// Optimal plan length by breadth-first search over the full state space.
/// `Err(())` when more than `limit` states are reachable.
pub fn bfs_optimal(task: &GroundTask, limit: usize) -> Result<Option<usize>, ()> {
    let init: Set = task.init.iter().copied().collect();
    let mut seen: HashMap<Set, usize> = HashMap::new();
    seen.insert(init.clone(), 0);
    let mut q = VecDeque::from([init]);
    while let Some(s) = q.pop_front() {
        let d = seen[&s];
        if goal_holds(task, &s) {
            return Ok(Some(d));
        }
        for a in &task.actions {
            if holds(&s, a) {
                let t = step(&s, a);
                if !seen.contains_key(&t) {
                    if seen.len() >= limit {
                        return Err(());
                    }
                    seen.insert(t.clone(), d + 1);
                    q.push_back(t);
                }
            }
        }
    }
    Ok(None)
}

/// Every state reachable from init.
pub fn reachable_states(task: &GroundTask, limit: usize) -> Option<HashSet<Set>> {
    let init: Set = task.init.iter().copied().collect();
    let mut seen = HashSet::from([init.clone()]);
    let mut q = VecDeque::from([init]);
    while let Some(s) = q.pop_front() {
        for a in &task.actions {
            if holds(&s, a) {
                let t = step(&s, a);
                if seen.insert(t.clone()) {
                    if seen.len() > limit {
                        return None;
                    }
                    q.push_back(t);
                }
            }
        }
    }
    Some(seen)
}

/// Optimal delete-relaxed plan length from `state` (positive preconditions
/// and positive goals only), by breadth-first search over reached-atom sets.
pub fn h_plus(task: &GroundTask, state: &Set) -> Option<usize> {
    let goal_ok = |s: &Set| task.goal_pos.iter().all(|g| s.contains(g));
    let mut seen = HashSet::from([state.clone()]);
    let mut q = VecDeque::from([(state.clone(), 0usize)]);
    while let Some((s, d)) = q.pop_front() {
        if goal_ok(&s) {
            return Some(d);
        }
        for a in &task.actions {
            if a.pre_pos.iter().all(|p| s.contains(p)) {
                let mut t = s.clone();
                t.extend(a.add.iter().copied());
                if seen.insert(t.clone()) {
                    q.push_back((t, d + 1));
                }
            }
        }
    }
    None
}

/// Random propositional task over `n_atoms` nullary atoms.
pub fn random_task(rng: &mut impl Rng, n_atoms: usize, n_actions: usize) -> GroundTask {
    random_task_with(rng, n_atoms, n_actions, 0.0)
}

/// As [`random_task`], with negative preconditions and negative goals drawn
/// with probability `neg_p` per atom.
pub fn random_task_with(rng: &mut impl Rng, n_atoms: usize, n_actions: usize, neg_p: f64) -> GroundTask {
    let predicates = (0..n_atoms).map(|i| PredicateSchema { name: format!("p{i}"), param_types: vec![] }).collect();
    let atoms = (0..n_atoms).map(|i| GroundAtom { predicate: i, args: vec![] }).collect();
    let pick = |rng: &mut dyn rand::RngCore, p: f64| -> Vec<usize> { (0..n_atoms).filter(|_| rng.gen_bool(p)).collect() };
    let mut actions = Vec::new();
    for k in 0..n_actions {
        let pre_pos = pick(rng, 0.2);
        let add: Vec<usize> = pick(rng, 0.2).into_iter().filter(|a| !pre_pos.contains(a)).collect();
        let del: Vec<usize> = pick(rng, 0.15).into_iter().filter(|a| !add.contains(a)).collect();
        let pre_neg: Vec<usize> = pick(rng, neg_p).into_iter().filter(|a| !pre_pos.contains(a)).collect();
        actions.push(GroundAction { schema: format!("a{k}"), args: vec![], pre_pos, pre_neg, add, del, cost: 1.0 });
    }
    let init = pick(rng, 0.3);
    let goal: Vec<usize> = pick(rng, 0.3);
    let goal_neg: Vec<usize> = pick(rng, neg_p).into_iter().filter(|a| !goal.contains(a)).collect();
    GroundTask::from_parts(
        "random",
        predicates,
        Vec::<TaskObject>::new(),
        atoms,
        actions,
        init,
        goal,
        goal_neg,
    )
}

/// Blocks problem text where each tower is listed bottom to top.
pub fn blocks_problem(init: &[&[&str]], goal: &[(&str, &str)]) -> String {
    let mut names: Vec<&str> = init.iter().flat_map(|t| t.iter().copied()).collect();
    names.sort();
    let mut facts = vec!["(arm-empty)".to_string()];
    for tower in init {
        facts.push(format!("(on-table {})", tower[0]));
        for w in tower.windows(2) {
            facts.push(format!("(on {} {})", w[1], w[0]));
        }
        facts.push(format!("(clear {})", tower[tower.len() - 1]));
    }
    let goal: Vec<String> = goal.iter().map(|(x, y)| format!("(on {x} {y})")).collect();
    format!(
        "(define (problem t) (:domain blocks) (:objects {} - block) (:init {}) (:goal (and {})))",
        names.join(" "),
        facts.join(" "),
        goal.join(" ")
    )
}
