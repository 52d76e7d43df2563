use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DatagenError;
use crate::pddl::GroundTask;
use crate::planner::{search, validate_plan, Plan, SearchConfig};
use crate::regress::{regression_search_with, RegressConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Provenance {
    GreedyRandom {
        seed: u64,
        search: SearchConfig,
        stop_at: Option<usize>,
        first_failure: bool,
        repeats: usize,
        /// Set when regression labelling failed and greedy labels were used instead.
        #[serde(default)]
        regression_fallback: bool,
    },
    RegressionTrajectory {
        plan_length: usize,
    },
}

/// Object name to 0/1 label, plus how it was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Labeling {
    pub labels: BTreeMap<String, u8>,
    pub provenance: Provenance,
}

impl Labeling {
    pub fn positives(&self) -> Vec<&str> {
        self.labels.iter().filter(|(_, &v)| v == 1).map(|(k, _)| k.as_str()).collect()
    }

    /// Labels as 0.0/1.0 in task object order; unknown objects count as 0.
    pub fn vector(&self, task: &GroundTask) -> Vec<f64> {
        task.objects.iter().map(|o| f64::from(self.labels.get(&o.name).copied().unwrap_or(0))).collect()
    }

    fn from_mask(task: &GroundTask, keep: &[bool], provenance: Provenance) -> Labeling {
        let labels = task.objects.iter().zip(keep).map(|(o, &k)| (o.name.clone(), u8::from(k))).collect();
        Labeling { labels, provenance }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub search: SearchConfig,
    /// Stop at the first failed removal instead of trying the other candidates.
    pub first_failure: bool,
    /// Independent runs; the smallest positive set wins.
    pub repeats: usize,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig { search: SearchConfig::enhanced_gbfs(10.0), first_failure: false, repeats: 1 }
    }
}

/// True iff the validating planner solves the projection onto `keep` with a
/// plan that is also valid on `task`.
pub fn solvable_with(task: &GroundTask, keep: &[bool], cfg: &SearchConfig) -> bool {
    let (sub, origin) = task.restrict(keep, &[]);
    match search(&sub, cfg).plan() {
        Some(p) => validate_plan(task, &Plan { steps: p.steps.iter().map(|&a| origin[a]).collect() }),
        None => false,
    }
}

fn greedy_once(task: &GroundTask, cfg: &GreedyConfig, rng: &mut impl Rng, stop_at: Option<usize>) -> Vec<bool> {
    let n = task.objects.len();
    let mut keep = vec![true; n];
    let goal = task.goal_objects();
    let mut pool: Vec<usize> = (0..n).filter(|i| goal.binary_search(i).is_err()).collect();
    let mut failed: Vec<usize> = Vec::new();
    let mut kept = n;
    loop {
        let mut removed_any = false;
        while !pool.is_empty() {
            if stop_at.is_some_and(|s| kept <= s) {
                return keep;
            }
            let o = pool.swap_remove(rng.gen_range(0..pool.len()));
            keep[o] = false;
            if solvable_with(task, &keep, &cfg.search) {
                kept -= 1;
                removed_any = true;
            } else {
                keep[o] = true;
                if cfg.first_failure {
                    return keep;
                }
                failed.push(o);
            }
        }
        if !removed_any || failed.is_empty() {
            return keep;
        }
        failed.sort_unstable();
        pool.append(&mut failed);
    }
}

/// Greedy sufficient-object-set search: repeatedly drop a uniformly random
/// non-goal object and keep the removal if the validating planner still
/// succeeds. Positives are the objects left.
pub fn label_greedy(
    task: &GroundTask,
    cfg: &GreedyConfig,
    rng: &mut impl Rng,
    seed: u64,
    stop_at: Option<usize>,
) -> Result<Labeling, DatagenError> {
    let all = vec![true; task.objects.len()];
    if !solvable_with(task, &all, &cfg.search) {
        return Err(DatagenError::BaseUnsolvable(task.name.clone()));
    }
    let mut best: Option<Vec<bool>> = None;
    for _ in 0..cfg.repeats.max(1) {
        let keep = greedy_once(task, cfg, rng, stop_at);
        let count = |k: &Vec<bool>| k.iter().filter(|&&x| x).count();
        if best.as_ref().is_none_or(|b| count(&keep) < count(b)) {
            best = Some(keep);
        }
    }
    let provenance = Provenance::GreedyRandom {
        seed,
        search: cfg.search,
        stop_at,
        first_failure: cfg.first_failure,
        repeats: cfg.repeats.max(1),
        regression_fallback: false,
    };
    Ok(Labeling::from_mask(task, &best.expect("at least one repeat"), provenance))
}

/// Positives are the goal objects and every object an action in the
/// regression plan takes as an argument.
pub fn label_regression(task: &GroundTask, cfg: &RegressConfig) -> Result<Labeling, DatagenError> {
    let r = regression_search_with(task, cfg);
    let plan = r.plan().ok_or_else(|| DatagenError::RegressionFailed(format!("{}: {}", task.name, r.status_label())))?;
    let mut keep = vec![false; task.objects.len()];
    for g in task.goal_objects() {
        keep[g] = true;
    }
    for &a in &plan.steps {
        for &o in &task.actions[a].args {
            keep[o] = true;
        }
    }
    Ok(Labeling::from_mask(task, &keep, Provenance::RegressionTrajectory { plan_length: plan.len() }))
}
