use std::time::{Duration, Instant};

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use super::{encode_problem, Coords, GuidanceError, GuidanceModel, ImportanceScores};
use crate::pddl::GroundTask;
use crate::planner::{search_until, validate_plan, Outcome, Plan, SearchConfig, SearchResult, SearchStats};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbstractionConfig {
    pub theta_obj: f64,
    pub theta_rel: f64,
    pub gamma: f64,
    pub max_rounds: usize,
    pub one_shot: bool,
    pub top_k: Option<usize>,
}

impl Default for AbstractionConfig {
    fn default() -> Self {
        AbstractionConfig { theta_obj: 0.9, theta_rel: 0.5, gamma: 0.9, max_rounds: 20, one_shot: false, top_k: None }
    }
}

pub const MIN_THRESHOLD: f64 = 1e-3;

impl AbstractionConfig {
    pub fn validate(&self) -> Result<(), GuidanceError> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(GuidanceError::InvalidConfig(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        for (name, t) in [("theta_obj", self.theta_obj), ("theta_rel", self.theta_rel)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(GuidanceError::InvalidConfig(format!("{name} {t} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// A projected task together with what was kept.
#[derive(Clone, Debug)]
pub struct Projection {
    pub task: GroundTask,
    /// Index in the original task of each projected action.
    pub origin: Vec<usize>,
    pub keep: Vec<bool>,
    /// Original init atoms removed by relation thresholding.
    pub dropped_init: Vec<usize>,
}

impl Projection {
    pub fn n_kept(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    pub fn is_identity(&self) -> bool {
        self.dropped_init.is_empty() && self.keep.iter().all(|&k| k)
    }

    /// Maps a plan of the projected task back to original action indices.
    pub fn lift(&self, plan: &Plan) -> Plan {
        Plan { steps: plan.steps.iter().map(|&a| self.origin[a]).collect() }
    }
}

fn project_keep(task: &GroundTask, keep: Vec<bool>, dropped_init: Vec<usize>) -> Projection {
    let (t, origin) = task.restrict(&keep, &dropped_init);
    Projection { task: t, origin, keep, dropped_init }
}

/// Keeps objects scored at least `theta_obj` plus every goal object; with
/// relation scores, also removes init binary atoms whose edge scores below
/// `theta_rel` (goal atoms are never removed).
pub fn project(task: &GroundTask, scores: &ImportanceScores, theta_obj: f64, theta_rel: f64) -> Projection {
    let mut keep: Vec<bool> = scores.object_scores.iter().map(|&s| s >= theta_obj).collect();
    keep.resize(task.objects.len(), true);
    for g in task.goal_objects() {
        keep[g] = true;
    }
    let mut dropped = Vec::new();
    if let Some(rel) = &scores.relation_scores {
        let by_edge: FxHashMap<(usize, usize), f64> = scores.edges.iter().copied().zip(rel.iter().copied()).collect();
        let goal: FxHashSet<usize> = task.goal_pos.iter().chain(&task.goal_neg).copied().collect();
        for &a in &task.init {
            let atom = &task.atoms[a];
            if atom.args.len() != 2 || goal.contains(&a) || !keep[atom.args[0]] || !keep[atom.args[1]] {
                continue;
            }
            if let Some(&s) = by_edge.get(&(atom.args[0], atom.args[1])) {
                if s < theta_rel {
                    dropped.push(a);
                }
            }
        }
    }
    project_keep(task, keep, dropped)
}

pub fn abstract_task(task: &GroundTask, scores: &ImportanceScores, theta_obj: f64, theta_rel: f64) -> GroundTask {
    project(task, scores, theta_obj, theta_rel).task
}

#[derive(Clone, Debug, PartialEq)]
pub struct GuidedResult {
    pub result: SearchResult,
    /// Planning attempts on abstractions.
    pub rounds_used: usize,
    pub objects_kept: Vec<usize>,
    /// Whether the final answer came from planning on the full task.
    pub fell_back: bool,
}

fn add_stats(acc: &mut SearchStats, s: &SearchStats) {
    acc.expanded += s.expanded;
    acc.generated += s.generated;
    acc.evaluations += s.evaluations;
}

fn attempt(task: &GroundTask, p: &Projection, cfg: &SearchConfig, deadline: Instant, stats: &mut SearchStats) -> Option<Outcome> {
    let r = search_until(&p.task, cfg, deadline);
    add_stats(stats, &r.stats);
    match r.outcome {
        Outcome::Solved(plan) => {
            let lifted = p.lift(&plan);
            validate_plan(task, &lifted).then_some(Outcome::Solved(lifted))
        }
        Outcome::Timeout => Some(Outcome::Timeout),
        Outcome::Unsolvable => None,
    }
}

fn finish(outcome: Outcome, mut stats: SearchStats, start: Instant, rounds_used: usize, objects_kept: Vec<usize>, fell_back: bool) -> GuidedResult {
    stats.wall_seconds = start.elapsed().as_secs_f64();
    GuidedResult { result: SearchResult { outcome, stats }, rounds_used, objects_kept, fell_back }
}

fn loop_from(task: &GroundTask, scores: &ImportanceScores, cfg: &SearchConfig, acfg: &AbstractionConfig, start: Instant) -> Result<GuidedResult, GuidanceError> {
    acfg.validate()?;
    let deadline = start + Duration::from_secs_f64(cfg.timeout.max(0.0));
    if let Some(k) = acfg.top_k {
        let p = top_k_projection(task, scores, k)?;
        let mut stats = SearchStats::default();
        let kept = vec![p.n_kept()];
        let out = attempt(task, &p, cfg, deadline, &mut stats).unwrap_or(Outcome::Unsolvable);
        return Ok(finish(out, stats, start, 1, kept, false));
    }
    let mut stats = SearchStats::default();
    let (mut to, mut tr) = (acfg.theta_obj, acfg.theta_rel);
    let mut last: Option<(Vec<bool>, Vec<usize>)> = None;
    let mut kept = Vec::new();
    while kept.len() < acfg.max_rounds && to >= MIN_THRESHOLD {
        let p = project(task, scores, to, tr);
        let same = last.as_ref().is_some_and(|(k, d)| *k == p.keep && *d == p.dropped_init);
        if !same {
            if p.is_identity() && !acfg.one_shot {
                break;
            }
            if Instant::now() >= deadline {
                return Ok(finish(Outcome::Timeout, stats, start, kept.len(), kept, false));
            }
            kept.push(p.n_kept());
            if let Some(out) = attempt(task, &p, cfg, deadline, &mut stats) {
                let n = kept.len();
                return Ok(finish(out, stats, start, n, kept, false));
            }
            if acfg.one_shot {
                let n = kept.len();
                return Ok(finish(Outcome::Unsolvable, stats, start, n, kept, false));
            }
            last = Some((p.keep, p.dropped_init));
        }
        to *= acfg.gamma;
        tr *= acfg.gamma;
    }
    if acfg.one_shot && kept.is_empty() {
        return Ok(finish(Outcome::Unsolvable, stats, start, 0, kept, false));
    }
    let r = search_until(task, cfg, deadline);
    add_stats(&mut stats, &r.stats);
    let n = kept.len();
    Ok(finish(r.outcome, stats, start, n, kept, true))
}

/// The backoff loop of [`plan_with_guidance`] driven by precomputed scores.
/// Every reported plan has been validated on `task`.
pub fn plan_with_scores(task: &GroundTask, scores: &ImportanceScores, cfg: &SearchConfig, acfg: &AbstractionConfig) -> Result<GuidedResult, GuidanceError> {
    loop_from(task, scores, cfg, acfg, Instant::now())
}

/// Scores the task once, then plans on successively larger abstractions
/// until one yields a plan that is valid on the original task. The timeout
/// of `cfg` bounds the whole pipeline, scoring included.
pub fn plan_with_guidance(
    task: &GroundTask,
    model: &GuidanceModel,
    coords: Option<&Coords>,
    cfg: &SearchConfig,
    acfg: &AbstractionConfig,
) -> Result<GuidedResult, GuidanceError> {
    let start = Instant::now();
    let graph = encode_problem(task, &model.schema, coords)?;
    let scores = model.score(&graph)?;
    loop_from(task, &scores, cfg, acfg, start)
}

fn top_k_projection(task: &GroundTask, scores: &ImportanceScores, k: usize) -> Result<Projection, GuidanceError> {
    let goal = task.goal_objects();
    if k < goal.len() {
        return Err(GuidanceError::KTooSmall { k, goal_objects: goal.len() });
    }
    let n = task.objects.len();
    let mut keep = vec![false; n];
    goal.iter().for_each(|&g| keep[g] = true);
    let mut rest: Vec<usize> = (0..n).filter(|&i| !keep[i]).collect();
    let score = |i: usize| scores.object_scores.get(i).copied().unwrap_or(0.0);
    rest.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    for &i in rest.iter().take(k - goal.len()) {
        keep[i] = true;
    }
    Ok(project_keep(task, keep, Vec::new()))
}

/// One planning attempt on the goal objects plus the best-scored objects,
/// `k` in total.
pub fn plan_top_k(task: &GroundTask, scores: &ImportanceScores, k: usize, cfg: &SearchConfig) -> Result<SearchResult, GuidanceError> {
    let acfg = AbstractionConfig { top_k: Some(k), ..Default::default() };
    Ok(plan_with_scores(task, scores, cfg, &acfg)?.result)
}
