use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{baseline_knn_scores, baseline_random_scores, CorpusEntry, Guidance, Report, RunConfig, Status, TaskResult};
use crate::guidance::{plan_with_guidance, plan_with_scores, GuidanceModel, GuidedResult};
use crate::pddl::{load_task_text, validate_problem, GroundTask};
use crate::planner::{search, Outcome, SearchResult};

/// A loaded task, or the status it gets without running.
type Prepared = Result<GroundTask, Status>;

fn prepare(entry: &CorpusEntry) -> Prepared {
    let (d, p) = entry.source.texts().map_err(|e| Status::Error(e.to_string()))?;
    let task = load_task_text(&d, &p).map_err(|e| Status::IllPosed(format!("ill-formed: {e}")))?.2;
    let status = validate_problem(&task);
    if !status.is_well_posed() {
        return Err(Status::IllPosed(status.label().to_string()));
    }
    Ok(task)
}

fn outcome_status(o: &Outcome) -> Status {
    match o {
        Outcome::Solved(_) => Status::Solved,
        Outcome::Unsolvable => Status::Unsolvable,
        Outcome::Timeout => Status::Timeout,
    }
}

fn unguided(r: SearchResult, n: usize) -> GuidedResult {
    GuidedResult { result: r, rounds_used: 0, objects_kept: vec![n], fell_back: true }
}

/// Runs one well-posed task under `config`. `stream` selects the task's
/// random stream for the Random baseline.
pub fn run_task(entry: &CorpusEntry, task: &GroundTask, config: &RunConfig, model: Option<&GuidanceModel>, seed: u64, stream: u64) -> TaskResult {
    let mut search_cfg = config.search;
    search_cfg.timeout = config.timeout;
    let start = Instant::now();
    let n = task.objects.len();
    let guided = match &config.guidance {
        Guidance::None => Ok(unguided(search(task, &search_cfg), n)),
        Guidance::Model(path) => match model {
            Some(m) => plan_with_guidance(task, m, entry.coords.as_ref(), &search_cfg, &config.abstraction).map_err(|e| e.to_string()),
            None => Err(format!("model {} not loaded", path.display())),
        },
        Guidance::Random(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s ^ seed.rotate_left(32));
            rng.set_stream(stream);
            let scores = baseline_random_scores(task, &mut rng);
            plan_with_scores(task, &scores, &search_cfg, &config.abstraction).map_err(|e| e.to_string())
        }
        Guidance::Knn(k) => match &entry.coords {
            Some(c) => baseline_knn_scores(task, c, *k)
                .map_err(|e| e.to_string())
                .and_then(|s| plan_with_scores(task, &s, &search_cfg, &config.abstraction).map_err(|e| e.to_string())),
            None => Err("KNN guidance needs coordinates".to_string()),
        },
    };
    let wall_seconds = start.elapsed().as_secs_f64();
    let base = TaskResult {
        id: entry.id.clone(),
        config: config.name.clone(),
        category: entry.category.clone(),
        split: entry.split.clone(),
        status: Status::Error(String::new()),
        wall_seconds,
        plan_length: None,
        backoff_rounds: 0,
        objects_kept: None,
    };
    match guided {
        Ok(g) => TaskResult {
            status: outcome_status(&g.result.outcome),
            plan_length: g.result.plan().map(|p| p.len()),
            backoff_rounds: g.rounds_used,
            objects_kept: Some(if g.fell_back { n } else { g.objects_kept.last().copied().unwrap_or(n) }),
            ..base
        },
        Err(e) => TaskResult { status: Status::Error(e), ..base },
    }
}

fn not_run(entry: &CorpusEntry, config: &RunConfig, status: Status) -> TaskResult {
    TaskResult {
        id: entry.id.clone(),
        config: config.name.clone(),
        category: entry.category.clone(),
        split: entry.split.clone(),
        status,
        wall_seconds: 0.0,
        plan_length: None,
        backoff_rounds: 0,
        objects_kept: None,
    }
}

/// Runs every (task, config) pair. Tasks are parsed and classified once;
/// ill-posed ones get the same status under every config. Each config uses
/// its own worker count. Results are ordered by config, then corpus order.
pub fn run_corpus(corpus: &super::Corpus, configs: &[RunConfig], seed: u64) -> Report {
    let prepared: Vec<Prepared> = corpus.entries().iter().map(prepare).collect();
    let mut results = Vec::with_capacity(corpus.len() * configs.len());
    for config in configs {
        let model = match &config.guidance {
            Guidance::Model(path) => match GuidanceModel::load(path) {
                Ok(m) => Some(m),
                Err(e) => {
                    let status = Status::Error(format!("{}: {e}", path.display()));
                    results.extend(corpus.entries().iter().map(|en| not_run(en, config, status.clone())));
                    continue;
                }
            },
            _ => None,
        };
        let slots: Vec<Mutex<Option<TaskResult>>> = (0..corpus.len()).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let work = || loop {
            let i = next.fetch_add(1, Ordering::Relaxed);
            if i >= corpus.len() {
                break;
            }
            let entry = &corpus.entries()[i];
            let r = match &prepared[i] {
                Ok(task) => run_task(entry, task, config, model.as_ref(), seed, i as u64),
                Err(s) => not_run(entry, config, s.clone()),
            };
            *slots[i].lock().expect("result slot") = Some(r);
        };
        let workers = config.parallelism.max(1).min(corpus.len().max(1));
        if workers == 1 {
            work();
        } else {
            std::thread::scope(|s| {
                for _ in 0..workers {
                    s.spawn(work);
                }
            });
        }
        results.extend(slots.into_iter().map(|m| m.into_inner().expect("result slot").expect("every task ran")));
    }
    Report::from_results(results)
}
