//! End-to-end acceptance suite. Run with
//! `cargo test -p relplan --test acceptance [N ...]` to select criteria.

mod common;

use std::time::Instant;

use common::{bfs_optimal, h_plus, random_task};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relplan::bench::*;
use relplan::datagen::*;
use relplan::fixtures::{BLOCKS_DOMAIN, HOUSEHOLD_DOMAIN};
use relplan::guidance::*;
use relplan::nnet::{grad_check, Tensor};
use relplan::pddl::{load_task_text, validate_problem, GroundTask, ProblemStatus};
use relplan::planner::*;
use relplan::regress::RegressConfig;

struct Instance {
    task: GroundTask,
    coords: Coords,
}

fn blocks(spec: &BlocksSpec) -> Instance {
    let g = gen_blocks(spec);
    let task = load_task_text(BLOCKS_DOMAIN, &g.problem.to_string()).unwrap().2;
    Instance { task, coords: g.coords.unwrap() }
}

fn enhanced(timeout: f64) -> SearchConfig {
    SearchConfig::enhanced_gbfs(timeout)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Wall time of `f`, with the solved flag it returns.
fn timed(f: impl FnOnce() -> bool) -> (bool, f64) {
    let t = Instant::now();
    let ok = f();
    (ok, t.elapsed().as_secs_f64())
}

/// Median wall time of three runs of `f`; solved iff every run solved.
fn timed3(f: impl Fn() -> bool) -> (bool, f64) {
    let runs: Vec<(bool, f64)> = (0..3).map(|_| timed(&f)).collect();
    (runs.iter().all(|r| r.0), median(&runs.iter().map(|r| r.1).collect::<Vec<_>>()))
}

fn dataset(items: &[Instance], labels: &[Vec<f64>], schema: &FeatureSchema) -> Vec<TrainingExample> {
    items
        .iter()
        .zip(labels)
        .map(|(i, l)| TrainingExample { graph: encode_problem(&i.task, schema, Some(&i.coords)).unwrap(), labels: l.clone() })
        .collect()
}

fn fit(kind: EncoderKind, schema: &FeatureSchema, data: &[TrainingExample]) -> GuidanceModel {
    train(GuidanceModel::default_for(kind, schema.clone(), 0), data, &TrainConfig::default()).unwrap().0
}

/// The §4.2.2 corpora: 40 training tasks of 10–15 objects with greedy labels
/// and 10 test tasks of 15–55 objects.
struct Protocol {
    train: Vec<Instance>,
    greedy: Vec<Vec<f64>>,
    test: Vec<Instance>,
    schema: FeatureSchema,
    ploi: GuidanceModel,
}

fn protocol() -> Protocol {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut train_set, mut greedy) = (Vec::new(), Vec::new());
    for i in 0..40 {
        let total = rng.gen_range(10..=15);
        let nb = rng.gen_range(5..=8);
        let ng = rng.gen_range(3..=nb.min(6));
        let inst = blocks(&BlocksSpec::new(nb, ng, total - nb, 1000 + i));
        let l = label_greedy(&inst.task, &GreedyConfig::default(), &mut rng, i, None).unwrap();
        greedy.push(l.vector(&inst.task));
        train_set.push(inst);
    }
    let mut test = Vec::new();
    for i in 0..10 {
        let total = rng.gen_range(15..=55);
        let nb = rng.gen_range(8..=12);
        let ng = rng.gen_range(5..=8);
        test.push(blocks(&BlocksSpec::new(nb, ng, total - nb, 5000 + i)));
    }
    let schema = FeatureSchema::from_task(&train_set[0].task, SpatialMode::AllEdges);
    let ploi = fit(EncoderKind::PloiMP, &schema, &dataset(&train_set, &greedy, &schema));
    Protocol { train: train_set, greedy, test, schema, ploi }
}

/// Ten tasks of 130–140 objects whose goal spans 20–25 blocks.
fn big_tasks() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    (0..10)
        .map(|i| {
            let total = rng.gen_range(130..=140);
            let ng = rng.gen_range(20..=25);
            let nb = ng + rng.gen_range(4..=8);
            let mut spec = BlocksSpec::new(nb, ng, total - nb, 9000 + i);
            spec.max_goal_height = 2;
            blocks(&spec)
        })
        .collect()
}

struct Ctx {
    protocol: Option<Protocol>,
    big: Option<Vec<Instance>>,
}

impl Ctx {
    fn protocol(&mut self) -> &Protocol {
        self.protocol.get_or_insert_with(|| {
            let t = Instant::now();
            let p = protocol();
            println!("    protocol corpora labelled and PloiMP trained in {:.1}s", t.elapsed().as_secs_f64());
            p
        })
    }

    fn big(&mut self) -> &[Instance] {
        self.big.get_or_insert_with(big_tasks)
    }
}

type Outcome = (bool, String);

fn crit1(_: &mut Ctx) -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut mismatches, mut invalid, mut n) = (0, 0, 0);
    for seed in 0..200 {
        let nb = rng.gen_range(2..=6);
        let ng = rng.gen_range(1..=nb);
        let d = rng.gen_range(0..=1);
        let inst = blocks(&BlocksSpec::new(nb, ng, d, seed));
        let opt = bfs_optimal(&inst.task, 100_000).expect("state space within 1e5");
        let r = search(&inst.task, &SearchConfig::uniform_cost(60.0));
        if r.plan().map(|p| p.len()) != opt {
            mismatches += 1;
        }
        for cfg in [r.clone(), search(&inst.task, &SearchConfig::gbfs_ff(60.0)), search(&inst.task, &enhanced(60.0))] {
            if let Some(p) = cfg.plan() {
                if !validate_plan(&inst.task, p) {
                    invalid += 1;
                }
            }
        }
        n += 1;
    }
    let secs = t.elapsed().as_secs_f64();
    (mismatches == 0 && invalid == 0 && secs < 300.0, format!("{n} tasks, {mismatches} length mismatches, {invalid} invalid plans, {secs:.1}s"))
}

fn crit2(_: &mut Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    for _ in 0..100 {
        let n = rng.gen_range(3..=12);
        let m = rng.gen_range(1..=10);
        let t = random_task(&mut rng, n, m);
        let s = State::initial(&t);
        let (hmax, hadd, hff) = (h_max(&s, &t), h_add(&s, &t), h_ff(&s, &t));
        let ok = match h_plus(&t, &t.init.iter().copied().collect()) {
            None => hmax.is_infinite() && hadd.is_infinite() && hff.is_infinite(),
            Some(hp) => {
                let hp = hp as f64;
                hmax <= hp && hp <= hadd && hp <= hff
            }
        };
        violations += usize::from(!ok);
    }
    (violations == 0, format!("100 tasks, {violations} violations"))
}

fn crit3(_: &mut Ctx) -> Outcome {
    let mut worst = [0.0f64; 2];
    for (k, kind) in [EncoderKind::PloiMP, EncoderKind::Gat].into_iter().enumerate() {
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(3..=10);
            let inst = blocks(&BlocksSpec::new(n, rng.gen_range(1..=n), 0, seed));
            let schema = FeatureSchema::from_task(&inst.task, SpatialMode::AllEdges);
            let graph = encode_problem(&inst.task, &schema, Some(&inst.coords)).unwrap();
            let labels = (0..graph.n_nodes).map(|_| f64::from(rng.gen_bool(0.5))).collect();
            let model = GuidanceModel::new(kind, schema, 2, 8, seed);
            let ex = TrainingExample { graph, labels };
            let g = grad_check(example_program(&model, &ex, rng.gen_range(0.1..0.9)), &model.params, 1e-5).unwrap();
            worst[k] = worst[k].max(g.max_rel_error);
        }
    }
    (worst[0] < 1e-4 && worst[1] < 1e-4, format!("max relative error PloiMP {:.2e}, GAT {:.2e}", worst[0], worst[1]))
}

fn crit4(_: &mut Ctx) -> Outcome {
    let ds = [0usize, 10, 25, 50];
    let mut medians = Vec::new();
    for &d in &ds {
        let times: Vec<f64> = (0..20)
            .map(|seed| {
                let inst = blocks(&BlocksSpec::new(10, 10, d, 100 + seed));
                timed(|| search(&inst.task, &enhanced(60.0)).is_solved()).1
            })
            .collect();
        medians.push(median(&times));
    }
    let monotone = medians.windows(2).all(|w| w[0] <= w[1]);
    let ratio = medians[3] / medians[0];
    let shown: Vec<String> = ds.iter().zip(&medians).map(|(d, m)| format!("d={d}: {m:.4}s")).collect();
    (monotone && ratio >= 3.0, format!("medians {}, t50/t0 {ratio:.1}", shown.join(", ")))
}

fn crit5(ctx: &mut Ctx) -> Outcome {
    let p = ctx.protocol();
    let (mut solved, mut tg, mut tu) = (0, Vec::new(), Vec::new());
    for inst in &p.test {
        let (ok, t) = timed3(|| plan_with_guidance(&inst.task, &p.ploi, Some(&inst.coords), &enhanced(60.0), &AbstractionConfig::default()).unwrap().result.is_solved());
        solved += usize::from(ok);
        tg.push(t);
        tu.push(timed3(|| search(&inst.task, &enhanced(60.0)).is_solved()).1);
    }
    let ratio = mean(&tg) / mean(&tu);
    (solved == 10 && ratio <= 0.5, format!("solved {solved}/10, mean guided {:.2}ms, unguided {:.2}ms, ratio {ratio:.3}", 1e3 * mean(&tg), 1e3 * mean(&tu)))
}

fn crit6(ctx: &mut Ctx) -> Outcome {
    let model = ctx.protocol().ploi.clone();
    let big = ctx.big();
    let (mut tm, mut tr, mut solved) = (Vec::new(), Vec::new(), [0, 0]);
    for (i, inst) in big.iter().enumerate() {
        let (ok, t) = timed(|| plan_with_guidance(&inst.task, &model, Some(&inst.coords), &enhanced(60.0), &AbstractionConfig::default()).unwrap().result.is_solved());
        solved[0] += usize::from(ok);
        tm.push(t);
        let (ok, t) = timed(|| {
            let scores = baseline_random_scores(&inst.task, &mut ChaCha8Rng::seed_from_u64(i as u64));
            plan_with_scores(&inst.task, &scores, &enhanced(60.0), &AbstractionConfig::default()).unwrap().result.is_solved()
        });
        solved[1] += usize::from(ok);
        tr.push(t);
    }
    let ratio = mean(&tm) / mean(&tr);
    (
        ratio <= 0.2,
        format!("model {:.2}s ({}/10 solved), random {:.2}s ({}/10 solved), ratio {ratio:.3}", mean(&tm), solved[0], mean(&tr), solved[1]),
    )
}

fn crit7(ctx: &mut Ctx) -> Outcome {
    let model = ctx.protocol().ploi.clone();
    let big = ctx.big();
    let ks = [25usize, 30, 50, 100, 135];
    let mut model_rate = [0usize; 5];
    let mut random50 = 0;
    for (i, inst) in big.iter().enumerate() {
        let scores = model.score(&encode_problem(&inst.task, &model.schema, Some(&inst.coords)).unwrap()).unwrap();
        for (j, &k) in ks.iter().enumerate() {
            let k = k.min(inst.task.objects.len());
            model_rate[j] += usize::from(plan_top_k(&inst.task, &scores, k, &enhanced(60.0)).is_ok_and(|r| r.is_solved()));
        }
        let rs = baseline_random_scores(&inst.task, &mut ChaCha8Rng::seed_from_u64(i as u64));
        random50 += usize::from(plan_top_k(&inst.task, &rs, 50, &enhanced(60.0)).is_ok_and(|r| r.is_solved()));
    }
    let monotone = model_rate.windows(2).all(|w| w[0] <= w[1]);
    let shown: Vec<String> = ks.iter().zip(&model_rate).map(|(k, s)| format!("K{k} {s}/10")).collect();
    (
        monotone && model_rate[2] >= 8 && 2 * random50 <= model_rate[2],
        format!("model {}; random K50 {random50}/10", shown.join(", ")),
    )
}

fn crit8(_: &mut Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let t = Instant::now();
    let mut train_set = Vec::new();
    let (mut l50, mut l100) = (Vec::new(), Vec::new());
    for i in 0..12 {
        let total = rng.gen_range(105..=120);
        let nb = rng.gen_range(6..=10);
        let ng = rng.gen_range(3..=6);
        let inst = blocks(&BlocksSpec::new(nb, ng, total - nb, 8000 + i));
        let cfg = GreedyConfig::default();
        l50.push(label_greedy(&inst.task, &cfg, &mut ChaCha8Rng::seed_from_u64(i), i, Some(50)).unwrap().vector(&inst.task));
        l100.push(label_greedy(&inst.task, &cfg, &mut ChaCha8Rng::seed_from_u64(i), i, Some(100)).unwrap().vector(&inst.task));
        train_set.push(inst);
    }
    println!("    stop_at labels for 12 tasks in {:.1}s", t.elapsed().as_secs_f64());
    let schema = FeatureSchema::from_task(&train_set[0].task, SpatialMode::AllEdges);
    let m50 = fit(EncoderKind::PloiMP, &schema, &dataset(&train_set, &l50, &schema));
    let m100 = fit(EncoderKind::PloiMP, &schema, &dataset(&train_set, &l100, &schema));
    let eval: Vec<Instance> = [126usize, 136, 138, 152]
        .iter()
        .zip(8500..)
        .map(|(&total, seed)| {
            let ng = rng.gen_range(20..=25);
            let nb = ng + rng.gen_range(4..=8);
            let mut spec = BlocksSpec::new(nb, ng, total - nb, seed);
            spec.max_goal_height = 2;
            blocks(&spec)
        })
        .collect();
    let (mut t50, mut t100, mut solved) = (Vec::new(), Vec::new(), [0, 0]);
    for inst in &eval {
        for (m, ts, s) in [(&m50, &mut t50, 0), (&m100, &mut t100, 1)] {
            let (ok, secs) = timed(|| plan_with_guidance(&inst.task, m, Some(&inst.coords), &enhanced(60.0), &AbstractionConfig::default()).unwrap().result.is_solved());
            ts.push(secs);
            solved[s] += usize::from(ok);
        }
    }
    let ratio = mean(&t100) / mean(&t50);
    (
        ratio >= 2.0,
        format!("stop_at 50: {:.3}s ({}/4), stop_at 100: {:.3}s ({}/4), ratio {ratio:.1}", mean(&t50), solved[0], mean(&t100), solved[1]),
    )
}

fn crit9(ctx: &mut Ctx) -> Outcome {
    let p = ctx.protocol();
    let (mut fallbacks, mut differ) = (0, 0);
    let regr: Vec<Vec<f64>> = p
        .train
        .iter()
        .zip(&p.greedy)
        .map(|(inst, greedy)| match label_regression(&inst.task, &RegressConfig { timeout: 10.0, ..Default::default() }) {
            Ok(l) => {
                let v = l.vector(&inst.task);
                differ += usize::from(v != *greedy);
                v
            }
            Err(_) => {
                fallbacks += 1;
                greedy.clone()
            }
        })
        .collect();
    let gat_greedy = fit(EncoderKind::Gat, &p.schema, &dataset(&p.train, &p.greedy, &p.schema));
    let gat_regr = fit(EncoderKind::Gat, &p.schema, &dataset(&p.train, &regr, &p.schema));
    let one_shot = AbstractionConfig { one_shot: true, ..Default::default() };
    let solved = |m: &GuidanceModel| {
        p.test
            .iter()
            .filter(|i| plan_with_guidance(&i.task, m, Some(&i.coords), &enhanced(60.0), &one_shot).unwrap().result.is_solved())
            .count()
    };
    let (r, g) = (solved(&gat_regr), solved(&gat_greedy));
    (r >= g + 2, format!("one-shot solved: regression labels {r}/10, greedy labels {g}/10 ({fallbacks} of 40 regression labelings fell back to greedy, {differ} of the rest differ from greedy)"))
}

/// Every edge gets the same single feature.
fn uniform_edges(graph: &ProblemGraph) -> ProblemGraph {
    ProblemGraph { edge_features: Tensor::matrix(graph.n_edges(), 1, vec![1.0; graph.n_edges()]), ..graph.clone() }
}

fn crit10(ctx: &mut Ctx) -> Outcome {
    let p = ctx.protocol();
    let schema = FeatureSchema { binary: Vec::new(), spatial: SpatialMode::AllEdges, ..p.schema.clone() };
    let data: Vec<TrainingExample> = dataset(&p.train, &p.greedy, &p.schema)
        .into_iter()
        .map(|ex| TrainingExample { graph: uniform_edges(&ex.graph), labels: ex.labels })
        .collect();
    let mut solved_sets = Vec::new();
    for kind in [EncoderKind::Gat, EncoderKind::PloiMP] {
        let model = fit(kind, &schema, &data);
        let set: Vec<usize> = p
            .test
            .iter()
            .enumerate()
            .filter(|(_, i)| {
                let graph = uniform_edges(&encode_problem(&i.task, &p.schema, Some(&i.coords)).unwrap());
                let scores = model.score(&graph).unwrap();
                plan_with_scores(&i.task, &scores, &enhanced(60.0), &AbstractionConfig::default()).unwrap().result.is_solved()
            })
            .map(|(j, _)| j)
            .collect();
        solved_sets.push(set);
    }
    (solved_sets[0] == solved_sets[1], format!("GAT solved {:?}, PloiMP solved {:?}", solved_sets[0], solved_sets[1]))
}

fn result(status: Status, secs: f64, len: Option<usize>) -> TaskResult {
    TaskResult {
        id: String::new(),
        config: "c".into(),
        category: String::new(),
        split: String::new(),
        status,
        wall_seconds: secs,
        plan_length: len,
        backoff_rounds: 0,
        objects_kept: len,
    }
}

fn crit11(_: &mut Ctx) -> Outcome {
    let rs = vec![
        result(Status::Solved, 0.5, Some(4)),
        result(Status::Solved, 1.5, Some(6)),
        result(Status::Solved, 4.0, Some(11)),
        result(Status::Timeout, 10.0, None),
        result(Status::Unsolvable, 0.25, None),
        result(Status::IllPosed("goal-true-at-init".into()), 0.0, None),
    ];
    let checks = [
        metric_tc(&rs) == Ok(0.6),
        metric_time(&rs) == Ok(2.0),
        metric_len(&rs) == Ok(7.0),
        metric_tc(&rs[3..]) == Ok(0.0),
        metric_time(&rs[3..]) == Err(BenchError::EmptyDenominator),
        metric_len(&rs[3..]) == Err(BenchError::EmptyDenominator),
        metric_tc(&rs[5..]) == Err(BenchError::EmptyDenominator),
        metric_tc(&rs[..1]) == Ok(1.0),
    ];
    let failed = checks.iter().filter(|&&c| !c).count();
    (failed == 0, format!("{} checks, {failed} wrong", checks.len()))
}

fn crit12(_: &mut Ctx) -> Outcome {
    let mut means = Vec::new();
    let mut problems = Vec::new();
    for cat in CATEGORIES {
        let mut lens = Vec::new();
        for seed in 0..50u64 {
            let g = gen_household(&HouseholdSpec::new(cat, 3 + (seed as usize % 4), 5, seed)).unwrap();
            let t = load_task_text(HOUSEHOLD_DOMAIN, &g.problem.to_string()).unwrap().2;
            if validate_problem(&t) != ProblemStatus::WellPosed {
                problems.push(format!("{cat}/{seed} not well-posed"));
                continue;
            }
            let r = search(&t, &SearchConfig::gbfs_ff(10.0));
            match r.plan() {
                Some(p) if r.stats.wall_seconds <= 10.0 => lens.push(p.len() as f64),
                _ => problems.push(format!("{cat}/{seed} {}", r.status_label())),
            }
        }
        means.push((cat, mean(&lens)));
    }
    let m = |c: Category| means.iter().find(|(k, _)| *k == c).unwrap().1;
    let middle = [m(Category::PClP), m(Category::PCoP), m(Category::PHeP)];
    let (lo, hi) = (middle.iter().copied().fold(f64::INFINITY, f64::min), middle.iter().copied().fold(0.0, f64::max));
    let ordered = m(Category::LoiL) < m(Category::PaP) && m(Category::PaP) < lo && hi < m(Category::P2P) && hi - lo <= 1.0;
    let shown: Vec<String> = means.iter().map(|(c, v)| format!("{c} {v:.2}")).collect();
    let mut detail = format!("mean lengths {}", shown.join(", "));
    if !problems.is_empty() {
        detail += &format!("; {} failures: {}", problems.len(), problems.join(", "));
    }
    (problems.is_empty() && ordered, detail)
}

fn main() {
    let criteria: [(&str, fn(&mut Ctx) -> Outcome); 12] = [
        ("uniform-cost plans match the BFS oracle", crit1),
        ("heuristic dominance against exact h+", crit2),
        ("loss gradients match finite differences", crit3),
        ("planning time grows with distractors", crit4),
        ("guided planning on held-out Blocks tasks", crit5),
        ("trained guidance beats random guidance", crit6),
        ("top-K completion rates", crit7),
        ("stop_at 100 labels slow guided planning", crit8),
        ("regression labels help one-shot planning", crit9),
        ("GAT and PloiMP agree with uniform edges", crit10),
        ("metric formulas", crit11),
        ("household tasks and plan lengths", crit12),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut ctx = Ctx { protocol: None, big: None };
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !selected.is_empty() && !selected.contains(&(i + 1)) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = f(&mut ctx);
        failed += usize::from(!ok);
        println!("criterion {:>2} {:<44} {} ({detail}; {:.1}s)", i + 1, name, if ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
