mod common;

use common::blocks_problem;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relplan::datagen::{gen_blocks, BlocksSpec};
use relplan::fixtures::{BLOCKS_DOMAIN, HOUSEHOLD_DOMAIN};
use relplan::guidance::*;
use relplan::nnet::{evaluate_with_gradients, forward_mlp, grad_check, Tensor};
use relplan::pddl::{load_task_text, parse_domain, GroundTask};
use relplan::planner::{search, validate_plan, Outcome, SearchConfig};

fn task(init: &[&[&str]], goal: &[(&str, &str)]) -> GroundTask {
    load_task_text(BLOCKS_DOMAIN, &blocks_problem(init, goal)).unwrap().2
}

fn obj(t: &GroundTask, name: &str) -> usize {
    t.objects.iter().position(|o| o.name == name).unwrap()
}

fn generated(n: usize, g: usize, d: usize, seed: u64) -> (GroundTask, Coords) {
    let gp = gen_blocks(&BlocksSpec::new(n, g, d, seed));
    let t = load_task_text(BLOCKS_DOMAIN, &gp.problem.to_string()).unwrap().2;
    (t, gp.coords.unwrap())
}

fn zeroed(mut m: GuidanceModel) -> GuidanceModel {
    m.params = m.params.zeros_like();
    m
}

#[test]
fn goal_edge_carries_goal_indicator() {
    let t = task(&[&["a"], &["b"], &["c"]], &[("a", "b")]);
    let schema = FeatureSchema::from_task(&t, SpatialMode::Off);
    assert_eq!(schema.binary, vec!["on".to_string()]);
    let g = encode_problem(&t, &schema, None).unwrap();
    let (a, b) = (obj(&t, "a"), obj(&t, "b"));
    assert_eq!(g.edges(), vec![(a.min(b), a.max(b)), (a.max(b), a.min(b))]);
    let ab = g.edges().iter().position(|&e| e == (a, b)).unwrap();
    let ba = 1 - ab;
    // [on(s,r) init, on(s,r) goal, on(r,s) init, on(r,s) goal]
    assert_eq!(g.edge_features.row(ab), &[0.0, 1.0, 0.0, 0.0]);
    assert_eq!(g.edge_features.row(ba), &[0.0, 0.0, 0.0, 1.0]);
    let c = obj(&t, "c");
    assert!(!g.senders.contains(&c) && !g.receivers.contains(&c));
}

#[test]
fn spatial_attribute_is_manhattan_distance() {
    let t = task(&[&["a"], &["b"]], &[("a", "b")]);
    let mut coords = Coords::new();
    coords.insert("a".into(), (0, 0));
    coords.insert("b".into(), (2, 1));
    let schema = FeatureSchema::from_task(&t, SpatialMode::AllEdges);
    let g = encode_problem(&t, &schema, Some(&coords)).unwrap();
    assert_eq!(schema.edge_dim(), 5);
    for e in 0..g.n_edges() {
        assert_eq!(g.edge_features.get(e, 4), 3.0);
    }
    assert!(matches!(encode_problem(&t, &schema, None), Err(GuidanceError::MissingCoords(_))));
}

#[test]
fn goal_edges_mode_zeroes_init_only_edges() {
    let t = task(&[&["a", "b"], &["c"], &["d"]], &[("c", "d")]);
    let mut coords = Coords::new();
    for (n, xy) in [("a", (0, 0)), ("b", (0, 1)), ("c", (1, 0)), ("d", (4, 0))] {
        coords.insert(n.into(), xy);
    }
    let schema = FeatureSchema::from_task(&t, SpatialMode::GoalEdges);
    let g = encode_problem(&t, &schema, Some(&coords)).unwrap();
    let (a, c) = (obj(&t, "a"), obj(&t, "c"));
    for (e, (s, _)) in g.edges().into_iter().enumerate() {
        let expect = if s == a || s == obj(&t, "b") { 0.0 } else { 3.0 };
        assert_eq!(g.edge_features.get(e, 4), expect, "edge from {s}");
    }
    assert!(g.senders.contains(&c));
}

#[test]
fn no_binary_atoms_means_no_edges() {
    let text = "(define (problem p) (:domain blocks) (:objects a b - block)
        (:init (arm-empty) (on-table a) (on-table b) (clear a) (clear b)) (:goal (holding a)))";
    let t = load_task_text(BLOCKS_DOMAIN, text).unwrap().2;
    let schema = FeatureSchema::from_task(&t, SpatialMode::Off);
    let g = encode_problem(&t, &schema, None).unwrap();
    assert_eq!(g.n_nodes, 2);
    assert_eq!(g.n_edges(), 0);
    for kind in [EncoderKind::PloiMP, EncoderKind::Gat] {
        let s = GuidanceModel::default_for(kind, schema.clone(), 3).score(&g).unwrap();
        assert!(s.object_scores.iter().all(|&x| x > 0.0 && x < 1.0));
    }
}

#[test]
fn schema_from_other_domain_is_rejected() {
    let t = task(&[&["a"], &["b"]], &[("a", "b")]);
    let household = parse_domain(HOUSEHOLD_DOMAIN).unwrap();
    let schema = FeatureSchema::from_domain(&household, SpatialMode::Off);
    assert!(matches!(encode_problem(&t, &schema, None), Err(GuidanceError::SchemaMismatch { .. })));
    let blocks = FeatureSchema::from_domain(&parse_domain(BLOCKS_DOMAIN).unwrap(), SpatialMode::Off);
    assert_eq!(blocks, FeatureSchema::from_task(&t, SpatialMode::Off));
    assert_ne!(blocks.fingerprint(), schema.fingerprint());
}

#[test]
fn zero_parameters_score_one_half() {
    let (t, coords) = generated(6, 4, 3, 1);
    let schema = FeatureSchema::from_task(&t, SpatialMode::AllEdges);
    let g = encode_problem(&t, &schema, Some(&coords)).unwrap();
    let p = zeroed(GuidanceModel::default_for(EncoderKind::PloiMP, schema.clone(), 0));
    let s = forward_ploi(&p, &g).unwrap();
    assert!(s.object_scores.iter().all(|&x| x == 0.5));
    assert!(s.relation_scores.is_none());
    let a = zeroed(GuidanceModel::default_for(EncoderKind::Gat, schema, 0));
    let s = forward_gat(&a, &g).unwrap();
    assert!(s.object_scores.iter().all(|&x| x == 0.5));
    let rel = s.relation_scores.unwrap();
    assert_eq!(rel.len(), g.n_edges());
    assert!(rel.iter().all(|&x| x == 0.5));
    assert!(forward_gat(&p, &g).is_err());
    assert!(forward_ploi(&a, &g).is_err());
}

/// One GAT round computed with plain MLP evaluations and an unweighted mean.
fn mean_aggregation_oracle(model: &GuidanceModel, g: &relplan::guidance::ProblemGraph) -> Vec<f64> {
    let dv = g.node_features.cols();
    let de = g.edge_features.cols();
    let mut rows = Vec::new();
    for (e, (s, _)) in g.edges().into_iter().enumerate() {
        let mut x = g.node_features.row(s).to_vec();
        x.extend_from_slice(g.edge_features.row(e));
        rows.push(x);
    }
    let msg = forward_mlp(&model.params, "r0.msg", &Tensor::from_rows(&rows, dv + de)).unwrap();
    let h = msg.cols();
    let mut node_in = Vec::new();
    for i in 0..g.n_nodes {
        let incoming: Vec<usize> = (0..g.n_edges()).filter(|&e| g.receivers[e] == i).collect();
        let mut agg = vec![0.0; h];
        for &e in &incoming {
            agg.iter_mut().zip(msg.row(e)).for_each(|(a, m)| *a += m / incoming.len() as f64);
        }
        let mut x = g.node_features.row(i).to_vec();
        x.extend(agg);
        node_in.push(x);
    }
    let v = forward_mlp(&model.params, "r0.node", &Tensor::from_rows(&node_in, dv + h)).unwrap();
    let z = forward_mlp(&model.params, "head.node", &v).unwrap();
    z.data.iter().map(|z| 1.0 / (1.0 + (-z).exp())).collect()
}

#[test]
fn constant_attention_reduces_to_mean_aggregation() {
    let (t, coords) = generated(7, 5, 2, 4);
    let schema = FeatureSchema::from_task(&t, SpatialMode::AllEdges);
    let g = encode_problem(&t, &schema, Some(&coords)).unwrap();
    let mut m = GuidanceModel::new(EncoderKind::Gat, schema, 1, 8, 11);
    for v in &mut m.params.get_mut("r0.attn.W2").unwrap().data {
        *v = 0.0;
    }
    for c in [0.0, 3.5, -40.0] {
        m.params.get_mut("r0.attn.b2").unwrap().data[0] = c;
        let got = m.score(&g).unwrap().object_scores;
        let want = mean_aggregation_oracle(&m, &g);
        for (x, y) in got.iter().zip(&want) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }
}

#[test]
fn isolated_node_gets_interior_score() {
    let t = task(&[&["a"], &["b"], &["c"]], &[("a", "b")]);
    let schema = FeatureSchema::from_task(&t, SpatialMode::Off);
    let g = encode_problem(&t, &schema, None).unwrap();
    for kind in [EncoderKind::PloiMP, EncoderKind::Gat] {
        let s = GuidanceModel::default_for(kind, schema.clone(), 9).score(&g).unwrap();
        let c = s.object_scores[obj(&t, "c")];
        assert!(c > 0.0 && c < 1.0 && c.is_finite());
    }
}

#[test]
fn all_ones_keeps_the_task() {
    let t = task(&[&["a", "b"], &["c"], &["d"]], &[("b", "a"), ("a", "c")]);
    let scores = ImportanceScores::uniform(t.objects.len(), 1.0);
    let a = abstract_task(&t, &scores, 0.9, 0.5);
    assert_eq!(a.actions, t.actions);
    assert_eq!(a.atoms, t.atoms);
    assert_eq!(a.init, t.init);
    assert_eq!(a.goal_pos, t.goal_pos);
}

#[test]
fn goal_objects_survive_zero_scores() {
    let t = task(&[&["a"], &["b"], &["d"]], &[("a", "b")]);
    let a = abstract_task(&t, &ImportanceScores::uniform(t.objects.len(), 0.0), 0.9, 0.5);
    let names: Vec<&str> = a.objects.iter().map(|o| o.name.as_str()).collect();
    assert_eq!(names, vec!["a", "b"]);
}

#[test]
fn dropping_a_distractor_removes_exactly_its_actions() {
    let t = task(&[&["a", "b"], &["c"], &["d"]], &[("b", "c"), ("c", "a")]);
    let d = obj(&t, "d");
    let mentioning = t.actions.iter().filter(|a| a.args.contains(&d)).count();
    let mut s = vec![1.0; t.objects.len()];
    s[d] = 0.2;
    let a = abstract_task(&t, &ImportanceScores::objects_only(s), 0.9, 0.5);
    assert_eq!(a.actions.len(), t.actions.len() - mentioning);
    assert_eq!(mentioning, 2 + 4 * 3);
    let r = search(&a, &SearchConfig::default());
    assert!(r.is_solved());
}

fn relation_scores_for(t: &GroundTask, f: impl Fn(usize, usize) -> f64) -> ImportanceScores {
    let g = encode_problem(t, &FeatureSchema::from_task(t, SpatialMode::Off), None).unwrap();
    let edges = g.edges();
    ImportanceScores {
        object_scores: vec![1.0; t.objects.len()],
        relation_scores: Some(edges.iter().map(|&(s, r)| f(s, r)).collect()),
        edges,
    }
}

#[test]
fn relation_threshold_drops_init_atoms_but_never_goal_atoms() {
    // on(a, b) holds at init and is part of the goal; on(c, d) is not.
    let t = task(&[&["b", "a"], &["d", "c"]], &[("a", "b"), ("d", "c")]);
    let scores = relation_scores_for(&t, |_, _| 0.0);
    let p = project(&t, &scores, 0.9, 0.5);
    let on = |x: &str, y: &str| t.find_atom("on", &[x, y]).unwrap();
    assert_eq!(p.dropped_init, vec![on("c", "d")]);
    let kept_goal = t.goal_pos.iter().all(|g| !p.dropped_init.contains(g));
    assert!(kept_goal);
    let high = relation_scores_for(&t, |_, _| 0.9);
    assert!(project(&t, &high, 0.9, 0.5).dropped_init.is_empty());
}

#[test]
fn uniform_one_scores_match_unguided_search() {
    let t = task(&[&["a", "b", "c"], &["d"], &["e"]], &[("c", "a"), ("a", "e")]);
    let cfg = SearchConfig::default();
    let g = plan_with_scores(&t, &ImportanceScores::uniform(t.objects.len(), 1.0), &cfg, &AbstractionConfig::default()).unwrap();
    assert_eq!(g.result.outcome, search(&t, &cfg).outcome);
    assert!(g.fell_back);
    assert_eq!(g.rounds_used, 0);
}

#[test]
fn one_shot_failure_does_not_back_off() {
    // c sits on a, so a cannot move without c.
    let t = task(&[&["a", "c"], &["b"]], &[("a", "b")]);
    let mut s = vec![1.0; t.objects.len()];
    s[obj(&t, "c")] = 0.0;
    let acfg = AbstractionConfig { one_shot: true, ..Default::default() };
    let g = plan_with_scores(&t, &ImportanceScores::objects_only(s.clone()), &SearchConfig::default(), &acfg).unwrap();
    assert_eq!(g.result.outcome, Outcome::Unsolvable);
    assert_eq!(g.rounds_used, 1);
    assert_eq!(g.objects_kept, vec![2]);
    assert!(!g.fell_back);
    let full = plan_with_scores(&t, &ImportanceScores::objects_only(s), &SearchConfig::default(), &AbstractionConfig::default()).unwrap();
    assert!(validate_plan(&t, full.result.plan().unwrap()));
}

#[test]
fn backoff_grows_kept_sets_until_solved() {
    let t = task(&[&["a", "c", "e"], &["b"], &["d"], &["f"], &["g"]], &[("a", "b")]);
    let mut s = vec![0.0; t.objects.len()];
    s[obj(&t, "d")] = 0.85;
    s[obj(&t, "c")] = 0.75;
    s[obj(&t, "f")] = 0.7;
    s[obj(&t, "e")] = 0.6;
    let g = plan_with_scores(&t, &ImportanceScores::objects_only(s), &SearchConfig::default(), &AbstractionConfig::default()).unwrap();
    assert!(validate_plan(&t, g.result.plan().unwrap()));
    assert!(g.objects_kept.windows(2).all(|w| w[0] < w[1]), "{:?}", g.objects_kept);
    assert_eq!(g.objects_kept, vec![2, 3, 4, 5, 6]);
    assert!(!g.fell_back);
}

#[test]
fn top_k_bounds_and_errors() {
    let t = task(&[&["a", "c"], &["b"], &["d"], &["e"]], &[("a", "b")]);
    let mut s = vec![0.0; t.objects.len()];
    s[obj(&t, "c")] = 0.4;
    s[obj(&t, "e")] = 0.4;
    let scores = ImportanceScores::objects_only(s);
    let cfg = SearchConfig::default();
    let n = t.objects.len();
    assert_eq!(plan_top_k(&t, &scores, n, &cfg).unwrap().outcome, search(&t, &cfg).outcome);
    let only_goal = plan_with_scores(&t, &scores, &cfg, &AbstractionConfig { top_k: Some(2), ..Default::default() }).unwrap();
    assert_eq!(only_goal.objects_kept, vec![2]);
    assert_eq!(only_goal.result.outcome, Outcome::Unsolvable);
    // c and e tie; the lower index (c) wins and suffices.
    assert!(plan_top_k(&t, &scores, 3, &cfg).unwrap().is_solved());
    assert!(matches!(plan_top_k(&t, &scores, 1, &cfg), Err(GuidanceError::KTooSmall { k: 1, goal_objects: 2 })));
}

#[test]
fn abstraction_config_is_validated() {
    for bad in [
        AbstractionConfig { gamma: 1.0, ..Default::default() },
        AbstractionConfig { gamma: 0.0, ..Default::default() },
        AbstractionConfig { theta_obj: 0.0, ..Default::default() },
        AbstractionConfig { theta_rel: 1.5, ..Default::default() },
    ] {
        assert!(bad.validate().is_err());
    }
    let t = task(&[&["a"], &["b"]], &[("a", "b")]);
    let r = plan_with_scores(&t, &ImportanceScores::uniform(2, 1.0), &SearchConfig::default(), &AbstractionConfig { gamma: 2.0, ..Default::default() });
    assert!(matches!(r, Err(GuidanceError::InvalidConfig(_))));
}

#[test]
fn loss_closed_forms() {
    let labels = [1.0, 0.0, 1.0, 0.0];
    assert!(loss_ploi(&labels, &labels, 0.5) < 4.0 * 1e-6);
    for lbl in [[1.0, 1.0, 0.0, 0.0], [0.0; 4]] {
        let l = loss_ploi(&[0.5; 4], &lbl, 0.5);
        assert!((l - 4.0 * 0.5 * std::f64::consts::LN_2).abs() < 1e-12);
    }
    // Clipping keeps the loss finite at the extremes.
    assert!(loss_ploi(&[0.0, 1.0], &[1.0, 0.0], 0.5).is_finite());
}

fn example(seed: u64, kind: EncoderKind) -> (GuidanceModel, TrainingExample) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=10);
    let (t, coords) = generated(n, rng.gen_range(2..=n), 0, seed);
    let schema = FeatureSchema::from_task(&t, SpatialMode::AllEdges);
    let graph = encode_problem(&t, &schema, Some(&coords)).unwrap();
    let labels = (0..graph.n_nodes).map(|_| f64::from(rng.gen_bool(0.5))).collect();
    (GuidanceModel::new(kind, schema, 2, 6, seed), TrainingExample { graph, labels })
}

#[test]
fn loss_gradients_match_finite_differences() {
    for seed in 0..40 {
        for kind in [EncoderKind::PloiMP, EncoderKind::Gat] {
            let (m, ex) = example(seed, kind);
            let g = grad_check(example_program(&m, &ex, 0.3), &m.params, 1e-5).unwrap();
            assert!(g.max_rel_error < 1e-4, "{kind:?} seed {seed}: {g:?}");
        }
    }
}

#[test]
fn lambda_one_ignores_negatives() {
    let (m, mut ex) = example(5, EncoderKind::PloiMP);
    ex.labels.iter_mut().for_each(|l| *l = 0.0);
    let (loss, grads) = evaluate_with_gradients(example_program(&m, &ex, 1.0), &m.params).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grads.iter().all(|(_, t)| t.data.iter().all(|&v| v == 0.0)));
}

fn small_dataset(kind: EncoderKind) -> (GuidanceModel, Vec<TrainingExample>) {
    let mut data = Vec::new();
    let mut schema = None;
    for seed in 0..4 {
        let (t, coords) = generated(5, 3, 3, 100 + seed);
        let s = schema.get_or_insert_with(|| FeatureSchema::from_task(&t, SpatialMode::AllEdges)).clone();
        let graph = encode_problem(&t, &s, Some(&coords)).unwrap();
        let goal = t.goal_objects();
        let labels = (0..t.objects.len()).map(|i| f64::from(goal.contains(&i))).collect();
        data.push(TrainingExample { graph, labels });
    }
    (GuidanceModel::default_for(kind, schema.unwrap(), 1), data)
}

#[test]
fn degenerate_all_positive_fit() {
    let (m, data) = small_dataset(EncoderKind::PloiMP);
    let mut one = data[0].clone();
    one.labels.iter_mut().for_each(|l| *l = 1.0);
    let cfg = TrainConfig { epochs: 300, lr: 1e-2, lambda: None };
    let (trained, _) = train(m, std::slice::from_ref(&one), &cfg).unwrap();
    assert!(trained.score(&one.graph).unwrap().object_scores.iter().all(|&s| s > 0.9));
}

#[test]
fn training_loss_moving_average_decreases_and_is_deterministic() {
    for kind in [EncoderKind::PloiMP, EncoderKind::Gat] {
        let (m, data) = small_dataset(kind);
        let cfg = TrainConfig { epochs: 200, ..Default::default() };
        let (a, trace) = train(m.clone(), &data, &cfg).unwrap();
        let avg: Vec<f64> = trace.windows(10).map(|w| w.iter().sum::<f64>() / 10.0).collect();
        for w in avg.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{kind:?}: {} then {}", w[0], w[1]);
        }
        assert!(trace.last().unwrap() < &trace[0]);
        let (b, trace_b) = train(m, &data, &cfg).unwrap();
        assert_eq!(trace, trace_b);
        assert_eq!(a.params, b.params);
    }
}

#[test]
fn training_rejects_foreign_graphs() {
    let (m, mut data) = small_dataset(EncoderKind::PloiMP);
    let t = task(&[&["a"], &["b"]], &[("a", "b")]);
    let off = FeatureSchema::from_task(&t, SpatialMode::Off);
    data.push(TrainingExample { graph: encode_problem(&t, &off, None).unwrap(), labels: vec![1.0, 1.0] });
    assert!(matches!(train(m, &data, &TrainConfig::default()), Err(GuidanceError::SchemaMismatch { .. })));
}

#[test]
fn model_files_round_trip_and_check_schema() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [EncoderKind::PloiMP, EncoderKind::Gat] {
        let (m, data) = small_dataset(kind);
        let path = dir.path().join(format!("{}.model", kind.name()));
        m.save(&path).unwrap();
        let back = GuidanceModel::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.score(&data[0].graph).unwrap(), m.score(&data[0].graph).unwrap());
        let other = FeatureSchema { spatial: SpatialMode::Off, ..m.schema.clone() };
        assert!(matches!(GuidanceModel::load_for(&path, &other), Err(GuidanceError::SchemaMismatch { .. })));
        assert!(GuidanceModel::load_for(&path, &m.schema).is_ok());
    }
    assert!(GuidanceModel::load(&dir.path().join("missing")).is_err());
}

#[test]
fn score_dump_lists_names() {
    let s = ImportanceScores::objects_only(vec![0.25, 1.0]);
    let text = s.dump(&["a".into(), "b".into()]);
    assert!(text.contains("a") && text.contains("0.25") && text.contains("b"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn encoders_are_permutation_equivariant(seed in any::<u64>(), n in 2usize..=9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t, coords) = generated(n, rng.gen_range(1..=n), rng.gen_range(0..3), seed);
        let schema = FeatureSchema::from_task(&t, SpatialMode::AllEdges);
        let g = encode_problem(&t, &schema, Some(&coords)).unwrap();
        let mut perm: Vec<usize> = (0..g.n_nodes).collect();
        perm.shuffle(&mut rng);
        let pg = g.permuted(&perm);
        for kind in [EncoderKind::PloiMP, EncoderKind::Gat] {
            let m = GuidanceModel::default_for(kind, schema.clone(), seed);
            let a = m.score(&g).unwrap();
            let b = m.score(&pg).unwrap();
            for i in 0..g.n_nodes {
                prop_assert!((a.object_scores[i] - b.object_scores[perm[i]]).abs() < 1e-12);
            }
            if let (Some(ra), Some(rb)) = (&a.relation_scores, &b.relation_scores) {
                for (e, &(s, r)) in a.edges.iter().enumerate() {
                    let f = b.edges.iter().position(|&x| x == (perm[s], perm[r])).unwrap();
                    prop_assert!((ra[e] - rb[f]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn object_abstraction_plans_are_sound(seed in any::<u64>(), n in 2usize..=7, d in 0usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t, _) = generated(n, rng.gen_range(1..=n), d, seed);
        let scores = ImportanceScores::objects_only((0..t.objects.len()).map(|_| rng.gen::<f64>()).collect());
        let theta = rng.gen_range(0.05..1.0);
        let p = project(&t, &scores, theta, 0.5);
        if let Some(plan) = search(&p.task, &SearchConfig::default()).plan() {
            prop_assert!(validate_plan(&t, &p.lift(plan)));
        }
        let kept: Vec<bool> = p.keep.clone();
        let next = project(&t, &scores, theta * 0.9, 0.5);
        prop_assert!(kept.iter().zip(&next.keep).all(|(&a, &b)| !a || b));
    }

    #[test]
    fn guided_search_is_sound_and_complete(seed in any::<u64>(), n in 2usize..=7, d in 0usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t, _) = generated(n, rng.gen_range(1..=n), d, seed);
        let scores = ImportanceScores::objects_only((0..t.objects.len()).map(|_| rng.gen::<f64>()).collect());
        let cfg = SearchConfig::enhanced_gbfs(10.0);
        let unguided = search(&t, &SearchConfig::enhanced_gbfs(5.0));
        let g = plan_with_scores(&t, &scores, &cfg, &AbstractionConfig::default()).unwrap();
        if let Some(plan) = g.result.plan() {
            prop_assert!(validate_plan(&t, plan));
        }
        if unguided.is_solved() {
            prop_assert!(g.result.is_solved());
        }
        prop_assert!(g.objects_kept.windows(2).all(|w| w[0] < w[1]));
    }
}
