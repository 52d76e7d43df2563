use relplan::fixtures::{BLOCKS_DOMAIN, HOUSEHOLD_DOMAIN};
use relplan::pddl::*;

const TWO_BLOCKS: &str = "(define (problem two) (:domain blocks)
  (:objects a b - block)
  (:init (on-table a) (on-table b) (clear a) (clear b) (arm-empty))
  (:goal (and (on a b))))";

#[test]
fn blocks_fixture_has_four_operators() {
    let d = parse_domain(BLOCKS_DOMAIN).unwrap();
    let mut names: Vec<_> = d.action_schemas.iter().map(|a| a.name.as_str()).collect();
    names.sort();
    assert_eq!(names, ["pick-up", "put-down", "stack", "unstack"]);
}

#[test]
fn household_fixture_parses_and_compiles() {
    let d = parse_domain(HOUSEHOLD_DOMAIN).unwrap();
    assert_eq!(d.schema("pickup-object").unwrap().precondition.count_or_nodes(), 1);
    let c = compile_disjunctions(&d);
    assert!(c.schema("pickup-object__0").is_some());
    assert!(c.schema("pickup-object__1").is_some());
    assert!(c.schema("slice-object__1").is_some());
    assert!(c.schema("look").is_some());
    assert!(c.action_schemas.iter().all(|a| a.conjunctive_literals().is_some()));
}

#[test]
fn two_block_problem_transcription() {
    let d = parse_domain(BLOCKS_DOMAIN).unwrap();
    let p = parse_problem(TWO_BLOCKS, &d).unwrap();
    assert_eq!(p.init.len(), 5);
    assert_eq!(p.goal.len(), 1);
}

#[test]
fn two_block_grounding_counts() {
    let (_, _, t) = load_task_text(BLOCKS_DOMAIN, TWO_BLOCKS).unwrap();
    assert_eq!(t.actions.len(), 8);
    let count = |s: &str| t.actions.iter().filter(|a| a.schema == s).count();
    for s in ["pick-up", "put-down", "stack", "unstack"] {
        assert_eq!(count(s), 2, "{s}");
    }
    for a in &t.actions {
        assert!(a.add.iter().all(|x| !a.del.contains(x)));
    }
    assert_eq!(validate_problem(&t), ProblemStatus::WellPosed);
}

#[test]
fn undeclared_goal_object() {
    let d = parse_domain(BLOCKS_DOMAIN).unwrap();
    let text = TWO_BLOCKS.replace("(on a b)", "(on a cup9)");
    assert_eq!(parse_problem(&text, &d), Err(PddlError::UndeclaredObject("cup9".into())));
}

#[test]
fn empty_goal_is_valid() {
    let d = parse_domain(BLOCKS_DOMAIN).unwrap();
    let text = TWO_BLOCKS.replace("(and (on a b))", "(and)");
    let p = parse_problem(&text, &d).unwrap();
    assert!(p.goal.is_empty());
    let t = ground(&d, &p).unwrap();
    assert_eq!(validate_problem(&t), ProblemStatus::GoalTrueAtInit);
}

#[test]
fn missing_predicates_is_an_error() {
    let text = "(define (domain d) (:requirements :strips) (:action a :parameters () :precondition (and) :effect (and)))";
    assert!(parse_domain(text).is_err());
}

#[test]
fn unsupported_features_are_rejected() {
    let numeric = BLOCKS_DOMAIN.replace(":equality)", ":equality :numeric-fluents)");
    assert!(matches!(parse_domain(&numeric), Err(PddlError::UnsupportedFeature(_))));
    let forall = BLOCKS_DOMAIN.replace("(holding ?x)\n", "(forall (?z - block) (clear ?z))\n");
    assert!(matches!(parse_domain(&forall), Err(PddlError::UnsupportedFeature(_))));
    let cond = BLOCKS_DOMAIN.replace("(on-table ?x) (clear ?x) (arm-empty) (not (holding ?x))", "(when (clear ?x) (on-table ?x))");
    assert!(matches!(parse_domain(&cond), Err(PddlError::UnsupportedFeature(_))));
}

#[test]
fn lex_error_carries_position() {
    match parse_domain("(define (domain x)\n  (:predicates (p)") {
        Err(PddlError::Lex { position, .. }) => assert!(position.line >= 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_type_and_duplicates() {
    let bad = BLOCKS_DOMAIN.replace("(on-table ?x - block)", "(on-table ?x - plate)");
    assert_eq!(parse_domain(&bad), Err(PddlError::UnknownType("plate".into())));
    let dup = BLOCKS_DOMAIN.replace("(arm-empty)\n", "(arm-empty)\n    (clear ?z - block)\n");
    assert_eq!(parse_domain(&dup), Err(PddlError::DuplicateName("clear".into())));
}

#[test]
fn arity_and_predicate_errors() {
    let d = parse_domain(BLOCKS_DOMAIN).unwrap();
    let t = TWO_BLOCKS.replace("(clear a)", "(clear a b)");
    assert!(matches!(parse_problem(&t, &d), Err(PddlError::ArityMismatch { .. })));
    let t = TWO_BLOCKS.replace("(clear a)", "(shiny a)");
    assert_eq!(parse_problem(&t, &d), Err(PddlError::UnknownPredicate("shiny".into())));
}

#[test]
fn case_insensitive_symbols() {
    let d = parse_domain(&BLOCKS_DOMAIN.to_uppercase()).unwrap();
    assert!(d.schema("pick-up").is_some());
}

#[test]
fn static_pruning_removes_pairs() {
    let domain = "(define (domain toy) (:requirements :strips :typing)
      (:types r o)
      (:predicates (can ?r - r ?o - o) (in ?o - o ?r - r) (free ?o - o))
      (:action put :parameters (?o - o ?r - r)
        :precondition (and (free ?o) (can ?r ?o))
        :effect (and (in ?o ?r) (not (free ?o)))))";
    let problem = "(define (problem p) (:domain toy) (:objects r1 r2 - r x y - o)
      (:init (free x) (free y) (can r1 x) (can r2 x) (can r2 y)) (:goal (and (in y r2))))";
    let (_, _, t) = load_task_text(domain, problem).unwrap();
    assert_eq!(t.actions.len(), 3);
    assert!(t.find_action("put", &["y", "r1"]).is_none());
    let d = parse_domain(domain).unwrap();
    let p = parse_problem(problem, &d).unwrap();
    let unpruned = ground_with(&d, &p, GroundingOptions { static_pruning: false, ..Default::default() }).unwrap();
    assert_eq!(unpruned.actions.len(), 4);
}

#[test]
fn empty_type_gives_no_instances() {
    let problem = "(define (problem p) (:domain blocks) (:objects) (:init (arm-empty)) (:goal (and)))";
    let (_, _, t) = load_task_text(BLOCKS_DOMAIN, problem).unwrap();
    assert!(t.actions.is_empty());
}

#[test]
fn grounding_cap() {
    let d = parse_domain(BLOCKS_DOMAIN).unwrap();
    let p = parse_problem(TWO_BLOCKS, &d).unwrap();
    let r = ground_with(&d, &p, GroundingOptions { cap: 5, ..Default::default() });
    assert_eq!(r.unwrap_err(), PddlError::GroundingExplosion { cap: 5 });
}

#[test]
fn goal_unsatisfiable_when_unachievable() {
    let domain = "(define (domain toy) (:requirements :strips)
      (:predicates (p) (q) (r))
      (:action a :parameters () :precondition (p) :effect (q)))";
    let problem = "(define (problem x) (:domain toy) (:objects) (:init (p)) (:goal (and (r))))";
    let (_, _, t) = load_task_text(domain, problem).unwrap();
    assert_eq!(validate_problem(&t), ProblemStatus::GoalUnsatisfiable);
    let problem = "(define (problem x) (:domain toy) (:objects) (:init (p)) (:goal (and (q) (not (q)))))";
    let (_, _, t) = load_task_text(domain, problem).unwrap();
    assert_eq!(validate_problem(&t), ProblemStatus::GoalUnsatisfiable);
}

#[test]
fn domain_round_trip_fixtures() {
    for text in [BLOCKS_DOMAIN, HOUSEHOLD_DOMAIN] {
        let d = parse_domain(text).unwrap();
        let again = parse_domain(&d.to_string()).unwrap();
        assert_eq!(d, again);
    }
}

#[test]
fn problem_round_trip() {
    let d = parse_domain(BLOCKS_DOMAIN).unwrap();
    let p = parse_problem(TWO_BLOCKS, &d).unwrap();
    assert_eq!(parse_problem(&p.to_string(), &d).unwrap(), p);
}

#[test]
fn restrict_drops_object_instances() {
    let text = "(define (problem three) (:domain blocks) (:objects a b c d - block)
      (:init (on-table a) (on-table b) (on-table c) (on-table d) (clear a) (clear b) (clear c) (clear d) (arm-empty))
      (:goal (and (on a b) (on b c))))";
    let (_, _, t) = load_task_text(BLOCKS_DOMAIN, text).unwrap();
    let d = t.object_index("d").unwrap();
    let touching = (0..t.actions.len()).filter(|&i| t.action_objects(i).contains(&d)).count();
    let mut keep = vec![true; t.objects.len()];
    keep[d] = false;
    let (r, origin) = t.restrict(&keep, &[]);
    assert_eq!(r.actions.len(), t.actions.len() - touching);
    assert_eq!(origin.len(), r.actions.len());
    for (i, &o) in origin.iter().enumerate() {
        assert_eq!(r.action_name(i), t.action_name(o));
    }
    assert_eq!(r.goal_pos.len(), 2);
}
