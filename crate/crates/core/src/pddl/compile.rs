//! Disjunctive precondition compilation.
//!
//! Each schema whose precondition contains an OR node is rewritten into its
//! disjunctive normal form, one conjunctive schema per disjunct, named
//! `<name>__<k>` (k counts from zero). Schemas without OR pass unchanged.

use super::model::{ActionSchema, DomainModel, Formula};

/// Separator between an original schema name and its disjunct index.
pub const SPLIT_MARK: &str = "__";

/// Strips the `__k` suffix added by [`compile_disjunctions`].
pub fn source_name(name: &str) -> &str {
    match name.rfind(SPLIT_MARK) {
        Some(i) if name[i + SPLIT_MARK.len()..].chars().all(|c| c.is_ascii_digit()) && i + SPLIT_MARK.len() < name.len() => {
            &name[..i]
        }
        _ => name,
    }
}

/// Negation normal form: negations pushed onto atoms and equalities.
fn nnf(f: &Formula, negate: bool) -> Formula {
    match (f, negate) {
        (Formula::And(fs), false) => Formula::And(fs.iter().map(|f| nnf(f, false)).collect()),
        (Formula::And(fs), true) => Formula::Or(fs.iter().map(|f| nnf(f, true)).collect()),
        (Formula::Or(fs), false) => Formula::Or(fs.iter().map(|f| nnf(f, false)).collect()),
        (Formula::Or(fs), true) => Formula::And(fs.iter().map(|f| nnf(f, true)).collect()),
        (Formula::Not(inner), n) => nnf(inner, !n),
        (leaf, false) => leaf.clone(),
        (leaf, true) => Formula::Not(Box::new(leaf.clone())),
    }
}

/// DNF of an NNF formula as a list of conjunctions of literals.
fn dnf(f: &Formula) -> Vec<Vec<Formula>> {
    match f {
        Formula::Or(fs) => fs.iter().flat_map(dnf).collect(),
        Formula::And(fs) => {
            let mut acc: Vec<Vec<Formula>> = vec![Vec::new()];
            for sub in fs {
                let branches = dnf(sub);
                let mut next = Vec::with_capacity(acc.len() * branches.len());
                for prefix in &acc {
                    for b in &branches {
                        let mut c = prefix.clone();
                        c.extend(b.iter().cloned());
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
        leaf => vec![vec![leaf.clone()]],
    }
}

pub fn compile_disjunctions(domain: &DomainModel) -> DomainModel {
    let mut out = domain.clone();
    out.action_schemas = Vec::with_capacity(domain.action_schemas.len());
    for schema in &domain.action_schemas {
        if !schema.precondition.contains_or() {
            out.action_schemas.push(schema.clone());
            continue;
        }
        let branches = dnf(&nnf(&schema.precondition, false));
        for (k, conj) in branches.into_iter().enumerate() {
            out.action_schemas.push(ActionSchema {
                name: format!("{}{SPLIT_MARK}{k}", schema.name),
                precondition: Formula::And(conj),
                ..schema.clone()
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::model::{AtomSchema, Term};

    fn atom(p: &str) -> Formula {
        Formula::Atom(AtomSchema { predicate: p.into(), args: vec![Term::Var("?x".into())] })
    }

    #[test]
    fn distributes_and_over_or() {
        let f = Formula::And(vec![atom("r"), Formula::Or(vec![atom("p"), atom("q")])]);
        let d = dnf(&nnf(&f, false));
        assert_eq!(d, vec![vec![atom("r"), atom("p")], vec![atom("r"), atom("q")]]);
    }

    #[test]
    fn de_morgan_under_negation() {
        let f = Formula::Not(Box::new(Formula::And(vec![atom("p"), atom("q")])));
        let d = dnf(&nnf(&f, false));
        assert_eq!(d.len(), 2);
        assert_eq!(d[0], vec![Formula::Not(Box::new(atom("p")))]);
    }

    #[test]
    fn suffix_round_trip() {
        assert_eq!(source_name("pickup-object__1"), "pickup-object");
        assert_eq!(source_name("stack"), "stack");
        assert_eq!(source_name("a__b"), "a__b");
    }
}
