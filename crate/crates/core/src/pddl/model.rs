//! Lifted (schematic) domain and problem models.

use std::collections::HashMap;

use super::PddlError;

pub const ROOT_TYPE: &str = "object";

#[derive(Clone, Debug, PartialEq)]
pub struct TypeDecl {
    pub name: String,
    pub parent: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypedName {
    pub name: String,
    pub type_name: String,
}

impl TypedName {
    pub fn new(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        TypedName { name: name.into(), type_name: type_name.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredicateSchema {
    pub name: String,
    pub param_types: Vec<String>,
}

impl PredicateSchema {
    pub fn arity(&self) -> usize {
        self.param_types.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(v) => v,
            Term::Const(c) => c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AtomSchema {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Atom(AtomSchema),
    Eq(Term, Term),
}

impl Formula {
    pub fn contains_or(&self) -> bool {
        match self {
            Formula::Or(_) => true,
            Formula::And(fs) => fs.iter().any(Formula::contains_or),
            Formula::Not(f) => f.contains_or(),
            Formula::Atom(_) | Formula::Eq(..) => false,
        }
    }

    pub fn count_or_nodes(&self) -> usize {
        match self {
            Formula::Or(fs) => 1 + fs.iter().map(Formula::count_or_nodes).sum::<usize>(),
            Formula::And(fs) => fs.iter().map(Formula::count_or_nodes).sum(),
            Formula::Not(f) => f.count_or_nodes(),
            Formula::Atom(_) | Formula::Eq(..) => 0,
        }
    }

    pub(crate) fn visit_terms<'a>(&'a self, out: &mut Vec<&'a Term>) {
        match self {
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.visit_terms(out)),
            Formula::Not(f) => f.visit_terms(out),
            Formula::Atom(a) => out.extend(a.args.iter()),
            Formula::Eq(a, b) => {
                out.push(a);
                out.push(b);
            }
        }
    }

    pub(crate) fn visit_atoms<'a>(&'a self, out: &mut Vec<&'a AtomSchema>) {
        match self {
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.visit_atoms(out)),
            Formula::Not(f) => f.visit_atoms(out),
            Formula::Atom(a) => out.push(a),
            Formula::Eq(..) => {}
        }
    }
}

/// A literal of a conjunctive precondition.
#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Pos(AtomSchema),
    Neg(AtomSchema),
    Eq(Term, Term),
    NotEq(Term, Term),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub precondition: Formula,
    pub add_effects: Vec<AtomSchema>,
    pub del_effects: Vec<AtomSchema>,
    pub cost: f64,
}

impl ActionSchema {
    /// Flattens a conjunctive precondition into literals. Returns `None` when
    /// the tree contains a disjunction (or a negation over a compound).
    pub fn conjunctive_literals(&self) -> Option<Vec<Literal>> {
        fn walk(f: &Formula, out: &mut Vec<Literal>) -> bool {
            match f {
                Formula::And(fs) => fs.iter().all(|f| walk(f, out)),
                Formula::Atom(a) => {
                    out.push(Literal::Pos(a.clone()));
                    true
                }
                Formula::Eq(a, b) => {
                    out.push(Literal::Eq(a.clone(), b.clone()));
                    true
                }
                Formula::Not(inner) => match inner.as_ref() {
                    Formula::Atom(a) => {
                        out.push(Literal::Neg(a.clone()));
                        true
                    }
                    Formula::Eq(a, b) => {
                        out.push(Literal::NotEq(a.clone(), b.clone()));
                        true
                    }
                    _ => false,
                },
                Formula::Or(_) => false,
            }
        }
        let mut out = Vec::new();
        walk(&self.precondition, &mut out).then_some(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainModel {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<TypeDecl>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateSchema>,
    pub action_schemas: Vec<ActionSchema>,
    /// Whether `(:functions (total-cost))` was declared.
    pub uses_total_cost: bool,
}

impl DomainModel {
    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn predicate_index(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|p| p.name == name)
    }

    /// Every type name, root included, in declaration order.
    pub fn type_names(&self) -> Vec<String> {
        let mut names = vec![ROOT_TYPE.to_string()];
        for t in &self.types {
            if !names.contains(&t.name) {
                names.push(t.name.clone());
            }
        }
        names
    }

    pub fn has_type(&self, name: &str) -> bool {
        name == ROOT_TYPE || self.types.iter().any(|t| t.name == name)
    }

    pub fn type_parent(&self, name: &str) -> Option<&str> {
        if name == ROOT_TYPE {
            return None;
        }
        self.types
            .iter()
            .find(|t| t.name == name)
            .map(|t| t.parent.as_deref().unwrap_or(ROOT_TYPE))
    }

    /// True when `sub` equals `sup` or descends from it.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        let mut cur = Some(sub);
        let mut guard = 0;
        while let Some(t) = cur {
            if t == sup {
                return true;
            }
            cur = self.type_parent(t);
            guard += 1;
            if guard > self.types.len() + 1 {
                return false;
            }
        }
        false
    }

    pub fn schema(&self, name: &str) -> Option<&ActionSchema> {
        self.action_schemas.iter().find(|a| a.name == name)
    }

    /// Predicates that appear in no add or delete effect.
    pub fn static_predicates(&self) -> Vec<bool> {
        let mut fluent = vec![false; self.predicates.len()];
        for a in &self.action_schemas {
            for e in a.add_effects.iter().chain(&a.del_effects) {
                if let Some(i) = self.predicate_index(&e.predicate) {
                    fluent[i] = true;
                }
            }
        }
        fluent.into_iter().map(|f| !f).collect()
    }

    pub(crate) fn validate(&self) -> Result<(), PddlError> {
        let mut seen = HashMap::new();
        for t in &self.types {
            if t.name == ROOT_TYPE {
                continue;
            }
            if seen.insert(t.name.as_str(), ()).is_some() {
                return Err(PddlError::DuplicateName(t.name.clone()));
            }
        }
        for t in &self.types {
            if let Some(p) = &t.parent {
                if !self.has_type(p) {
                    return Err(PddlError::UnknownType(p.clone()));
                }
            }
            // Single-parent chains must bottom out at the root.
            let mut cur = t.name.as_str();
            for _ in 0..=self.types.len() {
                match self.type_parent(cur) {
                    Some(p) => cur = p,
                    None => break,
                }
            }
            if cur != ROOT_TYPE {
                return Err(PddlError::Syntax { position: None, message: format!("cyclic type hierarchy at '{}'", t.name) });
            }
        }
        let mut names = HashMap::new();
        for c in &self.constants {
            if !self.has_type(&c.type_name) {
                return Err(PddlError::UnknownType(c.type_name.clone()));
            }
            if names.insert(c.name.as_str(), ()).is_some() {
                return Err(PddlError::DuplicateName(c.name.clone()));
            }
        }
        let mut preds = HashMap::new();
        for p in &self.predicates {
            if preds.insert(p.name.as_str(), ()).is_some() {
                return Err(PddlError::DuplicateName(p.name.clone()));
            }
            for t in &p.param_types {
                if !self.has_type(t) {
                    return Err(PddlError::UnknownType(t.clone()));
                }
            }
        }
        let mut schemas = HashMap::new();
        for a in &self.action_schemas {
            if schemas.insert(a.name.as_str(), ()).is_some() {
                return Err(PddlError::DuplicateName(a.name.clone()));
            }
            let mut vars = HashMap::new();
            for p in &a.params {
                if !self.has_type(&p.type_name) {
                    return Err(PddlError::UnknownType(p.type_name.clone()));
                }
                if vars.insert(p.name.as_str(), ()).is_some() {
                    return Err(PddlError::DuplicateName(format!("{}.{}", a.name, p.name)));
                }
            }
            let mut terms = Vec::new();
            a.precondition.visit_terms(&mut terms);
            let mut atoms = Vec::new();
            a.precondition.visit_atoms(&mut atoms);
            atoms.extend(a.add_effects.iter());
            atoms.extend(a.del_effects.iter());
            for atom in &atoms {
                let schema = self
                    .predicate(&atom.predicate)
                    .ok_or_else(|| PddlError::UnknownPredicate(atom.predicate.clone()))?;
                if schema.arity() != atom.args.len() {
                    return Err(PddlError::ArityMismatch {
                        predicate: atom.predicate.clone(),
                        expected: schema.arity(),
                        found: atom.args.len(),
                    });
                }
                terms.extend(atom.args.iter());
            }
            for t in terms {
                match t {
                    Term::Var(v) if !vars.contains_key(v.as_str()) => {
                        return Err(PddlError::UndeclaredVariable { action: a.name.clone(), variable: v.clone() })
                    }
                    Term::Const(c) if !names.contains_key(c.as_str()) => {
                        return Err(PddlError::UndeclaredObject(c.clone()))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactSymbol {
    pub predicate: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoalLiteral {
    pub positive: bool,
    pub atom: FactSymbol,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemModel {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: Vec<FactSymbol>,
    pub goal: Vec<GoalLiteral>,
}

impl ProblemModel {
    /// Names of objects mentioned by any goal literal, in first-mention order.
    pub fn goal_objects(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for g in &self.goal {
            for a in &g.atom.args {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
        }
        out
    }
}
