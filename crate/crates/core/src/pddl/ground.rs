//! Grounding of a conjunctive domain/problem pair into a finite STRIPS task.

use std::fmt::Write;

use rustc_hash::{FxHashMap, FxHashSet};

use super::model::*;
use super::PddlError;

pub const DEFAULT_GROUNDING_CAP: usize = 5_000_000;

#[derive(Clone, Copy, Debug)]
pub struct GroundingOptions {
    /// Maximum number of ground actions before giving up.
    pub cap: usize,
    /// Drop instances whose static preconditions are false in the initial state.
    pub static_pruning: bool,
}

impl Default for GroundingOptions {
    fn default() -> Self {
        GroundingOptions { cap: DEFAULT_GROUNDING_CAP, static_pruning: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub predicate: usize,
    pub args: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskObject {
    pub name: String,
    pub type_name: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundAction {
    /// Name of the (possibly compiled) schema this instance came from.
    pub schema: String,
    pub args: Vec<usize>,
    pub pre_pos: Vec<usize>,
    pub pre_neg: Vec<usize>,
    pub add: Vec<usize>,
    pub del: Vec<usize>,
    pub cost: f64,
}

/// A fully instantiated planning task. Atom, action and object references are
/// indices into the task's own tables.
#[derive(Clone, Debug)]
pub struct GroundTask {
    pub name: String,
    pub domain_name: String,
    pub predicates: Vec<PredicateSchema>,
    pub static_predicates: Vec<bool>,
    pub type_names: Vec<String>,
    pub objects: Vec<TaskObject>,
    pub atoms: Vec<GroundAtom>,
    pub actions: Vec<GroundAction>,
    /// Sorted atom indices true initially.
    pub init: Vec<usize>,
    pub goal_pos: Vec<usize>,
    pub goal_neg: Vec<usize>,
    lookup: FxHashMap<GroundAtom, usize>,
}

impl GroundTask {
    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_index(&self, atom: &GroundAtom) -> Option<usize> {
        self.lookup.get(atom).copied()
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.name == name)
    }

    /// Looks up an atom by predicate and object names.
    pub fn find_atom(&self, predicate: &str, args: &[&str]) -> Option<usize> {
        let p = self.predicates.iter().position(|s| s.name == predicate)?;
        let args = args.iter().map(|a| self.object_index(a)).collect::<Option<Vec<_>>>()?;
        self.atom_index(&GroundAtom { predicate: p, args })
    }

    pub fn find_action(&self, schema: &str, args: &[&str]) -> Option<usize> {
        let args = args.iter().map(|a| self.object_index(a)).collect::<Option<Vec<_>>>()?;
        self.actions.iter().position(|a| a.schema == schema && a.args == args)
    }

    pub fn atom_name(&self, atom: usize) -> String {
        let a = &self.atoms[atom];
        let mut s = format!("({}", self.predicates[a.predicate].name);
        for &o in &a.args {
            let _ = write!(s, " {}", self.objects[o].name);
        }
        s.push(')');
        s
    }

    /// `(schema arg1 arg2 ...)` with any disjunct suffix removed.
    pub fn action_name(&self, action: usize) -> String {
        let a = &self.actions[action];
        let mut s = format!("({}", super::compile::source_name(&a.schema));
        for &o in &a.args {
            let _ = write!(s, " {}", self.objects[o].name);
        }
        s.push(')');
        s
    }

    /// Objects mentioned by any goal literal, ascending.
    pub fn goal_objects(&self) -> Vec<usize> {
        let mut set: Vec<usize> = self
            .goal_pos
            .iter()
            .chain(&self.goal_neg)
            .flat_map(|&g| self.atoms[g].args.iter().copied())
            .collect();
        set.sort_unstable();
        set.dedup();
        set
    }

    /// Every object an action touches: its arguments plus any object
    /// (e.g. a schema constant) appearing in its atoms.
    pub fn action_objects(&self, action: usize) -> Vec<usize> {
        let a = &self.actions[action];
        let mut out = a.args.clone();
        for &atom in a.pre_pos.iter().chain(&a.pre_neg).chain(&a.add).chain(&a.del) {
            out.extend(self.atoms[atom].args.iter().copied());
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Projects the task onto the objects flagged in `keep`: every atom and
    /// ground action mentioning a dropped object disappears, and the listed
    /// `drop_init` atoms are removed from the initial state. Returns the
    /// projected task and, per projected action, its index in `self`.
    pub fn restrict(&self, keep: &[bool], drop_init: &[usize]) -> (GroundTask, Vec<usize>) {
        assert_eq!(keep.len(), self.objects.len());
        let mut obj_map = vec![usize::MAX; self.objects.len()];
        let mut objects = Vec::new();
        for (i, o) in self.objects.iter().enumerate() {
            if keep[i] {
                obj_map[i] = objects.len();
                objects.push(o.clone());
            }
        }
        let mut atom_map = vec![usize::MAX; self.atoms.len()];
        let mut atoms = Vec::new();
        let mut lookup = FxHashMap::default();
        for (i, a) in self.atoms.iter().enumerate() {
            if a.args.iter().all(|&o| keep[o]) {
                let na = GroundAtom { predicate: a.predicate, args: a.args.iter().map(|&o| obj_map[o]).collect() };
                atom_map[i] = atoms.len();
                lookup.insert(na.clone(), atoms.len());
                atoms.push(na);
            }
        }
        let remap = |v: &[usize]| -> Option<Vec<usize>> {
            v.iter().map(|&x| (atom_map[x] != usize::MAX).then(|| atom_map[x])).collect()
        };
        let mut actions = Vec::new();
        let mut origin = Vec::new();
        for (i, a) in self.actions.iter().enumerate() {
            if !a.args.iter().all(|&o| keep[o]) {
                continue;
            }
            let (Some(pre_pos), Some(pre_neg), Some(add), Some(del)) =
                (remap(&a.pre_pos), remap(&a.pre_neg), remap(&a.add), remap(&a.del))
            else {
                continue;
            };
            actions.push(GroundAction {
                schema: a.schema.clone(),
                args: a.args.iter().map(|&o| obj_map[o]).collect(),
                pre_pos,
                pre_neg,
                add,
                del,
                cost: a.cost,
            });
            origin.push(i);
        }
        let dropped: FxHashSet<usize> = drop_init.iter().copied().collect();
        let init = self
            .init
            .iter()
            .filter(|a| !dropped.contains(a))
            .filter_map(|&a| (atom_map[a] != usize::MAX).then(|| atom_map[a]))
            .collect();
        // Goal atoms mentioning dropped objects are kept out of the projection;
        // callers always keep goal objects, so this only matters for ad-hoc use.
        let goal_pos = self.goal_pos.iter().filter_map(|&a| (atom_map[a] != usize::MAX).then(|| atom_map[a])).collect();
        let goal_neg = self.goal_neg.iter().filter_map(|&a| (atom_map[a] != usize::MAX).then(|| atom_map[a])).collect();
        let task = GroundTask {
            name: self.name.clone(),
            domain_name: self.domain_name.clone(),
            predicates: self.predicates.clone(),
            static_predicates: self.static_predicates.clone(),
            type_names: self.type_names.clone(),
            objects,
            atoms,
            actions,
            init,
            goal_pos,
            goal_neg,
            lookup,
        };
        (task, origin)
    }

    /// Builds a task directly from tables; used for synthetic tasks in tests
    /// and tools. Atom args may be empty when no objects are involved.
    pub fn from_parts(
        name: impl Into<String>,
        predicates: Vec<PredicateSchema>,
        objects: Vec<TaskObject>,
        atoms: Vec<GroundAtom>,
        actions: Vec<GroundAction>,
        mut init: Vec<usize>,
        mut goal_pos: Vec<usize>,
        mut goal_neg: Vec<usize>,
    ) -> GroundTask {
        for v in [&mut init, &mut goal_pos, &mut goal_neg] {
            v.sort_unstable();
            v.dedup();
        }
        let lookup = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let static_predicates = vec![false; predicates.len()];
        GroundTask {
            name: name.into(),
            domain_name: String::new(),
            predicates,
            static_predicates,
            type_names: vec![ROOT_TYPE.to_string()],
            objects,
            atoms,
            actions,
            init,
            goal_pos,
            goal_neg,
            lookup,
        }
    }
}

struct Interner {
    atoms: Vec<GroundAtom>,
    lookup: FxHashMap<GroundAtom, usize>,
}

impl Interner {
    fn intern(&mut self, atom: GroundAtom) -> usize {
        if let Some(&i) = self.lookup.get(&atom) {
            return i;
        }
        let i = self.atoms.len();
        self.lookup.insert(atom.clone(), i);
        self.atoms.push(atom);
        i
    }
}

/// Literal with resolved predicate index and argument slots.
#[derive(Clone, Debug)]
enum Slot {
    Param(usize),
    Object(usize),
}

#[derive(Clone, Debug)]
struct CompiledLiteral {
    /// `None` for equality.
    predicate: Option<usize>,
    positive: bool,
    slots: Vec<Slot>,
    /// Number of leading parameters that must be bound before evaluation.
    ready_at: usize,
    is_static: bool,
}

pub fn ground(domain: &DomainModel, problem: &ProblemModel) -> Result<GroundTask, PddlError> {
    ground_with(domain, problem, GroundingOptions::default())
}

pub fn ground_with(
    domain: &DomainModel,
    problem: &ProblemModel,
    options: GroundingOptions,
) -> Result<GroundTask, PddlError> {
    let mut objects: Vec<TaskObject> = Vec::new();
    for o in domain.constants.iter().chain(&problem.objects) {
        objects.push(TaskObject { name: o.name.clone(), type_name: o.type_name.clone() });
    }
    let obj_index: FxHashMap<&str, usize> = objects.iter().enumerate().map(|(i, o)| (o.name.as_str(), i)).collect();
    let of_type = |t: &str| -> Vec<usize> {
        (0..objects.len()).filter(|&i| domain.is_subtype(&objects[i].type_name, t)).collect()
    };
    let static_preds = domain.static_predicates();
    let pred_index = |name: &str| domain.predicate_index(name).ok_or_else(|| PddlError::UnknownPredicate(name.to_string()));
    let resolve_fact = |f: &FactSymbol| -> Result<GroundAtom, PddlError> {
        let predicate = pred_index(&f.predicate)?;
        let args = f
            .args
            .iter()
            .map(|a| obj_index.get(a.as_str()).copied().ok_or_else(|| PddlError::UndeclaredObject(a.clone())))
            .collect::<Result<_, _>>()?;
        Ok(GroundAtom { predicate, args })
    };
    let init_atoms: Vec<GroundAtom> = problem.init.iter().map(resolve_fact).collect::<Result<_, _>>()?;
    let init_set: FxHashSet<GroundAtom> = init_atoms.iter().cloned().collect();

    let mut interner = Interner { atoms: Vec::new(), lookup: FxHashMap::default() };
    // Universe: type-consistent atoms of fluent predicates, in declaration order.
    for (pi, p) in domain.predicates.iter().enumerate() {
        if static_preds[pi] {
            continue;
        }
        let domains: Vec<Vec<usize>> = p.param_types.iter().map(|t| of_type(t)).collect();
        for_each_product(&domains, &mut |args| {
            interner.intern(GroundAtom { predicate: pi, args: args.to_vec() });
        });
    }
    let mut init: Vec<usize> = init_atoms.iter().map(|a| interner.intern(a.clone())).collect();
    init.sort_unstable();
    init.dedup();

    let mut goal_pos = Vec::new();
    let mut goal_neg = Vec::new();
    for g in &problem.goal {
        let a = interner.intern(resolve_fact(&g.atom)?);
        if g.positive {
            goal_pos.push(a);
        } else {
            goal_neg.push(a);
        }
    }
    goal_pos.sort_unstable();
    goal_pos.dedup();
    goal_neg.sort_unstable();
    goal_neg.dedup();

    let mut actions = Vec::new();
    for schema in &domain.action_schemas {
        let lits = schema.conjunctive_literals().ok_or_else(|| {
            PddlError::UnsupportedFeature(format!("disjunctive precondition in '{}' (compile it first)", schema.name))
        })?;
        let param_pos: FxHashMap<&str, usize> =
            schema.params.iter().enumerate().map(|(i, p)| (p.name.as_str(), i)).collect();
        let slot = |t: &Term| -> Result<Slot, PddlError> {
            match t {
                Term::Var(v) => param_pos.get(v.as_str()).map(|&i| Slot::Param(i)).ok_or_else(|| {
                    PddlError::UndeclaredVariable { action: schema.name.clone(), variable: v.clone() }
                }),
                Term::Const(c) => {
                    obj_index.get(c.as_str()).map(|&i| Slot::Object(i)).ok_or_else(|| PddlError::UndeclaredObject(c.clone()))
                }
            }
        };
        let ready = |slots: &[Slot]| slots.iter().map(|s| if let Slot::Param(i) = s { i + 1 } else { 0 }).max().unwrap_or(0);
        let mut compiled = Vec::new();
        for l in &lits {
            let (predicate, positive, slots) = match l {
                Literal::Pos(a) | Literal::Neg(a) => (
                    Some(pred_index(&a.predicate)?),
                    matches!(l, Literal::Pos(_)),
                    a.args.iter().map(slot).collect::<Result<Vec<_>, _>>()?,
                ),
                Literal::Eq(x, y) | Literal::NotEq(x, y) => (None, matches!(l, Literal::Eq(..)), vec![slot(x)?, slot(y)?]),
            };
            let is_static = predicate.map_or(true, |p| static_preds[p]);
            compiled.push(CompiledLiteral { ready_at: ready(&slots), predicate, positive, slots, is_static });
        }
        let compile_atoms = |atoms: &[AtomSchema]| -> Result<Vec<(usize, Vec<Slot>)>, PddlError> {
            atoms
                .iter()
                .map(|a| Ok((pred_index(&a.predicate)?, a.args.iter().map(slot).collect::<Result<Vec<_>, _>>()?)))
                .collect()
        };
        let adds = compile_atoms(&schema.add_effects)?;
        let dels = compile_atoms(&schema.del_effects)?;
        let domains: Vec<Vec<usize>> = schema.params.iter().map(|p| of_type(&p.type_name)).collect();

        let resolve = |slots: &[Slot], binding: &[usize]| -> Vec<usize> {
            slots.iter().map(|s| match s { Slot::Param(i) => binding[*i], Slot::Object(o) => *o }).collect()
        };
        // Static literals checked during enumeration; equality always.
        let check = |lit: &CompiledLiteral, binding: &[usize]| -> bool {
            let args = resolve(&lit.slots, binding);
            match lit.predicate {
                None => (args[0] == args[1]) == lit.positive,
                Some(p) => {
                    let holds = init_set.contains(&GroundAtom { predicate: p, args });
                    holds == lit.positive
                }
            }
        };
        let mut binding = vec![0usize; schema.params.len()];
        let mut err = None;
        bind(&domains, 0, &mut binding, &mut |depth, binding| {
            compiled
                .iter()
                .filter(|l| l.ready_at == depth && (l.predicate.is_none() || (options.static_pruning && l.is_static)))
                .all(|l| check(l, binding))
        }, &mut |binding| {
            if err.is_some() {
                return;
            }
            let mut pre_pos = Vec::new();
            let mut pre_neg = Vec::new();
            for l in &compiled {
                let Some(p) = l.predicate else { continue };
                let args = resolve(&l.slots, binding);
                let atom = GroundAtom { predicate: p, args };
                if l.is_static && options.static_pruning && !l.positive {
                    // Static negative literal already verified false in init.
                    continue;
                }
                let idx = interner.intern(atom);
                if l.positive {
                    pre_pos.push(idx);
                } else {
                    pre_neg.push(idx);
                }
            }
            let mut add: Vec<usize> = adds.iter().map(|(p, s)| interner.intern(GroundAtom { predicate: *p, args: resolve(s, binding) })).collect();
            let mut del: Vec<usize> = dels.iter().map(|(p, s)| interner.intern(GroundAtom { predicate: *p, args: resolve(s, binding) })).collect();
            for v in [&mut pre_pos, &mut pre_neg, &mut add, &mut del] {
                v.sort_unstable();
                v.dedup();
            }
            // Add-after-delete: an atom both added and deleted ends up true.
            del.retain(|d| add.binary_search(d).is_err());
            actions.push(GroundAction {
                schema: schema.name.clone(),
                args: binding.to_vec(),
                pre_pos,
                pre_neg,
                add,
                del,
                cost: schema.cost,
            });
            if actions.len() > options.cap {
                err = Some(PddlError::GroundingExplosion { cap: options.cap });
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }

    Ok(GroundTask {
        name: problem.name.clone(),
        domain_name: domain.name.clone(),
        predicates: domain.predicates.clone(),
        static_predicates: static_preds,
        type_names: domain.type_names(),
        objects,
        atoms: interner.atoms,
        actions,
        init,
        goal_pos,
        goal_neg,
        lookup: interner.lookup,
    })
}

fn for_each_product(domains: &[Vec<usize>], f: &mut dyn FnMut(&[usize])) {
    let mut cur = vec![0usize; domains.len()];
    fn rec(domains: &[Vec<usize>], depth: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if depth == domains.len() {
            f(cur);
            return;
        }
        for &o in &domains[depth] {
            cur[depth] = o;
            rec(domains, depth + 1, cur, f);
        }
    }
    rec(domains, 0, &mut cur, f);
}

/// Depth-first enumeration of parameter bindings; `accept(depth, binding)` is
/// consulted after each parameter is fixed (with `depth` parameters bound).
fn bind(
    domains: &[Vec<usize>],
    depth: usize,
    binding: &mut Vec<usize>,
    accept: &mut dyn FnMut(usize, &[usize]) -> bool,
    emit: &mut dyn FnMut(&[usize]),
) {
    if depth == 0 && !accept(0, binding) {
        return;
    }
    if depth == domains.len() {
        emit(binding);
        return;
    }
    for &o in &domains[depth] {
        binding[depth] = o;
        if accept(depth + 1, binding) {
            bind(domains, depth + 1, binding, accept, emit);
        }
    }
}

/// Outcome of the pre-search sanity check on a grounded task.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ProblemStatus {
    WellPosed,
    GoalTrueAtInit,
    GoalUnsatisfiable,
    /// Undeclared symbols or other parse-level defects found upstream.
    IllFormed(String),
}

impl ProblemStatus {
    pub fn is_well_posed(&self) -> bool {
        matches!(self, ProblemStatus::WellPosed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            ProblemStatus::WellPosed => "well-posed",
            ProblemStatus::GoalTrueAtInit => "goal-true-at-init",
            ProblemStatus::GoalUnsatisfiable => "goal-unsatisfiable",
            ProblemStatus::IllFormed(_) => "ill-formed",
        }
    }
}

pub fn validate_problem(task: &GroundTask) -> ProblemStatus {
    let n = task.num_atoms();
    if task.goal_pos.iter().chain(&task.goal_neg).chain(&task.init).any(|&a| a >= n) {
        return ProblemStatus::IllFormed("atom index out of range".into());
    }
    if task.goal_pos.iter().any(|g| task.goal_neg.contains(g)) {
        return ProblemStatus::GoalUnsatisfiable;
    }
    let mut added = vec![false; n];
    let mut deleted = vec![false; n];
    for a in &task.actions {
        a.add.iter().for_each(|&x| added[x] = true);
        a.del.iter().for_each(|&x| deleted[x] = true);
    }
    let in_init = |a: &usize| task.init.binary_search(a).is_ok();
    if task.goal_pos.iter().any(|g| !in_init(g) && !added[*g]) || task.goal_neg.iter().any(|g| in_init(g) && !deleted[*g]) {
        return ProblemStatus::GoalUnsatisfiable;
    }
    if task.goal_pos.iter().all(in_init) && !task.goal_neg.iter().any(in_init) {
        return ProblemStatus::GoalTrueAtInit;
    }
    ProblemStatus::WellPosed
}
