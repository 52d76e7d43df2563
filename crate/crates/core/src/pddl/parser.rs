use std::collections::HashSet;

use super::model::*;
use super::sexpr::{self, Position, SExpr};
use super::PddlError;

/// Requirement flags accepted by the parser.
pub const SUPPORTED_REQUIREMENTS: &[&str] = &[
    ":strips",
    ":typing",
    ":negative-preconditions",
    ":disjunctive-preconditions",
    ":equality",
    ":action-costs",
];

fn syntax(pos: Position, message: impl Into<String>) -> PddlError {
    PddlError::Syntax { position: Some(pos), message: message.into() }
}

fn read(text: &str) -> Result<SExpr, PddlError> {
    sexpr::read(text).map_err(|(problem, position)| PddlError::Lex { position, problem })
}

fn expect_list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr], PddlError> {
    e.as_list().ok_or_else(|| syntax(e.position(), format!("expected a list for {what}")))
}

fn expect_symbol<'a>(e: &'a SExpr, what: &str) -> Result<&'a str, PddlError> {
    e.as_symbol().ok_or_else(|| syntax(e.position(), format!("expected a symbol for {what}")))
}

/// Splits `(define (<kind> NAME) sections...)`.
fn header<'a>(root: &'a SExpr, kind: &str) -> Result<(String, &'a [SExpr]), PddlError> {
    let items = expect_list(root, "define")?;
    if items.first().and_then(SExpr::as_symbol) != Some("define") {
        return Err(syntax(root.position(), "expected (define ...)"));
    }
    let head = items.get(1).ok_or_else(|| syntax(root.position(), format!("missing ({kind} name)")))?;
    let h = expect_list(head, kind)?;
    if h.len() != 2 || h[0].as_symbol() != Some(kind) {
        return Err(syntax(head.position(), format!("expected ({kind} name)")));
    }
    Ok((expect_symbol(&h[1], "name")?.to_string(), &items[2..]))
}

/// Parses `a b - t c - u d` into typed names (untyped entries get the root type).
fn typed_list(items: &[SExpr]) -> Result<Vec<TypedName>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        match &items[i] {
            SExpr::Symbol(s, pos) if s == "-" => {
                let ty = items.get(i + 1).ok_or_else(|| syntax(*pos, "dangling '-' in typed list"))?;
                if ty.head() == Some("either") {
                    return Err(PddlError::UnsupportedFeature("either-types".into()));
                }
                let ty = expect_symbol(ty, "type")?;
                if pending.is_empty() {
                    return Err(syntax(*pos, "type annotation without names"));
                }
                out.extend(pending.drain(..).map(|n| TypedName::new(n, ty)));
                i += 2;
            }
            SExpr::Symbol(s, _) => {
                pending.push(s.clone());
                i += 1;
            }
            SExpr::List(_, pos) => return Err(syntax(*pos, "unexpected list in typed list")),
        }
    }
    out.extend(pending.drain(..).map(|n| TypedName::new(n, ROOT_TYPE)));
    Ok(out)
}

fn term(e: &SExpr) -> Result<Term, PddlError> {
    let s = expect_symbol(e, "term")?;
    Ok(match s.strip_prefix('?') {
        Some(_) => Term::Var(s.to_string()),
        None => Term::Const(s.to_string()),
    })
}

fn atom_schema(items: &[SExpr], pos: Position) -> Result<AtomSchema, PddlError> {
    let name = items.first().ok_or_else(|| syntax(pos, "empty atom"))?;
    let predicate = expect_symbol(name, "predicate")?.to_string();
    let args = items[1..].iter().map(term).collect::<Result<_, _>>()?;
    Ok(AtomSchema { predicate, args })
}

fn formula(e: &SExpr) -> Result<Formula, PddlError> {
    let pos = e.position();
    let items = expect_list(e, "formula")?;
    let Some(head) = items.first() else {
        return Ok(Formula::And(Vec::new()));
    };
    let head = expect_symbol(head, "formula head")?;
    match head {
        "and" => Ok(Formula::And(items[1..].iter().map(formula).collect::<Result<_, _>>()?)),
        "or" => Ok(Formula::Or(items[1..].iter().map(formula).collect::<Result<_, _>>()?)),
        "not" => {
            if items.len() != 2 {
                return Err(syntax(pos, "not takes exactly one argument"));
            }
            Ok(Formula::Not(Box::new(formula(&items[1])?)))
        }
        "=" => {
            if items.len() != 3 {
                return Err(syntax(pos, "= takes exactly two arguments"));
            }
            Ok(Formula::Eq(term(&items[1])?, term(&items[2])?))
        }
        "imply" => Err(PddlError::UnsupportedFeature("implication".into())),
        "exists" | "forall" => Err(PddlError::UnsupportedFeature("quantified-preconditions".into())),
        ">" | "<" | ">=" | "<=" => Err(PddlError::UnsupportedFeature("numeric-fluents".into())),
        _ => Ok(Formula::Atom(atom_schema(items, pos)?)),
    }
}

struct Effects {
    add: Vec<AtomSchema>,
    del: Vec<AtomSchema>,
    cost: f64,
}

fn effects(e: &SExpr, out: &mut Effects) -> Result<(), PddlError> {
    let pos = e.position();
    let items = expect_list(e, "effect")?;
    let Some(head) = items.first() else {
        return Ok(());
    };
    match expect_symbol(head, "effect head")? {
        "and" => {
            for sub in &items[1..] {
                effects(sub, out)?;
            }
            Ok(())
        }
        "not" => {
            let inner = items.get(1).ok_or_else(|| syntax(pos, "not takes one argument"))?;
            let inner_items = expect_list(inner, "negated effect")?;
            out.del.push(atom_schema(inner_items, inner.position())?);
            Ok(())
        }
        "increase" => {
            let target = items.get(1).and_then(SExpr::head);
            if target != Some("total-cost") || items.len() != 3 {
                return Err(PddlError::UnsupportedFeature("numeric-fluents".into()));
            }
            let amount = expect_symbol(&items[2], "cost")?;
            let v: f64 = amount
                .parse()
                .map_err(|_| PddlError::UnsupportedFeature("non-constant action costs".into()))?;
            if v < 0.0 {
                return Err(syntax(items[2].position(), "negative action cost"));
            }
            out.cost += v;
            Ok(())
        }
        "when" => Err(PddlError::UnsupportedFeature("conditional-effects".into())),
        "forall" => Err(PddlError::UnsupportedFeature("universal-effects".into())),
        "decrease" | "assign" | "scale-up" | "scale-down" => {
            Err(PddlError::UnsupportedFeature("numeric-fluents".into()))
        }
        _ => {
            out.add.push(atom_schema(items, pos)?);
            Ok(())
        }
    }
}

fn action(items: &[SExpr], pos: Position) -> Result<ActionSchema, PddlError> {
    let name = expect_symbol(items.get(1).ok_or_else(|| syntax(pos, "action without name"))?, "action name")?;
    let mut params = Vec::new();
    let mut precondition = Formula::And(Vec::new());
    let mut eff = Effects { add: Vec::new(), del: Vec::new(), cost: 0.0 };
    let mut i = 2;
    while i < items.len() {
        let key = expect_symbol(&items[i], "action keyword")?;
        let val = items.get(i + 1).ok_or_else(|| syntax(items[i].position(), format!("missing value for {key}")))?;
        match key {
            ":parameters" => params = typed_list(expect_list(val, ":parameters")?)?,
            ":precondition" => precondition = formula(val)?,
            ":effect" => effects(val, &mut eff)?,
            other => return Err(PddlError::UnsupportedFeature(format!("action keyword {other}"))),
        }
        i += 2;
    }
    Ok(ActionSchema {
        name: name.to_string(),
        params,
        precondition,
        add_effects: eff.add,
        del_effects: eff.del,
        cost: eff.cost,
    })
}

/// Parses domain text into a validated [`DomainModel`].
pub fn parse_domain(text: &str) -> Result<DomainModel, PddlError> {
    let root = read(text)?;
    let (name, sections) = header(&root, "domain")?;
    let mut model = DomainModel {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        action_schemas: Vec::new(),
        uses_total_cost: false,
    };
    let mut saw_predicates = false;
    for section in sections {
        let pos = section.position();
        let items = expect_list(section, "domain section")?;
        let key = items.first().and_then(SExpr::as_symbol).ok_or_else(|| syntax(pos, "empty section"))?;
        match key {
            ":requirements" => {
                for r in &items[1..] {
                    let r = expect_symbol(r, "requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r) {
                        return Err(PddlError::UnsupportedFeature(r.trim_start_matches(':').to_string()));
                    }
                    model.requirements.push(r.to_string());
                }
            }
            ":types" => {
                for t in typed_list(&items[1..])? {
                    let parent = (t.type_name != ROOT_TYPE).then_some(t.type_name);
                    if t.name == ROOT_TYPE {
                        continue;
                    }
                    model.types.push(TypeDecl { name: t.name, parent });
                }
            }
            ":constants" => model.constants.extend(typed_list(&items[1..])?),
            ":predicates" => {
                saw_predicates = true;
                for p in &items[1..] {
                    let pi = expect_list(p, "predicate declaration")?;
                    let pname = expect_symbol(
                        pi.first().ok_or_else(|| syntax(p.position(), "empty predicate declaration"))?,
                        "predicate name",
                    )?;
                    let params = typed_list(&pi[1..])?;
                    model.predicates.push(PredicateSchema {
                        name: pname.to_string(),
                        param_types: params.into_iter().map(|t| t.type_name).collect(),
                    });
                }
            }
            ":functions" => {
                // Only the action-cost accumulator is accepted.
                let mut j = 1;
                while j < items.len() {
                    match &items[j] {
                        SExpr::List(f, _) if f.len() == 1 && f[0].as_symbol() == Some("total-cost") => {
                            model.uses_total_cost = true;
                        }
                        SExpr::Symbol(s, _) if s == "-" => j += 1,
                        _ => return Err(PddlError::UnsupportedFeature("numeric-fluents".into())),
                    }
                    j += 1;
                }
            }
            ":action" => model.action_schemas.push(action(items, pos)?),
            ":derived" => return Err(PddlError::UnsupportedFeature("derived-predicates".into())),
            ":durative-action" => return Err(PddlError::UnsupportedFeature("durative-actions".into())),
            other => return Err(PddlError::UnsupportedFeature(format!("domain section {other}"))),
        }
    }
    if model.action_schemas.iter().any(|a| a.cost != 0.0) {
        model.uses_total_cost = true;
    }
    if !saw_predicates {
        return Err(syntax(root.position(), "domain has no :predicates section"));
    }
    model.validate()?;
    Ok(model)
}

fn fact(items: &[SExpr], pos: Position) -> Result<FactSymbol, PddlError> {
    let name = items.first().ok_or_else(|| syntax(pos, "empty fact"))?;
    let predicate = expect_symbol(name, "predicate")?.to_string();
    let args = items[1..]
        .iter()
        .map(|a| expect_symbol(a, "object").map(str::to_string))
        .collect::<Result<_, _>>()?;
    Ok(FactSymbol { predicate, args })
}

fn goal_literals(e: &SExpr, out: &mut Vec<GoalLiteral>) -> Result<(), PddlError> {
    let pos = e.position();
    let items = expect_list(e, "goal")?;
    let Some(head) = items.first() else {
        return Ok(());
    };
    match expect_symbol(head, "goal head")? {
        "and" => {
            for sub in &items[1..] {
                goal_literals(sub, out)?;
            }
            Ok(())
        }
        "not" => {
            let inner = items.get(1).ok_or_else(|| syntax(pos, "not takes one argument"))?;
            let atom = fact(expect_list(inner, "negated goal")?, inner.position())?;
            out.push(GoalLiteral { positive: false, atom });
            Ok(())
        }
        "or" | "imply" => Err(PddlError::UnsupportedFeature("disjunctive goals".into())),
        "exists" | "forall" => Err(PddlError::UnsupportedFeature("quantified goals".into())),
        _ => {
            out.push(GoalLiteral { positive: true, atom: fact(items, pos)? });
            Ok(())
        }
    }
}

/// Parses problem text against an already parsed domain.
pub fn parse_problem(text: &str, domain: &DomainModel) -> Result<ProblemModel, PddlError> {
    let root = read(text)?;
    let (name, sections) = header(&root, "problem")?;
    let mut problem =
        ProblemModel { name, domain_name: String::new(), objects: Vec::new(), init: Vec::new(), goal: Vec::new() };
    for section in sections {
        let pos = section.position();
        let items = expect_list(section, "problem section")?;
        let key = items.first().and_then(SExpr::as_symbol).ok_or_else(|| syntax(pos, "empty section"))?;
        match key {
            ":domain" => {
                problem.domain_name = expect_symbol(items.get(1).ok_or_else(|| syntax(pos, "missing domain name"))?, "domain")?
                    .to_string()
            }
            ":requirements" => {}
            ":objects" => problem.objects.extend(typed_list(&items[1..])?),
            ":init" => {
                for f in &items[1..] {
                    let fi = expect_list(f, "init fact")?;
                    if fi.first().and_then(SExpr::as_symbol) == Some("=") {
                        // (= (total-cost) 0)
                        if fi.get(1).and_then(SExpr::head) == Some("total-cost") {
                            continue;
                        }
                        return Err(PddlError::UnsupportedFeature("numeric-fluents".into()));
                    }
                    if fi.first().and_then(SExpr::as_symbol) == Some("not") {
                        // Closed world: explicit negative facts are redundant.
                        continue;
                    }
                    problem.init.push(fact(fi, f.position())?);
                }
            }
            ":goal" => {
                let g = items.get(1).ok_or_else(|| syntax(pos, "missing goal formula"))?;
                goal_literals(g, &mut problem.goal)?;
            }
            ":metric" => {}
            other => return Err(PddlError::UnsupportedFeature(format!("problem section {other}"))),
        }
    }
    if problem.domain_name != domain.name {
        return Err(PddlError::DomainMismatch { expected: domain.name.clone(), found: problem.domain_name.clone() });
    }
    check_problem(&problem, domain)?;
    Ok(problem)
}

fn check_problem(problem: &ProblemModel, domain: &DomainModel) -> Result<(), PddlError> {
    let mut names: HashSet<&str> = domain.constants.iter().map(|c| c.name.as_str()).collect();
    for o in &problem.objects {
        if !domain.has_type(&o.type_name) {
            return Err(PddlError::UnknownType(o.type_name.clone()));
        }
        if !names.insert(o.name.as_str()) {
            return Err(PddlError::DuplicateName(o.name.clone()));
        }
    }
    let check = |f: &FactSymbol| -> Result<(), PddlError> {
        let schema = domain.predicate(&f.predicate).ok_or_else(|| PddlError::UnknownPredicate(f.predicate.clone()))?;
        if schema.arity() != f.args.len() {
            return Err(PddlError::ArityMismatch {
                predicate: f.predicate.clone(),
                expected: schema.arity(),
                found: f.args.len(),
            });
        }
        for a in &f.args {
            if !names.contains(a.as_str()) {
                return Err(PddlError::UndeclaredObject(a.clone()));
            }
        }
        Ok(())
    };
    for f in &problem.init {
        check(f)?;
    }
    for g in &problem.goal {
        check(&g.atom)?;
    }
    Ok(())
}
