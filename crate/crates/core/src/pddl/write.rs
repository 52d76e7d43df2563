//! PDDL text emission for lifted models.

use std::fmt::{self, Write};

use super::model::*;

fn typed(out: &mut String, items: &[TypedName]) {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{} - {}", t.name, t.type_name);
    }
}

fn atom(out: &mut String, a: &AtomSchema) {
    out.push('(');
    out.push_str(&a.predicate);
    for t in &a.args {
        out.push(' ');
        out.push_str(t.name());
    }
    out.push(')');
}

fn formula(out: &mut String, f: &Formula) {
    match f {
        Formula::And(fs) | Formula::Or(fs) => {
            out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
            for sub in fs {
                out.push(' ');
                formula(out, sub);
            }
            out.push(')');
        }
        Formula::Not(inner) => {
            out.push_str("(not ");
            formula(out, inner);
            out.push(')');
        }
        Formula::Atom(a) => atom(out, a),
        Formula::Eq(a, b) => {
            let _ = write!(out, "(= {} {})", a.name(), b.name());
        }
    }
}

fn fact(out: &mut String, f: &FactSymbol) {
    out.push('(');
    out.push_str(&f.predicate);
    for a in &f.args {
        out.push(' ');
        out.push_str(a);
    }
    out.push(')');
}

impl fmt::Display for DomainModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(s, "(define (domain {})", self.name);
        if !self.requirements.is_empty() {
            let _ = writeln!(s, "  (:requirements {})", self.requirements.join(" "));
        }
        if !self.types.is_empty() {
            s.push_str("  (:types");
            for t in &self.types {
                let _ = write!(s, " {} - {}", t.name, t.parent.as_deref().unwrap_or(ROOT_TYPE));
            }
            s.push_str(")\n");
        }
        if !self.constants.is_empty() {
            s.push_str("  (:constants ");
            typed(&mut s, &self.constants);
            s.push_str(")\n");
        }
        s.push_str("  (:predicates");
        for p in &self.predicates {
            let _ = write!(s, "\n    ({}", p.name);
            for (i, t) in p.param_types.iter().enumerate() {
                let _ = write!(s, " ?x{i} - {t}");
            }
            s.push(')');
        }
        s.push_str(")\n");
        if self.uses_total_cost {
            s.push_str("  (:functions (total-cost) - number)\n");
        }
        for a in &self.action_schemas {
            let _ = writeln!(s, "  (:action {}", a.name);
            s.push_str("    :parameters (");
            typed(&mut s, &a.params);
            s.push_str(")\n    :precondition ");
            formula(&mut s, &a.precondition);
            s.push_str("\n    :effect (and");
            for e in &a.add_effects {
                s.push(' ');
                atom(&mut s, e);
            }
            for e in &a.del_effects {
                s.push_str(" (not ");
                atom(&mut s, e);
                s.push(')');
            }
            if self.uses_total_cost && a.cost != 0.0 {
                let _ = write!(s, " (increase (total-cost) {})", a.cost);
            }
            s.push_str("))\n");
        }
        s.push_str(")\n");
        f.write_str(&s)
    }
}

impl fmt::Display for ProblemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(s, "(define (problem {})", self.name);
        let _ = writeln!(s, "  (:domain {})", self.domain_name);
        s.push_str("  (:objects ");
        typed(&mut s, &self.objects);
        s.push_str(")\n  (:init");
        for i in &self.init {
            s.push_str("\n    ");
            fact(&mut s, i);
        }
        s.push_str(")\n  (:goal (and");
        for g in &self.goal {
            s.push(' ');
            if g.positive {
                fact(&mut s, &g.atom);
            } else {
                s.push_str("(not ");
                fact(&mut s, &g.atom);
                s.push(')');
            }
        }
        s.push_str("))\n)\n");
        f.write_str(&s)
    }
}
