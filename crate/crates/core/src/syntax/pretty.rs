//! Canonical `.flx` printer.

use std::fmt::Write;

use super::ast::*;

pub fn term_to_string(t: &Term) -> String {
    match t {
        Term::Name(s) | Term::JustHappened(s) | Term::Point(s) | Term::Macro(s) => s.clone(),
        Term::Happening(a) => format!("happening({a})"),
        Term::Done(a) => format!("done({a})"),
        Term::Output { action, label } => format!("{action}.{label}"),
        Term::IntervalOpen(i) => format!("is_{i}"),
        Term::Counter { counter, op, value } => format!("{counter} {} {value}", op.symbol()),
    }
}

fn write_form(out: &mut String, f: &InnerForm, ctx: u8) {
    let (prec, body) = match f {
        InnerForm::Top => (5, "true".to_string()),
        InnerForm::Bottom => (5, "false".to_string()),
        InnerForm::Atom(t) => (5, term_to_string(t)),
        InnerForm::Not(a) => (4, format!("!{}", form_at(a, 4))),
        InnerForm::Eventually(a) => (4, format!("<> {}", form_at(a, 4))),
        InnerForm::EventuallyIn(i, a) => (4, format!("<>_{i} {}", form_at(a, 4))),
        InnerForm::And(a, b) => (3, format!("{} & {}", form_at(a, 3), form_at(b, 4))),
        InnerForm::Or(a, b) => (2, format!("{} | {}", form_at(a, 2), form_at(b, 3))),
        InnerForm::Implies(a, b) => (1, format!("{} -> {}", form_at(a, 2), form_at(b, 1))),
    };
    if prec < ctx {
        let _ = write!(out, "({body})");
    } else {
        out.push_str(&body);
    }
}

fn form_at(f: &InnerForm, ctx: u8) -> String {
    let mut s = String::new();
    write_form(&mut s, f, ctx);
    s
}

pub fn formula_to_string(f: &InnerForm) -> String {
    form_at(f, 0)
}

pub fn rule_form_to_string(r: &RuleForm) -> String {
    let op = match r.modality {
        Modality::Obligation => "O",
        Modality::Prohibition => "F",
        Modality::EventualObligation => "OE",
        Modality::Permission => "P",
    };
    match &r.reparation {
        Some(rep) => format!("{op}[{}]({})", formula_to_string(rep), formula_to_string(&r.body)),
        None => format!("{op}({})", formula_to_string(&r.body)),
    }
}

fn scope_clause(scope: &Option<String>) -> String {
    match scope {
        Some(s) => format!(" occurs only in scope {s}"),
        None => String::new(),
    }
}

/// Prints a document in canonical `.flx` form.
pub fn print_document(doc: &SpecDocument) -> String {
    let mut out = String::new();
    for a in &doc.actions {
        out.push_str("action ");
        out.push_str(&a.name);
        if !a.outputs.is_empty() {
            let _ = write!(out, " output values {{ {} }}", a.outputs.join(", "));
        }
        out.push_str(&scope_clause(&a.scope));
        if let Some(g) = &a.guard {
            let _ = write!(out, " requires that {}", formula_to_string(g));
        }
        out.push('\n');
    }
    for i in &doc.intervals {
        let end = match &i.end {
            IntervalEnd::Action(e) => e.as_str(),
            IntervalEnd::Infinity => "+inf",
        };
        let _ = write!(
            out,
            "interval {} delimited by actions {}-{}{}",
            i.name,
            i.begin,
            end,
            scope_clause(&i.scope)
        );
        if i.repeatedly {
            out.push_str(" repeatedly");
        }
        out.push('\n');
    }
    for c in &doc.counters {
        let _ = write!(out, "counter {}", c.name);
        for (kw, list) in [
            ("increases", &c.inc_actions),
            ("decreases", &c.dec_actions),
            ("resets", &c.reset_actions),
        ] {
            if !list.is_empty() {
                let _ = write!(out, " {kw} with actions {}", list.join(", "));
            }
        }
        let _ = writeln!(out, " bound {}", c.bound);
    }
    for t in &doc.temporal_actions {
        let _ = writeln!(out, "temporal actions {}", t.points.join(", "));
    }
    for m in &doc.macros {
        let _ = writeln!(out, "macro {} = {}", m.name, formula_to_string(&m.body));
    }
    for inc in &doc.incompatibilities {
        let _ = writeln!(
            out,
            "incompatible {}, {}",
            formula_to_string(&inc.left),
            formula_to_string(&inc.right)
        );
    }
    for r in &doc.rules {
        let _ = write!(out, "rule {}: {}", r.name, rule_form_to_string(&r.form));
        if let Some(t) = &r.exception_of {
            let _ = write!(out, " exception to {t}");
        }
        out.push('\n');
    }
    for q in &doc.queries {
        let _ = writeln!(out, "query {}: {}", q.name, rule_form_to_string(&q.form));
    }
    out
}
