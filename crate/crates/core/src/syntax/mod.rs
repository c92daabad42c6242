//! The `.flx` frontend: lexing, parsing, name resolution, macro expansion and
//! exception rewriting.

pub mod ast;
pub mod error;
mod lexer;
mod parser;
pub mod pretty;
mod resolve;

use std::collections::HashMap;

pub use ast::*;
pub use error::{ErrorKind, SyntaxError};
pub use pretty::{formula_to_string, print_document, rule_form_to_string, term_to_string};

use resolve::Namespace;

/// Parses, resolves and macro-expands a `.flx` source.
pub fn parse_spec(source: &str) -> Result<SpecDocument, SyntaxError> {
    expand_macros(&parse_unexpanded(source)?)
}

/// Parses and resolves a `.flx` source, leaving macro references in place.
pub fn parse_unexpanded(source: &str) -> Result<SpecDocument, SyntaxError> {
    resolve::resolve(parser::parse_statements(source)?)
}

/// Parses a rule form such as `O[rho](phi)` against the declarations of `doc`.
pub fn parse_rule_form_in(doc: &SpecDocument, text: &str) -> Result<RuleForm, SyntaxError> {
    let parsed = parser::parse_rule_form(text)?;
    let ns = Namespace::from_document(doc);
    let form = ns.resolve_rule_form(&parsed)?;
    let defs = macro_table(doc)?;
    Ok(RuleForm {
        modality: form.modality,
        body: substitute(&form.body, &defs),
        reparation: form.reparation.as_ref().map(|r| substitute(r, &defs)),
    })
}

/// Parses an inner formula against the declarations of `doc`.
pub fn parse_formula_in(doc: &SpecDocument, text: &str) -> Result<InnerForm, SyntaxError> {
    let parsed = parser::parse_formula(text)?;
    let ns = Namespace::from_document(doc);
    let f = ns.resolve(&parsed)?;
    Ok(substitute(&f, &macro_table(doc)?))
}

/// Fully expanded macro bodies, keyed by name.
fn macro_table(doc: &SpecDocument) -> Result<HashMap<String, InnerForm>, SyntaxError> {
    if let Some(m) = resolve::find_macro_cycle(doc) {
        return Err(SyntaxError::new(0, 0, ErrorKind::CyclicMacro(m)));
    }
    let raw: HashMap<&str, &InnerForm> =
        doc.macros.iter().map(|m| (m.name.as_str(), &m.body)).collect();
    fn expand(
        name: &str,
        raw: &HashMap<&str, &InnerForm>,
        done: &mut HashMap<String, InnerForm>,
    ) -> InnerForm {
        if let Some(f) = done.get(name) {
            return f.clone();
        }
        let body = raw[name].map_terms(&mut |t| match t {
            Term::Macro(m) => expand(m, raw, done),
            other => InnerForm::Atom(other.clone()),
        });
        done.insert(name.to_string(), body.clone());
        body
    }
    let mut done = HashMap::new();
    for m in &doc.macros {
        expand(&m.name, &raw, &mut done);
    }
    Ok(done)
}

fn substitute(f: &InnerForm, defs: &HashMap<String, InnerForm>) -> InnerForm {
    f.map_terms(&mut |t| match t {
        Term::Macro(m) => defs[m].clone(),
        other => InnerForm::Atom(other.clone()),
    })
}

/// Replaces every macro reference by its (transitively expanded) body.
///
/// Macro declarations stay in the document, with expanded bodies.
pub fn expand_macros(doc: &SpecDocument) -> Result<SpecDocument, SyntaxError> {
    let defs = macro_table(doc)?;
    let mut out = doc.clone();
    for m in &mut out.macros {
        m.body = defs[&m.name].clone();
    }
    for a in &mut out.actions {
        if let Some(g) = &a.guard {
            a.guard = Some(substitute(g, &defs));
        }
    }
    for inc in &mut out.incompatibilities {
        inc.left = substitute(&inc.left, &defs);
        inc.right = substitute(&inc.right, &defs);
    }
    let forms = out.rules.iter_mut().map(|r| &mut r.form).chain(out.queries.iter_mut().map(|q| &mut q.form));
    for f in forms {
        f.body = substitute(&f.body, &defs);
        if let Some(r) = &f.reparation {
            f.reparation = Some(substitute(r, &defs));
        }
    }
    Ok(out)
}

/// Folds permissions flagged as exceptions into the prohibitions they except:
/// `F(φ)` with exception `P(ψ)` becomes `F(φ ∧ ¬ψ)`.
///
/// The permissions stay in the document. Applying twice is a no-op.
pub fn apply_exceptions(doc: &SpecDocument) -> Result<SpecDocument, SyntaxError> {
    let mut out = doc.clone();
    if doc.exceptions_applied {
        return Ok(out);
    }
    let mut by_target: Vec<(usize, Vec<&Rule>)> = Vec::new();
    for p in doc.rules.iter().filter(|r| r.exception_of.is_some()) {
        let target = p.exception_of.as_deref().unwrap();
        let idx = doc.rules.iter().position(|r| r.name == target).ok_or_else(|| {
            SyntaxError::new(
                0,
                0,
                ErrorKind::Undeclared { what: "rule", name: target.to_string() },
            )
        })?;
        if doc.rules[idx].form.modality != Modality::Prohibition {
            return Err(SyntaxError::new(
                0,
                0,
                ErrorKind::ExceptionTargetNotProhibition(target.to_string()),
            ));
        }
        match by_target.iter_mut().find(|(i, _)| *i == idx) {
            Some((_, v)) => v.push(p),
            None => by_target.push((idx, vec![p])),
        }
    }
    for (idx, perms) in by_target {
        let rule = &mut out.rules[idx];
        let original = rule.surface_text.clone();
        for p in &perms {
            rule.form.body = InnerForm::and(rule.form.body.clone(), InnerForm::not(p.form.body.clone()));
        }
        let names: Vec<&str> = perms.iter().map(|p| p.name.as_str()).collect();
        rule.surface_text = format!(
            "{} # rewritten from {} by exception {}",
            rule_form_to_string(&rule.form),
            original,
            names.join(", ")
        );
    }
    out.exceptions_applied = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(t: Term) -> InnerForm {
        InnerForm::Atom(t)
    }

    #[test]
    fn interval_declaration_from_case_study() {
        let doc = parse_spec("interval student delimited by actions Enroll-Graduate").unwrap();
        assert_eq!(
            doc.intervals,
            vec![IntervalDecl {
                name: "student".into(),
                begin: "Enroll".into(),
                end: IntervalEnd::Action("Graduate".into()),
                scope: None,
                repeatedly: false,
            }]
        );
        // bounding actions are declared implicitly
        assert!(doc.action("Enroll").is_some() && doc.action("Graduate").is_some());
    }

    #[test]
    fn empty_input() {
        let doc = parse_spec("").unwrap();
        assert_eq!(doc, SpecDocument::default());
        let doc = parse_spec("# only a comment\n").unwrap();
        assert!(doc.rules.is_empty() && doc.actions.is_empty());
    }

    #[test]
    fn name_resolution() {
        let doc = parse_spec(
            "action A output values { x, y }\n\
             interval i delimited by actions B-C\n\
             counter c increases with action A bound 3\n\
             temporal actions t1, t2\n\
             rule r: O(A & happening(B) & done(C) & A.x & is_i & c >= 3 & t1)",
        )
        .unwrap();
        let mut terms = Vec::new();
        doc.rules[0].form.body.for_each_term(&mut |t| terms.push(t.clone()));
        assert_eq!(
            terms,
            vec![
                Term::JustHappened("A".into()),
                Term::Happening("B".into()),
                Term::Done("C".into()),
                Term::Output { action: "A".into(), label: "x".into() },
                Term::IntervalOpen("i".into()),
                Term::Counter { counter: "c".into(), op: CmpOp::Ge, value: 3 },
                Term::Point("t1".into()),
            ]
        );
    }

    #[test]
    fn error_positions() {
        let e = parse_spec("action A\nrule r: O(A & Bogus)").unwrap_err();
        assert_eq!((e.line, e.column), (2, 15));
        assert_eq!(e.to_string(), "2:15: undeclared identifier `Bogus`");
    }

    #[test]
    fn duplicate_declarations_rejected() {
        let e = parse_spec("action A\naction A").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Duplicate("A".into()));
        let e = parse_spec("action A\nrule A: O(A)").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Duplicate("A".into()));
        let e = parse_spec("interval x delimited by actions B-C\nmacro is_x = B").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Duplicate("is_x".into()));
        let e = parse_spec("macro is_x = B\ninterval x delimited by actions B-C").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Duplicate("is_x".into()));
    }

    #[test]
    fn counter_literal_out_of_range() {
        let e = parse_spec("counter c increases with action A bound 2\nrule r: O(c < 3)")
            .unwrap_err();
        assert!(matches!(e.kind, ErrorKind::CounterLiteralOutOfRange { value: 3, bound: 2, .. }));
    }

    #[test]
    fn counter_default_bound_warns() {
        let doc = parse_spec("counter c increases with action A").unwrap();
        assert_eq!(doc.counters[0].bound, 8);
        assert_eq!(doc.warnings.len(), 1);
    }

    #[test]
    fn cyclic_macros_rejected() {
        let e = parse_spec("action A\nmacro m = A & n\nmacro n = !m").unwrap_err();
        assert!(matches!(e.kind, ErrorKind::CyclicMacro(_)));
        assert_eq!(e.line, 2);
    }

    #[test]
    fn exception_must_target_prohibition() {
        let e = parse_spec("action A\nrule o: O(A)\nrule p: P(A) exception to o").unwrap_err();
        assert_eq!(e.kind, ErrorKind::ExceptionTargetNotProhibition("o".into()));
        let e = parse_spec("action A\nrule f: F(A)\nrule p: O(A) exception to f").unwrap_err();
        assert_eq!(e.kind, ErrorKind::ExceptionOnNonPermission);
    }

    #[test]
    fn guards_must_be_state_formulas() {
        let e = parse_spec("action A requires that <> A").unwrap_err();
        assert!(matches!(e.kind, ErrorKind::TemporalNotAllowed(_)));
    }

    #[test]
    fn macro_expansion_of_case_study_macro() {
        let doc = parse_spec(
            "action Apply\n\
             action ElectWinners output values { teacher_c1, teacher_c2, teacher_c3, no_teacher }\n\
             macro is_teacher = done(Apply) & (ElectWinners.teacher_c1 | ElectWinners.teacher_c2 | ElectWinners.teacher_c3)\n\
             rule r: O(is_teacher)",
        )
        .unwrap();
        let out = |l: &str| atom(Term::Output { action: "ElectWinners".into(), label: l.into() });
        let expected = InnerForm::and(
            atom(Term::Done("Apply".into())),
            InnerForm::or(InnerForm::or(out("teacher_c1"), out("teacher_c2")), out("teacher_c3")),
        );
        assert_eq!(doc.rules[0].form.body, expected);
    }

    #[test]
    fn expand_without_macros_is_identity() {
        let doc = parse_unexpanded("action A\nrule r: F(A)").unwrap();
        assert_eq!(expand_macros(&doc).unwrap(), doc);
    }

    #[test]
    fn nested_macros_match_repeated_substitution() {
        let src = "action A\naction B\nmacro inner = A & !B\nmacro outer = inner | <> inner\nrule r: O(outer -> B)";
        let raw = parse_unexpanded(src).unwrap();
        // naive oracle: substitute one level at a time until nothing changes
        let mut f = raw.rules[0].form.body.clone();
        loop {
            let next = f.map_terms(&mut |t| match t {
                Term::Macro(m) => raw.macros.iter().find(|d| &d.name == m).unwrap().body.clone(),
                other => InnerForm::Atom(other.clone()),
            });
            if next == f {
                break;
            }
            f = next;
        }
        let expanded = expand_macros(&raw).unwrap();
        assert_eq!(expanded.rules[0].form.body, f);
        assert_eq!(expand_macros(&expanded).unwrap(), expanded);
    }

    #[test]
    fn exception_rewrites_prohibition() {
        let doc = parse_spec(
            "action kill\naction self_defense\nrule no_kill: F(kill)\nrule sd: P(self_defense) exception to no_kill",
        )
        .unwrap();
        let out = apply_exceptions(&doc).unwrap();
        assert_eq!(formula_to_string(&out.rules[0].form.body), "kill & !self_defense");
        assert!(out.rules[0].surface_text.contains("rewritten from F(kill)"));
        assert_eq!(out.rules.len(), 2);
        assert_eq!(apply_exceptions(&out).unwrap(), out);
    }

    #[test]
    fn without_exceptions_rewrite_is_identity() {
        let doc = parse_spec("action A\nrule f: F(A)").unwrap();
        let out = apply_exceptions(&doc).unwrap();
        assert_eq!(out.rules, doc.rules);
    }

    #[test]
    fn surface_text_reparses_to_same_form() {
        let doc = parse_spec(
            "interval ban delimited by actions CommitFault-OneYearPassed\n\
             interval inside_building delimited by actions Enter-Exit\n\
             rule r1: F[!<>_ban is_inside_building](CommitFault)",
        )
        .unwrap();
        let r = &doc.rules[0];
        assert_eq!(parse_rule_form_in(&doc, &r.surface_text).unwrap(), r.form);
    }
}
