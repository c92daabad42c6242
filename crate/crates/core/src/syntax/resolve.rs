//! Name resolution and validation of parsed statements.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::error::{ErrorKind, SyntaxError};
use super::parser::{Formula, Located, ParsedRuleForm, Stmt};

pub(crate) const DEFAULT_COUNTER_BOUND: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Action,
    Interval,
    Counter,
    Point,
    Macro,
    Rule,
    Query,
}

/// The global namespace of a document.
#[derive(Debug, Default, Clone)]
pub(crate) struct Namespace {
    names: HashMap<String, Kind>,
    outputs: HashMap<String, Vec<String>>,
    bounds: HashMap<String, u32>,
}

impl Namespace {
    pub(crate) fn from_document(doc: &SpecDocument) -> Self {
        let mut ns = Namespace::default();
        for a in &doc.actions {
            ns.names.insert(a.name.clone(), Kind::Action);
            ns.outputs.insert(a.name.clone(), a.outputs.clone());
        }
        for i in &doc.intervals {
            ns.names.insert(i.name.clone(), Kind::Interval);
        }
        for c in &doc.counters {
            ns.names.insert(c.name.clone(), Kind::Counter);
            ns.bounds.insert(c.name.clone(), c.bound);
        }
        for t in &doc.temporal_actions {
            for p in &t.points {
                ns.names.insert(p.clone(), Kind::Point);
            }
        }
        for m in &doc.macros {
            ns.names.insert(m.name.clone(), Kind::Macro);
        }
        for r in &doc.rules {
            ns.names.insert(r.name.clone(), Kind::Rule);
        }
        for q in &doc.queries {
            ns.names.insert(q.name.clone(), Kind::Query);
        }
        ns
    }

    fn declare(&mut self, name: &Located<String>, kind: Kind) -> Result<(), SyntaxError> {
        if self.names.contains_key(&name.value) || self.shadows_interval_test(&name.value) {
            return Err(SyntaxError::new(
                name.line,
                name.column,
                ErrorKind::Duplicate(name.value.clone()),
            ));
        }
        self.names.insert(name.value.clone(), kind);
        Ok(())
    }

    fn shadows_interval_test(&self, name: &str) -> bool {
        name.strip_prefix("is_")
            .is_some_and(|rest| self.names.get(rest) == Some(&Kind::Interval))
    }

    fn kind(&self, name: &str) -> Option<Kind> {
        self.names.get(name).copied()
    }

    fn is(&self, name: &str, kind: Kind) -> bool {
        self.kind(name) == Some(kind)
    }

    /// Resolves every term of `f`, reporting errors at the recorded positions.
    pub(crate) fn resolve(&self, f: &Formula) -> Result<InnerForm, SyntaxError> {
        let mut idx = 0;
        self.resolve_node(&f.form, f, &mut idx)
    }

    fn pos(f: &Formula, idx: usize) -> (usize, usize) {
        f.positions.get(idx).copied().unwrap_or((f.line, f.column))
    }

    fn resolve_node(
        &self,
        node: &InnerForm,
        f: &Formula,
        idx: &mut usize,
    ) -> Result<InnerForm, SyntaxError> {
        Ok(match node {
            InnerForm::Top | InnerForm::Bottom => node.clone(),
            InnerForm::Atom(t) => {
                let (line, col) = Self::pos(f, *idx);
                *idx += 1;
                InnerForm::Atom(
                    self.resolve_term(t).map_err(|k| SyntaxError::new(line, col, k))?,
                )
            }
            InnerForm::Not(a) => InnerForm::not(self.resolve_node(a, f, idx)?),
            InnerForm::Eventually(a) => InnerForm::eventually(self.resolve_node(a, f, idx)?),
            InnerForm::EventuallyIn(i, a) => {
                let (line, col) = Self::pos(f, *idx);
                *idx += 1;
                if !self.is(i, Kind::Interval) {
                    return Err(SyntaxError::new(
                        line,
                        col,
                        ErrorKind::Undeclared { what: "interval", name: i.clone() },
                    ));
                }
                InnerForm::eventually_in(i.clone(), self.resolve_node(a, f, idx)?)
            }
            InnerForm::And(a, b) => {
                let a = self.resolve_node(a, f, idx)?;
                InnerForm::and(a, self.resolve_node(b, f, idx)?)
            }
            InnerForm::Or(a, b) => {
                let a = self.resolve_node(a, f, idx)?;
                InnerForm::or(a, self.resolve_node(b, f, idx)?)
            }
            InnerForm::Implies(a, b) => {
                let a = self.resolve_node(a, f, idx)?;
                InnerForm::implies(a, self.resolve_node(b, f, idx)?)
            }
        })
    }

    fn need_action(&self, a: &str) -> Result<(), ErrorKind> {
        if self.is(a, Kind::Action) {
            Ok(())
        } else {
            Err(ErrorKind::Undeclared { what: "action", name: a.to_string() })
        }
    }

    fn resolve_term(&self, t: &Term) -> Result<Term, ErrorKind> {
        match t {
            Term::Name(s) => match self.kind(s) {
                Some(Kind::Action) => Ok(Term::JustHappened(s.clone())),
                Some(Kind::Point) => Ok(Term::Point(s.clone())),
                Some(Kind::Macro) => Ok(Term::Macro(s.clone())),
                Some(Kind::Counter) => Err(ErrorKind::Invalid(format!(
                    "counter `{s}` must be compared with a literal, e.g. `{s} > 0`"
                ))),
                _ => match s.strip_prefix("is_") {
                    Some(i) if self.is(i, Kind::Interval) => Ok(Term::IntervalOpen(i.to_string())),
                    _ => Err(ErrorKind::Undeclared { what: "identifier", name: s.clone() }),
                },
            },
            Term::JustHappened(a) | Term::Happening(a) | Term::Done(a) => {
                self.need_action(a)?;
                Ok(t.clone())
            }
            Term::Output { action, label } => {
                self.need_action(action)?;
                let outs = &self.outputs[action];
                if !outs.contains(label) {
                    return Err(ErrorKind::Undeclared {
                        what: "output label",
                        name: format!("{action}.{label}"),
                    });
                }
                Ok(t.clone())
            }
            Term::Counter { counter, value, .. } => {
                let bound = *self.bounds.get(counter).ok_or_else(|| ErrorKind::Undeclared {
                    what: "counter",
                    name: counter.clone(),
                })?;
                if *value > bound {
                    return Err(ErrorKind::CounterLiteralOutOfRange {
                        counter: counter.clone(),
                        value: *value,
                        bound,
                    });
                }
                Ok(t.clone())
            }
            Term::IntervalOpen(i) => {
                if self.is(i, Kind::Interval) {
                    Ok(t.clone())
                } else {
                    Err(ErrorKind::Undeclared { what: "interval", name: i.clone() })
                }
            }
            Term::Point(p) => {
                if self.is(p, Kind::Point) {
                    Ok(t.clone())
                } else {
                    Err(ErrorKind::Undeclared { what: "time point", name: p.clone() })
                }
            }
            Term::Macro(m) => {
                if self.is(m, Kind::Macro) {
                    Ok(t.clone())
                } else {
                    Err(ErrorKind::Undeclared { what: "macro", name: m.clone() })
                }
            }
        }
    }

    pub(crate) fn resolve_rule_form(&self, f: &ParsedRuleForm) -> Result<RuleForm, SyntaxError> {
        Ok(RuleForm {
            modality: f.modality,
            body: self.resolve(&f.body)?,
            reparation: f.reparation.as_ref().map(|r| self.resolve(r)).transpose()?,
        })
    }
}

fn require_state_formula(
    form: &InnerForm,
    at: &Formula,
    what: &'static str,
) -> Result<(), SyntaxError> {
    if form.is_state_formula() {
        Ok(())
    } else {
        Err(SyntaxError::new(at.line, at.column, ErrorKind::TemporalNotAllowed(what)))
    }
}

/// Builds a resolved (but not macro-expanded) document.
pub(crate) fn resolve(stmts: Vec<Stmt>) -> Result<SpecDocument, SyntaxError> {
    let mut ns = Namespace::default();
    let mut doc = SpecDocument::default();

    // Explicit actions first, so that interval and counter delimiters may refer to them
    // regardless of declaration order.
    for s in &stmts {
        if let Stmt::Action { name, outputs, .. } = s {
            ns.declare(name, Kind::Action)?;
            let mut seen = HashSet::new();
            for o in outputs {
                if !seen.insert(o.value.as_str()) {
                    return Err(SyntaxError::new(
                        o.line,
                        o.column,
                        ErrorKind::Duplicate(format!("{}.{}", name.value, o.value)),
                    ));
                }
            }
            ns.outputs
                .insert(name.value.clone(), outputs.iter().map(|o| o.value.clone()).collect());
        }
    }
    let mut implicit = Vec::new();
    let mut mention = |ns: &mut Namespace, a: &Located<String>| -> Result<(), SyntaxError> {
        match ns.kind(&a.value) {
            Some(Kind::Action) => Ok(()),
            None => {
                ns.declare(a, Kind::Action)?;
                ns.outputs.insert(a.value.clone(), Vec::new());
                implicit.push(a.value.clone());
                Ok(())
            }
            Some(_) => Err(SyntaxError::new(
                a.line,
                a.column,
                ErrorKind::Invalid(format!("`{}` is not an action", a.value)),
            )),
        }
    };

    // Declarations other than actions, formulas resolved later.
    for s in &stmts {
        match s {
            Stmt::Interval { name, begin, end, .. } => {
                ns.declare(name, Kind::Interval)?;
                mention(&mut ns, begin)?;
                if let Some(e) = end {
                    mention(&mut ns, e)?;
                    if e.value == begin.value {
                        return Err(SyntaxError::new(
                            e.line,
                            e.column,
                            ErrorKind::Invalid(format!(
                                "interval `{}` must be delimited by two different actions",
                                name.value
                            )),
                        ));
                    }
                }
            }
            Stmt::Counter { name, inc, dec, reset, bound } => {
                ns.declare(name, Kind::Counter)?;
                let mut seen: HashSet<&str> = HashSet::new();
                for a in inc.iter().chain(dec).chain(reset) {
                    mention(&mut ns, a)?;
                    if !seen.insert(a.value.as_str()) {
                        return Err(SyntaxError::new(
                            a.line,
                            a.column,
                            ErrorKind::Invalid(format!(
                                "action `{}` appears twice in counter `{}`",
                                a.value, name.value
                            )),
                        ));
                    }
                }
                let b = match bound {
                    Some(b) if b.value == 0 || b.value > 255 => {
                        return Err(SyntaxError::new(
                            b.line,
                            b.column,
                            ErrorKind::BadCounterBound(b.value),
                        ))
                    }
                    Some(b) => b.value,
                    None => {
                        doc.warnings.push(Warning {
                            line: name.line,
                            column: name.column,
                            message: format!(
                                "counter `{}` has no bound; using {DEFAULT_COUNTER_BOUND}",
                                name.value
                            ),
                        });
                        DEFAULT_COUNTER_BOUND
                    }
                };
                ns.bounds.insert(name.value.clone(), b);
            }
            Stmt::Temporal { points } => {
                if points.len() < 2 {
                    let p = &points[0];
                    return Err(SyntaxError::new(
                        p.line,
                        p.column,
                        ErrorKind::Invalid("temporal actions need at least two points".into()),
                    ));
                }
                for p in points {
                    ns.declare(p, Kind::Point)?;
                }
            }
            Stmt::Macro { name, .. } => ns.declare(name, Kind::Macro)?,
            Stmt::Rule { name, .. } => ns.declare(name, Kind::Rule)?,
            Stmt::Query { name, .. } => ns.declare(name, Kind::Query)?,
            Stmt::Action { .. } | Stmt::Incompatible { .. } => {}
        }
    }
    // A macro named `is_x` declared before interval `x` slips past `declare`.
    for s in &stmts {
        if let Stmt::Macro { name, .. } = s {
            if ns.shadows_interval_test(&name.value) {
                return Err(SyntaxError::new(
                    name.line,
                    name.column,
                    ErrorKind::Duplicate(name.value.clone()),
                ));
            }
        }
    }

    let check_interval = |ns: &Namespace, i: &Located<String>| -> Result<(), SyntaxError> {
        if ns.is(&i.value, Kind::Interval) {
            Ok(())
        } else {
            Err(SyntaxError::new(
                i.line,
                i.column,
                ErrorKind::Undeclared { what: "interval", name: i.value.clone() },
            ))
        }
    };

    for s in &stmts {
        match s {
            Stmt::Action { name, outputs, scope, guard } => {
                if let Some(sc) = scope {
                    check_interval(&ns, sc)?;
                }
                let guard = match guard {
                    Some(g) => {
                        let f = ns.resolve(g)?;
                        require_state_formula(&f, g, "an action guard")?;
                        Some(f)
                    }
                    None => None,
                };
                doc.actions.push(ActionDecl {
                    name: name.value.clone(),
                    outputs: outputs.iter().map(|o| o.value.clone()).collect(),
                    scope: scope.as_ref().map(|s| s.value.clone()),
                    guard,
                });
            }
            Stmt::Interval { name, begin, end, scope, repeatedly } => {
                if let Some(sc) = scope {
                    check_interval(&ns, sc)?;
                }
                doc.intervals.push(IntervalDecl {
                    name: name.value.clone(),
                    begin: begin.value.clone(),
                    end: match end {
                        Some(e) => IntervalEnd::Action(e.value.clone()),
                        None => IntervalEnd::Infinity,
                    },
                    scope: scope.as_ref().map(|s| s.value.clone()),
                    repeatedly: *repeatedly,
                });
            }
            Stmt::Counter { name, inc, dec, reset, .. } => {
                let names = |v: &Vec<Located<String>>| v.iter().map(|a| a.value.clone()).collect();
                doc.counters.push(CounterDecl {
                    name: name.value.clone(),
                    inc_actions: names(inc),
                    dec_actions: names(dec),
                    reset_actions: names(reset),
                    bound: ns.bounds[&name.value],
                });
            }
            Stmt::Temporal { points } => doc.temporal_actions.push(TemporalActionsDecl {
                points: points.iter().map(|p| p.value.clone()).collect(),
            }),
            Stmt::Macro { name, body } => doc
                .macros
                .push(MacroDecl { name: name.value.clone(), body: ns.resolve(body)? }),
            Stmt::Incompatible { left, right } => {
                let l = ns.resolve(left)?;
                require_state_formula(&l, left, "an incompatibility operand")?;
                let r = ns.resolve(right)?;
                require_state_formula(&r, right, "an incompatibility operand")?;
                doc.incompatibilities.push(Incompatibility { left: l, right: r });
            }
            Stmt::Rule { name, form, .. } => doc.rules.push(Rule {
                name: name.value.clone(),
                form: ns.resolve_rule_form(form)?,
                exception_of: None,
                surface_text: form.surface.clone(),
            }),
            Stmt::Query { name, form } => {
                if form.modality == Modality::Permission {
                    return Err(SyntaxError::new(
                        name.line,
                        name.column,
                        ErrorKind::Invalid("queries cannot be permissions".into()),
                    ));
                }
                doc.queries.push(Query {
                    name: name.value.clone(),
                    form: ns.resolve_rule_form(form)?,
                    surface_text: form.surface.clone(),
                })
            }
        }
    }
    for a in implicit {
        doc.actions.push(ActionDecl { name: a, outputs: Vec::new(), scope: None, guard: None });
    }

    // Exception flags need every rule resolved first.
    for s in &stmts {
        if let Stmt::Rule { name, exception_of: Some(target), .. } = s {
            let rule_idx = doc.rules.iter().position(|r| r.name == name.value).unwrap();
            if !doc.rules[rule_idx].form.is_permission() {
                return Err(SyntaxError::new(
                    target.line,
                    target.column,
                    ErrorKind::ExceptionOnNonPermission,
                ));
            }
            match doc.rule(&target.value) {
                None => {
                    return Err(SyntaxError::new(
                        target.line,
                        target.column,
                        ErrorKind::Undeclared { what: "rule", name: target.value.clone() },
                    ))
                }
                Some(r) if r.form.modality != Modality::Prohibition => {
                    return Err(SyntaxError::new(
                        target.line,
                        target.column,
                        ErrorKind::ExceptionTargetNotProhibition(target.value.clone()),
                    ))
                }
                Some(_) => {}
            }
            doc.rules[rule_idx].exception_of = Some(target.value.clone());
        }
    }

    check_macro_cycles(&doc, &stmts)?;
    Ok(doc)
}

fn check_macro_cycles(doc: &SpecDocument, stmts: &[Stmt]) -> Result<(), SyntaxError> {
    if let Some(m) = find_macro_cycle(doc) {
        let (line, column) = stmts
            .iter()
            .find_map(|s| match s {
                Stmt::Macro { name, .. } if name.value == m => Some((name.line, name.column)),
                _ => None,
            })
            .unwrap_or((0, 0));
        return Err(SyntaxError::new(line, column, ErrorKind::CyclicMacro(m)));
    }
    Ok(())
}

/// Returns the name of a macro on a reference cycle, if any.
pub(crate) fn find_macro_cycle(doc: &SpecDocument) -> Option<String> {
    let bodies: HashMap<&str, &InnerForm> =
        doc.macros.iter().map(|m| (m.name.as_str(), &m.body)).collect();
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        m: &'a str,
        bodies: &HashMap<&'a str, &'a InnerForm>,
        marks: &mut HashMap<&'a str, Mark>,
    ) -> Option<String> {
        match marks.get(m) {
            Some(Mark::Done) => return None,
            Some(Mark::Active) => return Some(m.to_string()),
            None => {}
        }
        marks.insert(m, Mark::Active);
        let mut refs = Vec::new();
        if let Some(b) = bodies.get(m) {
            b.for_each_term(&mut |t| {
                if let Term::Macro(n) = t {
                    refs.push(n.as_str());
                }
            });
        }
        for r in refs {
            if let Some(c) = visit(r, bodies, marks) {
                return Some(c);
            }
        }
        marks.insert(m, Mark::Done);
        None
    }
    let mut marks = HashMap::new();
    for m in &doc.macros {
        if let Some(c) = visit(&m.name, &bodies, &mut marks) {
            return Some(c);
        }
    }
    None
}
