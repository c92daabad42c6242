//! Abstract syntax of `.flx` documents.

use serde::Serialize;

/// Comparison operator of a counter test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn eval(self, lhs: u32, rhs: u32) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

/// Atomic term of an inner formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Term {
    /// Bare identifier, not yet resolved against the declarations.
    Name(String),
    /// `A`: the action finished in the current state.
    JustHappened(String),
    /// `happening(A)`: the action signal is on.
    Happening(String),
    /// `done(A)`: the action has completed at least once.
    Done(String),
    /// `A.label`
    Output { action: String, label: String },
    /// `is_<interval>`
    IntervalOpen(String),
    /// `<counter> <op> k`
    Counter { counter: String, op: CmpOp, value: u32 },
    /// A temporal action point.
    Point(String),
    /// Reference to a macro; removed by macro expansion.
    Macro(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum InnerForm {
    Top,
    Bottom,
    Atom(Term),
    Not(Box<InnerForm>),
    And(Box<InnerForm>, Box<InnerForm>),
    Or(Box<InnerForm>, Box<InnerForm>),
    Implies(Box<InnerForm>, Box<InnerForm>),
    Eventually(Box<InnerForm>),
    EventuallyIn(String, Box<InnerForm>),
}

impl InnerForm {
    pub fn not(f: InnerForm) -> InnerForm {
        InnerForm::Not(Box::new(f))
    }

    pub fn and(a: InnerForm, b: InnerForm) -> InnerForm {
        InnerForm::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: InnerForm, b: InnerForm) -> InnerForm {
        InnerForm::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: InnerForm, b: InnerForm) -> InnerForm {
        InnerForm::Implies(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: InnerForm) -> InnerForm {
        InnerForm::Eventually(Box::new(f))
    }

    pub fn eventually_in(interval: impl Into<String>, f: InnerForm) -> InnerForm {
        InnerForm::EventuallyIn(interval.into(), Box::new(f))
    }

    pub fn atom(t: Term) -> InnerForm {
        InnerForm::Atom(t)
    }

    /// True when the formula has no temporal operator.
    pub fn is_state_formula(&self) -> bool {
        match self {
            InnerForm::Top | InnerForm::Bottom | InnerForm::Atom(_) => true,
            InnerForm::Not(a) => a.is_state_formula(),
            InnerForm::And(a, b) | InnerForm::Or(a, b) | InnerForm::Implies(a, b) => {
                a.is_state_formula() && b.is_state_formula()
            }
            InnerForm::Eventually(_) | InnerForm::EventuallyIn(..) => false,
        }
    }

    /// Visits every term in left-to-right order.
    pub fn for_each_term<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            InnerForm::Top | InnerForm::Bottom => {}
            InnerForm::Atom(t) => f(t),
            InnerForm::Not(a) | InnerForm::Eventually(a) | InnerForm::EventuallyIn(_, a) => {
                a.for_each_term(f)
            }
            InnerForm::And(a, b) | InnerForm::Or(a, b) | InnerForm::Implies(a, b) => {
                a.for_each_term(f);
                b.for_each_term(f);
            }
        }
    }

    pub fn for_each_interval<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            InnerForm::Top | InnerForm::Bottom => {}
            InnerForm::Atom(Term::IntervalOpen(i)) => f(i),
            InnerForm::Atom(_) => {}
            InnerForm::Not(a) | InnerForm::Eventually(a) => a.for_each_interval(f),
            InnerForm::EventuallyIn(i, a) => {
                f(i);
                a.for_each_interval(f)
            }
            InnerForm::And(a, b) | InnerForm::Or(a, b) | InnerForm::Implies(a, b) => {
                a.for_each_interval(f);
                b.for_each_interval(f);
            }
        }
    }

    /// Rewrites every term bottom-up.
    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> InnerForm) -> InnerForm {
        match self {
            InnerForm::Top => InnerForm::Top,
            InnerForm::Bottom => InnerForm::Bottom,
            InnerForm::Atom(t) => f(t),
            InnerForm::Not(a) => InnerForm::not(a.map_terms(f)),
            InnerForm::And(a, b) => InnerForm::and(a.map_terms(f), b.map_terms(f)),
            InnerForm::Or(a, b) => InnerForm::or(a.map_terms(f), b.map_terms(f)),
            InnerForm::Implies(a, b) => InnerForm::implies(a.map_terms(f), b.map_terms(f)),
            InnerForm::Eventually(a) => InnerForm::eventually(a.map_terms(f)),
            InnerForm::EventuallyIn(i, a) => InnerForm::eventually_in(i.clone(), a.map_terms(f)),
        }
    }

    /// Eliminates `|` and `->` in favour of `!` and `&`.
    pub fn normalize(&self) -> InnerForm {
        match self {
            InnerForm::Top | InnerForm::Bottom | InnerForm::Atom(_) => self.clone(),
            InnerForm::Not(a) => InnerForm::not(a.normalize()),
            InnerForm::And(a, b) => InnerForm::and(a.normalize(), b.normalize()),
            InnerForm::Or(a, b) => InnerForm::not(InnerForm::and(
                InnerForm::not(a.normalize()),
                InnerForm::not(b.normalize()),
            )),
            InnerForm::Implies(a, b) => {
                InnerForm::not(InnerForm::and(a.normalize(), InnerForm::not(b.normalize())))
            }
            InnerForm::Eventually(a) => InnerForm::eventually(a.normalize()),
            InnerForm::EventuallyIn(i, a) => InnerForm::eventually_in(i.clone(), a.normalize()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            InnerForm::Top | InnerForm::Bottom | InnerForm::Atom(_) => 1,
            InnerForm::Not(a) | InnerForm::Eventually(a) | InnerForm::EventuallyIn(_, a) => {
                1 + a.size()
            }
            InnerForm::And(a, b) | InnerForm::Or(a, b) | InnerForm::Implies(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }
}

/// Deontic modality of a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Modality {
    Obligation,
    Prohibition,
    EventualObligation,
    Permission,
}

/// `O(φ)`, `F(φ)`, `O[ρ](φ)`, `F[ρ](φ)`, `OE(φ)` or `P(φ)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RuleForm {
    pub modality: Modality,
    pub body: InnerForm,
    /// Only present on obligations and prohibitions.
    pub reparation: Option<InnerForm>,
}

impl RuleForm {
    pub fn obligation(body: InnerForm) -> Self {
        RuleForm { modality: Modality::Obligation, body, reparation: None }
    }

    pub fn prohibition(body: InnerForm) -> Self {
        RuleForm { modality: Modality::Prohibition, body, reparation: None }
    }

    pub fn repaired_obligation(body: InnerForm, reparation: InnerForm) -> Self {
        RuleForm { modality: Modality::Obligation, body, reparation: Some(reparation) }
    }

    pub fn repaired_prohibition(body: InnerForm, reparation: InnerForm) -> Self {
        RuleForm { modality: Modality::Prohibition, body, reparation: Some(reparation) }
    }

    pub fn eventual(body: InnerForm) -> Self {
        RuleForm { modality: Modality::EventualObligation, body, reparation: None }
    }

    pub fn permission(body: InnerForm) -> Self {
        RuleForm { modality: Modality::Permission, body, reparation: None }
    }

    pub fn is_permission(&self) -> bool {
        self.modality == Modality::Permission
    }

    /// The reparation, treating `⊥` as no reparation at all (`O(φ) = O_⊥(φ)`).
    pub fn effective_reparation(&self) -> Option<&InnerForm> {
        match &self.reparation {
            Some(InnerForm::Bottom) | None => None,
            Some(r) => Some(r),
        }
    }

    /// The same rule without its reparation.
    pub fn stripped(&self) -> RuleForm {
        RuleForm { modality: self.modality, body: self.body.clone(), reparation: None }
    }

    pub fn operator_name(&self) -> &'static str {
        match (self.modality, self.reparation.is_some()) {
            (Modality::Obligation, false) => "O",
            (Modality::Obligation, true) => "O[]",
            (Modality::Prohibition, false) => "F",
            (Modality::Prohibition, true) => "F[]",
            (Modality::EventualObligation, _) => "OE",
            (Modality::Permission, _) => "P",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rule {
    pub name: String,
    pub form: RuleForm,
    /// Name of the prohibition this permission is an exception to.
    pub exception_of: Option<String>,
    /// Source text of the rule as written (or as rewritten by an exception).
    pub surface_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Query {
    pub name: String,
    pub form: RuleForm,
    pub surface_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActionDecl {
    pub name: String,
    pub outputs: Vec<String>,
    pub scope: Option<String>,
    pub guard: Option<InnerForm>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum IntervalEnd {
    Action(String),
    Infinity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntervalDecl {
    pub name: String,
    pub begin: String,
    pub end: IntervalEnd,
    pub scope: Option<String>,
    pub repeatedly: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CounterDecl {
    pub name: String,
    pub inc_actions: Vec<String>,
    pub dec_actions: Vec<String>,
    pub reset_actions: Vec<String>,
    pub bound: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemporalActionsDecl {
    pub points: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MacroDecl {
    pub name: String,
    pub body: InnerForm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Incompatibility {
    pub left: InnerForm,
    pub right: InnerForm,
}

/// A diagnostic that does not stop processing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Warning {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// A parsed, resolved `.flx` document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SpecDocument {
    pub actions: Vec<ActionDecl>,
    pub intervals: Vec<IntervalDecl>,
    pub counters: Vec<CounterDecl>,
    pub temporal_actions: Vec<TemporalActionsDecl>,
    pub macros: Vec<MacroDecl>,
    pub incompatibilities: Vec<Incompatibility>,
    pub rules: Vec<Rule>,
    pub queries: Vec<Query>,
    #[serde(skip)]
    pub warnings: Vec<Warning>,
    /// Set once exception flags have been folded into their prohibitions.
    #[serde(skip)]
    pub exceptions_applied: bool,
}

impl SpecDocument {
    pub fn action(&self, name: &str) -> Option<&ActionDecl> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn interval(&self, name: &str) -> Option<&IntervalDecl> {
        self.intervals.iter().find(|i| i.name == name)
    }

    pub fn counter(&self, name: &str) -> Option<&CounterDecl> {
        self.counters.iter().find(|c| c.name == name)
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn query(&self, name: &str) -> Option<&Query> {
        self.queries.iter().find(|q| q.name == name)
    }

    /// Structural equality, ignoring rule surface text and warnings.
    pub fn equivalent(&self, other: &SpecDocument) -> bool {
        fn strip(d: &SpecDocument) -> SpecDocument {
            let mut d = d.clone();
            d.warnings.clear();
            d.exceptions_applied = false;
            for r in &mut d.rules {
                r.surface_text.clear();
            }
            for q in &mut d.queries {
                q.surface_text.clear();
            }
            d
        }
        strip(self) == strip(other)
    }

    /// Every formula of the document: guards, macros, incompatibilities, rules and queries.
    pub fn all_formulas(&self) -> Vec<&InnerForm> {
        let mut out = Vec::new();
        out.extend(self.actions.iter().filter_map(|a| a.guard.as_ref()));
        out.extend(self.macros.iter().map(|m| &m.body));
        for inc in &self.incompatibilities {
            out.push(&inc.left);
            out.push(&inc.right);
        }
        let forms = self.rules.iter().map(|r| &r.form).chain(self.queries.iter().map(|q| &q.form));
        for f in forms {
            out.push(&f.body);
            if let Some(r) = &f.reparation {
                out.push(r);
            }
        }
        out
    }
}
