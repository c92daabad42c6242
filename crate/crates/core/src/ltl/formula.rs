use std::fmt;

use serde::Serialize;

use crate::syntax::CmpOp;

/// Value of an action-signal variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SignalValue {
    NotHappening,
    Happening,
    JustHappened,
}

impl SignalValue {
    pub const ALL: [SignalValue; 3] =
        [SignalValue::NotHappening, SignalValue::Happening, SignalValue::JustHappened];

    pub fn name(self) -> &'static str {
        match self {
            SignalValue::NotHappening => "NOT_HAPPENING",
            SignalValue::Happening => "HAPPENING",
            SignalValue::JustHappened => "JUST_HAPPENED",
        }
    }
}

/// A decidable predicate over one state of a compiled system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Prop {
    Signal { action: String, value: SignalValue },
    Output { action: String, label: String },
    IntervalOpen(String),
    Done(String),
    Counter { counter: String, op: CmpOpKey, value: u32 },
    Point(String),
}

/// [`CmpOp`] with a total order, so that props can be sorted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CmpOpKey {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl From<CmpOp> for CmpOpKey {
    fn from(op: CmpOp) -> Self {
        match op {
            CmpOp::Eq => CmpOpKey::Eq,
            CmpOp::Lt => CmpOpKey::Lt,
            CmpOp::Le => CmpOpKey::Le,
            CmpOp::Gt => CmpOpKey::Gt,
            CmpOp::Ge => CmpOpKey::Ge,
        }
    }
}

impl From<CmpOpKey> for CmpOp {
    fn from(op: CmpOpKey) -> Self {
        match op {
            CmpOpKey::Eq => CmpOp::Eq,
            CmpOpKey::Lt => CmpOp::Lt,
            CmpOpKey::Le => CmpOp::Le,
            CmpOpKey::Gt => CmpOp::Gt,
            CmpOpKey::Ge => CmpOp::Ge,
        }
    }
}

impl Prop {
    pub fn just_happened(action: impl Into<String>) -> Prop {
        Prop::Signal { action: action.into(), value: SignalValue::JustHappened }
    }

    pub fn happening(action: impl Into<String>) -> Prop {
        Prop::Signal { action: action.into(), value: SignalValue::Happening }
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prop::Signal { action, value } => write!(f, "{action} = {}", value.name()),
            Prop::Output { action, label } => write!(f, "{action}.output = {label}"),
            Prop::IntervalOpen(i) => write!(f, "{i}_opened"),
            Prop::Done(a) => write!(f, "done({a})"),
            Prop::Counter { counter, op, value } => {
                write!(f, "{counter} {} {value}", CmpOp::from(*op).symbol())
            }
            Prop::Point(p) => write!(f, "at({p})"),
        }
    }
}

/// Propositional linear temporal logic over [`Prop`] atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum LtlFormula {
    True,
    False,
    Atom(Prop),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Implies(Box<LtlFormula>, Box<LtlFormula>),
    Until(Box<LtlFormula>, Box<LtlFormula>),
    /// Dual of until; produced by negation normal form.
    Release(Box<LtlFormula>, Box<LtlFormula>),
    Eventually(Box<LtlFormula>),
    Always(Box<LtlFormula>),
}

impl LtlFormula {
    pub fn atom(p: Prop) -> Self {
        LtlFormula::Atom(p)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: LtlFormula) -> Self {
        LtlFormula::Not(Box::new(f))
    }

    pub fn and(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn until(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Release(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: LtlFormula) -> Self {
        LtlFormula::Eventually(Box::new(f))
    }

    pub fn always(f: LtlFormula) -> Self {
        LtlFormula::Always(Box::new(f))
    }

    /// Conjunction of all items; `true` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = LtlFormula>) -> Self {
        items.into_iter().reduce(LtlFormula::and).unwrap_or(LtlFormula::True)
    }

    pub fn size(&self) -> usize {
        use LtlFormula::*;
        match self {
            True | False | Atom(_) => 1,
            Not(a) | Eventually(a) | Always(a) => 1 + a.size(),
            And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    /// Number of temporal operators.
    pub fn temporal_depth_count(&self) -> usize {
        use LtlFormula::*;
        match self {
            True | False | Atom(_) => 0,
            Not(a) => a.temporal_depth_count(),
            Eventually(a) | Always(a) => 1 + a.temporal_depth_count(),
            And(a, b) | Or(a, b) | Implies(a, b) => {
                a.temporal_depth_count() + b.temporal_depth_count()
            }
            Until(a, b) | Release(a, b) => 1 + a.temporal_depth_count() + b.temporal_depth_count(),
        }
    }

    pub fn is_propositional(&self) -> bool {
        use LtlFormula::*;
        match self {
            True | False | Atom(_) => true,
            Not(a) => a.is_propositional(),
            And(a, b) | Or(a, b) | Implies(a, b) => a.is_propositional() && b.is_propositional(),
            Until(..) | Release(..) | Eventually(_) | Always(_) => false,
        }
    }

    pub fn count_until(&self) -> usize {
        use LtlFormula::*;
        match self {
            True | False | Atom(_) => 0,
            Not(a) | Eventually(a) | Always(a) => a.count_until(),
            And(a, b) | Or(a, b) | Implies(a, b) | Release(a, b) => a.count_until() + b.count_until(),
            Until(a, b) => 1 + a.count_until() + b.count_until(),
        }
    }

    /// Distinct atoms in first-occurrence order.
    pub fn atoms(&self) -> Vec<Prop> {
        fn go(f: &LtlFormula, out: &mut Vec<Prop>) {
            use LtlFormula::*;
            match f {
                True | False => {}
                Atom(p) => {
                    if !out.contains(p) {
                        out.push(p.clone())
                    }
                }
                Not(a) | Eventually(a) | Always(a) => go(a, out),
                And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b) => {
                    go(a, out);
                    go(b, out)
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Removes double negations and neutral/absorbing constants.
    pub fn simplify(&self) -> LtlFormula {
        use LtlFormula::*;
        match self {
            True | False | Atom(_) => self.clone(),
            Not(a) => match a.simplify() {
                Not(inner) => *inner,
                True => False,
                False => True,
                s => LtlFormula::not(s),
            },
            And(a, b) => match (a.simplify(), b.simplify()) {
                (True, x) | (x, True) => x,
                (False, _) | (_, False) => False,
                (x, y) => LtlFormula::and(x, y),
            },
            Or(a, b) => match (a.simplify(), b.simplify()) {
                (False, x) | (x, False) => x,
                (True, _) | (_, True) => True,
                (x, y) => LtlFormula::or(x, y),
            },
            Implies(a, b) => match (a.simplify(), b.simplify()) {
                (True, x) => x,
                (False, _) | (_, True) => True,
                (x, False) => LtlFormula::not(x).simplify(),
                (x, y) => LtlFormula::implies(x, y),
            },
            Until(a, b) => match (a.simplify(), b.simplify()) {
                (_, True) => True,
                (_, False) => False,
                (x, y) => LtlFormula::until(x, y),
            },
            Release(a, b) => match (a.simplify(), b.simplify()) {
                (_, True) => True,
                (_, False) => False,
                (x, y) => LtlFormula::release(x, y),
            },
            Eventually(a) => match a.simplify() {
                True => True,
                False => False,
                x => LtlFormula::eventually(x),
            },
            Always(a) => match a.simplify() {
                True => True,
                False => False,
                x => LtlFormula::always(x),
            },
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LtlFormula::Atom(p) if !matches!(p, Prop::IntervalOpen(_) | Prop::Done(_) | Prop::Point(_)) => {
                write!(f, "({self})")
            }
            _ => write!(f, "{self}"),
        }
    }
}

/// Canonical linear syntax: `!`, `&`, `|`, `->`, `U`, `R`, `F`, `G`; binary
/// operators always parenthesized.
impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use LtlFormula::*;
        match self {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Atom(p) => write!(f, "{p}"),
            Not(a) => {
                write!(f, "!")?;
                a.fmt_operand(f)
            }
            Eventually(a) => {
                write!(f, "F ")?;
                a.fmt_operand(f)
            }
            Always(a) => {
                write!(f, "G ")?;
                a.fmt_operand(f)
            }
            And(a, b) => write!(f, "({a} & {b})"),
            Or(a, b) => write!(f, "({a} | {b})"),
            Implies(a, b) => write!(f, "({a} -> {b})"),
            Until(a, b) => write!(f, "({a} U {b})"),
            Release(a, b) => write!(f, "({a} R {b})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_printing() {
        let p = LtlFormula::atom(Prop::just_happened("p"));
        let i = LtlFormula::atom(Prop::IntervalOpen("i".into()));
        let f = LtlFormula::always(LtlFormula::implies(LtlFormula::not(p.clone()), i.clone()));
        assert_eq!(f.to_string(), "G (!(p = JUST_HAPPENED) -> i_opened)");
        assert_eq!(LtlFormula::eventually(i).to_string(), "F i_opened");
    }

    #[test]
    fn simplification() {
        let p = LtlFormula::atom(Prop::Done("a".into()));
        let f = LtlFormula::and(LtlFormula::True, LtlFormula::not(LtlFormula::not(p.clone())));
        assert_eq!(f.simplify(), p);
        assert_eq!(LtlFormula::always(LtlFormula::not(LtlFormula::False)).simplify(), LtlFormula::True);
    }
}
