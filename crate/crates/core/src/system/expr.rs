use serde::Serialize;

use super::{SystemError, TransitionSystem};
use crate::ltl::{translate_inner, LtlFormula};
use crate::syntax::{CmpOp, InnerForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Comparison {
    pub var: usize,
    pub op: CmpOp,
    pub value: u8,
}

impl Comparison {
    pub fn eval(&self, s: &[u8]) -> bool {
        self.op.eval(s[self.var] as u32, self.value as u32)
    }
}

/// Boolean condition over one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StateExpr {
    Const(bool),
    Cmp(Comparison),
    Not(Box<StateExpr>),
    And(Vec<StateExpr>),
    Or(Vec<StateExpr>),
}

impl StateExpr {
    pub fn eq(var: usize, value: u8) -> StateExpr {
        StateExpr::Cmp(Comparison { var, op: CmpOp::Eq, value })
    }

    pub fn cmp(var: usize, op: CmpOp, value: u8) -> StateExpr {
        StateExpr::Cmp(Comparison { var, op, value })
    }

    pub fn negate(e: StateExpr) -> StateExpr {
        match e {
            StateExpr::Const(b) => StateExpr::Const(!b),
            StateExpr::Not(x) => *x,
            e => StateExpr::Not(Box::new(e)),
        }
    }

    /// Conjunction, flattening nested conjunctions and dropping `true`.
    pub fn all(items: impl IntoIterator<Item = StateExpr>) -> StateExpr {
        let mut out = Vec::new();
        for e in items {
            match e {
                StateExpr::Const(true) => {}
                StateExpr::Const(false) => return StateExpr::Const(false),
                StateExpr::And(xs) => out.extend(xs),
                e => out.push(e),
            }
        }
        match out.len() {
            0 => StateExpr::Const(true),
            1 => out.pop().unwrap(),
            _ => StateExpr::And(out),
        }
    }

    pub fn eval(&self, s: &[u8]) -> bool {
        match self {
            StateExpr::Const(b) => *b,
            StateExpr::Cmp(c) => c.eval(s),
            StateExpr::Not(e) => !e.eval(s),
            StateExpr::And(es) => es.iter().all(|e| e.eval(s)),
            StateExpr::Or(es) => es.iter().any(|e| e.eval(s)),
        }
    }

    pub fn for_each_cmp(&self, f: &mut impl FnMut(&Comparison)) {
        match self {
            StateExpr::Const(_) => {}
            StateExpr::Cmp(c) => f(c),
            StateExpr::Not(e) => e.for_each_cmp(f),
            StateExpr::And(es) | StateExpr::Or(es) => es.iter().for_each(|e| e.for_each_cmp(f)),
        }
    }
}

impl TransitionSystem {
    /// Compiles a propositional LTL formula.
    pub fn ltl_state_expr(&self, f: &LtlFormula) -> Result<StateExpr, SystemError> {
        Ok(match f {
            LtlFormula::True => StateExpr::Const(true),
            LtlFormula::False => StateExpr::Const(false),
            LtlFormula::Atom(p) => self.prop_expr(p)?,
            LtlFormula::Not(a) => StateExpr::negate(self.ltl_state_expr(a)?),
            LtlFormula::And(a, b) => StateExpr::all([self.ltl_state_expr(a)?, self.ltl_state_expr(b)?]),
            LtlFormula::Or(a, b) => {
                StateExpr::Or(vec![self.ltl_state_expr(a)?, self.ltl_state_expr(b)?])
            }
            LtlFormula::Implies(a, b) => StateExpr::Or(vec![
                StateExpr::negate(self.ltl_state_expr(a)?),
                self.ltl_state_expr(b)?,
            ]),
            _ => return Err(SystemError::Temporal),
        })
    }

    /// Compiles a state formula of the surface language.
    pub fn state_expr(&self, f: &InnerForm) -> Result<StateExpr, SystemError> {
        self.ltl_state_expr(&translate_inner(f)?)
    }
}
