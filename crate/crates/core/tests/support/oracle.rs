//! Brute-force reference for trace existence: enumerate every lasso of the
//! system up to a length bound and evaluate the formula on it directly.

#![allow(dead_code)]

use std::collections::HashMap;

use flexcheck_core::check::{Checker, LassoTrace};
use flexcheck_core::ltl::{eval_lasso, LtlFormula, Prop};
use flexcheck_core::system::{State, TransitionSystem};
use rand::Rng;

/// A random background with at most three actions and at most one counter
/// of bound 2.
pub fn random_background(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(1..=3);
    let names = ["A", "B", "C"];
    let mut src = String::new();
    for name in &names[..n] {
        src.push_str(&format!("action {name}"));
        if rng.gen_bool(0.2) {
            src.push_str(" output values { x, y }");
        }
        src.push('\n');
    }
    if n >= 2 && rng.gen_bool(0.6) {
        src.push_str("interval i delimited by actions A-B\n");
    }
    if rng.gen_bool(0.6) {
        let inc = names[rng.gen_range(0..n)];
        let dec = names[rng.gen_range(0..n)];
        src.push_str(&format!("counter c increases with action {inc}"));
        if dec != inc {
            src.push_str(&format!(" decreases with action {dec}"));
        }
        src.push_str(" bound 2\n");
    }
    src
}

/// Atoms observable on a compiled system.
pub fn atoms_of(ts: &TransitionSystem) -> Vec<Prop> {
    let mut atoms = Vec::new();
    for a in &ts.actions {
        atoms.push(Prop::just_happened(a.name.clone()));
        if a.done_var.is_some() {
            atoms.push(Prop::Done(a.name.clone()));
        }
    }
    for v in &ts.variables {
        match &v.kind {
            flexcheck_core::system::VarKind::IntervalOpen { interval } => {
                atoms.push(Prop::IntervalOpen(interval.clone()))
            }
            flexcheck_core::system::VarKind::Counter { counter, .. } => {
                atoms.push(Prop::Counter {
                    counter: counter.clone(),
                    op: flexcheck_core::syntax::CmpOp::Gt.into(),
                    value: 0,
                });
            }
            _ => {}
        }
    }
    atoms
}

pub fn random_formula(rng: &mut impl Rng, atoms: &[Prop], depth: u32) -> LtlFormula {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..12) {
            0 => LtlFormula::True,
            1 => LtlFormula::False,
            _ => LtlFormula::atom(atoms[rng.gen_range(0..atoms.len())].clone()),
        };
    }
    let d = depth - 1;
    let op = rng.gen_range(0..8);
    let mut sub = || random_formula(rng, atoms, d);
    match op {
        0 => LtlFormula::not(sub()),
        1 => LtlFormula::and(sub(), sub()),
        2 => LtlFormula::or(sub(), sub()),
        3 => LtlFormula::implies(sub(), sub()),
        4 => LtlFormula::until(sub(), sub()),
        5 => LtlFormula::eventually(sub()),
        6 => LtlFormula::always(sub()),
        _ => LtlFormula::release(sub(), sub()),
    }
}

struct Enumerator<'a> {
    ts: &'a TransitionSystem,
    f: &'a LtlFormula,
    exprs: HashMap<Prop, flexcheck_core::system::StateExpr>,
    succ: HashMap<State, Vec<State>>,
    max_len: usize,
}

impl Enumerator<'_> {
    fn successors(&mut self, s: &State) -> Vec<State> {
        if let Some(v) = self.succ.get(s) {
            return v.clone();
        }
        let v: Vec<State> = self.ts.successors(s).into_iter().map(|(_, t)| t).collect();
        self.succ.insert(s.clone(), v.clone());
        v
    }

    fn holds_on(&self, path: &[State], l: usize) -> bool {
        eval_lasso(self.f, path.len(), l, &|p, i| self.exprs[p].eval(&path[i]))
    }

    fn search(&mut self, path: &mut Vec<State>) -> Option<usize> {
        let last = path.last().unwrap().clone();
        let next = self.successors(&last);
        for l in 0..path.len() {
            if next.contains(&path[l]) && self.holds_on(path, l) {
                return Some(l);
            }
        }
        if path.len() == self.max_len {
            return None;
        }
        for t in next {
            path.push(t);
            if let Some(l) = self.search(path) {
                return Some(l);
            }
            path.pop();
        }
        None
    }
}

/// Some lasso of at most `max_len` states satisfying `f`, as (states, loop start).
pub fn brute_force(ts: &TransitionSystem, f: &LtlFormula, max_len: usize) -> Option<(Vec<State>, usize)> {
    let init = ts.initial.clone()?;
    let exprs = f.atoms().into_iter().map(|p| (p.clone(), ts.prop_expr(&p).unwrap())).collect();
    let mut e = Enumerator { ts, f, exprs, succ: HashMap::new(), max_len };
    let mut path = vec![init];
    e.search(&mut path).map(|l| (path, l))
}

/// Checks a witness against the system and the formula without using the
/// model checker.
pub fn valid_witness(ts: &TransitionSystem, f: &LtlFormula, w: &LassoTrace) -> Result<(), String> {
    if Some(&w.states[0]) != ts.initial.as_ref() {
        return Err("witness does not start in the initial state".into());
    }
    let step = |a: &State, b: &State, c: usize| ts.successors(a).iter().any(|(k, t)| t == b && *k == c);
    for i in 1..w.states.len() {
        let c = w.steps[i].ok_or("missing step command")?;
        if !step(&w.states[i - 1], &w.states[i], c) {
            return Err(format!("step {i} is not a transition"));
        }
    }
    if !step(w.states.last().unwrap(), &w.states[w.loop_start], w.loop_back) {
        return Err("loop-back is not a transition".into());
    }
    let exprs: HashMap<Prop, _> =
        f.atoms().into_iter().map(|p| (p.clone(), ts.prop_expr(&p).unwrap())).collect();
    if !eval_lasso(f, w.len(), w.loop_start, &|p, i| exprs[p].eval(&w.states[i])) {
        return Err("witness does not satisfy the formula".into());
    }
    Ok(())
}

/// Compares the model checker with the oracle. A positive verdict must come
/// with a valid witness; a short lasso found by enumeration must not be
/// missed; and a negative verdict must agree with enumeration.
pub fn compare(ts: &TransitionSystem, f: &LtlFormula, max_len: usize) -> Result<bool, String> {
    let verdict = Checker::new(ts, 1_000_000).exists_trace(f).map_err(|e| e.to_string())?;
    let brute = brute_force(ts, f, max_len);
    match (&verdict, &brute) {
        (Some(w), _) => {
            valid_witness(ts, f, w)?;
            if brute.is_none() && w.len() <= max_len {
                return Err(format!("enumeration missed a {}-state witness", w.len()));
            }
            Ok(true)
        }
        (None, Some((path, l))) => {
            Err(format!("checker found no trace, enumeration found {} states looping at {l}", path.len()))
        }
        (None, None) => Ok(false),
    }
}
