//! Direct evaluation of LTL on ultimately periodic words.
//!
//! A lasso of length `n` with loop start `l` is the infinite word
//! `w0 .. w(l-1) (wl .. w(n-1))^ω`. Until is computed as a least fixpoint
//! and release as a greatest fixpoint over the `n` positions.

use super::formula::{LtlFormula, Prop};

/// Evaluates `f` at position 0 of the lasso. `holds(p, i)` gives the value
/// of atom `p` at position `i`.
pub fn eval_lasso(
    f: &LtlFormula,
    len: usize,
    loop_start: usize,
    holds: &dyn Fn(&Prop, usize) -> bool,
) -> bool {
    assert!(len > 0 && loop_start < len, "malformed lasso");
    values(f, len, loop_start, holds)[0]
}

fn values(
    f: &LtlFormula,
    n: usize,
    l: usize,
    holds: &dyn Fn(&Prop, usize) -> bool,
) -> Vec<bool> {
    use LtlFormula::*;
    let succ = |i: usize| if i + 1 < n { i + 1 } else { l };
    match f {
        True => vec![true; n],
        False => vec![false; n],
        Atom(p) => (0..n).map(|i| holds(p, i)).collect(),
        Not(a) => values(a, n, l, holds).into_iter().map(|v| !v).collect(),
        And(a, b) => zip(values(a, n, l, holds), values(b, n, l, holds), |x, y| x && y),
        Or(a, b) => zip(values(a, n, l, holds), values(b, n, l, holds), |x, y| x || y),
        Implies(a, b) => zip(values(a, n, l, holds), values(b, n, l, holds), |x, y| !x || y),
        Until(a, b) => {
            let (va, vb) = (values(a, n, l, holds), values(b, n, l, holds));
            fixpoint(n, false, |i, v| vb[i] || (va[i] && v[succ(i)]))
        }
        Release(a, b) => {
            let (va, vb) = (values(a, n, l, holds), values(b, n, l, holds));
            fixpoint(n, true, |i, v| vb[i] && (va[i] || v[succ(i)]))
        }
        Eventually(a) => {
            let va = values(a, n, l, holds);
            fixpoint(n, false, |i, v| va[i] || v[succ(i)])
        }
        Always(a) => {
            let va = values(a, n, l, holds);
            fixpoint(n, true, |i, v| va[i] && v[succ(i)])
        }
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

fn fixpoint(n: usize, init: bool, step: impl Fn(usize, &[bool]) -> bool) -> Vec<bool> {
    let mut v = vec![init; n];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let nv = step(i, &v);
            if nv != v[i] {
                v[i] = nv;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> LtlFormula {
        LtlFormula::atom(Prop::Done("p".into()))
    }

    #[test]
    fn eventually_inside_loop() {
        // word: ¬p (¬p p)^ω
        let word = [false, false, true];
        let h = |_: &Prop, i: usize| word[i];
        assert!(eval_lasso(&LtlFormula::eventually(p()), 3, 1, &h));
        assert!(eval_lasso(&LtlFormula::always(LtlFormula::eventually(p())), 3, 1, &h));
        assert!(!eval_lasso(&LtlFormula::eventually(LtlFormula::always(p())), 3, 1, &h));
    }

    #[test]
    fn until_needs_witness() {
        let word = [true];
        let h = |_: &Prop, i: usize| word[i];
        assert!(!eval_lasso(&LtlFormula::until(p(), LtlFormula::not(p())), 1, 0, &h));
        assert!(eval_lasso(&LtlFormula::release(LtlFormula::False, p()), 1, 0, &h));
    }
}
