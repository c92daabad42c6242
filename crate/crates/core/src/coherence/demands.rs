//! Splits a formula into the local requirements it places on a run.
//!
//! `a -> b` contributes the demands of `b` under context `a`; a conjunction
//! contributes the demands of both sides. `<>_i x` asks for `x` eventually
//! while `i` is open, and its negation asks for `!x` throughout `i`.

use crate::syntax::{InnerForm, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    Now,
    Eventually,
    Always,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Demand {
    pub ctx: InnerForm,
    pub content: InnerForm,
    pub mode: Mode,
}

fn conj(a: &InnerForm, b: InnerForm) -> InnerForm {
    match a {
        InnerForm::Top => b,
        _ => InnerForm::and(a.clone(), b),
    }
}

fn open(i: &str) -> InnerForm {
    InnerForm::atom(Term::IntervalOpen(i.to_string()))
}

pub(crate) fn demands(f: &InnerForm) -> Vec<Demand> {
    let mut out = Vec::new();
    collect(f, &InnerForm::Top, &mut out);
    out
}

fn collect(f: &InnerForm, ctx: &InnerForm, out: &mut Vec<Demand>) {
    let push = |out: &mut Vec<Demand>, ctx: InnerForm, content: InnerForm, mode| {
        out.push(Demand { ctx, content, mode })
    };
    match f {
        InnerForm::Top => {}
        InnerForm::Implies(a, b) => collect(b, &conj(ctx, (**a).clone()), out),
        InnerForm::And(a, b) => {
            collect(a, ctx, out);
            collect(b, ctx, out);
        }
        InnerForm::Eventually(x) => push(out, ctx.clone(), (**x).clone(), Mode::Eventually),
        InnerForm::EventuallyIn(i, x) => push(out, conj(ctx, open(i)), (**x).clone(), Mode::Eventually),
        InnerForm::Not(inner) => match &**inner {
            InnerForm::EventuallyIn(i, x) => {
                push(out, conj(ctx, open(i)), InnerForm::not((**x).clone()), Mode::Always)
            }
            InnerForm::Eventually(x) => push(out, ctx.clone(), InnerForm::not((**x).clone()), Mode::Always),
            _ => push(out, ctx.clone(), f.clone(), Mode::Now),
        },
        _ => push(out, ctx.clone(), f.clone(), Mode::Now),
    }
}
