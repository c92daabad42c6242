use thiserror::Error;

use super::formula::{LtlFormula, Prop, SignalValue};
use crate::syntax::{InnerForm, Modality, Rule, RuleForm, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("permissions have no LTL translation; they are checked against the other rules")]
    Permission,
    #[error("unresolved name `{0}` in formula")]
    Unresolved(String),
}

fn term(t: &Term) -> Result<LtlFormula, TranslateError> {
    Ok(match t {
        Term::JustHappened(a) => LtlFormula::atom(Prop::just_happened(a.clone())),
        Term::Happening(a) => {
            LtlFormula::atom(Prop::Signal { action: a.clone(), value: SignalValue::Happening })
        }
        Term::Done(a) => LtlFormula::atom(Prop::Done(a.clone())),
        Term::Output { action, label } => LtlFormula::and(
            LtlFormula::atom(Prop::Output { action: action.clone(), label: label.clone() }),
            LtlFormula::atom(Prop::Done(action.clone())),
        ),
        Term::IntervalOpen(i) => LtlFormula::atom(Prop::IntervalOpen(i.clone())),
        Term::Counter { counter, op, value } => LtlFormula::atom(Prop::Counter {
            counter: counter.clone(),
            op: (*op).into(),
            value: *value,
        }),
        Term::Point(p) => LtlFormula::atom(Prop::Point(p.clone())),
        Term::Name(n) | Term::Macro(n) => return Err(TranslateError::Unresolved(n.clone())),
    })
}

/// Translates an inner formula. `<>_i φ` becomes `i_opened -> (i_opened U φ)`.
pub fn translate_inner(f: &InnerForm) -> Result<LtlFormula, TranslateError> {
    Ok(match f {
        InnerForm::Top => LtlFormula::True,
        InnerForm::Bottom => LtlFormula::False,
        InnerForm::Atom(t) => term(t)?,
        InnerForm::Not(a) => LtlFormula::not(translate_inner(a)?),
        InnerForm::And(a, b) => LtlFormula::and(translate_inner(a)?, translate_inner(b)?),
        InnerForm::Or(a, b) => LtlFormula::or(translate_inner(a)?, translate_inner(b)?),
        InnerForm::Implies(a, b) => LtlFormula::implies(translate_inner(a)?, translate_inner(b)?),
        InnerForm::Eventually(a) => LtlFormula::eventually(translate_inner(a)?),
        InnerForm::EventuallyIn(i, a) => {
            let open = LtlFormula::atom(Prop::IntervalOpen(i.clone()));
            LtlFormula::implies(open.clone(), LtlFormula::until(open, translate_inner(a)?))
        }
    })
}

/// Translates an obligation, prohibition or eventual obligation.
pub fn translate_rule(r: &RuleForm) -> Result<LtlFormula, TranslateError> {
    let body = translate_inner(&r.body)?;
    let rep = r.reparation.as_ref().map(translate_inner).transpose()?;
    Ok(match (r.modality, rep) {
        (Modality::Obligation, None) => LtlFormula::always(body),
        (Modality::Prohibition, None) => LtlFormula::always(LtlFormula::not(body)),
        (Modality::Obligation, Some(rho)) => {
            LtlFormula::always(LtlFormula::implies(LtlFormula::not(body), rho))
        }
        (Modality::Prohibition, Some(rho)) => LtlFormula::always(LtlFormula::implies(body, rho)),
        (Modality::EventualObligation, _) => LtlFormula::eventually(body),
        (Modality::Permission, _) => return Err(TranslateError::Permission),
    })
}

/// Conjunction of the translations of every non-permission rule.
pub fn legal_constraint<'a>(
    rules: impl IntoIterator<Item = &'a Rule>,
) -> Result<LtlFormula, TranslateError> {
    let parts = rules
        .into_iter()
        .filter(|r| !r.form.is_permission())
        .map(|r| translate_rule(&r.form))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LtlFormula::conjunction(parts))
}

/// The state condition under which a rule counts as violated at a given
/// point: `¬φ` for obligations and `φ` for prohibitions.
pub fn violation(r: &RuleForm) -> Result<LtlFormula, TranslateError> {
    let body = translate_inner(&r.body)?;
    Ok(match r.modality {
        Modality::Prohibition => body,
        _ => LtlFormula::not(body),
    })
}
