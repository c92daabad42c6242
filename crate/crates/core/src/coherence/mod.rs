//! Coherence analysis of a normative specification and query answering.

mod demands;
mod report;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

pub use report::{CoherenceReport, Confirmation, Finding, FindingKind, Inconclusive, Severity};

use crate::check::{Checker, LassoTrace, McError, DEFAULT_MAX_STATES};
use crate::ltl::{eval_lasso, translate_inner, translate_rule, violation, LtlFormula};
use crate::syntax::{
    apply_exceptions, formula_to_string, InnerForm, Modality, Query, Rule, RuleForm, SpecDocument,
    SyntaxError,
};
use crate::system::{compile, CompileOptions, SystemError, TransitionSystem};
use demands::{demands, Mode};

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    pub max_states: usize,
    /// Only consult declared incompatibilities, skipping the semantic test.
    pub fast: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { max_states: DEFAULT_MAX_STATES, fast: false }
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Verdict of a query.
#[derive(Debug, Clone)]
pub enum QueryVerdict {
    Holds,
    Refuted(LassoTrace),
}

fn mc_err(e: crate::ltl::TranslateError) -> McError {
    McError::System(SystemError::Translate(e))
}

fn names(rules: &[&Rule]) -> Vec<String> {
    rules.iter().map(|r| r.name.clone()).collect()
}

fn cite(r: &Rule) -> String {
    format!("{} `{}`", r.name, r.surface_text)
}

/// Coherence checks over one compiled background theory.
pub struct Analysis<'a> {
    pub doc: &'a SpecDocument,
    checker: Checker<'a>,
    fast: bool,
}

impl<'a> Analysis<'a> {
    pub fn new(doc: &'a SpecDocument, ts: &'a TransitionSystem, opts: AnalysisOptions) -> Self {
        Analysis { doc, checker: Checker::new(ts, opts.max_states), fast: opts.fast }
    }

    pub fn system(&self) -> &'a TransitionSystem {
        self.checker.system()
    }

    /// Searches for a run satisfying `f`, ignoring the rules.
    pub fn exists(&mut self, f: &LtlFormula) -> Result<Option<LassoTrace>, McError> {
        let start = std::time::Instant::now();
        let res = self.checker.exists_trace(f);
        log::debug!(
            "exists {} -> {} in {:.1?} ({} product states)",
            f,
            match &res {
                Ok(Some(_)) => "witness",
                Ok(None) => "none",
                Err(_) => "error",
            },
            start.elapsed(),
            self.checker.last_stats.product_states
        );
        res
    }

    fn satisfies(&self, w: &LassoTrace, f: &LtlFormula) -> Result<bool, McError> {
        let ts = self.system();
        let exprs = f
            .atoms()
            .into_iter()
            .map(|p| ts.prop_expr(&p).map(|e| (p.clone(), e)))
            .collect::<Result<HashMap<_, _>, _>>()?;
        Ok(eval_lasso(f, w.len(), w.loop_start, &|p, i| exprs[p].eval(&w.states[i])))
    }

    /// Searches for a run satisfying `extra` and every rule in `rules`.
    /// Rules are added one at a time, each one violated by the previous
    /// witness, so exhaustive searches only involve few rules. On failure
    /// returns the rules that were active, which already admit no run.
    pub fn exists_under<'r>(
        &mut self,
        rules: &[&'r Rule],
        extra: &LtlFormula,
    ) -> Result<Result<LassoTrace, Vec<&'r Rule>>, McError> {
        let rules: Vec<&Rule> = rules.iter().copied().filter(|r| !r.form.is_permission()).collect();
        let images = rules.iter().map(|r| Self::tr(&r.form)).collect::<Result<Vec<_>, _>>()?;
        let mut active: Vec<usize> = Vec::new();
        loop {
            let parts = active.iter().map(|&i| images[i].clone()).chain([extra.clone()]);
            let Some(w) = self.exists(&LtlFormula::conjunction(parts.collect::<Vec<_>>()))? else {
                return Ok(Err(active.iter().map(|&i| rules[i]).collect()));
            };
            let mut violated = None;
            for i in (0..rules.len()).filter(|i| !active.contains(i)) {
                if !self.satisfies(&w, &images[i])? {
                    violated = Some(i);
                    break;
                }
            }
            match violated {
                Some(i) => active.push(i),
                None => return Ok(Ok(w)),
            }
        }
    }

    fn tr(r: &RuleForm) -> Result<LtlFormula, McError> {
        translate_rule(r).map_err(mc_err)
    }

    fn inner(f: &InnerForm) -> Result<LtlFormula, McError> {
        translate_inner(f).map_err(mc_err)
    }

    /// Legal constraint of the given rules; permissions are skipped.
    pub fn constraint(rules: &[&Rule]) -> Result<LtlFormula, McError> {
        let parts = rules
            .iter()
            .filter(|r| !r.form.is_permission())
            .map(|r| Self::tr(&r.form))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LtlFormula::conjunction(parts))
    }

    pub fn obligations(&self) -> Vec<&'a Rule> {
        self.doc.rules.iter().filter(|r| !r.form.is_permission()).collect()
    }

    pub fn check_background_realizable(&mut self) -> Result<Option<Finding>, McError> {
        Ok(match self.exists(&LtlFormula::True)? {
            Some(_) => None,
            None => Some(Finding {
                kind: FindingKind::UnrealizableBackground,
                severity: Severity::Error,
                implicated_rules: Vec::new(),
                witness: None,
                explanation: "the background theory admits no infinite run".into(),
            }),
        })
    }

    /// Tests whether the rules together admit a legal run.
    pub fn check_joint_satisfiability(
        &mut self,
        rules: &[&Rule],
    ) -> Result<Result<Confirmation, Finding>, McError> {
        let core = match self.exists_under(rules, &LtlFormula::True)? {
            Ok(w) => {
                return Ok(Ok(Confirmation {
                    check: "legal-behaviour".into(),
                    subject: names(rules),
                    witness: Some(w),
                    explanation: "a run obeys every obligation and prohibition".into(),
                }))
            }
            Err(core) => self.minimize(core, &LtlFormula::True)?,
        };
        let cited: Vec<String> = core.iter().map(|r| cite(r)).collect();
        Ok(Err(Finding {
            kind: FindingKind::NoLegalBehaviour,
            severity: Severity::Error,
            implicated_rules: names(&core),
            witness: None,
            explanation: format!("no run satisfies all rules; conflicting core: {}", cited.join("; ")),
        }))
    }

    /// Strips reparations and tests whether the primary obligations can be
    /// met together.
    pub fn check_primary_obligations(&mut self, rules: &[&Rule]) -> Result<Option<Finding>, McError> {
        if !rules.iter().any(|r| r.form.effective_reparation().is_some()) {
            return Ok(None);
        }
        let stripped: Vec<Rule> = rules
            .iter()
            .filter(|r| !r.form.is_permission())
            .map(|r| Rule { form: r.form.stripped(), ..(*r).clone() })
            .collect();
        let refs: Vec<&Rule> = stripped.iter().collect();
        let core = match self.exists_under(&refs, &LtlFormula::True)? {
            Ok(_) => return Ok(None),
            Err(core) => self.minimize(core, &LtlFormula::True)?,
        };
        let core_names = names(&core);
        let cited: Vec<String> =
            rules.iter().filter(|r| core_names.contains(&r.name)).map(|r| cite(r)).collect();
        Ok(Some(Finding {
            kind: FindingKind::ContradictingObligations,
            severity: Severity::Error,
            implicated_rules: core_names,
            witness: None,
            explanation: format!(
                "the primary obligations cannot all be met, only their reparations make a legal run possible: {}",
                cited.join("; ")
            ),
        }))
    }

    fn declared_incompatible(&self, a: &InnerForm, b: &InnerForm) -> bool {
        let (a, b) = (a.normalize(), b.normalize());
        self.doc.incompatibilities.iter().any(|inc| {
            let (l, r) = (inc.left.normalize(), inc.right.normalize());
            (l == a && r == b) || (l == b && r == a)
        })
    }

    /// Declared incompatible, or never true together on any background run.
    pub fn incompatible(&mut self, a: &InnerForm, b: &InnerForm) -> Result<bool, McError> {
        if self.declared_incompatible(a, b) {
            return Ok(true);
        }
        if self.fast {
            return Ok(false);
        }
        let both = LtlFormula::eventually(LtlFormula::and(Self::inner(a)?, Self::inner(b)?));
        Ok(self.exists(&both)?.is_none())
    }

    /// A subset-minimal set of rules whose constraint, together with
    /// `extra`, admits no run. Empty when `extra` alone admits no run, and
    /// `None` when all rules together still admit one.
    pub fn find_guilty_rules<'r>(
        &mut self,
        rules: &[&'r Rule],
        extra: &LtlFormula,
    ) -> Result<Option<Vec<&'r Rule>>, McError> {
        match self.exists_under(rules, extra)? {
            Ok(_) => Ok(None),
            Err(core) => self.minimize(core, extra).map(Some),
        }
    }

    /// Deletion-based shrinking of an unsatisfiable set of rules.
    fn minimize<'r>(&mut self, mut core: Vec<&'r Rule>, extra: &LtlFormula) -> Result<Vec<&'r Rule>, McError> {
        let mut i = 0;
        while i < core.len() {
            let mut trial = core.clone();
            trial.remove(i);
            let f = LtlFormula::and(Self::constraint(&trial)?, extra.clone());
            if self.exists(&f)?.is_none() {
                core = trial;
            } else {
                i += 1;
            }
        }
        Ok(core)
    }

    /// Reparations that cannot be performed without breaking another rule.
    pub fn check_forbidden_reparations(&mut self, rules: &[&Rule]) -> Vec<Result<Finding, (Vec<String>, McError)>> {
        let mut out = Vec::new();
        for r in rules.iter().filter(|r| !r.form.is_permission()) {
            let Some(rho) = r.form.effective_reparation() else { continue };
            for other in rules.iter().filter(|o| o.name != r.name && !o.form.is_permission()) {
                match self.forbidden_pair(rules, r, rho, other) {
                    Ok(Some(f)) => out.push(Ok(f)),
                    Ok(None) => {}
                    Err(e) => out.push(Err((vec![r.name.clone(), other.name.clone()], e))),
                }
            }
        }
        out
    }

    fn forbidden_pair(
        &mut self,
        rules: &[&Rule],
        r: &Rule,
        rho: &InnerForm,
        other: &Rule,
    ) -> Result<Option<Finding>, McError> {
        let viol = violation(&r.form).map_err(mc_err)?;
        let others: Vec<&Rule> =
            rules.iter().copied().filter(|x| x.name != r.name && x.name != other.name).collect();
        match other.form.modality {
            Modality::Prohibition => {
                let f = LtlFormula::and(Self::tr(&other.form)?, LtlFormula::eventually(Self::inner(rho)?));
                if self.exists(&f)?.is_some() {
                    return Ok(None);
                }
                let scenario = LtlFormula::and(Self::tr(&other.form)?, LtlFormula::eventually(viol));
                let explanation = format!(
                    "the reparation of {} can never be performed while {} is obeyed",
                    cite(r),
                    cite(other)
                );
                self.forbidden_finding(r, other, &others, scenario, explanation).map(Some)
            }
            Modality::Obligation if other.form.effective_reparation().is_none() => {
                let psi = &other.form.body;
                if self.incompatible(rho, psi)? {
                    let explanation = format!(
                        "the reparation of {} is incompatible with the obligation {}",
                        cite(r),
                        cite(other)
                    );
                    return self
                        .forbidden_finding(r, other, &others, LtlFormula::eventually(viol), explanation)
                        .map(Some);
                }
                for dr in demands(rho) {
                    for dp in demands(psi) {
                        if dr.mode != Mode::Always && dp.mode != Mode::Always {
                            continue;
                        }
                        let meet = InnerForm::and(
                            InnerForm::and(dr.ctx.clone(), dp.ctx.clone()),
                            InnerForm::and(dr.content.clone(), dp.content.clone()),
                        );
                        if self.exists(&LtlFormula::eventually(Self::inner(&meet)?))?.is_some() {
                            continue;
                        }
                        let (cr, cp) = (Self::inner(&dr.ctx)?, Self::inner(&dp.ctx)?);
                        let scenario = LtlFormula::eventually(LtlFormula::and(
                            viol.clone(),
                            LtlFormula::until(cr.clone(), LtlFormula::and(cr, cp)),
                        ));
                        if self.exists(&scenario)?.is_none() {
                            continue;
                        }
                        let explanation = format!(
                            "the reparation of {} contradicts the obligation {}: while `{}` holds the reparation requires `{}`, but the obligation requires `{}` whenever `{}`",
                            cite(r),
                            cite(other),
                            formula_to_string(&dr.ctx),
                            formula_to_string(&dr.content),
                            formula_to_string(&dp.content),
                            formula_to_string(&dp.ctx),
                        );
                        return self.forbidden_finding(r, other, &others, scenario, explanation).map(Some);
                    }
                }
                Ok(None)
            }
            _ => Ok(None),
        }
    }

    /// An error when the conflicting situation is reachable while obeying
    /// every other rule, a warning when it is not.
    fn forbidden_finding(
        &mut self,
        r: &Rule,
        other: &Rule,
        others: &[&Rule],
        scenario: LtlFormula,
        explanation: String,
    ) -> Result<Finding, McError> {
        let (severity, witness, note) = match self.exists_under(others, &scenario)? {
            Ok(w) => (Severity::Error, Some(w), ""),
            Err(_) => (
                Severity::Warning,
                self.exists(&scenario)?,
                "; every such run already breaks another rule",
            ),
        };
        Ok(Finding {
            kind: FindingKind::ForbiddenReparation,
            severity,
            implicated_rules: vec![r.name.clone(), other.name.clone()],
            witness,
            explanation: format!("{explanation}{note}"),
        })
    }

    /// A legal run on which `r` is violated and its reparation performed.
    pub fn check_reparation_exercisable(&mut self, r: &Rule, rules: &[&Rule]) -> Result<Option<Confirmation>, McError> {
        let viol = LtlFormula::eventually(violation(&r.form).map_err(mc_err)?);
        Ok(self.exists_under(rules, &viol)?.ok().map(|w| Confirmation {
            check: "reparation".into(),
            subject: vec![r.name.clone()],
            witness: Some(w),
            explanation: format!("a legal run violates {} and performs its reparation", cite(r)),
        }))
    }

    /// Pairs of rules whose reparations are incompatible although both
    /// rules can be violated together.
    pub fn check_conflicting_reparations(&mut self, rules: &[&Rule]) -> Vec<Result<Finding, (Vec<String>, McError)>> {
        let repaired: Vec<&Rule> =
            rules.iter().copied().filter(|r| !r.form.is_permission() && r.form.effective_reparation().is_some()).collect();
        let mut out = Vec::new();
        for (i, a) in repaired.iter().enumerate() {
            for b in &repaired[i + 1..] {
                match self.conflicting_pair(a, b) {
                    Ok(Some(f)) => out.push(Ok(f)),
                    Ok(None) => {}
                    Err(e) => out.push(Err((vec![a.name.clone(), b.name.clone()], e))),
                }
            }
        }
        out
    }

    fn conflicting_pair(&mut self, a: &Rule, b: &Rule) -> Result<Option<Finding>, McError> {
        let (ra, rb) = (a.form.effective_reparation().unwrap(), b.form.effective_reparation().unwrap());
        if !self.incompatible(ra, rb)? {
            return Ok(None);
        }
        let both = LtlFormula::eventually(LtlFormula::and(
            violation(&a.form).map_err(mc_err)?,
            violation(&b.form).map_err(mc_err)?,
        ));
        Ok(self.exists(&both)?.map(|w| Finding {
            kind: FindingKind::ConflictingReparations,
            severity: Severity::Error,
            implicated_rules: vec![a.name.clone(), b.name.clone()],
            witness: Some(w),
            explanation: format!(
                "{} and {} can be violated at the same time, but their reparations `{}` and `{}` are incompatible",
                cite(a),
                cite(b),
                formula_to_string(ra),
                formula_to_string(rb)
            ),
        }))
    }

    /// Each permission must be realizable on some legal run.
    pub fn check_permission(&mut self, p: &Rule, rules: &[&Rule]) -> Result<Result<Confirmation, Finding>, McError> {
        let want = LtlFormula::eventually(Self::inner(&p.form.body)?);
        let core = match self.exists_under(rules, &want)? {
            Ok(w) => {
                return Ok(Ok(Confirmation {
                    check: "permission".into(),
                    subject: vec![p.name.clone()],
                    witness: Some(w),
                    explanation: format!("{} is exercised on a legal run", cite(p)),
                }))
            }
            Err(core) => self.minimize(core, &want)?,
        };
        let mut implicated = vec![p.name.clone()];
        implicated.extend(names(&core));
        let blockers = if core.is_empty() {
            "the background theory".to_string()
        } else {
            core.iter().map(|r| cite(r)).collect::<Vec<_>>().join("; ")
        };
        Ok(Err(Finding {
            kind: FindingKind::ImpossiblePermission,
            severity: Severity::Error,
            implicated_rules: implicated,
            witness: None,
            explanation: format!("{} can never be exercised legally, blocked by {}", cite(p), blockers),
        }))
    }

    /// A query holds when no legal run violates it. When it is refuted the
    /// witness prefers runs where the intervals it mentions are open.
    pub fn answer_query(&mut self, q: &Query, rules: &[&Rule]) -> Result<QueryVerdict, McError> {
        let strong = nonvacuous(&q.form);
        if strong != q.form {
            if let Ok(w) = self.exists_under(rules, &LtlFormula::not(Self::tr(&strong)?))? {
                return Ok(QueryVerdict::Refuted(w));
            }
        }
        Ok(match self.exists_under(rules, &LtlFormula::not(Self::tr(&q.form)?))? {
            Ok(w) => QueryVerdict::Refuted(w),
            Err(_) => QueryVerdict::Holds,
        })
    }
}

/// Strengthens every `<>_i x` that occurs positively in the violation of
/// the rule to `is_i & <>_i x`, so that it cannot hold merely because `i`
/// is closed. A violation of the result is a violation of the original.
fn nonvacuous(form: &RuleForm) -> RuleForm {
    fn go(f: &InnerForm, positive: bool) -> InnerForm {
        match f {
            InnerForm::EventuallyIn(i, x) => {
                let inner = InnerForm::eventually_in(i.clone(), go(x, positive));
                if positive {
                    InnerForm::and(InnerForm::atom(crate::syntax::Term::IntervalOpen(i.clone())), inner)
                } else {
                    inner
                }
            }
            InnerForm::Not(a) => InnerForm::not(go(a, !positive)),
            InnerForm::And(a, b) => InnerForm::and(go(a, positive), go(b, positive)),
            InnerForm::Or(a, b) => InnerForm::or(go(a, positive), go(b, positive)),
            InnerForm::Implies(a, b) => InnerForm::implies(go(a, !positive), go(b, positive)),
            InnerForm::Eventually(x) => InnerForm::eventually(go(x, positive)),
            _ => f.clone(),
        }
    }
    let body_positive = form.modality == Modality::Prohibition;
    RuleForm {
        modality: form.modality,
        body: go(&form.body, body_positive),
        reparation: form.reparation.as_ref().map(|r| go(r, false)),
    }
}

fn inconclusive(report: &mut CoherenceReport, check: &str, subject: Vec<String>, e: McError) {
    report.inconclusive.push(Inconclusive { check: check.into(), subject, reason: e.to_string() });
}

/// Runs every check on a document, in a fixed order: background
/// realizability, joint satisfiability, primary obligations, forbidden
/// reparations (and whether each reparation can be exercised), conflicting
/// reparations, permissions, then queries.
pub fn run_all(doc: &SpecDocument, opts: AnalysisOptions) -> Result<CoherenceReport, AnalysisError> {
    let (doc, ts) = prepare(doc)?;
    Ok(run_all_on(&doc, &ts, opts))
}

/// Applies exceptions and compiles the background with default options.
/// Witnesses in a report from [`run_all`] refer to this system.
pub fn prepare(doc: &SpecDocument) -> Result<(SpecDocument, TransitionSystem), AnalysisError> {
    let doc = apply_exceptions(doc)?;
    let ts = compile(&doc, &CompileOptions::default())?;
    Ok((doc, ts))
}

/// [`run_all`] on an already compiled system. Exceptions must already be applied.
pub fn run_all_on(doc: &SpecDocument, ts: &TransitionSystem, opts: AnalysisOptions) -> CoherenceReport {
    let mut report = CoherenceReport::default();
    let mut an = Analysis::new(doc, ts, opts);
    let all: Vec<&Rule> = doc.rules.iter().collect();
    let rules = an.obligations();

    match an.check_background_realizable() {
        Ok(Some(f)) => {
            report.findings.push(f);
            return report;
        }
        Ok(None) => {}
        Err(e) => inconclusive(&mut report, "background-realizable", Vec::new(), e),
    }
    let mut joint_ok = false;
    match an.check_joint_satisfiability(&rules) {
        Ok(Ok(c)) => {
            joint_ok = true;
            report.confirmations.push(c);
        }
        Ok(Err(f)) => report.findings.push(f),
        Err(e) => inconclusive(&mut report, "legal-behaviour", names(&rules), e),
    }
    if joint_ok {
        match an.check_primary_obligations(&rules) {
            Ok(Some(f)) => report.findings.push(f),
            Ok(None) => {}
            Err(e) => inconclusive(&mut report, "primary-obligations", names(&rules), e),
        }
    }
    for res in an.check_forbidden_reparations(&rules) {
        match res {
            Ok(f) => report.findings.push(f),
            Err((subject, e)) => inconclusive(&mut report, "forbidden-reparation", subject, e),
        }
    }
    for res in an.check_conflicting_reparations(&rules) {
        match res {
            Ok(f) => report.findings.push(f),
            Err((subject, e)) => inconclusive(&mut report, "conflicting-reparations", subject, e),
        }
    }
    // Rules already implicated in a finding are not re-examined here.
    let implicated: HashSet<String> =
        report.findings.iter().flat_map(|f| f.implicated_rules.iter().cloned()).collect();
    for r in rules.iter().filter(|r| r.form.reparation.is_some() && !implicated.contains(&r.name)) {
        match an.check_reparation_exercisable(r, &rules) {
            Ok(Some(c)) => report.confirmations.push(c),
            Ok(None) => {}
            Err(e) => inconclusive(&mut report, "reparation", vec![r.name.clone()], e),
        }
    }
    for p in all.iter().filter(|r| r.form.is_permission()) {
        match an.check_permission(p, &rules) {
            Ok(Ok(c)) => report.confirmations.push(c),
            Ok(Err(f)) => report.findings.push(f),
            Err(e) => inconclusive(&mut report, "permission", vec![p.name.clone()], e),
        }
    }
    for q in &doc.queries {
        match an.answer_query(q, &rules) {
            Ok(QueryVerdict::Holds) => report.confirmations.push(Confirmation {
                check: "query".into(),
                subject: vec![q.name.clone()],
                witness: None,
                explanation: format!("query {} `{}` holds on every legal run", q.name, q.surface_text),
            }),
            Ok(QueryVerdict::Refuted(w)) => report.findings.push(Finding {
                kind: FindingKind::QueryRefuted,
                severity: Severity::Error,
                implicated_rules: vec![q.name.clone()],
                witness: Some(w),
                explanation: format!("query {} `{}` fails on a legal run", q.name, q.surface_text),
            }),
            Err(e) => inconclusive(&mut report, "query", vec![q.name.clone()], e),
        }
    }
    report
}

/// Compiles `doc` with the observations needed by `extra` formulas.
pub fn compile_for(doc: &SpecDocument, extra: &[InnerForm]) -> Result<TransitionSystem, SystemError> {
    compile(doc, &CompileOptions { extra_formulas: extra.to_vec(), ..Default::default() })
}
