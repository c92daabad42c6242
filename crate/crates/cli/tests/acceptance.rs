//! End-to-end acceptance suite. Each criterion prints one PASS or FAIL
//! line; the process exits non-zero if any criterion fails.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::collections::{HashMap, HashSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use flexcheck_core::check::exists_trace;
use flexcheck_core::coherence::prepare;
use flexcheck_core::ltl::{eval_lasso, translate_inner, translate_rule, LtlFormula, Prop};
use flexcheck_core::syntax::{apply_exceptions, parse_rule_form_in, parse_spec, CmpOp, IntervalEnd, SpecDocument};
use flexcheck_core::system::{compile, CommandKind, CompileOptions, State, TransitionSystem, VarKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

fn case(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../cases").join(name)
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Runs `flexcheck check --format json` on a corpus file.
fn check_json(name: &str) -> Result<(Value, Duration), String> {
    let t0 = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_flexcheck"))
        .args(["check", "--format", "json"])
        .arg(case(name))
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed();
    let v: Value = serde_json::from_slice(&out.stdout)
        .map_err(|e| format!("{name}: bad JSON ({e}); stderr: {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok((v, elapsed))
}

fn findings(report: &Value) -> Vec<(String, String, Vec<String>)> {
    report["findings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            let rules = f["rules"].as_array().unwrap().iter().map(|r| r.as_str().unwrap().to_string()).collect();
            (f["kind"].as_str().unwrap().to_string(), f["severity"].as_str().unwrap().to_string(), rules)
        })
        .collect()
}

/// Step indices at which each action completes along a JSON witness.
fn completions(witness: &Value) -> Vec<(usize, String, &Value)> {
    witness["steps"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|s| Some((s["step"].as_u64()? as usize, s["completed"].as_str()?.to_string(), s)))
        .collect()
}

fn first_after<'a>(ev: &'a [(usize, String, &'a Value)], after: Option<usize>, name: &str) -> Option<&'a (usize, String, &'a Value)> {
    ev.iter().find(|(i, n, _)| after.map_or(true, |a| *i > a) && n == name)
}

fn university() -> Outcome {
    let (r, elapsed) = check_json("university.flx")?;
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    let mut coherence: Vec<_> = findings(&r).into_iter().filter(|f| f.0 != "query-refuted").collect();
    coherence.sort();
    let want = vec![
        ("conflicting-reparations".to_string(), "error".to_string(), vec!["r7".to_string(), "r8".to_string()]),
        ("forbidden-reparation".into(), "error".into(), vec!["r1".into(), "r4".into()]),
        ("impossible-permission".into(), "error".into(), vec!["r2".into(), "r5".into(), "r6".into()]),
    ];
    ensure(coherence == want, format!("coherence findings {coherence:?}"))?;
    let queries: Vec<&Value> =
        r["findings"].as_array().unwrap().iter().filter(|f| f["kind"] == "query-refuted").collect();
    ensure(queries.len() == 1, format!("{} refuted queries", queries.len()))?;
    let ev = completions(&queries[0]["witness"]);
    let g = first_after(&ev, None, "Graduate").ok_or("no Graduate in the query witness")?;
    let e = first_after(&ev, Some(g.0), "Enroll").ok_or("no Enroll after Graduate")?;
    let a = first_after(&ev, Some(e.0), "Apply").ok_or("no Apply after the later Enroll")?;
    Ok(format!("3 findings, query witness Graduate@{} Enroll@{} Apply@{}, {:.1}s", g.0, e.0, a.0, elapsed.as_secs_f64()))
}

fn amendments() -> Outcome {
    let (guard, _) = check_json("university-guard.flx")?;
    let kept = findings(&guard)
        .into_iter()
        .find(|f| f.0 == "forbidden-reparation")
        .ok_or("guard variant lost the forbidden-reparation finding")?;
    ensure(kept.2 == ["r1", "r4"], format!("guard variant implicates {:?}", kept.2))?;
    let (rule9, _) = check_json("university-rule9.flx")?;
    let downgraded = findings(&rule9)
        .into_iter()
        .find(|f| f.0 == "forbidden-reparation")
        .ok_or("rule9 variant has no forbidden-reparation finding")?;
    ensure(downgraded.1 == "warning", format!("rule9 variant severity {}", downgraded.1))?;
    Ok(format!("guard keeps {} error, rule9 leaves a warning", kept.0))
}

fn traffic() -> Outcome {
    let (r, _) = check_json("traffic.flx")?;
    ensure(r["coherent"] == true && r["exit_code"] == 0, "traffic is not coherent")?;
    let conf = r["confirmations"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["check"] == "reparation")
        .ok_or("no reparation confirmation")?;
    let ev = completions(&conf["witness"]);
    let red = first_after(&ev, None, "RedCrossing").ok_or("no violation")?;
    let fined = first_after(&ev, Some(red.0), "BeFined").ok_or("no BeFined after the violation")?;
    let paid = first_after(&ev, Some(fined.0), "PayFine").ok_or("no PayFine after BeFined")?;
    ensure(fined.2["counters"]["finer"] == 1, "BeFined did not raise finer")?;
    ensure(paid.2["counters"]["finer"] == 0, "PayFine did not return finer to 0")?;
    Ok(format!("RedCrossing@{} BeFined@{} PayFine@{} (finer 0)", red.0, fined.0, paid.0))
}

fn library() -> Outcome {
    let doc = parse_spec(&std::fs::read_to_string(case("library.flx")).unwrap()).map_err(|e| e.to_string())?;
    let (doc, ts) = prepare(&doc).map_err(|e| e.to_string())?;
    let rule = |n: &str| translate_rule(&doc.rules.iter().find(|r| r.name == n).unwrap().form).unwrap();
    let (naive, counted) = (rule("naive"), rule("counted"));
    let bbc = |value| LtlFormula::atom(Prop::Counter { counter: "bbc".into(), op: CmpOp::Eq.into(), value });
    // Reach two books out, then settle with one book out forever.
    let shape = LtlFormula::and(
        LtlFormula::eventually(bbc(2)),
        LtlFormula::eventually(LtlFormula::always(bbc(1))),
    );
    let goal = LtlFormula::and(naive.clone(), shape);
    let w = exists_trace(&ts, &goal, 1_000_000).map_err(|e| e.to_string())?.ok_or("exists_trace found no run")?;
    oracle::valid_witness(&ts, &goal, &w)?;
    let mut count: HashMap<&str, usize> = HashMap::new();
    for (i, c) in w.steps.iter().enumerate() {
        if let Some(CommandKind::Complete { action, .. }) = c.map(|c| &ts.commands[c].kind) {
            ensure(i < w.loop_start, "an action completes inside the loop")?;
            *count.entry(ts.actions[*action].name.as_str()).or_default() += 1;
        }
    }
    ensure(count.get("BorrowBook") == Some(&2), format!("borrows: {count:?}"))?;
    ensure(count.get("ReturnBook") == Some(&1), format!("returns: {count:?}"))?;
    let holds = |f: &LtlFormula| {
        let exprs: HashMap<Prop, _> = f.atoms().into_iter().map(|p| (p.clone(), ts.prop_expr(&p).unwrap())).collect();
        eval_lasso(f, w.len(), w.loop_start, &|p, i| exprs[p].eval(&w.states[i]))
    };
    ensure(holds(&naive), "naive rule fails on the trace")?;
    ensure(!holds(&counted), "counted rule holds on the trace")?;
    Ok(format!("{}-state trace: naive satisfied, counted violated", w.len()))
}

fn tr_table() -> Outcome {
    let doc = parse_spec("action p\naction q\naction s\ninterval i delimited by actions s-+inf\n")
        .map_err(|e| e.to_string())?;
    let p = || LtlFormula::atom(Prop::just_happened("p"));
    let q = || LtlFormula::atom(Prop::just_happened("q"));
    let i = || LtlFormula::atom(Prop::IntervalOpen("i".into()));
    let rows: [(&str, LtlFormula, &str); 6] = [
        ("<>_i p", LtlFormula::implies(i(), LtlFormula::until(i(), p())), "(i_opened -> (i_opened U p = JUST_HAPPENED))"),
        ("O(p)", LtlFormula::always(p()), "G (p = JUST_HAPPENED)"),
        ("F(p)", LtlFormula::always(LtlFormula::not(p())), "G !(p = JUST_HAPPENED)"),
        (
            "O[q](p)",
            LtlFormula::always(LtlFormula::implies(LtlFormula::not(p()), q())),
            "G (!(p = JUST_HAPPENED) -> q = JUST_HAPPENED)",
        ),
        ("F[q](p)", LtlFormula::always(LtlFormula::implies(p(), q())), "G (p = JUST_HAPPENED -> q = JUST_HAPPENED)"),
        ("OE(p)", LtlFormula::eventually(p()), "F (p = JUST_HAPPENED)"),
    ];
    for (src, structure, text) in &rows {
        let got = if let Some(body) = src.strip_prefix("<>_") {
            let f = flexcheck_core::syntax::parse_formula_in(&doc, &format!("<>_{body}")).map_err(|e| e.to_string())?;
            translate_inner(&f).map_err(|e| e.to_string())?
        } else {
            let r = parse_rule_form_in(&doc, src).map_err(|e| e.to_string())?;
            translate_rule(&r).map_err(|e| e.to_string())?
        };
        ensure(got == *structure, format!("{src}: structure {got:?}"))?;
        ensure(got.to_string() == *text, format!("{src}: text `{got}`"))?;
    }
    Ok("6/6 rows".into())
}

fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let (mut agreed, mut positives) = (0, 0);
    for k in 0..240 {
        let src = oracle::random_background(&mut rng);
        let doc = parse_spec(&src).map_err(|e| e.to_string())?;
        let opts = CompileOptions { track_all_done: true, all_free: k % 2 == 1, ..Default::default() };
        let ts = compile(&doc, &opts).map_err(|e| e.to_string())?;
        let f = oracle::random_formula(&mut rng, &oracle::atoms_of(&ts), 4);
        let found = oracle::compare(&ts, &f, 9).map_err(|e| format!("pair {k}: {e}\n{src}formula: {f}"))?;
        agreed += 1;
        positives += found as usize;
    }
    Ok(format!("{agreed}/{agreed} pairs agree ({positives} satisfiable)"))
}

/// Per-system lookup tables for the invariant checks.
struct Layout {
    signals: Vec<(String, usize)>,
    counters: Vec<(usize, u8, Vec<String>)>,
    intervals: Vec<(usize, String, Option<String>)>,
    dones: Vec<(usize, usize)>,
}

fn layout(doc: &SpecDocument, ts: &TransitionSystem) -> Layout {
    let signals = ts.actions.iter().map(|a| (a.name.clone(), a.signal_var)).collect();
    let mut counters = Vec::new();
    let mut intervals = Vec::new();
    for (v, var) in ts.variables.iter().enumerate() {
        match &var.kind {
            VarKind::Counter { counter, bound } => {
                let c = doc.counters.iter().find(|c| &c.name == counter).unwrap();
                let movers = c.inc_actions.iter().chain(&c.dec_actions).chain(&c.reset_actions).cloned().collect();
                counters.push((v, *bound, movers));
            }
            VarKind::IntervalOpen { interval } => {
                let i = doc.interval(interval).unwrap();
                let end = match &i.end {
                    IntervalEnd::Action(a) => Some(a.clone()),
                    IntervalEnd::Infinity => None,
                };
                intervals.push((v, i.begin.clone(), end));
            }
            _ => {}
        }
    }
    let dones = ts.actions.iter().filter_map(|a| Some((a.done_var?, a.signal_var))).collect();
    Layout { signals, counters, intervals, dones }
}

const NOT_HAPPENING: u8 = 0;
const HAPPENING: u8 = 1;
const JUST_HAPPENED: u8 = 2;

/// Checks one transition `s -> t`; returns a description of the first violation.
fn edge_violation(l: &Layout, s: &State, t: &State) -> Option<String> {
    let changed: Vec<&(String, usize)> = l.signals.iter().filter(|(_, v)| s[*v] != t[*v]).collect();
    if changed.len() > 1 {
        return Some(format!("{} action signals change in one step", changed.len()));
    }
    for (name, v) in &l.signals {
        let ok = matches!(
            (s[*v], t[*v]),
            (NOT_HAPPENING, NOT_HAPPENING | HAPPENING | JUST_HAPPENED)
                | (HAPPENING, HAPPENING | JUST_HAPPENED)
                | (JUST_HAPPENED, NOT_HAPPENING)
        );
        if !ok {
            return Some(format!("signal of {name} goes {} -> {}", s[*v], t[*v]));
        }
    }
    let completed = l.signals.iter().find(|(_, v)| t[*v] == JUST_HAPPENED && s[*v] != JUST_HAPPENED).map(|(n, _)| n);
    for (v, _, movers) in &l.counters {
        if s[*v] != t[*v] && !completed.is_some_and(|a| movers.contains(a)) {
            return Some("counter changes without one of its actions completing".into());
        }
    }
    for (v, begin, end) in &l.intervals {
        if s[*v] == t[*v] {
            if completed == Some(begin) && s[*v] == 1 {
                return Some(format!("{begin} completes while its interval is already open"));
            }
            continue;
        }
        let opens = t[*v] == 1 && completed == Some(begin);
        let closes = t[*v] == 0 && end.as_ref().is_some_and(|e| completed == Some(e));
        if !(opens || closes) {
            return Some("interval flag changes outside its delimiting actions".into());
        }
    }
    for (d, sig) in &l.dones {
        if s[*d] == 1 && t[*d] == 0 {
            return Some("done latch resets".into());
        }
        if s[*d] == 0 && t[*d] == 1 && t[*sig] != JUST_HAPPENED {
            return Some("done latch set without a completion".into());
        }
        if t[*sig] == JUST_HAPPENED && t[*d] == 0 {
            return Some("completion leaves the done latch unset".into());
        }
    }
    None
}

fn state_violation(l: &Layout, s: &State) -> Option<String> {
    l.counters.iter().find(|(v, bound, _)| s[*v] > *bound).map(|_| "counter exceeds its bound".into())
}

/// Exhaustive reachability over one compiled system.
fn explore(file: &str, doc: &SpecDocument, ts: &TransitionSystem) -> Result<usize, String> {
    let l = layout(doc, ts);
    let init = ts.initial.clone().ok_or("no initial state")?;
    for var in &ts.variables {
        let v = ts.var_index(&var.name).unwrap();
        if !matches!(var.kind, VarKind::TemporalPhase { .. }) && init[v] != 0 {
            return Err(format!("{file}: {} does not start at its initial value", var.name));
        }
    }
    let mut seen = HashSet::from([init.clone()]);
    let mut queue = VecDeque::from([init]);
    while let Some(s) = queue.pop_front() {
        if let Some(m) = state_violation(&l, &s) {
            return Err(format!("{file}: {m} in {s:?}"));
        }
        let succ = ts.successors(&s);
        if succ.is_empty() {
            return Err(format!("{file}: deadlock in {s:?}"));
        }
        for (c, t) in succ {
            if ts.is_committed(&s) && t == s {
                return Err(format!("{file}: self-loop `{}` at a committed location", ts.commands[c].label));
            }
            if let Some(m) = edge_violation(&l, &s, &t) {
                return Err(format!("{file}: {m} via `{}`", ts.commands[c].label));
            }
            if seen.insert(t.clone()) {
                queue.push_back(t);
            }
        }
    }
    Ok(seen.len())
}

const FREE_ENCODING_MAX_ACTIONS: usize = 8;

fn structural_invariants() -> Outcome {
    let mut files: Vec<PathBuf> = std::fs::read_dir(case(""))
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "flx"))
        .collect();
    files.sort();
    let (mut total, mut systems) = (0, 0);
    for path in &files {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let doc = parse_spec(&std::fs::read_to_string(path).unwrap()).map_err(|e| format!("{name}: {e}"))?;
        let doc = apply_exceptions(&doc).map_err(|e| format!("{name}: {e}"))?;
        // The free encoding lets every action hang in its happening phase
        // independently, so it is only explored on small models.
        let encodings: &[bool] = if doc.actions.len() <= FREE_ENCODING_MAX_ACTIONS { &[false, true] } else { &[false] };
        for &all_free in encodings {
            let opts = CompileOptions { all_free, ..Default::default() };
            let ts = compile(&doc, &opts).map_err(|e| format!("{name}: {e}"))?;
            total += explore(&name, &doc, &ts)?;
            systems += 1;
        }
    }
    Ok(format!("{} models, {systems} systems, {total} reachable states, 0 violations", files.len()))
}

fn exceptions() -> Outcome {
    let (flagged, _) = check_json("kill-selfdefense.flx")?;
    let f = findings(&flagged);
    ensure(f.is_empty(), format!("flagged: {f:?}"))?;
    let (unflagged, _) = check_json("kill-selfdefense-unflagged.flx")?;
    let u = findings(&unflagged);
    ensure(u.len() == 1 && u[0].0 == "impossible-permission", format!("unflagged: {u:?}"))?;
    Ok("flagged 0 findings, unflagged 1 impossible-permission".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("university case study findings and query", university),
        ("amendments keep the reparation problem", amendments),
        ("traffic fixture coherent with reparation witness", traffic),
        ("library naive vs counted rule", library),
        ("rule translation table", tr_table),
        ("model checker agrees with lasso enumeration", oracle_agreement),
        ("structural invariants of every corpus model", structural_invariants),
        ("exception semantics", exceptions),
    ];
    // Keep panic messages out of the summary lines.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {title}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {title}: {why}", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
