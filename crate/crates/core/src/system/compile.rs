use std::collections::HashSet;

use super::*;
use crate::syntax::{formula_to_string, InnerForm, IntervalEnd, SpecDocument, Term};

#[derive(Debug, Clone, Default)]
pub struct CompileOptions {
    /// Formulas that will be checked on the system besides those of the
    /// document, e.g. ad hoc queries. They decide which observations the
    /// system must support.
    pub extra_formulas: Vec<InnerForm>,
    /// Give every action a separate happening phase.
    pub all_free: bool,
    /// Track `done(A)` for every action.
    pub track_all_done: bool,
}

const MAX_ACTIONS: usize = 126;

struct Observed {
    happening: HashSet<String>,
    done: HashSet<String>,
}

fn observed(doc: &SpecDocument, extra: &[InnerForm]) -> Observed {
    let mut obs = Observed { happening: HashSet::new(), done: HashSet::new() };
    for f in doc.all_formulas().into_iter().chain(extra) {
        f.for_each_term(&mut |t| match t {
            Term::Happening(a) => {
                obs.happening.insert(a.clone());
            }
            Term::Done(a) | Term::Output { action: a, .. } => {
                obs.done.insert(a.clone());
            }
            _ => {}
        });
    }
    obs
}

/// Compiles the background theory of `doc` (actions, intervals, counters,
/// temporal actions, incompatibilities) into a transition system.
pub fn compile(doc: &SpecDocument, opts: &CompileOptions) -> Result<TransitionSystem, SystemError> {
    if doc.actions.len() > MAX_ACTIONS {
        return Err(SystemError::TooLarge(format!(
            "{} actions, at most {MAX_ACTIONS} are supported",
            doc.actions.len()
        )));
    }
    let obs = observed(doc, &opts.extra_formulas);
    let mut ts = TransitionSystem {
        variables: Vec::new(),
        actions: Vec::new(),
        commands: Vec::new(),
        incompatibilities: Vec::new(),
        initial: None,
        warnings: Vec::new(),
        index: Index::default(),
    };
    let var = |ts: &mut TransitionSystem, name: String, kind: VarKind, domain: u16| {
        ts.variables.push(StateVariable { name, kind, domain });
        ts.variables.len() - 1
    };

    ts.index.main_phase =
        var(&mut ts, "phase".into(), VarKind::MainPhase, 2 * doc.actions.len() as u16 + 1);
    for a in &doc.actions {
        let signal_var =
            var(&mut ts, a.name.clone(), VarKind::Signal { action: a.name.clone() }, 3);
        let output_var = (!a.outputs.is_empty()).then(|| {
            let kind = VarKind::Output { action: a.name.clone(), labels: a.outputs.clone() };
            var(&mut ts, format!("{}_output", a.name), kind, a.outputs.len() as u16 + 1)
        });
        let done_var = (opts.track_all_done || obs.done.contains(&a.name)).then(|| {
            var(&mut ts, format!("done_{}", a.name), VarKind::Done { action: a.name.clone() }, 2)
        });
        ts.actions.push(ActionInfo {
            name: a.name.clone(),
            outputs: a.outputs.clone(),
            canonical: !opts.all_free && !obs.happening.contains(&a.name),
            signal_var,
            output_var,
            done_var,
        });
    }
    for i in &doc.intervals {
        let kind = VarKind::IntervalOpen { interval: i.name.clone() };
        let v = var(&mut ts, format!("{}_opened", i.name), kind, 2);
        ts.index.intervals.push((i.name.clone(), v));
    }
    for c in &doc.counters {
        let bound = u8::try_from(c.bound)
            .map_err(|_| SystemError::TooLarge(format!("counter `{}` bound {}", c.name, c.bound)))?;
        let kind = VarKind::Counter { counter: c.name.clone(), bound };
        let v = var(&mut ts, c.name.clone(), kind, bound as u16 + 1);
        ts.index.counters.push((c.name.clone(), v));
    }
    for (d, t) in doc.temporal_actions.iter().enumerate() {
        if t.points.len() > 127 {
            return Err(SystemError::TooLarge(format!("{} temporal points", t.points.len())));
        }
        let kind = VarKind::TemporalPhase { points: t.points.clone() };
        let v = var(&mut ts, format!("temporal_phase_{d}"), kind, 2 * t.points.len() as u16 + 1);
        for (k, p) in t.points.iter().enumerate() {
            ts.index.points.push((p.clone(), v, 2 * k as u8 + 1));
        }
        ts.index.temporal.push((v, vec![Vec::new(); 2 * t.points.len() + 1]));
    }

    let main = ts.index.main_phase;
    let no_point = StateExpr::all(ts.index.points.iter().map(|&(_, v, code)| {
        StateExpr::negate(StateExpr::eq(v, code))
    }));
    let at_phase = |p: u8| StateExpr::all([StateExpr::eq(main, p), no_point.clone()]);

    let mut commands: Vec<GuardedCommand> = Vec::new();
    for (i, decl) in doc.actions.iter().enumerate() {
        let info = ts.actions[i].clone();
        let (happening, just) = (2 * i as u8 + 1, 2 * i as u8 + 2);
        let scope = match &decl.scope {
            Some(s) => ts.prop_expr(&crate::ltl::Prop::IntervalOpen(s.clone()))?,
            None => StateExpr::Const(true),
        };
        let requires = match &decl.guard {
            Some(g) => ts.state_expr(g)?,
            None => StateExpr::Const(true),
        };
        let (effect_guard, effects) = effects_of(&ts, doc, &decl.name)?;
        let enabled = StateExpr::all([scope.clone(), requires, effect_guard]);

        let mut completion = vec![
            Update::Set(info.signal_var, signal_code(SignalValue::JustHappened)),
            Update::Set(main, just),
        ];
        if let Some(d) = info.done_var {
            completion.push(Update::Set(d, 1));
        }
        completion.extend(effects);
        let outputs: Vec<Option<usize>> = if info.outputs.is_empty() {
            vec![None]
        } else {
            (0..info.outputs.len()).map(Some).collect()
        };
        let complete = |from: u8, guard: StateExpr| {
            outputs.iter().map(move |&o| {
                let mut updates = completion.clone();
                let label = match o {
                    Some(k) => {
                        updates.push(Update::Set(info.output_var.unwrap(), k as u8 + 1));
                        format!("{}.{}", decl.name, info.outputs[k])
                    }
                    None => decl.name.clone(),
                };
                GuardedCommand {
                    label,
                    kind: CommandKind::Complete { action: i, output: o },
                    from_phase: Some(from),
                    guard: guard.clone(),
                    updates,
                }
            })
        };
        let not_happening = StateExpr::eq(info.signal_var, 0);
        if info.canonical {
            commands.push(GuardedCommand {
                label: format!("start_{}", decl.name),
                kind: CommandKind::Start { action: i },
                from_phase: Some(0),
                guard: StateExpr::all([at_phase(0), not_happening, enabled]),
                updates: vec![Update::Set(info.signal_var, 1), Update::Set(main, happening)],
            });
            commands.extend(complete(happening, StateExpr::eq(main, happening)));
        } else {
            commands.push(GuardedCommand {
                label: format!("start_{}", decl.name),
                kind: CommandKind::Start { action: i },
                from_phase: Some(0),
                guard: StateExpr::all([at_phase(0), not_happening, scope]),
                updates: vec![Update::Set(info.signal_var, 1)],
            });
            let guard = StateExpr::all([at_phase(0), StateExpr::eq(info.signal_var, 1), enabled]);
            commands.extend(complete(0, guard));
        }
        commands.push(GuardedCommand {
            label: format!("exit_{}", decl.name),
            kind: CommandKind::Exit { action: i },
            from_phase: Some(just),
            guard: StateExpr::eq(main, just),
            updates: vec![Update::Set(info.signal_var, 0), Update::Set(main, 0)],
        });
    }

    let mut temporal_cmds = Vec::new();
    for (d, t) in doc.temporal_actions.iter().enumerate() {
        let v = ts.index.temporal[d].0;
        for (k, p) in t.points.iter().enumerate() {
            let (gap, point) = (2 * k as u8, 2 * k as u8 + 1);
            temporal_cmds.push((d, gap, GuardedCommand {
                label: format!("enter_{p}"),
                kind: CommandKind::TemporalEnter { decl: d, point: k },
                from_phase: Some(0),
                guard: StateExpr::all([at_phase(0), StateExpr::eq(v, gap)]),
                updates: vec![Update::Set(v, point)],
            }));
            temporal_cmds.push((d, point, GuardedCommand {
                label: format!("leave_{p}"),
                kind: CommandKind::TemporalExit { decl: d, point: k },
                from_phase: None,
                guard: StateExpr::eq(v, point),
                updates: vec![Update::Set(v, point + 1)],
            }));
        }
    }

    ts.index.by_phase = vec![Vec::new(); 2 * doc.actions.len() + 1];
    for (c, cmd) in commands.iter().enumerate() {
        ts.index.by_phase[cmd.from_phase.unwrap() as usize].push(c);
    }
    for (d, value, cmd) in temporal_cmds {
        ts.index.temporal[d].1[value as usize].push(commands.len());
        commands.push(cmd);
    }
    ts.index.idle = Some(commands.len());
    commands.push(GuardedCommand {
        label: "idle".into(),
        kind: CommandKind::Idle,
        from_phase: Some(0),
        guard: at_phase(0),
        updates: Vec::new(),
    });
    ts.commands = commands;

    for inc in &doc.incompatibilities {
        let name = format!("{} # {}", formula_to_string(&inc.left), formula_to_string(&inc.right));
        let e = StateExpr::all([ts.state_expr(&inc.left)?, ts.state_expr(&inc.right)?]);
        if inc.left.normalize() == inc.right.normalize() {
            ts.warnings.push(format!("`{name}` is self-incompatible: it can never hold"));
        }
        ts.incompatibilities.push((name, e));
    }

    let init: State = vec![0u8; ts.variables.len()].into();
    if ts.admissible(&init) {
        ts.initial = Some(init);
    } else {
        ts.warnings.push("the initial state violates an incompatibility; no trace exists".into());
    }
    for c in &doc.counters {
        if c.inc_actions.is_empty() {
            ts.warnings.push(format!("counter `{}` is never increased", c.name));
        }
    }
    Ok(ts)
}

/// Guard and updates contributed by intervals and counters that `action`
/// delimits or modifies.
fn effects_of(
    ts: &TransitionSystem,
    doc: &SpecDocument,
    action: &str,
) -> Result<(StateExpr, Vec<Update>), SystemError> {
    let mut guard = Vec::new();
    let mut updates = Vec::new();
    for (k, i) in doc.intervals.iter().enumerate() {
        let v = ts.index.intervals[k].1;
        let ends_here = i.end == IntervalEnd::Action(action.to_string());
        if i.begin == action {
            if let Some(s) = &i.scope {
                guard.push(ts.prop_expr(&crate::ltl::Prop::IntervalOpen(s.clone()))?);
            }
            if ends_here {
                updates.push(Update::Toggle(v));
            } else {
                guard.push(StateExpr::eq(v, 0));
                updates.push(Update::Set(v, 1));
            }
        } else if ends_here {
            guard.push(StateExpr::eq(v, 1));
            updates.push(Update::Set(v, 0));
        }
    }
    for (k, c) in doc.counters.iter().enumerate() {
        let v = ts.index.counters[k].1;
        let bound = c.bound as u8;
        if c.inc_actions.iter().any(|a| a == action) {
            guard.push(StateExpr::cmp(v, CmpOp::Lt, bound));
            updates.push(Update::Inc(v));
        }
        if c.dec_actions.iter().any(|a| a == action) {
            let floor = u8::from(c.inc_actions.iter().any(|a| a == action));
            guard.push(StateExpr::cmp(v, CmpOp::Gt, floor));
            updates.push(Update::Dec(v));
        }
        if c.reset_actions.iter().any(|a| a == action) {
            updates.push(Update::Set(v, 0));
        }
    }
    Ok((StateExpr::all(guard), updates))
}
