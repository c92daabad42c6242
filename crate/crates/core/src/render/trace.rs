use std::collections::BTreeMap;

use serde::Serialize;

use crate::check::LassoTrace;
use crate::system::{CommandKind, TransitionSystem, VarKind};

/// One state of a witness, described relative to its predecessor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    /// Label of the command that produced this state.
    pub command: Option<String>,
    /// Action completed by that command, if any.
    pub completed: Option<String>,
    pub output: Option<String>,
    pub event: String,
    /// Variables whose value differs from the previous state.
    pub changed: BTreeMap<String, String>,
    pub opened: Vec<String>,
    pub closed: Vec<String>,
    pub open_intervals: Vec<String>,
    pub counters: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceView {
    pub steps: Vec<TraceStep>,
    pub loop_start: usize,
    /// Command leading from the last state back to the loop start.
    pub loop_back: String,
}

pub fn trace_view(ts: &TransitionSystem, trace: &LassoTrace) -> TraceView {
    let steps = trace
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let prev = i.checked_sub(1).map(|j| &trace.states[j]);
            let cmd = trace.steps[i].map(|c| &ts.commands[c]);
            let (completed, output, event) = match cmd.map(|c| &c.kind) {
                None => (None, None, "start".to_string()),
                Some(CommandKind::Complete { action, output }) => {
                    let a = &ts.actions[*action];
                    let out = output.map(|k| a.outputs[k].clone());
                    let event = match &out {
                        Some(o) => format!("{} ⇒ {o}", a.name),
                        None => a.name.clone(),
                    };
                    (Some(a.name.clone()), out, event)
                }
                Some(CommandKind::Start { action }) => (None, None, format!("{} begins", ts.actions[*action].name)),
                Some(CommandKind::Exit { action }) => (None, None, format!("· after {}", ts.actions[*action].name)),
                Some(CommandKind::TemporalEnter { .. }) => {
                    (None, None, format!("@ {}", cmd.unwrap().label.trim_start_matches("enter_")))
                }
                Some(CommandKind::TemporalExit { .. }) => {
                    (None, None, format!("· after {}", cmd.unwrap().label.trim_start_matches("leave_")))
                }
                Some(CommandKind::Idle) => (None, None, "· idle".to_string()),
            };
            let mut changed = BTreeMap::new();
            let (mut opened, mut closed) = (Vec::new(), Vec::new());
            if let Some(p) = prev {
                for (v, var) in ts.variables.iter().enumerate() {
                    if p[v] == s[v] || var.kind == VarKind::MainPhase {
                        continue;
                    }
                    changed.insert(var.name.clone(), ts.value_name(v, s[v]));
                    if let VarKind::IntervalOpen { interval } = &var.kind {
                        if s[v] == 1 { opened.push(interval.clone()) } else { closed.push(interval.clone()) }
                    }
                }
            }
            TraceStep {
                step: i,
                command: cmd.map(|c| c.label.clone()),
                completed,
                output,
                event,
                changed,
                opened,
                closed,
                open_intervals: ts.index.intervals.iter().filter(|(_, v)| s[*v] == 1).map(|(n, _)| n.clone()).collect(),
                counters: ts.index.counters.iter().map(|(n, v)| (n.clone(), s[*v])).collect(),
            }
        })
        .collect();
    TraceView { steps, loop_start: trace.loop_start, loop_back: ts.commands[trace.loop_back].label.clone() }
}

/// Textual timeline, one state per line, followed by the loop marker.
pub fn render_trace(ts: &TransitionSystem, trace: &LassoTrace) -> String {
    render_view(ts, &trace_view(ts, trace))
}

pub(crate) fn render_view(ts: &TransitionSystem, view: &TraceView) -> String {
    let num_w = view.steps.len().saturating_sub(1).to_string().len().max(2);
    let columns: Vec<[String; 4]> = view
        .steps
        .iter()
        .map(|st| {
            let open = if st.open_intervals.is_empty() {
                "open: -".to_string()
            } else {
                format!("open: {}", st.open_intervals.join(", "))
            };
            let counters = ts
                .index
                .counters
                .iter()
                .map(|(n, _)| format!("{n}={}", st.counters[n]))
                .collect::<Vec<_>>()
                .join(" ");
            let mut notes: Vec<String> = st.opened.iter().map(|i| format!("opens {i}")).collect();
            notes.extend(st.closed.iter().map(|i| format!("closes {i}")));
            if st.step > 0 {
                let prev = &view.steps[st.step - 1];
                for (n, x) in &st.counters {
                    if prev.counters[n] != *x {
                        notes.push(format!("{n} {}→{x}", prev.counters[n]));
                    }
                }
            }
            let notes = if notes.is_empty() { String::new() } else { format!("({})", notes.join(", ")) };
            [st.event.clone(), open, counters, notes]
        })
        .collect();
    let width = |k: usize| columns.iter().map(|c| c[k].chars().count()).max().unwrap_or(0);
    let widths = [width(0), width(1), width(2)];
    let mut out = String::new();
    for (st, cols) in view.steps.iter().zip(&columns) {
        let mut line = format!("{:>num_w$}  ", st.step);
        for (k, col) in cols.iter().enumerate() {
            if col.is_empty() {
                continue;
            }
            line.push_str(col);
            if k < 3 {
                let pad = widths[k] - col.chars().count();
                line.extend(std::iter::repeat(' ').take(pad + 3));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out.push_str(&format!("{:num_w$}  ↻ repeats from step {}\n", "", view.loop_start));
    out
}
