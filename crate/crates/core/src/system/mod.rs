//! Guarded-command transition systems compiled from the background theory.

mod compile;
mod expr;

use serde::Serialize;
use thiserror::Error;

pub use compile::{compile, CompileOptions};
pub use expr::{Comparison, StateExpr};

use crate::ltl::{Prop, SignalValue};
use crate::syntax::CmpOp;

/// One valuation of all state variables, in declaration order.
pub type State = Box<[u8]>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum VarKind {
    /// Main control location: 0 is `running`, `2i+1` is `happening_i`
    /// and `2i+2` is `just_happened_i` for the i-th action.
    MainPhase,
    /// Action signal, valued by [`SignalValue`] in declaration order.
    Signal { action: String },
    /// Last output of an action; 0 until its first completion, then 1 + label index.
    Output { action: String, labels: Vec<String> },
    /// Latched once the action has completed.
    Done { action: String },
    IntervalOpen { interval: String },
    Counter { counter: String, bound: u8 },
    /// Position in a sequence of temporal points: `2k-1` sits on point k.
    TemporalPhase { points: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateVariable {
    pub name: String,
    pub kind: VarKind,
    /// Values range over `0..domain`.
    pub domain: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Update {
    Set(usize, u8),
    Inc(usize),
    Dec(usize),
    Toggle(usize),
}

impl Update {
    pub fn var(&self) -> usize {
        match *self {
            Update::Set(v, _) | Update::Inc(v) | Update::Dec(v) | Update::Toggle(v) => v,
        }
    }

    fn apply(&self, s: &mut [u8]) {
        match *self {
            Update::Set(v, x) => s[v] = x,
            Update::Inc(v) => s[v] += 1,
            Update::Dec(v) => s[v] -= 1,
            Update::Toggle(v) => s[v] = 1 - s[v],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CommandKind {
    /// The action signal switches on.
    Start { action: usize },
    /// The action completes, producing `output` if it has output values.
    Complete { action: usize, output: Option<usize> },
    /// Leaves the committed `just_happened` location.
    Exit { action: usize },
    TemporalEnter { decl: usize, point: usize },
    TemporalExit { decl: usize, point: usize },
    Idle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuardedCommand {
    pub label: String,
    pub kind: CommandKind,
    /// Main-phase value this command leaves from, if any.
    pub from_phase: Option<u8>,
    pub guard: StateExpr,
    pub updates: Vec<Update>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActionInfo {
    pub name: String,
    pub outputs: Vec<String>,
    /// Compiled with the collapsed start-and-complete encoding, which keeps
    /// `happening(A)` unobservable.
    pub canonical: bool,
    pub signal_var: usize,
    pub output_var: Option<usize>,
    pub done_var: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("`done({0})` is not tracked by this compiled system")]
    UntrackedDone(String),
    #[error("`happening({0})` is not observable: the action was compiled without a separate happening phase")]
    HappeningUnobservable(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("temporal operator in a state formula")]
    Temporal,
    #[error("background too large to compile: {0}")]
    TooLarge(String),
    #[error("{0}")]
    Translate(#[from] crate::ltl::TranslateError),
}

/// A finite transition system over small integer variables.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionSystem {
    pub variables: Vec<StateVariable>,
    pub actions: Vec<ActionInfo>,
    pub commands: Vec<GuardedCommand>,
    /// Pairs of state conditions that may never hold together.
    pub incompatibilities: Vec<(String, StateExpr)>,
    pub initial: Option<State>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub(crate) index: Index,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Index {
    pub main_phase: usize,
    /// Commands by main-phase value, for the running location and each
    /// committed location.
    pub by_phase: Vec<Vec<usize>>,
    /// For each temporal phase variable, its enter/exit commands by phase value.
    pub temporal: Vec<(usize, Vec<Vec<usize>>)>,
    pub idle: Option<usize>,
    pub intervals: Vec<(String, usize)>,
    pub counters: Vec<(String, usize)>,
    pub points: Vec<(String, usize, u8)>,
}

impl TransitionSystem {
    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.name == name)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Whether the state sits in a committed location.
    pub fn is_committed(&self, s: &[u8]) -> bool {
        s[self.index.main_phase] != 0 || self.index.temporal.iter().any(|&(v, _)| s[v] % 2 == 1)
    }

    /// Compiles a single atom to a comparison over state variables.
    pub fn prop_expr(&self, p: &Prop) -> Result<StateExpr, SystemError> {
        let action = |name: &str| {
            self.action_index(name)
                .map(|i| &self.actions[i])
                .ok_or_else(|| SystemError::Unknown { kind: "action", name: name.to_string() })
        };
        let cmp = |var, op, value| StateExpr::Cmp(Comparison { var, op, value });
        Ok(match p {
            Prop::Signal { action: a, value } => {
                let info = action(a)?;
                if info.canonical && *value != SignalValue::JustHappened {
                    return Err(SystemError::HappeningUnobservable(a.clone()));
                }
                cmp(info.signal_var, CmpOp::Eq, signal_code(*value))
            }
            Prop::Output { action: a, label } => {
                let info = action(a)?;
                let k = info.outputs.iter().position(|l| l == label).ok_or_else(|| {
                    SystemError::Unknown { kind: "output value", name: format!("{a}.{label}") }
                })?;
                cmp(info.output_var.expect("action with outputs has an output variable"), CmpOp::Eq, k as u8 + 1)
            }
            Prop::Done(a) => {
                let info = action(a)?;
                let v = info.done_var.ok_or_else(|| SystemError::UntrackedDone(a.clone()))?;
                cmp(v, CmpOp::Eq, 1)
            }
            Prop::IntervalOpen(i) => {
                let v = lookup(&self.index.intervals, i, "interval")?;
                cmp(v, CmpOp::Eq, 1)
            }
            Prop::Counter { counter, op, value } => {
                let v = lookup(&self.index.counters, counter, "counter")?;
                let op = CmpOp::from(*op);
                match u8::try_from(*value) {
                    Ok(x) => cmp(v, op, x),
                    Err(_) => StateExpr::Const(matches!(op, CmpOp::Lt | CmpOp::Le)),
                }
            }
            Prop::Point(t) => {
                let (_, v, code) = self
                    .index
                    .points
                    .iter()
                    .find(|(n, _, _)| n == t)
                    .ok_or_else(|| SystemError::Unknown { kind: "temporal point", name: t.clone() })?;
                cmp(*v, CmpOp::Eq, *code)
            }
        })
    }

    /// Successor states in command order. Committed locations only enable
    /// their own commands; other states also have an idle self-loop.
    /// Commands entering a committed location from which no command can
    /// leave are not enabled.
    pub fn successors(&self, s: &[u8]) -> Vec<(usize, State)> {
        let mut out = Vec::new();
        self.for_each_successor(s, |c, t| out.push((c, t)));
        out
    }

    pub fn for_each_successor(&self, s: &[u8], mut f: impl FnMut(usize, State)) {
        for &(v, ref by_value) in &self.index.temporal {
            if s[v] % 2 == 1 {
                for &c in &by_value[s[v] as usize] {
                    self.fire(c, s, &mut f);
                }
                return;
            }
        }
        let phase = s[self.index.main_phase] as usize;
        for &c in &self.index.by_phase[phase] {
            self.fire(c, s, &mut f);
        }
        if phase != 0 {
            return;
        }
        for &(v, ref by_value) in &self.index.temporal {
            for &c in by_value.get(s[v] as usize).into_iter().flatten() {
                self.fire(c, s, &mut f);
            }
        }
        if let Some(c) = self.index.idle {
            f(c, s.into());
        }
    }

    fn fire(&self, c: usize, s: &[u8], f: &mut impl FnMut(usize, State)) {
        let cmd = &self.commands[c];
        if !cmd.guard.eval(s) {
            return;
        }
        let mut t: State = s.into();
        for u in &cmd.updates {
            u.apply(&mut t);
        }
        // A committed state whose every exit is pruned would be a dead end.
        if self.admissible(&t) && (!self.is_committed(&t) || self.can_leave(&t)) {
            f(c, t);
        }
    }

    fn can_leave(&self, s: &[u8]) -> bool {
        let mut any = false;
        self.for_each_successor(s, |_, _| any = true);
        any
    }

    /// False when some incompatibility is violated in `s`.
    pub fn admissible(&self, s: &[u8]) -> bool {
        self.incompatibilities.iter().all(|(_, e)| !e.eval(s))
    }

    /// Human-readable value of variable `v` in a state.
    pub fn value_name(&self, v: usize, x: u8) -> String {
        match &self.variables[v].kind {
            VarKind::Signal { .. } => SignalValue::ALL[x as usize].name().to_string(),
            VarKind::Output { labels, .. } => {
                if x == 0 { "none".into() } else { labels[x as usize - 1].clone() }
            }
            VarKind::Done { .. } | VarKind::IntervalOpen { .. } => (x == 1).to_string(),
            VarKind::MainPhase => self.location_name(x),
            _ => x.to_string(),
        }
    }

    /// Name of a main-phase location.
    pub fn location_name(&self, x: u8) -> String {
        if x == 0 {
            return "running".into();
        }
        let a = &self.actions[(x as usize - 1) / 2].name;
        if x % 2 == 1 { format!("happening_{a}") } else { format!("just_happened_{a}") }
    }
}

fn lookup(table: &[(String, usize)], name: &str, kind: &'static str) -> Result<usize, SystemError> {
    table
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, v)| *v)
        .ok_or_else(|| SystemError::Unknown { kind, name: name.to_string() })
}

pub fn signal_code(v: SignalValue) -> u8 {
    match v {
        SignalValue::NotHappening => 0,
        SignalValue::Happening => 1,
        SignalValue::JustHappened => 2,
    }
}
