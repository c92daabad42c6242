use std::collections::HashSet;
use std::fmt::Write;
use std::str::FromStr;

use thiserror::Error;

use crate::ltl::LtlFormula;
use crate::syntax::CmpOp;
use crate::system::{StateExpr, SystemError, TransitionSystem, Update, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    /// Guarded-command listing over the `running` and committed locations.
    Neutral,
    /// NuSMV input.
    Smv,
}

impl FromStr for Dialect {
    type Err = EmitError;

    fn from_str(s: &str) -> Result<Self, EmitError> {
        match s {
            "neutral" => Ok(Dialect::Neutral),
            "smv" => Ok(Dialect::Smv),
            other => Err(EmitError::UnsupportedDialect(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("unsupported dialect `{0}` (expected `neutral` or `smv`)")]
    UnsupportedDialect(String),
    #[error(transparent)]
    System(#[from] SystemError),
}

pub fn snake_case(name: &str) -> String {
    let mut out = String::new();
    let chars: Vec<char> = name.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_uppercase() {
            let prev_lower = i > 0 && (chars[i - 1].is_lowercase() || chars[i - 1].is_ascii_digit());
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            let prev_upper = i > 0 && chars[i - 1].is_uppercase();
            if prev_lower || (prev_upper && next_lower) {
                out.push('_');
            }
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

struct Names<'a> {
    ts: &'a TransitionSystem,
    vars: Vec<String>,
    dialect: Dialect,
}

impl<'a> Names<'a> {
    fn new(ts: &'a TransitionSystem, dialect: Dialect) -> Self {
        let mut seen = HashSet::new();
        let vars = ts
            .variables
            .iter()
            .map(|v| {
                let base = snake_case(&v.name);
                let mut name = base.clone();
                let mut k = 2;
                while !seen.insert(name.clone()) {
                    name = format!("{base}_{k}");
                    k += 1;
                }
                name
            })
            .collect();
        Names { ts, vars, dialect }
    }

    fn location(&self, x: u8) -> String {
        snake_case(&self.ts.location_name(x))
    }

    fn value(&self, v: usize, x: u8) -> String {
        match &self.ts.variables[v].kind {
            VarKind::MainPhase => self.location(x),
            VarKind::Output { labels, .. } => {
                if x == 0 { "NONE".into() } else { labels[x as usize - 1].to_uppercase() }
            }
            VarKind::Done { .. } | VarKind::IntervalOpen { .. } => match (self.dialect, x == 1) {
                (Dialect::Smv, b) => if b { "TRUE" } else { "FALSE" }.into(),
                (Dialect::Neutral, b) => b.to_string(),
            },
            VarKind::TemporalPhase { points } => {
                let k = x as usize / 2;
                if x % 2 == 1 {
                    points[k].to_uppercase()
                } else if k < points.len() {
                    format!("BEFORE_{}", points[k].to_uppercase())
                } else {
                    "AFTER_ALL".into()
                }
            }
            _ => self.ts.value_name(v, x),
        }
    }

    fn domain(&self, v: usize) -> String {
        let var = &self.ts.variables[v];
        match var.kind {
            VarKind::Counter { bound, .. } => format!("0..{bound}"),
            VarKind::Done { .. } | VarKind::IntervalOpen { .. } => "boolean".into(),
            _ => {
                let vals: Vec<String> = (0..var.domain).map(|x| self.value(v, x as u8)).collect();
                format!("{{{}}}", vals.join(", "))
            }
        }
    }

    fn expr(&self, e: &StateExpr) -> String {
        let (t, f, not) = match self.dialect {
            Dialect::Smv => ("TRUE", "FALSE", "!"),
            Dialect::Neutral => ("true", "false", "!"),
        };
        match e {
            StateExpr::Const(b) => if *b { t } else { f }.into(),
            StateExpr::Cmp(c) => {
                let op = match c.op {
                    CmpOp::Eq => "=",
                    CmpOp::Lt => "<",
                    CmpOp::Le => "<=",
                    CmpOp::Gt => ">",
                    CmpOp::Ge => ">=",
                };
                format!("{} {op} {}", self.vars[c.var], self.value(c.var, c.value))
            }
            StateExpr::Not(x) => format!("{not}({})", self.expr(x)),
            StateExpr::And(xs) => self.join(xs, " & "),
            StateExpr::Or(xs) => self.join(xs, " | "),
        }
    }

    fn join(&self, xs: &[StateExpr], sep: &str) -> String {
        let parts: Vec<String> = xs
            .iter()
            .map(|x| match x {
                StateExpr::And(_) | StateExpr::Or(_) => format!("({})", self.expr(x)),
                _ => self.expr(x),
            })
            .collect();
        parts.join(sep)
    }

    fn update(&self, u: &Update) -> (usize, String) {
        let v = u.var();
        let n = &self.vars[v];
        let rhs = match *u {
            Update::Set(_, x) => self.value(v, x),
            Update::Inc(_) => format!("{n} + 1"),
            Update::Dec(_) => format!("{n} - 1"),
            Update::Toggle(_) => format!("!{n}"),
        };
        (v, rhs)
    }

    fn ltl(&self, f: &LtlFormula) -> Result<String, SystemError> {
        use LtlFormula::*;
        Ok(match f {
            True => "TRUE".into(),
            False => "FALSE".into(),
            Atom(p) => format!("({})", self.expr(&self.ts.prop_expr(p)?)),
            Not(a) => format!("!{}", self.ltl(a)?),
            And(a, b) => format!("({} & {})", self.ltl(a)?, self.ltl(b)?),
            Or(a, b) => format!("({} | {})", self.ltl(a)?, self.ltl(b)?),
            Implies(a, b) => format!("({} -> {})", self.ltl(a)?, self.ltl(b)?),
            Until(a, b) => format!("({} U {})", self.ltl(a)?, self.ltl(b)?),
            Release(a, b) => format!("({} V {})", self.ltl(a)?, self.ltl(b)?),
            Eventually(a) => format!("F {}", self.ltl(a)?),
            Always(a) => format!("G {}", self.ltl(a)?),
        })
    }
}

/// Writes the system and specifications in the given dialect.
pub fn emit_model(ts: &TransitionSystem, specs: &[LtlFormula], dialect: Dialect) -> Result<String, EmitError> {
    let names = Names::new(ts, dialect);
    match dialect {
        Dialect::Neutral => neutral(&names, specs),
        Dialect::Smv => smv(&names, specs),
    }
}

fn initial(ts: &TransitionSystem) -> Vec<u8> {
    ts.initial.as_ref().map(|s| s.to_vec()).unwrap_or_else(|| vec![0; ts.variables.len()])
}

fn neutral(n: &Names, specs: &[LtlFormula]) -> Result<String, EmitError> {
    let ts = n.ts;
    let main = ts.variables.iter().position(|v| v.kind == VarKind::MainPhase).unwrap();
    let init = initial(ts);
    let mut out = String::new();
    for (v, var) in ts.variables.iter().enumerate() {
        let ty = match var.kind {
            VarKind::MainPhase => continue,
            VarKind::Counter { .. } => "int",
            VarKind::Done { .. } | VarKind::IntervalOpen { .. } => "bool",
            _ => "enum",
        };
        writeln!(out, "declare {ty} {} = {}", n.vars[v], n.value(v, init[v])).unwrap();
    }
    let committed: Vec<String> = (1..ts.variables[main].domain).map(|x| n.location(x as u8)).collect();
    if !committed.is_empty() {
        writeln!(out, "committed {}", committed.join(", ")).unwrap();
    }
    for (name, e) in &ts.incompatibilities {
        writeln!(out, "never {}  # {name}", n.expr(e)).unwrap();
    }
    let mut last: Option<(String, String)> = None;
    for c in &ts.commands {
        let from = c.from_phase.unwrap_or(0);
        let to = c
            .updates
            .iter()
            .find_map(|u| match *u {
                Update::Set(v, x) if v == main => Some(x),
                _ => None,
            })
            .unwrap_or(from);
        let header = (n.location(from), n.location(to));
        if last.as_ref() != Some(&header) {
            writeln!(out, "\n{} -> {}", header.0, header.1).unwrap();
            last = Some(header);
        }
        let guard = strip_phase(&c.guard, main);
        let sets: Vec<String> = c
            .updates
            .iter()
            .filter(|u| u.var() != main)
            .map(|u| {
                let (v, rhs) = n.update(u);
                format!("{} = {rhs}", n.vars[v])
            })
            .collect();
        let sets = if sets.is_empty() { "skip".to_string() } else { sets.join(", ") };
        writeln!(out, "  guard {} -> set {sets};", n.expr(&guard)).unwrap();
    }
    for (k, f) in specs.iter().enumerate() {
        if k == 0 {
            out.push('\n');
        }
        writeln!(out, "ltl {}", n.ltl(f)?).unwrap();
    }
    Ok(out)
}

/// The guard without its main-phase test, which the location header states.
fn strip_phase(e: &StateExpr, main: usize) -> StateExpr {
    match e {
        StateExpr::Cmp(c) if c.var == main => StateExpr::Const(true),
        StateExpr::And(xs) => StateExpr::all(xs.iter().map(|x| strip_phase(x, main))),
        e => e.clone(),
    }
}

fn smv(n: &Names, specs: &[LtlFormula]) -> Result<String, EmitError> {
    let ts = n.ts;
    let init = initial(ts);
    let mut out = String::from("MODULE main\nVAR\n");
    for v in 0..ts.variables.len() {
        writeln!(out, "  {} : {};", n.vars[v], n.domain(v)).unwrap();
    }
    out.push_str("ASSIGN\n");
    for v in 0..ts.variables.len() {
        writeln!(out, "  init({}) := {};", n.vars[v], n.value(v, init[v])).unwrap();
    }
    for (name, e) in &ts.incompatibilities {
        writeln!(out, "-- incompatible: {name}\nINVAR !({});", n.expr(e)).unwrap();
    }
    out.push_str("TRANS\n");
    let cmds: Vec<String> = ts
        .commands
        .iter()
        .map(|c| {
            let mut next: Vec<String> = (0..ts.variables.len()).map(|v| n.vars[v].clone()).collect();
            for u in &c.updates {
                let (v, rhs) = n.update(u);
                next[v] = rhs;
            }
            let frame: Vec<String> =
                next.iter().enumerate().map(|(v, rhs)| format!("next({}) = {rhs}", n.vars[v])).collect();
            format!("({} & {})  -- {}", n.expr(&c.guard), frame.join(" & "), c.label)
        })
        .collect();
    writeln!(out, "    {}", cmds.join("\n  | ")).unwrap();
    for f in specs {
        writeln!(out, "LTLSPEC {}", n.ltl(f)?).unwrap();
    }
    Ok(out)
}
