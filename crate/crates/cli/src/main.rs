use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flexcheck_core::check::{McError, DEFAULT_MAX_STATES};
use flexcheck_core::coherence::{
    compile_for, prepare, run_all_on, Analysis, AnalysisError, AnalysisOptions, QueryVerdict,
};
use flexcheck_core::ltl::{translate_inner, translate_rule, LtlFormula, TranslateError};
use flexcheck_core::render::{emit_model, render_trace, report_document, report_json, report_text, trace_view, Dialect};
use flexcheck_core::syntax::{apply_exceptions, parse_rule_form_in, parse_spec, RuleForm, SpecDocument};
use flexcheck_core::system::SystemError;
use serde_json::json;

#[derive(Parser)]
#[command(name = "flexcheck", version, about = "Coherence checking for FL normative specifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Product states one model-checker call may explore before giving up.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_STATES as u64,
          value_parser = clap::value_parser!(u64).range(1..))]
    max_states: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Only treat declared incompatibilities as incompatible.
    #[arg(long, global = true)]
    fast: bool,

    /// Log model-checker calls to stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run every coherence check and answer every query.
    Check {
        file: PathBuf,
        /// Also list the checks that passed, with their witnesses.
        #[arg(long)]
        confirmations: bool,
    },
    /// Answer one query of the document.
    Query { file: PathBuf, name: String },
    /// Print the transition system compiled from the background theory.
    Compile {
        file: PathBuf,
        /// Output dialect: `neutral` or `smv`.
        #[arg(long, default_value = "neutral")]
        emit: String,
        /// Rule form to include as a specification, e.g. `O(bbc <= 2)`.
        #[arg(long = "spec")]
        specs: Vec<String>,
    },
    /// Print the LTL image of every rule and query.
    Translate { file: PathBuf },
    /// Find a run and print it as a timeline.
    Trace {
        file: PathBuf,
        /// Rule form the run must also satisfy; may be repeated.
        #[arg(long = "formula")]
        formulas: Vec<String>,
        /// Ignore the document's rules; any run of the background will do.
        #[arg(long)]
        background_only: bool,
    },
}

enum Failure {
    Input(String),
    Resource(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Resource(_) => 3,
        }
    }
}

impl From<McError> for Failure {
    fn from(e: McError) -> Self {
        Failure::Resource(e.to_string())
    }
}

fn system_failure(e: SystemError) -> Failure {
    match e {
        SystemError::TooLarge(_) => Failure::Resource(e.to_string()),
        _ => Failure::Input(e.to_string()),
    }
}

fn load(path: &Path) -> Result<SpecDocument, Failure> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let doc = parse_spec(&src).map_err(|e| Failure::Input(format!("{}:{e}", path.display())))?;
    for w in &doc.warnings {
        eprintln!("{}:{}:{}: warning: {}", path.display(), w.line, w.column, w.message);
    }
    Ok(doc)
}

fn prepared(path: &Path) -> Result<(SpecDocument, flexcheck_core::system::TransitionSystem), Failure> {
    prepare(&load(path)?).map_err(|e| match e {
        AnalysisError::Syntax(e) => Failure::Input(format!("{}:{e}", path.display())),
        AnalysisError::System(e) => system_failure(e),
    })
}

/// LTL image of a rule form. A permission `P(x)` is read as `F x`, the
/// condition under which it can be exercised.
fn image(form: &RuleForm) -> Result<LtlFormula, TranslateError> {
    if form.is_permission() {
        Ok(LtlFormula::eventually(translate_inner(&form.body)?))
    } else {
        translate_rule(form)
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value serializes"));
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let opts = AnalysisOptions { max_states: cli.max_states as usize, fast: cli.fast };
    match &cli.command {
        Command::Check { file, confirmations } => {
            let (doc, ts) = prepared(file)?;
            let report = run_all_on(&doc, &ts, opts);
            let rd = report_document(&report, &ts, &file.display().to_string());
            match cli.format {
                Format::Text => print!("{}", report_text(&rd, &ts, *confirmations)),
                Format::Json => print!("{}", report_json(&rd)),
            }
            Ok(report.exit_code() as u8)
        }
        Command::Query { file, name } => {
            let (doc, ts) = prepared(file)?;
            let q = doc
                .query(name)
                .ok_or_else(|| Failure::Input(format!("{}: no query named `{name}`", file.display())))?;
            let mut an = Analysis::new(&doc, &ts, opts);
            let rules = an.obligations();
            let verdict = an.answer_query(q, &rules)?;
            let witness = match &verdict {
                QueryVerdict::Holds => None,
                QueryVerdict::Refuted(w) => Some(w),
            };
            match cli.format {
                Format::Text => {
                    let word = if witness.is_some() { "refuted" } else { "holds" };
                    println!("query {name}: {word}\n  {}", q.surface_text);
                    if let Some(w) = witness {
                        println!("  witness:");
                        for line in render_trace(&ts, w).lines() {
                            println!("    {line}");
                        }
                    }
                }
                Format::Json => print_json(&json!({
                    "file": file.display().to_string(),
                    "query": name,
                    "surface": q.surface_text,
                    "verdict": if witness.is_some() { "refuted" } else { "holds" },
                    "witness": witness.map(|w| trace_view(&ts, w)),
                })),
            }
            Ok(u8::from(witness.is_some()))
        }
        Command::Compile { file, emit, specs } => {
            let dialect: Dialect = emit.parse().map_err(|e: flexcheck_core::render::EmitError| Failure::Input(e.to_string()))?;
            let doc = apply_exceptions(&load(file)?).map_err(|e| Failure::Input(format!("{}:{e}", file.display())))?;
            let forms = specs
                .iter()
                .map(|s| parse_rule_form_in(&doc, s).map_err(|e| Failure::Input(format!("--spec `{s}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let extra: Vec<_> = forms.iter().flat_map(|f| [Some(f.body.clone()), f.reparation.clone()]).flatten().collect();
            let ts = compile_for(&doc, &extra).map_err(system_failure)?;
            let ltl = forms
                .iter()
                .map(|f| image(f).map_err(|e| Failure::Input(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            let text = emit_model(&ts, &ltl, dialect).map_err(|e| Failure::Input(e.to_string()))?;
            match cli.format {
                Format::Text => print!("{text}"),
                Format::Json => print_json(&json!({ "dialect": emit, "model": text })),
            }
            Ok(0)
        }
        Command::Translate { file } => {
            let doc = apply_exceptions(&load(file)?).map_err(|e| Failure::Input(format!("{}:{e}", file.display())))?;
            let items = doc
                .rules
                .iter()
                .map(|r| ("rule", &r.name, &r.surface_text, &r.form))
                .chain(doc.queries.iter().map(|q| ("query", &q.name, &q.surface_text, &q.form)));
            let mut rows = Vec::new();
            for (kind, name, surface, form) in items {
                let ltl = image(form).map_err(|e| Failure::Input(format!("{name}: {e}")))?;
                rows.push((kind, name, surface, ltl.to_string()));
            }
            match cli.format {
                Format::Text => {
                    for (kind, name, surface, ltl) in &rows {
                        println!("{kind} {name}: {surface}\n  {ltl}");
                    }
                }
                Format::Json => print_json(&json!(rows
                    .iter()
                    .map(|(kind, name, surface, ltl)| json!({ "kind": kind, "name": name, "surface": surface, "ltl": ltl }))
                    .collect::<Vec<_>>())),
            }
            Ok(0)
        }
        Command::Trace { file, formulas, background_only } => {
            let doc = apply_exceptions(&load(file)?).map_err(|e| Failure::Input(format!("{}:{e}", file.display())))?;
            let forms = formulas
                .iter()
                .map(|s| parse_rule_form_in(&doc, s).map_err(|e| Failure::Input(format!("--formula `{s}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let extra: Vec<_> = forms.iter().flat_map(|f| [Some(f.body.clone()), f.reparation.clone()]).flatten().collect();
            let ts = compile_for(&doc, &extra).map_err(system_failure)?;
            let goal = LtlFormula::conjunction(
                forms
                    .iter()
                    .map(|f| image(f).map_err(|e| Failure::Input(e.to_string())))
                    .collect::<Result<Vec<_>, _>>()?,
            );
            let mut an = Analysis::new(&doc, &ts, opts);
            let found = if *background_only {
                an.exists(&goal)?
            } else {
                let rules = an.obligations();
                an.exists_under(&rules, &goal)?.ok()
            };
            match (cli.format, &found) {
                (Format::Text, Some(w)) => print!("{}", render_trace(&ts, w)),
                (Format::Text, None) => println!("no such run"),
                (Format::Json, _) => print_json(&json!({ "witness": found.as_ref().map(|w| trace_view(&ts, w)) })),
            }
            Ok(u8::from(found.is_none()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.verbose > 0 {
        let level = if cli.verbose == 1 { "info" } else { "debug" };
        env_logger::Builder::new().parse_filters(level).init();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            match &f {
                Failure::Input(m) => eprintln!("error: {m}"),
                Failure::Resource(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
