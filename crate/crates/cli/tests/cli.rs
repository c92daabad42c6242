use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn flexcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexcheck")).current_dir(root()).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn text_findings(text: &str) -> BTreeSet<(String, String, Vec<String>)> {
    text.lines()
        .filter_map(|l| {
            let (sev, rest) = l.split_once('[')?;
            if sev != "error" && sev != "warning" {
                return None;
            }
            let (kind, rules) = rest.split_once("] ")?;
            Some((sev.to_string(), kind.to_string(), rules.split(", ").map(String::from).collect()))
        })
        .collect()
}

fn json_findings(v: &serde_json::Value) -> BTreeSet<(String, String, Vec<String>)> {
    v["findings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            let rules = f["rules"].as_array().unwrap().iter().map(|r| r.as_str().unwrap().to_string()).collect();
            (f["severity"].as_str().unwrap().to_string(), f["kind"].as_str().unwrap().to_string(), rules)
        })
        .collect()
}

fn schema() -> jsonschema::JSONSchema {
    let text = std::fs::read_to_string(root().join("docs/report-schema.json")).unwrap();
    jsonschema::JSONSchema::compile(&serde_json::from_str(&text).unwrap()).unwrap()
}

#[test]
fn empty_is_coherent() {
    let o = flexcheck(&["check", "cases/empty.flx"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("cases/empty.flx: coherent"));
}

#[test]
fn input_errors_exit_2() {
    let o = flexcheck(&["check", "cases/missing.flx"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));

    let dir = std::env::temp_dir().join(format!("flexcheck-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.flx");
    std::fs::write(&bad, "action A\nrule r: O(A & Nope)\n").unwrap();
    let o = flexcheck(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2:15: undeclared identifier `Nope`"));

    std::fs::write(&bad, "rule r: O(").unwrap();
    assert_eq!(flexcheck(&["check", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&bad, "\u{0}\u{1}garbage ((((").unwrap();
    assert_eq!(flexcheck(&["check", bad.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(flexcheck(&["check", "cases/empty.flx", "--max-states", "0"]).status.code(), Some(2));
    assert_eq!(flexcheck(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(flexcheck(&["query", "cases/university.flx", "nope"]).status.code(), Some(2));
}

#[test]
fn exhausted_budget_exits_3() {
    let o = flexcheck(&["check", "cases/traffic.flx", "--max-states", "5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("inconclusive["));
}

#[test]
fn text_and_json_agree_and_validate() {
    let schema = schema();
    for case in ["university", "traffic", "library", "kill-selfdefense", "kill-selfdefense-unflagged", "empty"] {
        let path = format!("cases/{case}.flx");
        let text = flexcheck(&["check", &path]);
        let json = flexcheck(&["check", &path, "--format", "json"]);
        assert_eq!(text.status.code(), json.status.code(), "{case}");
        let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
        if let Err(errors) = schema.validate(&v) {
            panic!("{case}: {:?}", errors.map(|e| e.to_string()).collect::<Vec<_>>());
        }
        assert_eq!(text_findings(&stdout(&text)), json_findings(&v), "{case}");
        assert_eq!(v["exit_code"].as_i64(), text.status.code().map(i64::from));
    }
}

#[test]
fn query_subcommand() {
    let o = flexcheck(&["query", "cases/university.flx", "q"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with("query q: refuted"));
    let pos = |needle: &str, from: usize| out[from..].find(needle).map(|i| i + from);
    let g = pos("  Graduate  ", 0).expect("Graduate");
    let e = pos("  Enroll  ", g).expect("Enroll after Graduate");
    pos("  Apply  ", e).expect("Apply after Enroll");
    assert!(out.contains("↻ repeats from step"));
}

#[test]
fn compile_subcommand() {
    let o = flexcheck(&["compile", "cases/library.flx"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("guard borrow_book = NOT_HAPPENING & bbc < 2 -> set borrow_book = HAPPENING;"));

    let o = flexcheck(&["compile", "cases/library.flx", "--emit", "smv", "--spec", "O(bbc <= 2)"]);
    let smv = stdout(&o);
    for section in ["MODULE main\n", "\nVAR\n", "\nASSIGN\n", "\nTRANS\n"] {
        assert!(smv.contains(section), "{section}");
    }
    assert!(smv.ends_with("LTLSPEC G (bbc <= 2)\n"));

    let o = flexcheck(&["compile", "cases/empty.flx", "--emit", "smv"]);
    assert!(stdout(&o).starts_with("MODULE main\nVAR\n  phase : {running};\nASSIGN\n"));

    let o = flexcheck(&["compile", "cases/library.flx", "--emit", "promela"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unsupported dialect"));
}

#[test]
fn translate_subcommand() {
    let o = flexcheck(&["translate", "cases/traffic.flx"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "rule no_red: F[<>BeFined](RedCrossing)\n  G (RedCrossing = JUST_HAPPENED -> F (BeFined = JUST_HAPPENED))\n\
         rule pay: O(finer > 0 -> <> PayFine)\n  G (finer > 0 -> F (PayFine = JUST_HAPPENED))\n"
    );
}

#[test]
fn trace_subcommand() {
    let o = flexcheck(&["trace", "cases/empty.flx"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), " 0  start   open: -\n    ↻ repeats from step 0\n");

    let o = flexcheck(&["trace", "cases/library.flx", "--background-only", "--formula", "OE(!(bbc <= 2))"]);
    assert_eq!(o.status.code(), Some(1));

    let o = flexcheck(&["trace", "cases/library.flx", "--background-only", "--formula", "OE(bbc = 2)", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let steps = v["witness"]["steps"].as_array().unwrap();
    assert!(steps.iter().any(|s| s["counters"]["bbc"] == 2));
}
