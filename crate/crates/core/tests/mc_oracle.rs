mod support;

use flexcheck_core::check::{exists_trace, holds_on_all};
use flexcheck_core::ltl::{LtlFormula, Prop};
use flexcheck_core::syntax::{parse_spec, CmpOp};
use flexcheck_core::system::{compile, CompileOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::oracle;

const LIMIT: usize = 1_000_000;

#[test]
fn random_pairs_agree_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut positives = 0;
    for k in 0..250 {
        let src = oracle::random_background(&mut rng);
        let doc = parse_spec(&src).unwrap();
        let opts = CompileOptions { track_all_done: true, all_free: k % 3 == 0, ..Default::default() };
        let ts = compile(&doc, &opts).unwrap();
        let atoms = oracle::atoms_of(&ts);
        let f = oracle::random_formula(&mut rng, &atoms, 4);
        match oracle::compare(&ts, &f, 9) {
            Ok(found) => positives += found as usize,
            Err(e) => panic!("pair {k}: {e}\nsystem:\n{src}formula: {f}"),
        }
    }
    assert!(positives > 20 && positives < 230, "degenerate sample: {positives} positives");
}

fn library() -> flexcheck_core::system::TransitionSystem {
    let doc = parse_spec(
        "action BorrowBook\naction ReturnBook\n\
         counter bbc increases with action BorrowBook decreases with action ReturnBook bound 3\n",
    )
    .unwrap();
    compile(&doc, &CompileOptions::default()).unwrap()
}

#[test]
fn library_borrow_trace() {
    let ts = library();
    let borrow = LtlFormula::atom(Prop::just_happened("BorrowBook"));
    let bounded = LtlFormula::always(LtlFormula::atom(Prop::Counter {
        counter: "bbc".into(),
        op: CmpOp::Le.into(),
        value: 3,
    }));
    let f = LtlFormula::and(LtlFormula::eventually(borrow.clone()), bounded);
    let w = exists_trace(&ts, &f, LIMIT).unwrap().expect("a borrowing run");
    oracle::valid_witness(&ts, &f, &w).unwrap();
    let cex = holds_on_all(&ts, &LtlFormula::always(LtlFormula::not(borrow)), LIMIT).unwrap();
    assert!(cex.is_some());
    assert!(holds_on_all(&ts, &LtlFormula::True, LIMIT).unwrap().is_none());
}

#[test]
fn trivial_cases() {
    let ts = compile(&parse_spec("action p\n").unwrap(), &CompileOptions::default()).unwrap();
    let p = LtlFormula::atom(Prop::just_happened("p"));
    assert!(exists_trace(&ts, &LtlFormula::eventually(LtlFormula::and(p.clone(), LtlFormula::not(p.clone()))), LIMIT)
        .unwrap()
        .is_none());
    let w = exists_trace(&ts, &LtlFormula::True, LIMIT).unwrap().unwrap();
    assert_eq!(w.len(), 1, "idle stutter from the initial state");
}

#[test]
fn pruned_proposition_never_holds() {
    let ts = compile(
        &parse_spec("action p\nincompatible done(p), done(p)\n").unwrap(),
        &CompileOptions::default(),
    )
    .unwrap();
    let f = LtlFormula::always(LtlFormula::not(LtlFormula::atom(Prop::Done("p".into()))));
    assert!(holds_on_all(&ts, &f, LIMIT).unwrap().is_none());
}

#[test]
fn resource_limit_is_reported() {
    let ts = library();
    let f = LtlFormula::always(LtlFormula::eventually(LtlFormula::atom(Prop::just_happened("ReturnBook"))));
    let f = LtlFormula::and(f, LtlFormula::always(LtlFormula::not(LtlFormula::atom(Prop::just_happened("ReturnBook")))));
    let err = exists_trace(&ts, &f, 3).unwrap_err();
    assert!(err.to_string().contains("budget"));
}
