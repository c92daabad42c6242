//! Linear temporal logic: formulas, the rule translation, Büchi automata
//! and a reference evaluator on lasso words.

mod buchi;
mod eval;
mod formula;
mod translate;

pub use buchi::{ltl_to_buchi, ltl_to_buchi_opaque, BuchiAutomaton, BuchiState};
pub use eval::eval_lasso;
pub use formula::{CmpOpKey, LtlFormula, Prop, SignalValue};
pub use translate::{legal_constraint, translate_inner, translate_rule, violation, TranslateError};
