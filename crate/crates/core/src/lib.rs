pub mod check;
pub mod coherence;
pub mod ltl;
pub mod render;
pub mod syntax;
pub mod system;
