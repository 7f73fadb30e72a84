//! Attributed tree transducers with look-around.
//!
//! The crate covers the transducer model and its derivation semantics, the
//! regular domain of deterministic transducers, and a constructive pipeline
//! that turns any (possibly circular, nondeterministic) attributed tree
//! transducer into a deterministic one with look-around realizing a
//! uniformizer of its translation.

pub mod check;
pub mod compose;
pub mod domain;
pub mod dsl;
pub mod eval;
pub mod fixtures;
pub mod model;
mod names;
pub mod random;
pub mod trees;
pub mod uniformize;

pub use model::{
    Att, AttWithLookAround, BottomUpAutomaton, BottomUpRelabeling, LookAround, Rhs, Rule, TopDownRelabeling,
};
pub use trees::{parse_tree, render_tree, Name, NodeAddress, RankedAlphabet, Tree};
