//! Attributed tree transducers, relabelings, look-arounds and tree automata.

mod att;
mod automaton;
mod relabel;

use thiserror::Error;

pub use att::{
    is_deterministic, normalize_root_rules, root_rules_unambiguous, unambiguous_subsets, validate_att, Att, Lhs, Rhs,
    Rule, Violation,
};
pub(crate) use automaton::explore;
pub use automaton::BottomUpAutomaton;
pub use relabel::{
    identity_lookaround, AttWithLookAround, BottomUpRelabeling, BuRule, LookAround, TdRule, TopDownRelabeling,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("state `{0}` declared twice")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("rank mismatch for `{0}`")]
    RankMismatch(String),
    #[error("nondeterministic: {0}")]
    Nondeterministic(String),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("invalid att: {0}")]
    InvalidAtt(String),
}

impl ModelError {
    pub(crate) fn invalid(violations: &[Violation]) -> Self {
        let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        ModelError::InvalidAtt(msgs.join("; "))
    }
}
