//! Pattern matching, fix application, pattern reversal and bug seeding.

mod eval;
mod fix;
mod matcher;
mod reverse;
mod seed;

use thiserror::Error;

use crate::tree::{Node, NodeId, Tree, TreeError};

pub use eval::compare_literals;
pub use fix::apply_fix;
pub use matcher::{match_named, match_pattern};
pub use reverse::reverse_pattern;
pub use seed::{restore_seed, seed_bugs, seed_corpus, SeedOutcome, SeedRecord, XorShift64};

pub(crate) use eval::{Bindings, Evaluator, Val};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("tree was built for registry {tree} but the registry is {registry}")]
    FingerprintMismatch { tree: String, registry: String },
    #[error("pattern {pattern}: {message}")]
    RhsConformance { pattern: String, message: String },
    #[error("pattern {pattern}: {message}")]
    BadFix { pattern: String, message: String },
    #[error("pattern {pattern} is not invertible: {reason}")]
    NotInvertible { pattern: String, reason: String },
    #[error("no match of {pattern} at node {location} restores the original")]
    NotRestorable { pattern: String, location: NodeId },
    #[error("fixed tree is invalid: {0}")]
    Tree(#[from] TreeError),
}

/// One satisfying assignment of a pattern's subject and metavariables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub pattern: String,
    pub subject_id: NodeId,
    /// Metavariable bindings in declaration order.
    pub bindings: Vec<(String, NodeId)>,
}

impl Match {
    pub fn get(&self, name: &str) -> Option<NodeId> {
        self.bindings.lookup(name)
    }
}

/// The outcome of applying a pattern's fix at one match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixProposal {
    pub matched: Match,
    pub before: Tree,
    pub after: Tree,
    /// The replaced subtree: its root keeps the subject's id.
    pub replacement: Node,
}

impl FixProposal {
    pub fn location(&self) -> NodeId {
        self.matched.subject_id
    }
}
