//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. The variants are grouped so
//! that front ends can map them onto an exit-code taxonomy: user/input errors,
//! resource limits (rule depth or cell budget) and internal contract
//! violations (which indicate a bug and are never expected).

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A word, rule source or point prefix would exceed the active depth cap.
    #[error("depth overflow: needed {needed} bits, cap is {cap}")]
    DepthOverflow { needed: usize, cap: usize },

    /// A construction would need more partition cells than the cell budget.
    #[error(
        "resource limit: {what} needs {needed} cells (budget {budget}); \
         largest feasible m_max is {feasible}"
    )]
    Budget {
        what: String,
        needed: u128,
        budget: u128,
        feasible: usize,
    },

    /// An orbit computation would exceed the point-size budget.
    #[error("point budget exceeded after {reached} of {requested} steps")]
    PointBudget { reached: usize, requested: usize },

    /// The diameter of the empty set was requested.
    #[error("empty clopen has no diameter")]
    EmptyClopen,

    /// The gap of a one-cell partition was requested.
    #[error("gap undefined: partition has a single cell")]
    GapUndefined,

    /// A collection that must be nonempty was empty.
    #[error("empty collection: {0}")]
    EmptyCollection(String),

    /// Input data violates a structural invariant (not an antichain, not a
    /// partition, incomplete rule system, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A precondition of the requested operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A refinement relation that was required does not hold.
    #[error("not a refinement: {0}")]
    NotRefinement(String),

    /// `realize` was asked to realize a digraph that has a right end.
    #[error("right end present at vertex {0}")]
    RightEnd(usize),

    /// A component had the wrong shape for the requested operation.
    #[error("wrong component shape: {0}")]
    Shape(String),

    /// A witness sequence is too short for the requested number of stages.
    #[error("witness shortage: {needed} more stage(s) needed")]
    WitnessShortage { needed: usize },

    /// A back-and-forth step has fewer target subcomponents than sources.
    #[error("cardinality infeasible for subcomponent type {kind}: {detail}")]
    Cardinality { kind: String, detail: String },

    /// A witness failed its own checker.
    #[error("witness check failed: {0}")]
    Witness(String),

    /// An orbit has not settled into a loop within the iteration horizon.
    #[error("orbit not settled at stage {stage} after {iterations} iterations")]
    NotSettled { stage: usize, iterations: usize },

    /// A property could not be certified from the available witnesses.
    #[error("not certified: {0}")]
    NotCertified(String),

    /// Parsing of a textual or JSON encoding failed.
    #[error("parse error: {0}")]
    Parse(String),

    /// An internal postcondition failed. Indicates a bug.
    #[error("contract violation: {0}")]
    Contract(String),
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
