// SPDX-License-Identifier: Apache-2.0

//! # diffopts
//!
//! Discovery of temporally extended actions (options) in finite gridworlds
//! from the spectrum of the graph Laplacian.
//!
//! The pipeline runs in stages, one module per stage:
//!
//! | Module | Responsibility |
//! |--------|----------------|
//! | [`env`] | ASCII gridworld domains, dynamics, transition kernels |
//! | [`graph`] | State graph, lazy random walk, normalized Laplacian |
//! | [`spectral`] | Eigendecomposition, diffusion distances and maps |
//! | [`options`] | Score field, option goal discovery, baseline option sets |
//! | [`agent`] | SMDP Q-learning over primitive actions and options |
//! | [`metrics`] | Learning curves, pair-steps statistics, domain difficulty |
//! | [`cli`] | Experiment configuration, orchestration, CSV outputs |
//!
//! The central object is the lazy random walk `W = (I + M D^-1) / 2` over the
//! state graph. Its spectrum, obtained through the symmetric normalized
//! Laplacian, yields for every diffusion time `t` a score field measuring how
//! far each state's `t`-step occupation distribution is from stationarity.
//! Local maxima of the field are the hardest states to reach by diffusion;
//! options that drive the agent to those states speed up exploration.

pub mod agent;
pub mod cli;
pub mod env;
pub mod graph;
pub mod metrics;
pub mod options;
pub mod spectral;

use thiserror::Error;

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Map text violates the grid format (non-rectangular, illegal
    /// character, or a start-cell count other than one).
    #[error("malformed map: {0}")]
    MalformedMap(String),

    /// The free cells of the map do not form one connected component.
    #[error("free cells do not form a single connected component")]
    DisconnectedDomain,

    /// A matrix handed to the directed-graph builder is not column-stochastic.
    #[error("input is not column-stochastic: {0}")]
    NonStochasticInput(String),

    /// A state with zero degree makes the walk matrices undefined.
    #[error("state {0} has zero degree")]
    ZeroDegreeState(usize),

    /// The eigendecomposition did not converge.
    #[error("eigendecomposition failed")]
    EvdFailure,

    /// The singular value decomposition did not converge.
    #[error("singular value decomposition failed")]
    SvdFailure,

    /// Breadth-first search found no path to the requested goal.
    #[error("no path from state {from} to goal state {goal}")]
    UnreachableGoal {
        /// State the search started from.
        from: usize,
        /// Goal state that could not be reached.
        goal: usize,
    },

    /// An option was invoked from a state outside its initiation set.
    #[error("state {0} is not in the option's initiation set")]
    NotInInitiationSet(usize),

    /// Two sequences that must agree in length do not.
    #[error("length mismatch: expected {0} entries, got {1}")]
    LengthMismatch(usize, usize),

    /// An episode length fell outside the range the protocol allows.
    #[error("episode step count {0} outside the allowed range")]
    StepsOutOfRange(u32),

    /// Two artifacts produced from different domains were compared.
    #[error("domain mismatch: {0} vs {1}")]
    DomainMismatch(String, String),

    /// The experiment configuration is unusable.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
