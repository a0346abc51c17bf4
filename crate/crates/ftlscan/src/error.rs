use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration violated its invariants (domain of mu/epsilon,
    /// ordering of x0, barrier ordering, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An operation received an argument outside its stated domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operation is defined only for a narrower class of problems
    /// (e.g. Strategy B requires exactly three boxes).
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Strategy B's feasibility inequalities do not hold for this config.
    #[error("strategy B infeasible: {0}")]
    Infeasible(String),

    /// The stage ODE coefficient `1 - p0 (1 + K_n(y))` vanished on the
    /// integration interval. Cannot occur for epsilon < 1/2 and n >= 2,
    /// and for n = 1 only past the success threshold; guarded at runtime.
    #[error("singular stage: ODE coefficient vanishes at n={n}, y={y}")]
    SingularStage { n: usize, y: f64 },

    /// Step-halving refinement failed to stabilize the stage value.
    #[error("stage integration did not converge after {refinements} refinements")]
    OdeNotConverged { refinements: u32 },

    /// A simulated search ran past the hard step cap without stopping.
    #[error("simulation exceeded {max_steps} steps without reaching the threshold")]
    NonConvergence { max_steps: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
