//! Valuation and simulation toolkit for the continuous-time N-box scanning
//! problem.
//!
//! An object hides in one of `N` boxes; observing box `J_t` yields a signal
//! with drift `mu` exactly when it holds the object. The posterior over
//! boxes evolves with the accumulated signal, and the search stops once
//! some posterior probability reaches `1 - epsilon`. This crate provides:
//!
//! - [`model`]: configurations, posterior algebra, the follow-the-leader
//!   (FTL) selection rule, and the stopping threshold;
//! - [`value`]: the exact expected FTL search time via a per-stage linear
//!   ODE recursion with a closed-form base case;
//! - [`exit`]: two-barrier exit probabilities and conditional expected exit
//!   times for drifted Brownian motion;
//! - [`strategy_b`]: the three-box alternative strategy that watches the
//!   runner-up box and provably beats FTL on some priors;
//! - [`sim`]: Euler-Maruyama search simulation under any policy, plus the
//!   excursion construction of the driftless leader dynamics and its
//!   pathwise/martingale probes;
//! - [`experiments`]: the counterexample table, grid scans, and the
//!   two-prior comparison harness.
//!
//! Monte Carlo replicates and grid cells are evaluated in parallel with
//! rayon when the `parallel` feature (default) is enabled; every estimate
//! derives per-replicate random streams, so results are identical across
//! thread counts and with the sequential fallback.

pub mod error;
pub mod exit;
pub mod experiments;
pub mod model;
pub mod sim;
pub mod strategy_b;
pub mod value;

mod exec;

pub use error::{Error, Result};
pub use exit::{exit_prob, exit_stats, exit_time_lower, exit_time_upper, ExitSpec, ExitStats};
pub use experiments::{
    klimko_check, reproduce_table1, scan_counterexamples, scan_counterexamples_seq, GridSpec,
    KlimkoRow, ReportRow, ScanCell, TABLE1_ROWS,
};
pub use model::{
    check_threshold, ftl_select, loglik_from_posterior, posterior_from_loglik, Posterior,
    ProblemConfig, ThresholdEvent,
};
pub use sim::{
    build_driftless_paths, dt_halving_study, estimate_mean_time, estimate_mean_time_seq,
    excursion_martingale_probe, pi_martingale_probe, simulate_search, simulate_search_with_path,
    path_identity_probe, DtStudy, MartingaleStat, MeanTimeEstimate, PathBundle, PathPoint, Policy,
    SimResult, PathIdentityReport,
};
pub use strategy_b::{boundary_a, feasibility, strategy_b_value, StrategyBResult};
pub use value::{
    eval_interior, ftl_value, ftl_value_with, k_fun, mpr_value, p_fun, q_fun, solve_stage,
    OdeOptions, StageSolution, ValueResult,
};
