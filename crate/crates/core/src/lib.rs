//! Feedback-evolving population games with a shared resource, and the
//! extraction game played by the agents who set the greedy populations'
//! extraction rates.
//!
//! - [`game`]: payoff differences, the bilinear payoff gap and policy regions.
//! - [`dynamics`]: replicator/resource ODEs, RK4 integration, outcome classification.
//! - [`equilibrium`]: resource map, best responses, the symmetric Nash equilibrium.
//! - [`oracles`]: brute-force and numerical cross-checks of every closed form.
//! - [`sweep`]: parameter grids and M-tables rendered as CSV or JSON.

// Negated float comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod oracles;
pub mod sweep;

pub use dynamics::{
    classify_multi, classify_single, integrate, rhs_multi, rhs_single, GreedyPopulation,
    MultiPopulation, OutcomeClass, RateParams, Rk4, SinglePopulation, SystemState, Trajectory,
};
pub use equilibrium::{
    best_response, is_depleting_equilibrium, limits, resource_level, strategy_cap,
    symmetric_equilibrium, threshold_c, utility, EquilibriumRecord, EquilibriumResult,
    GameInstance, Regime, StrategyProfile,
};
pub use error::{Error, Result};
pub use game::{
    g_coefficients, in_region_v, is_responsible, payoff_gap, payoffs_from_matrices, GCoefficients,
    GreedyPolicy, PayoffMatrices, Policy,
};
pub use oracles::{
    br_iteration, fd_concavity_check, grid_best_response, ode_equilibrium_consistency, run_all,
    InstanceGenerator, OracleReport,
};
pub use sweep::{run_sweep, Axis, Format, Param, Params, SweepSpec};
