//! Solvers for two-player linear-quadratic stochastic differential games
//! on an infinite horizon whose coefficients switch among finitely many
//! regimes driven by a continuous-time Markov chain.
//!
//! The crate computes open-loop-representation feedbacks, closed-loop
//! Nash equilibrium strategies, and zero-sum saddle points by solving the
//! associated constrained coupled algebraic Riccati equations, verifies
//! stabilizer and convexity sufficient conditions, and cross-validates
//! every analytic value function by seeded Monte Carlo simulation of the
//! closed-loop SDE.

pub mod builtin;
pub mod care;
pub mod chain;
pub mod cli;
pub mod io;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod sim;
pub mod stability;
pub mod synthesis;

pub use care::{
    solve_closed_nash_cares, solve_open_rep_cares, solve_zero_sum_care, CareSolution, SolverOpts,
};
pub use chain::{sample_path, stationary_distribution, validate_generator, Generator, RegimePath};
pub use model::{
    embed_zero_sum, validate, CostBlock, Dynamics, GameKind, GameModel, Inhomogeneity,
    RegimeFamily, ValidationReport,
};
pub use sim::{SimConfig, SimReport};
pub use synthesis::{EtaSolution, StrategyPair};
