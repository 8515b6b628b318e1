//! Infinite-horizon survival probability for the Cramér–Lundberg model with a
//! fixed fraction of capital invested in a geometric Brownian motion.
//!
//! The pipeline solves for `g = Phi'` (normalized by `Phi(0+) = 1`), recovers
//! `Phi(0+)` from the condition `Phi(inf) = 1`, and estimates the power-law
//! constant of the ruin probability. A jump-diffusion Monte Carlo simulator
//! provides an independent check.

// Negated comparisons are deliberate: they send NaN down the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod mc;
pub mod model;
pub mod quadrature;
pub mod solver;
pub mod summation;
pub mod survival;
pub mod verifier;

pub use asymptotics::{AsymptoticsReport, Regime};
pub use error::{Error, Result};
pub use model::{
    check_assumptions, derive_params, AssumptionReport, ClaimDistribution, DerivedParams,
    ModelParams, Moment,
};
pub use quadrature::{ProductWeights, UniformGrid, WeightEvaluator};
pub use solver::{solve_g1, SolutionGrid, SolverConfig};
pub use survival::{assemble, SurvivalCurve};
