//! Shared fixtures for the benchmarks.

use ruin_core::{ClaimDistribution, ModelParams};

/// Exponential claims, `gamma = 20/9`, `alpha = 100/3`, `mu = 200/9`.
pub fn fixture() -> (ModelParams, ClaimDistribution) {
    let m = ModelParams {
        a: 0.1,
        r: 0.0,
        kappa: 1.0,
        sigma: 0.3,
        c: 1.5,
        lambda: 1.0,
    };
    (m, ClaimDistribution::exponential(1.0).expect("valid rate"))
}
