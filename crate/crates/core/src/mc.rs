//! Monte Carlo estimate of the ruin probability by direct simulation of
//! `dX = eta X dt + kappa sigma X dW + c dt - dP`.
//!
//! Every path owns a ChaCha stream keyed by its index, and all initial reserves
//! of a path share its draws. Counts are aggregated as integers, so estimates do
//! not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_assumptions, ClaimDistribution, ModelParams};

/// Two-sided 95% normal quantile used by the Wilson interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Censored fractions above this trigger a warning.
pub const CENSORING_WARN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt_max: f64,
    pub n_paths: u64,
    pub seed: u64,
    /// Paths at or above this level at the horizon count as survived.
    pub survival_barrier: f64,
    pub u_values: Vec<f64>,
}

impl SimConfig {
    /// Barrier `100 max(u_values, mean claim)` and a horizon of twice the time the
    /// median capital growth needs to climb from 1 to the barrier.
    pub fn defaults(
        m: &ModelParams,
        d: &ClaimDistribution,
        u_values: Vec<f64>,
        n_paths: u64,
        seed: u64,
    ) -> Self {
        let claim_scale = d.mean().unwrap_or_else(|| d.inverse_tail(0.5));
        let top = u_values
            .iter()
            .cloned()
            .fold(claim_scale, f64::max)
            .max(1.0);
        let survival_barrier = 100.0 * top;
        Self {
            horizon: default_horizon(m, survival_barrier),
            dt_max: 0.05,
            n_paths,
            seed,
            survival_barrier,
            u_values,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::param("horizon", "must be finite and > 0"));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::param("dt_max", "must be > 0"));
        }
        if self.n_paths < 1 {
            return Err(Error::param("n_paths", "must be >= 1"));
        }
        if let Some(u) = self
            .u_values
            .iter()
            .find(|u| !(**u > 0.0) || !u.is_finite())
        {
            return Err(Error::param(
                "u_values",
                format!("{u} is not a positive reserve"),
            ));
        }
        let top = self.u_values.iter().cloned().fold(0.0, f64::max);
        if !(self.survival_barrier > top) {
            return Err(Error::param(
                "survival_barrier",
                format!("must exceed max(u_values) = {top}"),
            ));
        }
        Ok(())
    }
}

/// `T = 2 ln(barrier) / (eta - kappa^2 sigma^2 / 2)`; falls back to 200 when the
/// median growth rate is not positive.
pub fn default_horizon(m: &ModelParams, barrier: f64) -> f64 {
    let v = m.capital_volatility();
    let rate = m.capital_drift() - 0.5 * v * v;
    if rate > 0.0 && barrier > 1.0 {
        2.0 * barrier.ln() / rate
    } else {
        200.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PathOutcome {
    Ruined { time: f64 },
    Survived,
    Censored,
}

/// Per-path random source.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

struct Dynamics {
    /// `eta - v^2/2`.
    log_drift: f64,
    vol: f64,
    c: f64,
    inter_arrival: Option<Exp<f64>>,
}

impl Dynamics {
    fn new(m: &ModelParams) -> Result<Self> {
        let v = m.capital_volatility();
        let inter_arrival = if m.lambda > 0.0 {
            Some(Exp::new(m.lambda).map_err(|e| Error::param("lambda", e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            log_drift: m.capital_drift() - 0.5 * v * v,
            vol: v,
            c: m.c,
            inter_arrival,
        })
    }

    fn next_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inter_arrival
            .as_ref()
            .map_or(f64::INFINITY, |e| e.sample(rng))
    }
}

/// Simulates one path from every reserve in `u_values` on common draws.
///
/// Draw order: an inter-arrival time, then one normal per diffusion step up to
/// the next event, then a claim size at each jump.
pub fn simulate_shared<R: Rng + ?Sized>(
    m: &ModelParams,
    d: &ClaimDistribution,
    u_values: &[f64],
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Vec<PathOutcome>> {
    let dyn_ = Dynamics::new(m)?;
    Ok(run_path(&dyn_, d, u_values, cfg, rng))
}

fn run_path<R: Rng + ?Sized>(
    dyn_: &Dynamics,
    d: &ClaimDistribution,
    u_values: &[f64],
    cfg: &SimConfig,
    rng: &mut R,
) -> Vec<PathOutcome> {
    let mut x: Vec<f64> = u_values.to_vec();
    let mut out: Vec<Option<PathOutcome>> = vec![None; x.len()];
    let mut alive = x.len();
    let mut t = 0.0;
    let mut jump_at = dyn_.next_jump(rng);

    while alive > 0 && t < cfg.horizon {
        let event = jump_at.min(cfg.horizon);
        while t < event {
            let h = (event - t).min(cfg.dt_max);
            let z: f64 = rng.sample(StandardNormal);
            let growth = (dyn_.log_drift * h + dyn_.vol * h.sqrt() * z).exp();
            let premium = dyn_.c * h * growth.sqrt();
            t = if event - t <= cfg.dt_max {
                event
            } else {
                t + h
            };
            for (xi, oi) in x.iter_mut().zip(out.iter_mut()) {
                if oi.is_none() {
                    *xi = growth * *xi + premium;
                    if *xi <= 0.0 {
                        *oi = Some(PathOutcome::Ruined { time: t });
                        alive -= 1;
                    }
                }
            }
        }
        if jump_at <= cfg.horizon && alive > 0 {
            let claim = d.sample(rng);
            for (xi, oi) in x.iter_mut().zip(out.iter_mut()) {
                if oi.is_none() {
                    *xi -= claim;
                    if *xi <= 0.0 {
                        *oi = Some(PathOutcome::Ruined { time: t });
                        alive -= 1;
                    }
                }
            }
            jump_at = t + dyn_.next_jump(rng);
        }
    }

    x.iter()
        .zip(out)
        .map(|(&xi, o)| {
            o.unwrap_or(if xi >= cfg.survival_barrier {
                PathOutcome::Survived
            } else {
                PathOutcome::Censored
            })
        })
        .collect()
}

/// Single path from one reserve `u > 0`.
pub fn simulate_path<R: Rng + ?Sized>(
    m: &ModelParams,
    d: &ClaimDistribution,
    u: f64,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<PathOutcome> {
    if !(u > 0.0) {
        return Err(Error::param("u", "must be > 0"));
    }
    Ok(simulate_shared(m, d, &[u], cfg, rng)?[0])
}

/// Wilson score interval `(center, half_width)` for `k` successes out of `n`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (center, half)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub u: f64,
    pub psi_hat: f64,
    pub ci_half_width: f64,
    pub censored_fraction: f64,
    pub lower: f64,
    pub upper: f64,
    pub n_paths: u64,
    pub ruined: u64,
    pub censored: u64,
}

impl McEstimate {
    fn from_counts(u: f64, n: u64, ruined: u64, censored: u64) -> Self {
        let nf = n as f64;
        let psi_hat = ruined as f64 / nf;
        Self {
            u,
            psi_hat,
            ci_half_width: wilson(ruined, n, Z95).1,
            censored_fraction: censored as f64 / nf,
            lower: psi_hat,
            upper: (ruined + censored) as f64 / nf,
            n_paths: n,
            ruined,
            censored,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRun {
    pub config: SimConfig,
    pub estimates: Vec<McEstimate>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Default)]
struct Counts {
    ruined: Vec<u64>,
    censored: Vec<u64>,
}

impl Counts {
    fn new(k: usize) -> Self {
        Self {
            ruined: vec![0; k],
            censored: vec![0; k],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.ruined.iter_mut().zip(other.ruined) {
            *a += b;
        }
        for (a, b) in self.censored.iter_mut().zip(other.censored) {
            *a += b;
        }
        self
    }
}

/// Ruin fractions for every `u` in `cfg.u_values`; runs on the current rayon pool.
pub fn estimate_psi(m: &ModelParams, d: &ClaimDistribution, cfg: &SimConfig) -> Result<McRun> {
    m.validate()?;
    d.validate()?;
    cfg.validate()?;
    check_assumptions(m, d).require_solvable()?;
    let dyn_ = Dynamics::new(m)?;
    let k = cfg.u_values.len();

    let counts = (0..cfg.n_paths)
        .into_par_iter()
        .fold(
            || Counts::new(k),
            |mut acc, path| {
                let mut rng = path_rng(cfg.seed, path);
                for (j, o) in run_path(&dyn_, d, &cfg.u_values, cfg, &mut rng)
                    .into_iter()
                    .enumerate()
                {
                    match o {
                        PathOutcome::Ruined { .. } => acc.ruined[j] += 1,
                        PathOutcome::Censored => acc.censored[j] += 1,
                        PathOutcome::Survived => {}
                    }
                }
                acc
            },
        )
        .reduce(|| Counts::new(k), Counts::merge);

    let estimates: Vec<McEstimate> = cfg
        .u_values
        .iter()
        .enumerate()
        .map(|(j, &u)| {
            McEstimate::from_counts(u, cfg.n_paths, counts.ruined[j], counts.censored[j])
        })
        .collect();
    let warnings = estimates
        .iter()
        .filter(|e| e.censored_fraction > CENSORING_WARN)
        .map(|e| {
            format!(
                "excessive censoring at u = {}: {:.4} of paths neither ruined nor above the barrier; raise the horizon or lower the barrier",
                e.u, e.censored_fraction
            )
        })
        .collect();
    Ok(McRun {
        config: cfg.clone(),
        estimates,
        warnings,
    })
}
