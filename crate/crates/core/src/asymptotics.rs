//! Large-reserve behaviour of the ruin probability.
//!
//! When `E[xi^(gamma-1)]` is finite, `u^(gamma-1) Psi(u) -> C_inf = L / (gamma - 1)`
//! with `L = lim u^gamma g(u)`. Otherwise `u^(gamma-1) Psi(u)` is unbounded.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ClaimDistribution, DerivedParams, ModelParams, Moment};
use crate::quadrature::WeightEvaluator;
use crate::solver::SolutionGrid;
use crate::survival::{fit_power_law, last_span, SurvivalCurve};

/// Growth per octave above which `u^gamma g(u)` is declared divergent.
pub const DIVERGENCE_GROWTH: f64 = 1.10;

/// Number of halvings of `u_max` sampled by the diagnostic series.
const SERIES_OCTAVES: i32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    PowerLaw,
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeClassification {
    pub regime: Regime,
    pub moment_gamma_minus_1: Moment,
}

/// Selects the branch from the analytic moment `E[xi^(gamma-1)]`.
pub fn classify_regime(
    _m: &ModelParams,
    d: &ClaimDistribution,
    dp: &DerivedParams,
) -> RegimeClassification {
    let moment = d.moment(dp.gamma - 1.0);
    RegimeClassification {
        regime: if moment.is_finite() {
            Regime::PowerLaw
        } else {
            Regime::Divergent
        },
        moment_gamma_minus_1: moment,
    }
}

/// Two estimates of `L = lim u^gamma g(u)`, for `g = Phi(0+) g1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEstimate {
    /// Reported value: `Phi(0+) (H1(u_max) + fitted continuation of the integrand)`.
    pub value: f64,
    /// Mean of `Phi(0+) u^gamma g1(u)` over the last decade `[u_max/10, u_max]`.
    pub plateau: f64,
    /// `|value - plateau| / value`.
    pub uncertainty: f64,
    /// Integrand mass beyond `u_max`, on the `g1` scale.
    pub continuation: f64,
    /// Growth of `u^gamma g` over the last two octaves.
    pub growth_per_octave: [f64; 2],
}

fn interpolate(grid: &SolutionGrid, values: &[f64], u: f64) -> f64 {
    let x = u / grid.step();
    let n = values.len() - 1;
    let i = (x.floor() as usize).min(n - 1);
    let frac = x - i as f64;
    values[i] * (1.0 - frac) + values[i + 1] * frac
}

/// `u^gamma g(u)` growth over `[u_max/4, u_max/2]` and `[u_max/2, u_max]`.
fn octave_growth(grid: &SolutionGrid) -> [f64; 2] {
    let gamma = grid.derived.gamma;
    let u_max = grid.u_max();
    let v = |u: f64| u.powf(gamma) * interpolate(grid, &grid.g, u);
    let (v4, v2, v1) = (v(u_max / 4.0), v(u_max / 2.0), v(u_max));
    [v2 / v4, v1 / v2]
}

/// Estimates `L`; errors with [`Error::Divergent`] when `u^gamma g(u)` keeps growing.
pub fn limit_l(grid: &SolutionGrid, curve: &SurvivalCurve) -> Result<LimitEstimate> {
    if grid.g.iter().all(|&v| v == 0.0) {
        return Ok(LimitEstimate {
            value: 0.0,
            plateau: 0.0,
            uncertainty: 0.0,
            continuation: 0.0,
            growth_per_octave: [1.0, 1.0],
        });
    }
    let growth = octave_growth(grid);
    if growth.iter().all(|&g| g > DIVERGENCE_GROWTH) {
        return Err(Error::Divergent {
            growth_per_octave: growth[0].min(growth[1]),
        });
    }

    let dp = grid.derived;
    let q = grid.free_term;
    let w = WeightEvaluator::new(dp.gamma, dp.alpha);
    let range = last_span(grid, 10.0);
    let u: Vec<f64> = range.clone().map(|i| grid.node(i)).collect();
    let integrand: Vec<f64> = range
        .map(|i| w.weight(grid.node(i)) * dp.mu * (grid.fbar[i] + grid.bg[i] / q))
        .collect();
    let fit = fit_power_law(&u, &integrand)
        .ok_or_else(|| Error::Domain("too few nodes for the integrand tail fit".into()))?;
    let continuation = fit.tail_integral(grid.u_max());
    if !continuation.is_finite() {
        return Err(Error::Divergent {
            growth_per_octave: growth[0].min(growth[1]),
        });
    }
    let n = grid.len() - 1;
    let value = curve.phi0 * (grid.h_fn[n] / q + continuation);

    let window = last_span(grid, 10.0);
    let count = window.clone().count() as f64;
    let plateau = window
        .map(|i| grid.node(i).powf(dp.gamma) * grid.g[i] / q)
        .sum::<f64>()
        * curve.phi0
        / count;

    Ok(LimitEstimate {
        value,
        plateau,
        uncertainty: (value - plateau).abs() / value,
        continuation,
        growth_per_octave: growth,
    })
}

/// `C_inf = L / (gamma - 1)`; undefined in the divergent regime.
pub fn c_infinity(l: f64, dp: &DerivedParams, regime: Regime) -> Result<f64> {
    match regime {
        Regime::PowerLaw => Ok(l / (dp.gamma - 1.0)),
        Regime::Divergent => Err(Error::Domain(
            "C_infinity is undefined when E[xi^(gamma-1)] is infinite".into(),
        )),
    }
}

/// A diagnostic sample `(u, value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub u: f64,
    pub value: f64,
}

fn geometric_points(u_max: f64) -> impl Iterator<Item = f64> {
    (0..=SERIES_OCTAVES)
        .rev()
        .map(move |j| u_max * 2f64.powi(-j))
}

/// `u^(gamma-1) Psi(u)` at `u = u_max 2^-j`, ascending in `u`.
pub fn plateau_series(curve: &SurvivalCurve, gamma: f64) -> Vec<SeriesPoint> {
    geometric_points(curve.u_max())
        .map(|u| SeriesPoint {
            u,
            value: u.powf(gamma - 1.0) * curve.psi_at(u),
        })
        .collect()
}

/// `Psi(u) / Fbar(u)` at the same points; empty where `Fbar` vanishes.
pub fn subexp_ratio_series(curve: &SurvivalCurve, d: &ClaimDistribution) -> Vec<SeriesPoint> {
    geometric_points(curve.u_max())
        .filter_map(|u| {
            let tail = d.tail_unchecked(u);
            (tail > 0.0).then(|| SeriesPoint {
                u,
                value: curve.psi_at(u) / tail,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub regime: Regime,
    pub moment_gamma_minus_1: Moment,
    /// `None` when divergence was detected numerically.
    #[serde(rename = "L")]
    pub l_estimate: Option<LimitEstimate>,
    pub divergence_flag: bool,
    #[serde(rename = "C_infinity")]
    pub c_infinity: Option<f64>,
    pub plateau: Vec<SeriesPoint>,
    /// Present only in the divergent regime.
    pub subexp_ratio: Vec<SeriesPoint>,
}

pub fn analyze(
    m: &ModelParams,
    d: &ClaimDistribution,
    grid: &SolutionGrid,
    curve: &SurvivalCurve,
) -> Result<AsymptoticsReport> {
    let dp = grid.derived;
    let class = classify_regime(m, d, &dp);
    let (l_estimate, divergence_flag) = match limit_l(grid, curve) {
        Ok(l) => (Some(l), false),
        Err(Error::Divergent { .. }) => (None, true),
        Err(e) => return Err(e),
    };
    let c_inf = match (class.regime, l_estimate) {
        (Regime::PowerLaw, Some(l)) => Some(c_infinity(l.value, &dp, class.regime)?),
        _ => None,
    };
    let subexp_ratio = match class.regime {
        Regime::Divergent => subexp_ratio_series(curve, d),
        Regime::PowerLaw => Vec::new(),
    };
    Ok(AsymptoticsReport {
        regime: class.regime,
        moment_gamma_minus_1: class.moment_gamma_minus_1,
        l_estimate,
        divergence_flag,
        c_infinity: c_inf,
        plateau: plateau_series(curve, dp.gamma),
        subexp_ratio,
    })
}
