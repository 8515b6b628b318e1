//! Model parameters, the structural triple (gamma, alpha, mu) and claim-size laws.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Raw market and insurance parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Drift of the risky asset.
    pub a: f64,
    /// Risk-free rate.
    pub r: f64,
    /// Fraction of capital held in the risky asset.
    pub kappa: f64,
    /// Volatility of the risky asset.
    pub sigma: f64,
    /// Premium rate.
    pub c: f64,
    /// Claim arrival intensity.
    pub lambda: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("a", self.a),
            ("r", self.r),
            ("kappa", self.kappa),
            ("sigma", self.sigma),
            ("c", self.c),
            ("lambda", self.lambda),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        if self.sigma <= 0.0 {
            return Err(Error::param("sigma", "must be > 0"));
        }
        if self.c <= 0.0 {
            return Err(Error::param("c", "must be > 0"));
        }
        if self.lambda < 0.0 {
            return Err(Error::param("lambda", "must be >= 0"));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::param("kappa", "must lie in (0, 1]"));
        }
        if self.r < 0.0 {
            return Err(Error::param("r", "must be >= 0"));
        }
        Ok(())
    }

    /// Drift of the capital process per unit of capital, `(a - r) kappa + r`.
    pub fn capital_drift(&self) -> f64 {
        (self.a - self.r) * self.kappa + self.r
    }

    /// Volatility of the capital process per unit of capital, `kappa sigma`.
    pub fn capital_volatility(&self) -> f64 {
        self.kappa * self.sigma
    }
}

/// Dimensionless structural parameters of the scaled integro-differential equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub gamma: f64,
    pub alpha: f64,
    pub mu: f64,
}

/// Computes `(gamma, alpha, mu)`. Does not enforce `gamma > 1`; see [`check_assumptions`].
pub fn derive_params(m: &ModelParams) -> DerivedParams {
    let half_var = m.kappa * m.kappa * m.sigma * m.sigma / 2.0;
    DerivedParams {
        gamma: m.capital_drift() / half_var,
        alpha: m.c / half_var,
        mu: m.lambda / half_var,
    }
}

/// Claim-size law. All parameters must be strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClaimDistribution {
    Exponential {
        rate: f64,
    },
    /// Lomax form: tail `(1 + x / scale)^(-index)`.
    Pareto {
        index: f64,
        scale: f64,
    },
    Lognormal {
        location: f64,
        shape: f64,
    },
    Deterministic {
        atom: f64,
    },
    /// Equal-mass atoms at the given (positive) sample points, kept sorted.
    Empirical {
        samples: Vec<f64>,
    },
}

/// Extended-real moment value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    Finite(f64),
    Infinite,
}

impl Moment {
    pub fn is_finite(&self) -> bool {
        matches!(self, Moment::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Moment::Finite(v) => Some(v),
            Moment::Infinite => None,
        }
    }
}

impl ClaimDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::Exponential { rate }.validated()
    }

    pub fn pareto(index: f64, scale: f64) -> Result<Self> {
        Self::Pareto { index, scale }.validated()
    }

    /// `location` is the mean of `ln X`; it may take any finite value.
    pub fn lognormal(location: f64, shape: f64) -> Result<Self> {
        Self::Lognormal { location, shape }.validated()
    }

    pub fn deterministic(atom: f64) -> Result<Self> {
        Self::Deterministic { atom }.validated()
    }

    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        samples.sort_by(f64::total_cmp);
        Self::Empirical { samples }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Checks parameter positivity. Deserialized values must pass through here.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        }
        match self {
            Self::Exponential { rate } => positive("rate", *rate),
            Self::Pareto { index, scale } => {
                positive("index", *index)?;
                positive("scale", *scale)
            }
            Self::Lognormal { location, shape } => {
                if !location.is_finite() {
                    return Err(Error::param("location", "must be finite"));
                }
                positive("shape", *shape)
            }
            Self::Deterministic { atom } => positive("atom", *atom),
            Self::Empirical { samples } => {
                if samples.is_empty() {
                    return Err(Error::param("samples", "must be non-empty"));
                }
                if samples.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::param("samples", "must be sorted ascending"));
                }
                samples.iter().try_for_each(|&s| positive("samples", s))
            }
        }
    }

    /// Sorts empirical samples in place; a no-op for parametric families.
    pub fn normalize(&mut self) {
        if let Self::Empirical { samples } = self {
            samples.sort_by(f64::total_cmp);
        }
    }

    /// Short family name, as used in config files.
    pub fn family(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::Pareto { .. } => "pareto",
            Self::Lognormal { .. } => "lognormal",
            Self::Deterministic { .. } => "deterministic",
            Self::Empirical { .. } => "empirical",
        }
    }

    /// Tail function `1 - F(x)`, right-continuous at atoms.
    pub fn tail(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::Domain(format!("tail evaluated at x = {x} < 0")));
        }
        Ok(self.tail_unchecked(x))
    }

    /// Left limit `Fbar(x-) = P(xi >= x)`; differs from `tail` only at atoms.
    pub fn tail_left_limit(&self, x: f64) -> f64 {
        match self {
            Self::Deterministic { atom } => {
                if x <= *atom {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Empirical { samples } => {
                let below = samples.partition_point(|&s| s < x);
                (samples.len() - below) as f64 / samples.len() as f64
            }
            _ => self.tail_unchecked(x),
        }
    }

    pub(crate) fn tail_unchecked(&self, x: f64) -> f64 {
        match self {
            Self::Exponential { rate } => (-rate * x).exp(),
            Self::Pareto { index, scale } => (1.0 + x / scale).powf(-index),
            Self::Lognormal { location, shape } => {
                if x <= 0.0 {
                    1.0
                } else {
                    0.5 * erf::erfc((x.ln() - location) / (shape * std::f64::consts::SQRT_2))
                }
            }
            Self::Deterministic { atom } => {
                if x < *atom {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Empirical { samples } => {
                let at_or_below = samples.partition_point(|&s| s <= x);
                (samples.len() - at_or_below) as f64 / samples.len() as f64
            }
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.tail(x)?)
    }

    /// `E[xi^p]` for `p > 0`.
    pub fn moment(&self, p: f64) -> Moment {
        assert!(p > 0.0, "moment order must be positive, got {p}");
        match self {
            Self::Exponential { rate } => Moment::Finite((ln_gamma(p + 1.0) - p * rate.ln()).exp()),
            Self::Pareto { index, scale } => {
                if p >= *index {
                    Moment::Infinite
                } else {
                    // scale^p * B(p + 1, index - p) * index
                    let log_m =
                        p * scale.ln() + ln_gamma(p + 1.0) + ln_gamma(index - p) - ln_gamma(*index);
                    Moment::Finite(log_m.exp())
                }
            }
            Self::Lognormal { location, shape } => {
                Moment::Finite((p * location + 0.5 * p * p * shape * shape).exp())
            }
            Self::Deterministic { atom } => Moment::Finite(atom.powf(p)),
            Self::Empirical { samples } => Moment::Finite(
                samples.iter().map(|s| s.powf(p)).sum::<f64>() / samples.len() as f64,
            ),
        }
    }

    /// Mean claim size, if finite.
    pub fn mean(&self) -> Option<f64> {
        self.moment(1.0).value()
    }

    /// Supremum of the finite moment orders, `None` when every moment is finite.
    pub fn moment_order_bound(&self) -> Option<f64> {
        match self {
            Self::Pareto { index, .. } => Some(*index),
            _ => None,
        }
    }

    /// Locations of the atoms of `F` (discontinuities of the tail).
    pub fn atoms(&self) -> Vec<f64> {
        match self {
            Self::Deterministic { atom } => vec![*atom],
            Self::Empirical { samples } => {
                let mut out = samples.clone();
                out.dedup();
                out
            }
            _ => Vec::new(),
        }
    }

    /// Inverse of the tail function: the claim size `x` with `tail(x) = v` for `v` in `(0, 1]`.
    ///
    /// Feeding a uniform draw gives a sample with the exact law of the claim size.
    pub fn inverse_tail(&self, v: f64) -> f64 {
        debug_assert!(v > 0.0 && v <= 1.0);
        match self {
            Self::Exponential { rate } => -v.ln() / rate,
            Self::Pareto { index, scale } => scale * (v.powf(-1.0 / index) - 1.0),
            Self::Lognormal { location, shape } => {
                // Phi^{-1}(1 - v) = sqrt(2) erfc^{-1}(2 v)
                let z = std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * v);
                (location + shape * z).exp()
            }
            Self::Deterministic { atom } => *atom,
            Self::Empirical { samples } => {
                let n = samples.len();
                let k = ((1.0 - v) * n as f64).floor() as usize;
                samples[k.min(n - 1)]
            }
        }
    }

    /// Draws one claim size by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // (0, 1]
        let v = 1.0 - rng.random::<f64>();
        self.inverse_tail(v)
    }
}

/// Outcome of one assumption check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub passed: bool,
    pub detail: String,
}

/// Largest verifiable finite moment order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "order")]
pub enum MomentOrders {
    /// Every order is finite.
    All,
    /// Every order strictly below the bound is finite.
    Below(f64),
    /// Finite because the law is a finite sample; the true tail is unverifiable.
    SampleBased,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub derived: DerivedParams,
    /// `F(0) = 0`.
    pub a1: AssumptionCheck,
    /// Some moment of positive order is finite.
    pub a2: AssumptionCheck,
    pub a2_orders: MomentOrders,
    /// `gamma > 1`.
    pub a3: AssumptionCheck,
    /// Whether `E[xi^(gamma - 1)]` is finite; `None` when `gamma <= 1`.
    pub moment_gamma_minus_1: Option<Moment>,
}

impl AssumptionReport {
    /// A1 and A3 must hold before anything is solved.
    pub fn require_solvable(&self) -> Result<()> {
        if !self.a1.passed {
            return Err(Error::Assumption {
                assumption: "A1",
                detail: self.a1.detail.clone(),
            });
        }
        if !self.a3.passed {
            return Err(Error::Assumption {
                assumption: "A3",
                detail: self.a3.detail.clone(),
            });
        }
        Ok(())
    }

    pub fn all_passed(&self) -> bool {
        self.a1.passed && self.a2.passed && self.a3.passed
    }
}

/// Reports A1 (`F(0) = 0`), A2 (some finite positive moment) and A3 (`gamma > 1`).
pub fn check_assumptions(m: &ModelParams, d: &ClaimDistribution) -> AssumptionReport {
    let derived = derive_params(m);

    let f0 = 1.0 - d.tail_unchecked(0.0);
    let a1 = AssumptionCheck {
        passed: f0 == 0.0,
        detail: format!("F(0) = {f0}"),
    };

    let a2_orders = match (d, d.moment_order_bound()) {
        (ClaimDistribution::Empirical { .. }, _) => MomentOrders::SampleBased,
        (_, Some(bound)) => MomentOrders::Below(bound),
        (_, None) => MomentOrders::All,
    };
    let a2 = AssumptionCheck {
        passed: true,
        detail: match a2_orders {
            MomentOrders::All => "all moments finite".to_string(),
            MomentOrders::Below(b) => format!("E[xi^p] finite for every p < {b}"),
            MomentOrders::SampleBased => "sample-based, tail unverifiable".to_string(),
        },
    };

    let gamma = derived.gamma;
    let a3 = if gamma > 1.0 {
        AssumptionCheck {
            passed: true,
            detail: format!("gamma = {gamma}"),
        }
    } else {
        AssumptionCheck {
            passed: false,
            detail: format!(
                "gamma must exceed 1 (gamma = {gamma}); otherwise ruin is certain, Psi(u) = 1"
            ),
        }
    };

    let moment_gamma_minus_1 = (gamma > 1.0).then(|| d.moment(gamma - 1.0));

    AssumptionReport {
        derived,
        a1,
        a2,
        a2_orders,
        a3,
        moment_gamma_minus_1,
    }
}
