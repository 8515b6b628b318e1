//! Survival probability from `g1`: `Phi(u) = Phi(0+) (1 + int_0^u g1)`, with
//! `Phi(0+) = 1 / (1 + I1)` and `I1 = int_0^inf g1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::SolutionGrid;

/// Fitted decay exponents at or below this are rejected as non-integrable.
pub const MIN_TAIL_EXPONENT: f64 = 1.02;

/// Least-squares fit `y ~ coefficient * u^(-exponent)` on log-log axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub coefficient: f64,
    /// Root-mean-square residual of `ln y`.
    pub rms_residual: f64,
    /// Range (max - min) of the residuals of `ln y`.
    pub residual_spread: f64,
    pub points: usize,
}

impl PowerLawFit {
    pub fn eval(&self, u: f64) -> f64 {
        self.coefficient * u.powf(-self.exponent)
    }

    /// `int_from^inf coefficient u^-exponent du`; infinite unless `exponent > 1`.
    pub fn tail_integral(&self, from: f64) -> f64 {
        if self.exponent <= 1.0 {
            f64::INFINITY
        } else {
            self.coefficient * from.powf(1.0 - self.exponent) / (self.exponent - 1.0)
        }
    }
}

/// Fits a power law to the positive samples `(u, y)`; needs at least three points.
pub fn fit_power_law(u: &[f64], y: &[f64]) -> Option<PowerLawFit> {
    let pts: Vec<(f64, f64)> = u
        .iter()
        .zip(y)
        .filter(|(&a, &b)| a > 0.0 && b > 0.0)
        .map(|(&a, &b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = pts.iter().map(|p| p.1 - intercept - slope * p.0).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let (lo, hi) = residuals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| {
            (a.min(r), b.max(r))
        });
    Some(PowerLawFit {
        exponent: -slope,
        coefficient: intercept.exp(),
        rms_residual: (rss / n).sqrt(),
        residual_spread: hi - lo,
        points: pts.len(),
    })
}

/// Nodes `i` with `t_i >= u_max / span`.
pub(crate) fn last_span(grid: &SolutionGrid, span: f64) -> std::ops::RangeInclusive<usize> {
    let n = grid.len() - 1;
    let from = grid.u_max() / span;
    let start = (from / grid.step()).ceil() as usize;
    start.min(n)..=n
}

/// `int_0^inf g1`, split into the grid part and a power-law tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct G1Integral {
    pub grid_part: f64,
    pub tail_part: f64,
    /// Fit over the last decade `[u_max/10, u_max]`; `None` when `g1 = 0`.
    pub fit: Option<PowerLawFit>,
    /// Tail mass from a fit over the last half-decade, for the resolution spread.
    pub tail_part_half_decade: f64,
}

impl G1Integral {
    pub fn total(&self) -> f64 {
        self.grid_part + self.tail_part
    }

    /// `int_u^inf g1` extrapolated from the fit, for `u >= u_max`.
    pub fn tail_from(&self, u: f64) -> f64 {
        self.fit.map_or(0.0, |f| f.tail_integral(u))
    }
}

fn g1_values(grid: &SolutionGrid) -> Vec<f64> {
    grid.g.iter().map(|v| v / grid.free_term).collect()
}

fn fit_range(grid: &SolutionGrid, g1: &[f64], span: f64) -> Option<PowerLawFit> {
    let range = last_span(grid, span);
    let u: Vec<f64> = range.clone().map(|i| grid.node(i)).collect();
    fit_power_law(&u, &g1[range])
}

/// Trapezoid over the grid plus `A u_max^(1-p) / (p - 1)` from the last-decade fit.
pub fn integrate_g1(grid: &SolutionGrid) -> Result<G1Integral> {
    let g1 = g1_values(grid);
    let h = grid.step();
    let grid_part: f64 = g1.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
    if g1.iter().all(|&v| v == 0.0) {
        return Ok(G1Integral {
            grid_part: 0.0,
            tail_part: 0.0,
            fit: None,
            tail_part_half_decade: 0.0,
        });
    }
    let fit = fit_range(grid, &g1, 10.0).ok_or_else(|| {
        Error::Domain("too few positive nodes in the last decade for a tail fit".into())
    })?;
    if fit.exponent <= MIN_TAIL_EXPONENT {
        return Err(Error::TailNotIntegrable {
            exponent: fit.exponent,
            threshold: MIN_TAIL_EXPONENT,
        });
    }
    let u_max = grid.u_max();
    let tail_part = fit.tail_integral(u_max);
    let tail_part_half_decade = fit_range(grid, &g1, 10f64.sqrt())
        .filter(|f| f.exponent > 1.0)
        .map_or(tail_part, |f| f.tail_integral(u_max));
    Ok(G1Integral {
        grid_part,
        tail_part,
        fit: Some(fit),
        tail_part_half_decade,
    })
}

/// `Phi(0+) = 1 / (1 + I1)`.
pub fn normalize(i1: f64) -> f64 {
    1.0 / (1.0 + i1)
}

#[derive(Debug, Clone, Serialize)]
pub struct SurvivalCurve {
    pub nodes: Vec<f64>,
    pub phi: Vec<f64>,
    /// `1 - phi`, accumulated from the tail end so it never suffers cancellation.
    pub psi: Vec<f64>,
    pub phi0: f64,
    pub i1: G1Integral,
    /// Fitted decay power of `g1` over the last decade (0 when `g1 = 0`).
    pub tail_exponent: f64,
    pub tail_coefficient: f64,
    /// Bound on the extrapolated mass `phi0 * I1_tail`.
    pub tail_error_bound: f64,
}

impl SurvivalCurve {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn u_max(&self) -> f64 {
        *self.nodes.last().expect("non-empty curve")
    }

    fn step(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    /// The same curve with `Phi(0+)` replaced by `phi0`, keeping `g1`.
    pub fn with_phi0(&self, phi0: f64) -> SurvivalCurve {
        let k = phi0 / self.phi0;
        let phi: Vec<f64> = self.phi.iter().map(|p| p * k).collect();
        let psi = phi.iter().map(|p| 1.0 - p).collect();
        SurvivalCurve {
            phi,
            psi,
            phi0,
            tail_error_bound: self.tail_error_bound * k,
            ..self.clone()
        }
    }

    /// `Psi(u)` by linear interpolation on the grid; the tail fit beyond `u_max`.
    pub fn psi_at(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.psi[0];
        }
        let n = self.nodes.len() - 1;
        let u_max = self.u_max();
        if u >= u_max {
            return if u > u_max {
                self.phi0 * self.i1.tail_from(u)
            } else {
                self.psi[n]
            };
        }
        let x = u / self.step();
        let i = (x.floor() as usize).min(n - 1);
        let frac = x - i as f64;
        self.psi[i] * (1.0 - frac) + self.psi[i + 1] * frac
    }

    pub fn phi_at(&self, u: f64) -> f64 {
        1.0 - self.psi_at(u)
    }

    /// JSON summary `{phi0, I1, tail_exponent, tail_error_bound}` plus the split of `I1`.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "phi0": self.phi0,
            "I1": self.i1.total(),
            "I1_grid": self.i1.grid_part,
            "I1_tail": self.i1.tail_part,
            "tail_exponent": self.tail_exponent,
            "tail_error_bound": self.tail_error_bound,
        })
    }
}

/// Builds `Phi` and `Psi` on the grid.
pub fn assemble(grid: &SolutionGrid) -> Result<SurvivalCurve> {
    let i1 = integrate_g1(grid)?;
    let phi0 = normalize(i1.total());
    let g1 = g1_values(grid);
    let h = grid.step();
    let n = g1.len();

    let mut cumulative = vec![0.0; n];
    for i in 1..n {
        cumulative[i] = cumulative[i - 1] + 0.5 * h * (g1[i - 1] + g1[i]);
    }
    let mut remaining = vec![0.0; n];
    remaining[n - 1] = i1.tail_part;
    for i in (0..n - 1).rev() {
        remaining[i] = remaining[i + 1] + 0.5 * h * (g1[i] + g1[i + 1]);
    }

    let phi: Vec<f64> = cumulative.iter().map(|c| phi0 * (1.0 + c)).collect();
    let psi: Vec<f64> = remaining.iter().map(|r| phi0 * r).collect();

    let (tail_exponent, tail_coefficient, tail_error_bound) = match i1.fit {
        Some(fit) => {
            let spread = if i1.tail_part > 0.0 {
                (i1.tail_part - i1.tail_part_half_decade).abs() / i1.tail_part
            } else {
                0.0
            };
            (
                fit.exponent,
                fit.coefficient,
                phi0 * i1.tail_part * (fit.residual_spread + spread),
            )
        }
        None => (0.0, 0.0, 0.0),
    };

    Ok(SurvivalCurve {
        nodes: grid.nodes(),
        phi,
        psi,
        phi0,
        i1,
        tail_exponent,
        tail_coefficient,
        tail_error_bound,
    })
}
