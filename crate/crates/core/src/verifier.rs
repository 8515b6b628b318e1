//! Checks of a computed solution: pointwise residual of the integro-differential
//! equation, re-substitution into the Volterra form, smoothness of `g'`,
//! refinement studies and agreement with Monte Carlo.

use serde::Serialize;

use crate::error::Result;
use crate::mc::McEstimate;
use crate::model::{ClaimDistribution, ModelParams};
use crate::quadrature::{ProductWeights, UniformGrid};
use crate::solver::{convolve_all, solve_g1, SolutionGrid, SolverConfig, TailSamples};
use crate::survival::SurvivalCurve;

/// Nodes within this many steps of an atom are excluded from residual norms.
pub const ATOM_WINDOW_STEPS: f64 = 2.0;

fn near_atom(u: f64, atoms: &[f64], h: f64) -> bool {
    atoms
        .iter()
        .any(|&a| (u - a).abs() <= ATOM_WINDOW_STEPS * h)
}

fn max_abs(xs: impl Iterator<Item = f64>) -> f64 {
    xs.map(f64::abs).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Interior nodes `t_1 .. t_{n-1}`.
    pub nodes: Vec<f64>,
    /// `(u^2 g' + (gamma u + alpha) g - mu Phi0 Fbar - mu Bg) / ((gamma u + alpha)|g| + mu Phi0)`.
    pub residual: Vec<f64>,
    /// Max over nodes outside the atom windows.
    pub max_norm: f64,
    pub atom_locations: Vec<f64>,
    pub excluded_nodes: Vec<f64>,
    /// Max over the excluded nodes; 0 when nothing is excluded.
    pub excluded_max: f64,
}

/// Residual of the integro-differential equation for `g = Phi0 g1`, with `g'`
/// from centered differences and `Bg` recomputed from `g1`.
pub fn ide_residual(
    grid: &SolutionGrid,
    curve: &SurvivalCurve,
    d: &ClaimDistribution,
) -> ResidualReport {
    let dp = grid.derived;
    let phi0 = curve.phi0;
    let h = grid.step();
    let n = grid.len() - 1;
    let g: Vec<f64> = (0..=n).map(|i| phi0 * grid.g1(i)).collect();
    let tail = TailSamples::new(d, &grid.grid);
    let bg = convolve_all(&g, &tail, h);
    let fbar = &tail.right;
    let atoms = d.atoms();

    let mut nodes = Vec::with_capacity(n.saturating_sub(1));
    let mut residual = Vec::with_capacity(n.saturating_sub(1));
    let mut excluded_nodes = Vec::new();
    let (mut max_norm, mut excluded_max) = (0.0f64, 0.0f64);
    for i in 1..n {
        let u = grid.node(i);
        let dg = (g[i + 1] - g[i - 1]) / (2.0 * h);
        let drift = dp.gamma * u + dp.alpha;
        let raw = u * u * dg + drift * g[i] - dp.mu * phi0 * fbar[i] - dp.mu * bg[i];
        let scale = drift * g[i].abs() + dp.mu * phi0;
        let r = if scale > 0.0 { raw / scale } else { raw };
        if near_atom(u, &atoms, h) {
            excluded_nodes.push(u);
            excluded_max = excluded_max.max(r.abs());
        } else {
            max_norm = max_norm.max(r.abs());
        }
        nodes.push(u);
        residual.push(r);
    }
    ResidualReport {
        nodes,
        residual,
        max_norm,
        atom_locations: atoms,
        excluded_nodes,
        excluded_max,
    }
}

/// Cubic interpolation of nodal values onto the grid with half the step.
pub fn refine_cubic(v: &[f64]) -> Vec<f64> {
    let n = v.len() - 1;
    let mut out = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        out.push(v[i]);
        let mid = if n < 3 {
            0.5 * (v[i] + v[i + 1])
        } else if i == 0 {
            (5.0 * v[0] + 15.0 * v[1] - 5.0 * v[2] + v[3]) / 16.0
        } else if i == n - 1 {
            (v[n - 3] - 5.0 * v[n - 2] + 15.0 * v[n - 1] + 5.0 * v[n]) / 16.0
        } else {
            (-v[i - 1] + 9.0 * v[i] + 9.0 * v[i + 1] - v[i + 2]) / 16.0
        };
        out.push(mid);
    }
    out.push(v[n]);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub cells: usize,
    /// `max_i |g1_i - (T g1)_i| / g1_i` over positive nodes.
    pub max_error: f64,
    pub argmax_u: f64,
}

/// Re-substitutes `g1` into `g = T g` with `T` evaluated on a grid refined twice,
/// `g1` being carried there by cubic interpolation.
pub fn fixed_point_residual(
    grid: &SolutionGrid,
    d: &ClaimDistribution,
) -> Result<FixedPointReport> {
    let dp = grid.derived;
    let fine_grid = UniformGrid::new(grid.u_max(), 2 * grid.grid.cells)?;
    let g1: Vec<f64> = (0..grid.len()).map(|i| grid.g1(i)).collect();
    let g_fine = refine_cubic(&g1);
    let tail = TailSamples::new(d, &fine_grid);
    let bg = convolve_all(&g_fine, &tail, fine_grid.h);
    let source = |fbar: &[f64]| -> Vec<f64> {
        fbar.iter()
            .zip(&bg)
            .map(|(fb, b)| dp.mu * (fb + b))
            .collect()
    };
    let weights = ProductWeights::new(fine_grid, dp.gamma, dp.alpha);
    let tg = weights.scaled_running_integral(
        &source(&tail.right),
        &source(&tail.left),
        dp.mu * tail.right[0] / dp.alpha,
    );

    let (mut max_error, mut argmax_u) = (0.0, 0.0);
    for (i, &g) in g1.iter().enumerate().skip(1) {
        if g > 0.0 {
            let e = (g - tg[2 * i]).abs() / g;
            if e > max_error {
                max_error = e;
                argmax_u = grid.node(i);
            }
        }
    }
    Ok(FixedPointReport {
        cells: grid.grid.cells,
        max_error,
        argmax_u,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessReport {
    /// Largest `|g'_{i+1/2} - g'_{i-1/2}|` relative to `((gamma u + alpha)|g| + mu)/u^2`.
    pub max_jump: f64,
    pub argmax_u: f64,
    /// Same maximum restricted to nodes away from atoms.
    pub max_jump_off_atoms: f64,
    pub atom_locations: Vec<f64>,
}

/// Jumps of the forward-difference derivative of `g1` across nodes.
pub fn smoothness_probe(grid: &SolutionGrid, d: &ClaimDistribution) -> SmoothnessReport {
    let dp = grid.derived;
    let h = grid.step();
    let atoms = d.atoms();
    let n = grid.len() - 1;
    let (mut max_jump, mut argmax_u, mut off) = (0.0, 0.0, 0.0f64);
    for i in 1..n {
        let u = grid.node(i);
        let (gl, g, gr) = (grid.g1(i - 1), grid.g1(i), grid.g1(i + 1));
        let jump = ((gr - g) - (g - gl)).abs() / h;
        let scale = ((dp.gamma * u + dp.alpha) * g.abs() + dp.mu) / (u * u);
        let rel = jump / scale;
        if rel > max_jump {
            max_jump = rel;
            argmax_u = u;
        }
        if !near_atom(u, &atoms, h) {
            off = off.max(rel);
        }
    }
    SmoothnessReport {
        max_jump,
        argmax_u,
        max_jump_off_atoms: off,
        atom_locations: atoms,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// Cell counts, ascending.
    pub resolutions: Vec<usize>,
    /// Max relative difference of `g1` against the finest run, on the coarsest nodes.
    pub differences_vs_finest: Vec<f64>,
    /// Max relative difference between consecutive resolutions.
    pub successive_differences: Vec<f64>,
    /// `log2` of the ratio of the last two successive differences.
    pub order: f64,
}

/// Solves at `cells`, `2 cells`, ... (`levels >= 3` resolutions) on a fixed `u_max`.
pub fn convergence_study(
    m: &ModelParams,
    d: &ClaimDistribution,
    base: &SolverConfig,
    levels: usize,
) -> Result<ConvergenceReport> {
    let levels = levels.max(3);
    let resolutions: Vec<usize> = (0..levels).map(|k| base.n << k).collect();
    let runs = resolutions
        .iter()
        .map(|&n| solve_g1(m, d, &SolverConfig { n, ..*base }))
        .collect::<Result<Vec<_>>>()?;
    let coarse = base.n;
    let diff = |a: &SolutionGrid, b: &SolutionGrid| {
        let (sa, sb) = (a.grid.cells / coarse, b.grid.cells / coarse);
        max_abs((1..=coarse).map(|i| {
            let (x, y) = (a.g1(i * sa), b.g1(i * sb));
            if y != 0.0 {
                (x - y) / y
            } else {
                x - y
            }
        }))
    };
    let finest = runs.last().expect("levels >= 3");
    let differences_vs_finest = runs[..levels - 1].iter().map(|r| diff(r, finest)).collect();
    let successive_differences: Vec<f64> = runs.windows(2).map(|w| diff(&w[0], &w[1])).collect();
    let k = successive_differences.len();
    let order = (successive_differences[k - 2] / successive_differences[k - 1]).log2();
    Ok(ConvergenceReport {
        resolutions,
        differences_vs_finest,
        successive_differences,
        order,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McComparisonRow {
    pub u: f64,
    pub analytic_psi: f64,
    pub psi_hat: f64,
    pub lower: f64,
    pub upper: f64,
    pub ci_half_width: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McComparison {
    pub rows: Vec<McComparisonRow>,
    pub all_pass: bool,
}

/// Passes at `u` when the analytic `Psi(u)` lies in `[lower - 3 ci, upper + 3 ci]`.
pub fn compare_mc(curve: &SurvivalCurve, estimates: &[McEstimate]) -> McComparison {
    let rows: Vec<McComparisonRow> = estimates
        .iter()
        .map(|e| {
            let analytic_psi = curve.psi_at(e.u);
            let slack = 3.0 * e.ci_half_width;
            McComparisonRow {
                u: e.u,
                analytic_psi,
                psi_hat: e.psi_hat,
                lower: e.lower,
                upper: e.upper,
                ci_half_width: e.ci_half_width,
                pass: analytic_psi >= e.lower - slack && analytic_psi <= e.upper + slack,
            }
        })
        .collect();
    let all_pass = rows.iter().all(|r| r.pass);
    McComparison { rows, all_pass }
}
