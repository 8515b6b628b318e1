//! Solves for `g = Phi'` with a prescribed boundary value `Phi(0+)`: Picard
//! iteration on a short interval `[0, u0]`, then forward marching of
//! `H(u) = u^gamma exp(-alpha/u) g(u)` across the rest of the grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_assumptions, ClaimDistribution, DerivedParams, ModelParams};
use crate::quadrature::{ProductWeights, UniformGrid};
use crate::summation::pairwise_sum;

/// u0 is halved at most this many times before giving up.
pub const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Truncation point of the reserve axis.
    pub u_max: f64,
    /// Number of grid cells; the grid has `n + 1` nodes.
    pub n: usize,
    pub u0_init: f64,
    /// Relative sup-norm tolerance between successive Picard iterates.
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Largest acceptable ratio of successive iterate differences.
    pub contraction_target: f64,
}

impl SolverConfig {
    /// Defaults: `u_max = 50 max(1, mean claim, alpha/gamma)`, `n = 2^14`,
    /// `u0 = min(1, alpha/gamma)/4`.
    ///
    /// With a single atom `a`, `u_max` is moved to the nearest `a 2^j` so the atom
    /// is a node of every power-of-two grid with `n >= 2^j`.
    pub fn for_model(dp: &DerivedParams, d: &ClaimDistribution) -> Self {
        let scale = dp.alpha / dp.gamma;
        let claim_scale = d.mean().unwrap_or_else(|| d.inverse_tail(0.5));
        let mut u_max = 50.0 * 1f64.max(claim_scale).max(scale);
        if let [atom] = d.atoms()[..] {
            u_max = atom * (u_max / atom).log2().round().max(0.0).exp2();
        }
        Self {
            u_max,
            n: 1 << 14,
            u0_init: 1f64.min(scale) / 4.0,
            picard_tol: 1e-12,
            picard_max_iter: 200,
            contraction_target: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u0_init > 0.0) {
            return Err(Error::param("u0_init", "must be > 0"));
        }
        if !(self.u_max > self.u0_init) || !self.u_max.is_finite() {
            return Err(Error::param("u_max", "must be finite and exceed u0_init"));
        }
        if self.n < 2 {
            return Err(Error::param("n", "must be >= 2"));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::param("picard_tol", "must be > 0"));
        }
        if self.picard_max_iter < 1 {
            return Err(Error::param("picard_max_iter", "must be >= 1"));
        }
        if !(self.contraction_target > 0.0 && self.contraction_target < 1.0) {
            return Err(Error::param("contraction_target", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Record of the local Picard solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardTrace {
    pub iterations: usize,
    pub halvings: usize,
    /// Sup-norm differences between successive iterates on the accepted interval.
    pub differences: Vec<f64>,
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSolution {
    /// `g` at nodes `0..=i0`.
    pub g: Vec<f64>,
    pub i0: usize,
    pub u0_used: f64,
    pub trace: PicardTrace,
}

/// Discretized solution on `[0, u_max]`.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionGrid {
    pub grid: UniformGrid,
    pub derived: DerivedParams,
    /// Boundary value `Phi(0+)` used in the free term; 1 for `g1`.
    pub free_term: f64,
    /// `g` at the nodes; equals `g1` when `free_term == 1`.
    pub g: Vec<f64>,
    /// `H(u) = u^gamma exp(-alpha/u) g(u)`, accumulated from non-negative increments.
    pub h_fn: Vec<f64>,
    /// `(Bg)(u) = int_0^u g(u - y) Fbar(y) dy`.
    pub bg: Vec<f64>,
    /// `Fbar` at the nodes (right-continuous).
    pub fbar: Vec<f64>,
    pub u0_used: f64,
    pub i0: usize,
    pub picard: PicardTrace,
}

impl SolutionGrid {
    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn node(&self, i: usize) -> f64 {
        self.grid.node(i)
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    pub fn step(&self) -> f64 {
        self.grid.h
    }

    pub fn u_max(&self) -> f64 {
        self.grid.u_max()
    }

    /// `g1 = g / free_term` at node `i`.
    pub fn g1(&self, i: usize) -> f64 {
        self.g[i] / self.free_term
    }
}

/// `Fbar` sampled at the grid nodes.
pub fn tail_on_grid(d: &ClaimDistribution, grid: &UniformGrid) -> Vec<f64> {
    (0..grid.len())
        .map(|i| d.tail_unchecked(grid.node(i)))
        .collect()
}

/// One-sided samples of `Fbar` at the nodes. At a node carrying an atom, a cell
/// ending there sees the left limit and a cell starting there the tail value.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSamples {
    /// `Fbar(t_i)` (right-continuous).
    pub right: Vec<f64>,
    /// `Fbar(t_i-)`.
    pub left: Vec<f64>,
    /// `(right + left) / 2`, the interior trapezoid weight.
    pub mid: Vec<f64>,
}

impl TailSamples {
    pub fn new(d: &ClaimDistribution, grid: &UniformGrid) -> Self {
        let right = tail_on_grid(d, grid);
        let mut left: Vec<f64> = (0..grid.len())
            .map(|i| d.tail_left_limit(grid.node(i)))
            .collect();
        left[0] = right[0];
        Self::from_parts(right, left)
    }

    /// Samples of a tail without atoms.
    pub fn continuous(values: Vec<f64>) -> Self {
        Self::from_parts(values.clone(), values)
    }

    fn from_parts(right: Vec<f64>, left: Vec<f64>) -> Self {
        let mid = right
            .iter()
            .zip(&left)
            .map(|(r, l)| 0.5 * (r + l))
            .collect();
        Self { right, left, mid }
    }

    pub fn len(&self) -> usize {
        self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.right.is_empty()
    }
}

/// Cellwise trapezoidal `(Bg)(t_i) = h [ g_i Fbar_0 / 2 + sum_{0<j<i} g_{i-j} Fbar_j + g_0 Fbar(t_i-) / 2 ]`,
/// with `Fbar_j` replaced by the mean of its one-sided values at atoms.
pub fn convolve(g: &[f64], tail: &TailSamples, h: f64, i: usize) -> f64 {
    if i == 0 {
        return 0.0;
    }
    h * (0.5 * g[i] * tail.right[0] + 0.5 * g[0] * tail.left[i] + interior_sum(g, &tail.mid, i))
}

/// `sum_{0<j<i} g_{i-j} Fbar_j`.
fn interior_sum(g: &[f64], fbar: &[f64], i: usize) -> f64 {
    pairwise_sum(1, i, &|j| g[i - j] * fbar[j])
}

/// `convolve` at every node.
pub fn convolve_all(g: &[f64], tail: &TailSamples, h: f64) -> Vec<f64> {
    (0..g.len()).map(|i| convolve(g, tail, h, i)).collect()
}

/// Shared state of one solve.
struct Problem<'a> {
    dp: DerivedParams,
    pw: &'a ProductWeights,
    tail: &'a TailSamples,
    free_term: f64,
}

impl Problem<'_> {
    /// `g(0) = mu Phi(0+) Fbar(0) / alpha = lambda Phi(0+) / c`.
    fn g_at_zero(&self) -> f64 {
        self.dp.mu * self.free_term * self.tail.right[0] / self.dp.alpha
    }

    /// `mu (Phi(0+) Fbar + Bg)` as the start of cell `i`.
    fn source(&self, i: usize, bg: f64) -> f64 {
        self.dp.mu * (self.free_term * self.tail.right[i] + bg)
    }

    /// `mu (Phi(0+) Fbar(t_i-) + Bg)` as the end of cell `i - 1`.
    fn source_end(&self, i: usize, bg: f64) -> f64 {
        self.dp.mu * (self.free_term * self.tail.left[i] + bg)
    }

    /// One application of the Volterra operator on nodes `0..g.len()`.
    fn apply(&self, g: &[f64]) -> Vec<f64> {
        let h = self.pw.grid.h;
        let bg = convolve_all(g, self.tail, h);
        let start: Vec<f64> = bg
            .iter()
            .enumerate()
            .map(|(i, &b)| self.source(i, b))
            .collect();
        let end: Vec<f64> = bg
            .iter()
            .enumerate()
            .map(|(i, &b)| self.source_end(i, b))
            .collect();
        self.pw
            .scaled_running_integral(&start, &end, self.g_at_zero())
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn sup_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn local_solve(p: &Problem<'_>, cfg: &SolverConfig) -> Result<LocalSolution> {
    let h = p.pw.grid.h;
    let g_zero = p.g_at_zero();
    let mut u0 = cfg.u0_init;
    let mut halvings = 0;
    loop {
        let i0 = ((u0 / h).floor() as usize).clamp(1, p.pw.grid.cells);
        let mut g = vec![g_zero; i0 + 1];
        let mut differences: Vec<f64> = Vec::new();
        let mut ratios: Vec<f64> = Vec::new();
        let mut worst_ratio = 0.0;
        let mut converged = false;
        for _ in 0..cfg.picard_max_iter {
            let next = p.apply(&g);
            let diff = sup_diff(&next, &g);
            g = next;
            if let Some(&prev) = differences.last() {
                if prev > 0.0 {
                    ratios.push(diff / prev);
                }
            }
            differences.push(diff);
            if diff <= cfg.picard_tol * sup_norm(&g) {
                converged = true;
                break;
            }
            if let Some(&r) = ratios.last() {
                if r > cfg.contraction_target {
                    worst_ratio = r;
                    break;
                }
            }
        }
        if converged {
            g[0] = g_zero;
            return Ok(LocalSolution {
                g,
                i0,
                u0_used: p.pw.grid.node(i0),
                trace: PicardTrace {
                    iterations: differences.len(),
                    halvings,
                    differences,
                    ratios,
                },
            });
        }
        if worst_ratio == 0.0 {
            return Err(Error::MaxIterations(cfg.picard_max_iter));
        }
        if halvings == MAX_HALVINGS || i0 == 1 {
            return Err(Error::NoContraction {
                ratio: worst_ratio,
                target: cfg.contraction_target,
                halvings,
            });
        }
        halvings += 1;
        u0 /= 2.0;
    }
}

fn march(p: &Problem<'_>, local: LocalSolution, lambda_positive: bool) -> Result<SolutionGrid> {
    let grid = p.pw.grid;
    let h = grid.h;
    let n = grid.cells;
    let tail = p.tail;
    let mu = p.dp.mu;

    let mut g = Vec::with_capacity(n + 1);
    g.extend_from_slice(&local.g);
    let mut bg = convolve_all(&g, tail, h);
    let mut f: Vec<f64> = bg
        .iter()
        .enumerate()
        .map(|(i, &b)| p.source(i, b))
        .collect();
    let mut f_end: Vec<f64> = bg
        .iter()
        .enumerate()
        .map(|(i, &b)| p.source_end(i, b))
        .collect();

    let own = 0.5 * h * tail.right[0];
    for k in local.i0 + 1..=n {
        let i = k - 1;
        let known = h * (interior_sum(&g, &tail.mid, k) + 0.5 * g[0] * tail.left[k]);
        let coefficient = p.pw.m1[i] * mu * own;
        if coefficient >= 1.0 {
            return Err(Error::StepNotContractive {
                u: grid.node(k),
                coefficient,
            });
        }
        let rhs = p.pw.rho[i] * g[i]
            + p.pw.m0[i] * f[i]
            + p.pw.m1[i] * mu * (p.free_term * tail.left[k] + known);
        let gk = rhs / (1.0 - coefficient);
        if lambda_positive && !(gk > 0.0) {
            return Err(Error::NonPositiveSolution {
                u: grid.node(k),
                value: gk,
            });
        }
        g.push(gk);
        let bk = known + own * gk;
        bg.push(bk);
        f.push(p.source(k, bk));
        f_end.push(p.source_end(k, bk));
    }

    if lambda_positive {
        if let Some((i, &v)) = g.iter().enumerate().skip(1).find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::NonPositiveSolution {
                u: grid.node(i),
                value: v,
            });
        }
    }

    let mut h_fn = Vec::with_capacity(n + 1);
    h_fn.push(0.0);
    for i in 0..n {
        let next = h_fn[i] + p.pw.cell_increment(i, f[i], f_end[i + 1]);
        h_fn.push(next);
    }

    Ok(SolutionGrid {
        grid,
        derived: p.dp,
        free_term: p.free_term,
        g,
        h_fn,
        bg,
        fbar: tail.right.clone(),
        u0_used: local.u0_used,
        i0: local.i0,
        picard: local.trace,
    })
}

/// Precomputed grid data for one `(gamma, alpha, F, grid)` combination.
pub struct Discretization {
    pub weights: ProductWeights,
    pub tail: TailSamples,
}

impl Discretization {
    pub fn new(dp: &DerivedParams, d: &ClaimDistribution, grid: UniformGrid) -> Self {
        Self {
            weights: ProductWeights::new(grid, dp.gamma, dp.alpha),
            tail: TailSamples::new(d, &grid),
        }
    }
}

/// Local fixed point of the Volterra operator on `[0, u0_used]` with `Phi(0+) = 1`.
pub fn picard_local(
    dp: &DerivedParams,
    d: &ClaimDistribution,
    cfg: &SolverConfig,
) -> Result<LocalSolution> {
    cfg.validate()?;
    let disc = Discretization::new(dp, d, UniformGrid::new(cfg.u_max, cfg.n)?);
    let p = Problem {
        dp: *dp,
        pw: &disc.weights,
        tail: &disc.tail,
        free_term: 1.0,
    };
    local_solve(&p, cfg)
}

/// Extends a local solution across the grid.
pub fn march_global(
    local: LocalSolution,
    dp: &DerivedParams,
    d: &ClaimDistribution,
    cfg: &SolverConfig,
) -> Result<SolutionGrid> {
    cfg.validate()?;
    let disc = Discretization::new(dp, d, UniformGrid::new(cfg.u_max, cfg.n)?);
    let p = Problem {
        dp: *dp,
        pw: &disc.weights,
        tail: &disc.tail,
        free_term: 1.0,
    };
    march(&p, local, dp.mu > 0.0)
}

/// Solves with an arbitrary positive boundary value `Phi(0+) = free_term`
/// on a prebuilt discretization.
pub fn solve_on(
    dp: &DerivedParams,
    disc: &Discretization,
    cfg: &SolverConfig,
    free_term: f64,
) -> Result<SolutionGrid> {
    if !(free_term > 0.0 && free_term.is_finite()) {
        return Err(Error::param("free_term", "must be finite and > 0"));
    }
    let p = Problem {
        dp: *dp,
        pw: &disc.weights,
        tail: &disc.tail,
        free_term,
    };
    let local = local_solve(&p, cfg)?;
    march(&p, local, dp.mu > 0.0)
}

/// `g` for `Phi(0+) = free_term`; refuses when A1 or A3 fails.
pub fn solve_scaled(
    m: &ModelParams,
    d: &ClaimDistribution,
    cfg: &SolverConfig,
    free_term: f64,
) -> Result<SolutionGrid> {
    m.validate()?;
    d.validate()?;
    cfg.validate()?;
    let report = check_assumptions(m, d);
    report.require_solvable()?;
    let dp = report.derived;
    let disc = Discretization::new(&dp, d, UniformGrid::new(cfg.u_max, cfg.n)?);
    solve_on(&dp, &disc, cfg, free_term)
}

/// `g1`, the derivative of the survival probability normalized by `Phi(0+) = 1`.
pub fn solve_g1(
    m: &ModelParams,
    d: &ClaimDistribution,
    cfg: &SolverConfig,
) -> Result<SolutionGrid> {
    solve_scaled(m, d, cfg, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_params;

    fn fixture() -> ModelParams {
        ModelParams {
            a: 0.1,
            r: 0.0,
            kappa: 1.0,
            sigma: 0.3,
            c: 1.5,
            lambda: 1.0,
        }
    }

    fn small_cfg(m: &ModelParams, d: &ClaimDistribution, n: usize) -> SolverConfig {
        let dp = derive_params(m);
        SolverConfig {
            n,
            ..SolverConfig::for_model(&dp, d)
        }
    }

    #[test]
    fn convolve_examples() {
        let h = 1.0 / 4096.0;
        let grid = UniformGrid::with_step(h, 4096);
        let e = ClaimDistribution::exponential(1.0).unwrap();
        let fbar = TailSamples::new(&e, &grid);
        let ones = vec![1.0; grid.len()];
        assert_eq!(convolve(&ones, &fbar, h, 0), 0.0);
        let b = convolve(&ones, &fbar, h, 4096);
        assert!((b - (1.0 - (-1.0f64).exp())).abs() < 1e-6);

        let d = ClaimDistribution::deterministic(2.0).unwrap();
        let fbar = TailSamples::new(&d, &grid);
        let lin = grid.nodes();
        assert!((convolve(&lin, &fbar, h, 4096) - 0.5).abs() < 1e-12);

        // atom on a node: int_0^1 Fbar = 0.5 exactly, whichever side the jump is seen from
        let d = ClaimDistribution::deterministic(0.5).unwrap();
        let fbar = TailSamples::new(&d, &grid);
        assert_eq!(fbar.right[2048], 0.0);
        assert_eq!(fbar.left[2048], 1.0);
        assert!((convolve(&ones, &fbar, h, 4096) - 0.5).abs() < 1e-15);
        assert!((convolve(&ones, &fbar, h, 2048) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn default_grid_puts_a_single_atom_on_a_node() {
        let m = fixture();
        let d = ClaimDistribution::deterministic(2.0).unwrap();
        let cfg = small_cfg(&m, &d, 1 << 14);
        let k = 2.0 * cfg.n as f64 / cfg.u_max;
        assert_eq!(k, k.round());
    }

    #[test]
    fn convolution_is_symmetric() {
        let h = 0.01;
        let g: Vec<f64> = (0..300).map(|i| (i as f64 * h).cos() + 2.0).collect();
        let fbar: Vec<f64> = (0..300).map(|i| (-(i as f64) * h * 0.7).exp()).collect();
        for i in [1usize, 7, 150, 299] {
            let a = convolve(&g, &TailSamples::continuous(fbar.clone()), h, i);
            let b = convolve(&fbar, &TailSamples::continuous(g.clone()), h, i);
            assert!((a - b).abs() < 1e-12 * a.abs());
        }
    }

    #[test]
    fn no_claims_gives_zero() {
        let m = ModelParams {
            lambda: 0.0,
            ..fixture()
        };
        let e = ClaimDistribution::exponential(1.0).unwrap();
        let cfg = small_cfg(&m, &e, 1024);
        let dp = derive_params(&m);
        let local = picard_local(&dp, &e, &cfg).unwrap();
        assert_eq!(local.trace.iterations, 1);
        assert!(local.g.iter().all(|&v| v == 0.0));
        let sol = solve_g1(&m, &e, &cfg).unwrap();
        assert!(sol.g.iter().all(|&v| v == 0.0));
        assert!(sol.h_fn.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn boundary_value_is_pinned() {
        let m = fixture();
        let e = ClaimDistribution::exponential(1.0).unwrap();
        let cfg = small_cfg(&m, &e, 2048);
        let dp = derive_params(&m);
        let local = picard_local(&dp, &e, &cfg).unwrap();
        assert!((local.g[0] - m.lambda / m.c).abs() <= 1e-15);
        let sol = solve_g1(&m, &e, &cfg).unwrap();
        assert!((sol.g[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!(sol.g.iter().skip(1).all(|&v| v > 0.0));
        assert!(sol.h_fn.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn refuses_subcritical_gamma() {
        let m = ModelParams {
            a: 0.036,
            ..fixture()
        };
        let e = ClaimDistribution::exponential(1.0).unwrap();
        let cfg = SolverConfig {
            u_max: 100.0,
            n: 256,
            u0_init: 0.25,
            picard_tol: 1e-12,
            picard_max_iter: 100,
            contraction_target: 0.5,
        };
        assert!(matches!(
            solve_g1(&m, &e, &cfg),
            Err(Error::Assumption {
                assumption: "A3",
                ..
            })
        ));
    }

    #[test]
    fn config_validation() {
        let dp = derive_params(&fixture());
        let e = ClaimDistribution::exponential(1.0).unwrap();
        let good = SolverConfig::for_model(&dp, &e);
        assert!(good.validate().is_ok());
        assert!((good.u_max - 750.0).abs() < 1e-9);
        for bad in [
            SolverConfig { n: 1, ..good },
            SolverConfig {
                u0_init: 0.0,
                ..good
            },
            SolverConfig { u_max: 0.1, ..good },
            SolverConfig {
                contraction_target: 1.0,
                ..good
            },
            SolverConfig {
                picard_tol: 0.0,
                ..good
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn max_iterations_reported() {
        let m = fixture();
        let e = ClaimDistribution::exponential(1.0).unwrap();
        let cfg = SolverConfig {
            picard_max_iter: 2,
            picard_tol: 1e-300,
            ..small_cfg(&m, &e, 1024)
        };
        assert_eq!(
            picard_local(&derive_params(&m), &e, &cfg).unwrap_err(),
            Error::MaxIterations(2)
        );
    }

    #[test]
    fn linear_in_boundary_value() {
        let m = fixture();
        let e = ClaimDistribution::exponential(1.0).unwrap();
        let cfg = small_cfg(&m, &e, 2048);
        let one = solve_scaled(&m, &e, &cfg, 1.0).unwrap();
        let q = 0.37;
        let scaled = solve_scaled(&m, &e, &cfg, q).unwrap();
        for (a, b) in one.g.iter().zip(&scaled.g) {
            assert!((q * a - b).abs() <= 1e-12 * b.abs(), "{a} {b}");
        }
    }
}
