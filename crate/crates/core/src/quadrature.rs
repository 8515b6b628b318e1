//! The integrating-factor weight `w(t) = t^(gamma-2) exp(-alpha/t)` and product
//! integration against it on a uniform grid.
//!
//! Cell integrals are stored relative to the weight scale at the right end of
//! each cell, `S(t) = t^gamma exp(-alpha/t)`. Near the origin `S` underflows long
//! before the ratios do, so the solver marches on `g = H / S` without ever
//! forming `H` there.

use serde::Serialize;

use crate::error::{Error, Result};

/// Gauss-Legendre points per panel.
const GL_POINTS: usize = 12;

/// `exp(-x)` is below 1e-20 past this point.
const EXP_CUTOFF: f64 = 46.0;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Uniform grid `t_i = i h`, `i = 0..=cells`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformGrid {
    pub h: f64,
    pub cells: usize,
}

impl UniformGrid {
    pub fn new(u_max: f64, cells: usize) -> Result<Self> {
        if !(u_max.is_finite() && u_max > 0.0) {
            return Err(Error::param("u_max", "must be finite and > 0"));
        }
        if cells < 1 {
            return Err(Error::param("n", "grid needs at least one cell"));
        }
        Ok(Self {
            h: u_max / cells as f64,
            cells,
        })
    }

    pub fn with_step(h: f64, cells: usize) -> Self {
        Self { h, cells }
    }

    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn u_max(&self) -> f64 {
        self.node(self.cells)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }
}

/// Evaluates `w(t) = t^(gamma-2) exp(-alpha/t)` in log space with flush-to-zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightEvaluator {
    pub gamma: f64,
    pub alpha: f64,
    log_floor: f64,
}

impl WeightEvaluator {
    pub fn new(gamma: f64, alpha: f64) -> Self {
        Self {
            gamma,
            alpha,
            log_floor: f64::MIN_POSITIVE.ln(),
        }
    }

    /// `ln w(t)`; `-inf` at `t = 0`.
    pub fn log_weight(&self, t: f64) -> f64 {
        if t <= 0.0 {
            f64::NEG_INFINITY
        } else {
            (self.gamma - 2.0) * t.ln() - self.alpha / t
        }
    }

    pub fn weight(&self, t: f64) -> f64 {
        let lw = self.log_weight(t);
        if lw < self.log_floor {
            0.0
        } else {
            lw.exp()
        }
    }

    /// `ln S(t)` with `S(t) = t^gamma exp(-alpha/t)`, the scale of `H` relative to `g`.
    pub fn log_scale(&self, t: f64) -> f64 {
        if t <= 0.0 {
            f64::NEG_INFINITY
        } else {
            self.gamma * t.ln() - self.alpha / t
        }
    }

    pub fn underflows(&self, log_value: f64) -> bool {
        log_value < self.log_floor
    }
}

/// Product-integration weights of `w` against piecewise-linear functions on a grid.
///
/// For cell `i = [t_i, t_{i+1}]`:
/// `int w(t) f(t) dt = S(t_{i+1}) (m0[i] f_i + m1[i] f_{i+1})` for linear `f`,
/// and `rho[i] = S(t_i) / S(t_{i+1})`.
#[derive(Debug, Clone)]
pub struct ProductWeights {
    pub grid: UniformGrid,
    pub weight: WeightEvaluator,
    /// `ln S(t_i)` per node.
    pub log_scale: Vec<f64>,
    pub rho: Vec<f64>,
    pub m0: Vec<f64>,
    pub m1: Vec<f64>,
}

impl ProductWeights {
    pub fn new(grid: UniformGrid, gamma: f64, alpha: f64) -> Self {
        let weight = WeightEvaluator::new(gamma, alpha);
        let (gl_x, gl_w) = gauss_legendre(GL_POINTS);
        let log_scale: Vec<f64> = (0..grid.len())
            .map(|i| weight.log_scale(grid.node(i)))
            .collect();
        let mut rho = Vec::with_capacity(grid.cells);
        let mut m0 = Vec::with_capacity(grid.cells);
        let mut m1 = Vec::with_capacity(grid.cells);
        for i in 0..grid.cells {
            rho.push(if i == 0 {
                0.0
            } else {
                (log_scale[i] - log_scale[i + 1]).exp()
            });
            let (a, b) = cell_moments(&grid, i, gamma, alpha, &gl_x, &gl_w);
            m0.push(a);
            m1.push(b);
        }
        Self {
            grid,
            weight,
            log_scale,
            rho,
            m0,
            m1,
        }
    }

    /// Trapezoidal product integration of `w f` over `[t_lo, t_hi]`.
    ///
    /// Cells whose right-end scale underflows contribute exactly zero and are skipped.
    pub fn integrate_weighted(&self, f: &[f64], lo: usize, hi: usize) -> Result<f64> {
        if hi >= self.grid.len() || hi >= f.len() {
            return Err(Error::IndexOutOfRange {
                index: hi,
                len: self.grid.len().min(f.len()),
            });
        }
        if lo > hi {
            return Err(Error::Domain(format!(
                "integration range {lo}..{hi} is reversed"
            )));
        }
        let mut sum = 0.0;
        for i in lo..hi {
            let ls = self.log_scale[i + 1];
            if self.weight.underflows(ls) {
                continue;
            }
            sum += ls.exp() * (self.m0[i] * f[i] + self.m1[i] * f[i + 1]);
        }
        Ok(sum)
    }

    /// Increment of `H` over cell `i` for the linear interpolant of `f`.
    pub fn cell_increment(&self, i: usize, f_left: f64, f_right: f64) -> f64 {
        let ls = self.log_scale[i + 1];
        if self.weight.underflows(ls) {
            0.0
        } else {
            ls.exp() * (self.m0[i] * f_left + self.m1[i] * f_right)
        }
    }

    /// Applies `g(t) = S(t)^{-1} int_0^t w f`, in scaled form, at every node,
    /// with the value at `t = 0` supplied by the caller.
    ///
    /// Cell `i` interpolates between `f_start[i]` and `f_end[i + 1]`, so a jump of
    /// `f` at a node is represented by its one-sided limits.
    pub fn scaled_running_integral(
        &self,
        f_start: &[f64],
        f_end: &[f64],
        at_zero: f64,
    ) -> Vec<f64> {
        let n = f_start.len().min(f_end.len()).min(self.grid.len());
        let mut out = Vec::with_capacity(n);
        if n == 0 {
            return out;
        }
        out.push(at_zero);
        for i in 0..n - 1 {
            let prev = if i == 0 { 0.0 } else { out[i] };
            out.push(self.rho[i] * prev + self.m0[i] * f_start[i] + self.m1[i] * f_end[i + 1]);
        }
        out
    }
}

/// Scaled moments of cell `i` against the hat functions.
///
/// With `T = t_{i+1}` and `t = T / (1 + v T)`:
/// `int_{t_i}^T w(t)/S(T) phi(t) dt = int_0^V (1 + vT)^-gamma exp(-alpha v) phi dv`,
/// `V = 1/t_i - 1/T`. The `v` form isolates the stiff exponential near the origin.
fn cell_moments(
    grid: &UniformGrid,
    i: usize,
    gamma: f64,
    alpha: f64,
    gl_x: &[f64],
    gl_w: &[f64],
) -> (f64, f64) {
    let h = grid.h;
    let t_right = grid.node(i + 1);
    let span = if i == 0 {
        f64::INFINITY
    } else {
        h / (grid.node(i) * t_right)
    };
    let v_end = span.min(EXP_CUTOFF / alpha);
    let panel = (1.0 / alpha).min(1.0 / t_right);
    let panels = ((v_end / panel).ceil() as usize).clamp(1, 1 << 16);
    let width = v_end / panels as f64;

    let (mut left, mut right) = (0.0, 0.0);
    for p in 0..panels {
        let a = p as f64 * width;
        let half = 0.5 * width;
        let mid = a + half;
        for (x, wq) in gl_x.iter().zip(gl_w) {
            let v = mid + half * x;
            let vt = v * t_right;
            let dens = (-gamma * vt.ln_1p() - alpha * v).exp() * wq * half;
            // (T - t) / h without cancellation
            let phi_left = (t_right * vt / (1.0 + vt) / h).min(1.0);
            left += dens * phi_left;
            right += dens * (1.0 - phi_left);
        }
    }
    (left, right)
}

/// Ratio `int_0^u t^p exp(-alpha/t) dt / (u^(p+1) exp(-alpha/u))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightIntegralRatio {
    pub ratio: f64,
    /// Set when `exp(-alpha/u)` underflows; the ratio is then reported as 0.
    pub underflow: bool,
}

/// Decay-rate diagnostic: tends to `u/alpha` as `u -> 0` and `1/(p+1)` as `u -> inf`.
///
/// Evaluated as `int_0^inf (1+y)^(-p-2) exp(-beta y) dy` with `beta = alpha/u`
/// (substitute `t = u / (1 + y)`). Requires `p > -1`.
pub fn asymptotic_weight_integral(alpha: f64, u: f64, p: f64) -> Result<WeightIntegralRatio> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("u must be > 0, got {u}")));
    }
    if !(p > -1.0) {
        return Err(Error::Domain(format!("exponent must exceed -1, got {p}")));
    }
    let beta = alpha / u;
    if -beta < f64::MIN_POSITIVE.ln() {
        return Ok(WeightIntegralRatio {
            ratio: 0.0,
            underflow: true,
        });
    }
    let (gl_x, gl_w) = gauss_legendre(GL_POINTS);
    let integrand = |y: f64| (-(p + 2.0) * y.ln_1p() - beta * y).exp();
    let exp_scale = if beta > 0.0 {
        1.0 / beta
    } else {
        f64::INFINITY
    };
    let mut sum = 0.0;
    let mut y = 0.0;
    let mut width = 0.5 * exp_scale.min(1.0);
    for _ in 0..100_000 {
        let half = 0.5 * width;
        let mid = y + half;
        let panel: f64 = gl_x
            .iter()
            .zip(&gl_w)
            .map(|(x, w)| w * integrand(mid + half * x))
            .sum::<f64>()
            * half;
        sum += panel;
        y += width;
        // int_y^inf (1+s)^(-p-2) e^(-beta s) ds <= (1+y)^(-p-1) e^(-beta y) / (p+1)
        let remainder = (-(p + 1.0) * y.ln_1p() - beta * y).exp() / (p + 1.0);
        if remainder < 1e-17 * sum {
            break;
        }
        width = y.min(2.0 * exp_scale).max(width);
    }
    Ok(WeightIntegralRatio {
        ratio: sum,
        underflow: false,
    })
}
