//! File writers. Floats in CSV carry 17 significant digits so files round-trip.

use std::fmt::Write as _;
use std::path::Path;

use ruin_core::mc::{McEstimate, McRun, SimConfig};
use ruin_core::{SolutionGrid, SurvivalCurve};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numeric(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_file(path, &text)
}

/// Columns `u, g1, H1, Bg1`.
pub fn g1_csv(grid: &SolutionGrid) -> String {
    let q = grid.free_term;
    let mut s = String::from("u,g1,H1,Bg1\n");
    for i in 0..grid.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            num(grid.node(i)),
            num(grid.g[i] / q),
            num(grid.h_fn[i] / q),
            num(grid.bg[i] / q)
        );
    }
    s
}

/// Columns `u, phi, psi`.
pub fn survival_csv(curve: &SurvivalCurve) -> String {
    let mut s = String::from("u,phi,psi\n");
    for ((u, phi), psi) in curve.nodes.iter().zip(&curve.phi).zip(&curve.psi) {
        let _ = writeln!(s, "{},{},{}", num(*u), num(*phi), num(*psi));
    }
    s
}

pub fn summary_json(grid: &SolutionGrid, curve: &SurvivalCurve) -> serde_json::Value {
    let mut v = curve.summary();
    let extra = serde_json::json!({
        "tail_coefficient": curve.tail_coefficient,
        "u0_used": grid.u0_used,
        "u_max": grid.u_max(),
        "cells": grid.grid.cells,
        "picard_iterations": grid.picard.iterations,
        "picard_halvings": grid.picard.halvings,
        "gamma": grid.derived.gamma,
        "alpha": grid.derived.alpha,
        "mu": grid.derived.mu,
    });
    if let (Some(a), serde_json::Value::Object(b)) = (v.as_object_mut(), extra) {
        a.extend(b);
    }
    v
}

/// One line of `mc.jsonl`: an estimate with the simulation settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRecord {
    pub u: f64,
    pub psi_hat: f64,
    pub ci_half_width: f64,
    pub censored_fraction: f64,
    pub lower: f64,
    pub upper: f64,
    pub n_paths: u64,
    pub ruined: u64,
    pub censored: u64,
    pub seed: u64,
    pub horizon: f64,
    pub dt_max: f64,
    pub survival_barrier: f64,
}

impl McRecord {
    pub fn new(e: &McEstimate, cfg: &SimConfig) -> Self {
        Self {
            u: e.u,
            psi_hat: e.psi_hat,
            ci_half_width: e.ci_half_width,
            censored_fraction: e.censored_fraction,
            lower: e.lower,
            upper: e.upper,
            n_paths: e.n_paths,
            ruined: e.ruined,
            censored: e.censored,
            seed: cfg.seed,
            horizon: cfg.horizon,
            dt_max: cfg.dt_max,
            survival_barrier: cfg.survival_barrier,
        }
    }

    pub fn estimate(&self) -> McEstimate {
        McEstimate {
            u: self.u,
            psi_hat: self.psi_hat,
            ci_half_width: self.ci_half_width,
            censored_fraction: self.censored_fraction,
            lower: self.lower,
            upper: self.upper,
            n_paths: self.n_paths,
            ruined: self.ruined,
            censored: self.censored,
        }
    }

    fn matches(&self, cfg: &SimConfig) -> bool {
        self.n_paths == cfg.n_paths
            && self.seed == cfg.seed
            && self.horizon == cfg.horizon
            && self.dt_max == cfg.dt_max
            && self.survival_barrier == cfg.survival_barrier
    }
}

pub fn mc_jsonl(run: &McRun) -> String {
    let mut s = String::new();
    for e in &run.estimates {
        let line = serde_json::to_string(&McRecord::new(e, &run.config)).expect("plain record");
        s.push_str(&line);
        s.push('\n');
    }
    s
}

/// Estimates from an existing `mc.jsonl`, if it was produced by exactly `cfg`.
pub fn read_matching_mc(path: &Path, cfg: &SimConfig) -> Option<Vec<McEstimate>> {
    let text = std::fs::read_to_string(path).ok()?;
    let records: Vec<McRecord> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .ok()?;
    let same_u = records.len() == cfg.u_values.len()
        && records.iter().zip(&cfg.u_values).all(|(r, u)| r.u == *u);
    (same_u && records.iter().all(|r| r.matches(cfg)))
        .then(|| records.iter().map(McRecord::estimate).collect())
}
