use std::path::{Path, PathBuf};

use ruin_core::asymptotics::{analyze, AsymptoticsReport};
use ruin_core::mc::{estimate_psi, McEstimate, SimConfig};
use ruin_core::verifier::{
    compare_mc, fixed_point_residual, ide_residual, smoothness_probe, FixedPointReport,
    McComparison, SmoothnessReport,
};
use ruin_core::{assemble, check_assumptions, solve_g1, SolutionGrid, SurvivalCurve};
use serde::Serialize;

use crate::config::{Format, Overrides, RunConfig};
use crate::error::CliError;
use crate::output::{
    g1_csv, mc_jsonl, read_matching_mc, summary_json, survival_csv, write_file, write_json,
};
use crate::report;

pub struct Solved {
    pub grid: SolutionGrid,
    pub curve: SurvivalCurve,
}

/// Assumption check, then `g1` and the survival curve.
pub fn solve(rc: &RunConfig, ov: &Overrides) -> Result<Solved, CliError> {
    check_assumptions(&rc.model, &rc.claims)
        .require_solvable()
        .map_err(CliError::from)?;
    let cfg = rc.solver_config(ov);
    let grid = solve_g1(&rc.model, &rc.claims, &cfg)?;
    let curve = assemble(&grid)?;
    Ok(Solved { grid, curve })
}

fn out_path(rc: &RunConfig, ov: &Overrides, name: &str) -> PathBuf {
    rc.out_dir(ov).join(name)
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
fn with_workers<T: Send>(ov: &Overrides, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match ov.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

pub fn cmd_solve(rc: &RunConfig, ov: &Overrides) -> Result<Solved, CliError> {
    let s = solve(rc, ov)?;
    if rc.has_format(Format::Csv) {
        write_file(&out_path(rc, ov, "g1.csv"), &g1_csv(&s.grid))?;
        write_file(&out_path(rc, ov, "survival.csv"), &survival_csv(&s.curve))?;
    }
    write_json(
        &out_path(rc, ov, "summary.json"),
        &summary_json(&s.grid, &s.curve),
    )?;
    Ok(s)
}

#[derive(Serialize)]
struct AsymptoticsFile<'a> {
    gamma: f64,
    #[serde(flatten)]
    report: &'a AsymptoticsReport,
}

fn asymptotics_of(rc: &RunConfig, s: &Solved) -> Result<AsymptoticsReport, CliError> {
    Ok(analyze(&rc.model, &rc.claims, &s.grid, &s.curve)?)
}

pub fn cmd_asymptotics(rc: &RunConfig, ov: &Overrides) -> Result<AsymptoticsReport, CliError> {
    let s = solve(rc, ov)?;
    let report = asymptotics_of(rc, &s)?;
    write_json(
        &out_path(rc, ov, "asymptotics.json"),
        &AsymptoticsFile {
            gamma: s.grid.derived.gamma,
            report: &report,
        },
    )?;
    Ok(report)
}

fn simulate(rc: &RunConfig, ov: &Overrides, cfg: &SimConfig) -> Result<Vec<McEstimate>, CliError> {
    let run = with_workers(ov, || estimate_psi(&rc.model, &rc.claims, cfg))??;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    write_file(&out_path(rc, ov, "mc.jsonl"), &mc_jsonl(&run))?;
    Ok(run.estimates)
}

pub fn cmd_simulate(rc: &RunConfig, ov: &Overrides) -> Result<Vec<McEstimate>, CliError> {
    simulate(rc, ov, &rc.sim_config(ov))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check<T: Serialize> {
    pub pass: bool,
    pub threshold: Option<f64>,
    pub report: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualSummary {
    pub max_norm: f64,
    pub atom_locations: Vec<f64>,
    pub excluded_nodes: Vec<f64>,
    pub excluded_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub phi0: f64,
    pub phi0_injected_error: bool,
    pub ide_residual: Check<ResidualSummary>,
    pub fixed_point: Check<FixedPointReport>,
    pub smoothness: SmoothnessReport,
    pub monte_carlo: Check<McComparison>,
}

/// Recomputes the solution, reuses `mc.jsonl` when it matches the simulation
/// settings (re-simulating otherwise), and writes `verify.json`.
pub fn cmd_verify(rc: &RunConfig, ov: &Overrides) -> Result<VerifyReport, CliError> {
    let s = solve(rc, ov)?;
    let curve = if ov.inject_phi0_error {
        s.curve.with_phi0(0.5 * s.curve.phi0)
    } else {
        s.curve.clone()
    };
    let residual = ide_residual(&s.grid, &curve, &rc.claims);
    let fixed_point = fixed_point_residual(&s.grid, &rc.claims)?;
    let smoothness = smoothness_probe(&s.grid, &rc.claims);

    let sim = rc.sim_config(ov);
    let mc_path = out_path(rc, ov, "mc.jsonl");
    let estimates = match read_matching_mc(&mc_path, &sim) {
        Some(e) => e,
        None => simulate(rc, ov, &sim)?,
    };
    let comparison = compare_mc(&curve, &estimates);

    let ide_ok = residual.max_norm <= rc.verify.ide_tol;
    let fp_ok = fixed_point.max_error <= rc.verify.fixed_point_tol;
    let report = VerifyReport {
        pass: ide_ok && fp_ok && comparison.all_pass,
        phi0: curve.phi0,
        phi0_injected_error: ov.inject_phi0_error,
        ide_residual: Check {
            pass: ide_ok,
            threshold: Some(rc.verify.ide_tol),
            report: ResidualSummary {
                max_norm: residual.max_norm,
                atom_locations: residual.atom_locations,
                excluded_nodes: residual.excluded_nodes,
                excluded_max: residual.excluded_max,
            },
        },
        fixed_point: Check {
            pass: fp_ok,
            threshold: Some(rc.verify.fixed_point_tol),
            report: fixed_point,
        },
        smoothness,
        monte_carlo: Check {
            pass: comparison.all_pass,
            threshold: None,
            report: comparison,
        },
    };
    if rc.has_format(Format::Json) {
        write_json(&out_path(rc, ov, "verify.json"), &report)?;
    }
    print_table(&report);
    if report.pass {
        Ok(report)
    } else {
        Err(CliError::Verification(failure_summary(&report)))
    }
}

fn failure_summary(r: &VerifyReport) -> String {
    let mut failed = Vec::new();
    if !r.ide_residual.pass {
        failed.push(format!(
            "ide residual {:.3e}",
            r.ide_residual.report.max_norm
        ));
    }
    if !r.fixed_point.pass {
        failed.push(format!(
            "fixed-point error {:.3e}",
            r.fixed_point.report.max_error
        ));
    }
    for row in r.monte_carlo.report.rows.iter().filter(|row| !row.pass) {
        failed.push(format!(
            "Psi({}) = {:.5} outside MC bracket [{:.5}, {:.5}] +/- 3 x {:.5}",
            row.u, row.analytic_psi, row.lower, row.upper, row.ci_half_width
        ));
    }
    failed.join("; ")
}

fn mark(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn print_table(r: &VerifyReport) {
    println!("{:<28} {:>14} {:>14}  result", "check", "value", "bound");
    println!(
        "{:<28} {:>14.4e} {:>14.1e}  {}",
        "ide residual",
        r.ide_residual.report.max_norm,
        r.ide_residual.threshold.unwrap_or(f64::NAN),
        mark(r.ide_residual.pass)
    );
    println!(
        "{:<28} {:>14.4e} {:>14.1e}  {}",
        "fixed-point error",
        r.fixed_point.report.max_error,
        r.fixed_point.threshold.unwrap_or(f64::NAN),
        mark(r.fixed_point.pass)
    );
    println!(
        "{:<28} {:>14.4e} {:>14}  info",
        "g' jump (off atoms)", r.smoothness.max_jump_off_atoms, "-"
    );
    for row in &r.monte_carlo.report.rows {
        println!(
            "{:<28} {:>14.6} {:>14}  {}",
            format!("Psi({}) vs MC", row.u),
            row.analytic_psi,
            format!("[{:.4},{:.4}]", row.lower, row.upper),
            mark(row.pass)
        );
    }
    println!("overall: {}", mark(r.pass));
}

pub fn cmd_report(rc: &RunConfig, ov: &Overrides) -> Result<PathBuf, CliError> {
    let s = solve(rc, ov)?;
    let asym = asymptotics_of(rc, &s)?;
    let path = out_path(rc, ov, "report.svg");
    write_file(
        &path,
        &report::render(&s.curve, &asym, s.grid.derived.gamma),
    )?;
    Ok(path)
}

pub fn load(config: &Path) -> Result<RunConfig, CliError> {
    RunConfig::load(config)
}
