//! Run configuration: a sectioned TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use ruin_core::mc::SimConfig;
use ruin_core::{derive_params, ClaimDistribution, ModelParams, SolverConfig};
use serde::Deserialize;

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_PATHS: u64 = 100_000;
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub model: ModelParams,
    pub claims: ClaimDistribution,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Unset fields take the model-dependent defaults of [`SolverConfig::for_model`].
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub u_max: Option<f64>,
    pub n: Option<usize>,
    pub u0_init: Option<f64>,
    pub picard_tol: Option<f64>,
    pub picard_max_iter: Option<usize>,
    pub contraction_target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub u_values: Vec<f64>,
    pub n_paths: u64,
    pub horizon: Option<f64>,
    pub dt_max: Option<f64>,
    pub survival_barrier: Option<f64>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            u_values: vec![0.5, 1.0, 2.0, 5.0],
            n_paths: DEFAULT_PATHS,
            horizon: None,
            dt_max: None,
            survival_barrier: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Bound on the normalized residual of the integro-differential equation.
    pub ide_tol: f64,
    /// Bound on the relative re-substitution error of the Volterra form.
    pub fixed_point_tol: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            ide_tol: 1e-3,
            fixed_point_tol: 5e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            formats: vec![Format::Csv, Format::Json, Format::Svg],
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    pub grid: Option<usize>,
    pub umax: Option<f64>,
    pub workers: Option<usize>,
    pub inject_phi0_error: bool,
}

fn config_err(path: &Path, detail: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {detail}", path.display()))
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut rc: RunConfig = toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|s| format!(" (line {})", text[..s.start].lines().count().max(1)))
                .unwrap_or_default();
            config_err(path, format!("{}{at}", e.message().trim()))
        })?;
        rc.claims.normalize();
        rc.model
            .validate()
            .and_then(|_| rc.claims.validate())
            .map_err(|e| config_err(path, e))?;
        Ok(rc)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(path, e))?;
        Self::parse(&text, path)
    }

    pub fn has_format(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    pub fn out_dir(&self, ov: &Overrides) -> PathBuf {
        ov.out
            .clone()
            .or_else(|| self.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    /// Flag (or `RUIN_SEED`, resolved by the argument parser), then file, then default.
    pub fn seed(&self, ov: &Overrides) -> u64 {
        ov.seed.or(self.seed).unwrap_or(DEFAULT_SEED)
    }

    pub fn solver_config(&self, ov: &Overrides) -> SolverConfig {
        let dp = derive_params(&self.model);
        let base = SolverConfig::for_model(&dp, &self.claims);
        let s = &self.solver;
        SolverConfig {
            u_max: ov.umax.or(s.u_max).unwrap_or(base.u_max),
            n: ov.grid.or(s.n).unwrap_or(base.n),
            u0_init: s.u0_init.unwrap_or(base.u0_init),
            picard_tol: s.picard_tol.unwrap_or(base.picard_tol),
            picard_max_iter: s.picard_max_iter.unwrap_or(base.picard_max_iter),
            contraction_target: s.contraction_target.unwrap_or(base.contraction_target),
        }
    }

    pub fn sim_config(&self, ov: &Overrides) -> SimConfig {
        let s = &self.simulation;
        let base = SimConfig::defaults(
            &self.model,
            &self.claims,
            s.u_values.clone(),
            ov.paths.unwrap_or(s.n_paths),
            self.seed(ov),
        );
        let survival_barrier = s.survival_barrier.unwrap_or(base.survival_barrier);
        let horizon = s.horizon.unwrap_or_else(|| {
            if s.survival_barrier.is_some() {
                ruin_core::mc::default_horizon(&self.model, survival_barrier)
            } else {
                base.horizon
            }
        });
        SimConfig {
            horizon,
            dt_max: s.dt_max.unwrap_or(base.dt_max),
            survival_barrier,
            ..base
        }
    }
}
