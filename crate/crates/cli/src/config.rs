//! Run configuration: one TOML file, unknown keys rejected.

use std::path::PathBuf;

use anyhow::{bail, Result};
use holeq_core::envelope::SolveOptions;
use holeq_core::equilibrium::FixedPointOptions;
use holeq_core::validation::ValidationOptions;
use holeq_core::{DomainSpec, SolverKind, SurfaceGrid, SurfaceModel};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: SurfaceModel,
    pub resolution: usize,
    /// Worker threads; 0 lets the pool pick.
    pub threads: usize,
    pub domain: DomainSpec,
    pub solver: SolverConfig,
    pub montecarlo: MonteCarloConfig,
    pub validate: ValidateConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: SurfaceModel::Sphere,
            resolution: 128,
            threads: 0,
            domain: DomainSpec::Disk { r: 1.0 },
            solver: SolverConfig::default(),
            montecarlo: MonteCarloConfig::default(),
            validate: ValidateConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    FixedPoint,
    FrankWolfe,
}

impl From<SolverChoice> for SolverKind {
    fn from(c: SolverChoice) -> Self {
        match c {
            SolverChoice::FixedPoint => SolverKind::FixedPoint,
            SolverChoice::FrankWolfe => SolverKind::FrankWolfe,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub kind: SolverChoice,
    pub fw_iters: usize,
    pub max_outer: usize,
    /// Fixed-point stopping gap; half a mesh width when absent.
    pub gap_tol: Option<f64>,
    pub envelope_tol: f64,
    pub sor: f64,
    pub max_sweeps: usize,
    pub active_set: bool,
    pub torus_terms: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let e = SolveOptions::default();
        SolverConfig {
            kind: SolverChoice::FixedPoint,
            fw_iters: 20_000,
            max_outer: 30,
            gap_tol: None,
            envelope_tol: e.tol,
            sor: e.sor,
            max_sweeps: e.max_sweeps,
            active_set: e.active_set,
            torus_terms: 16,
        }
    }
}

impl SolverConfig {
    pub fn envelope(&self) -> SolveOptions {
        SolveOptions {
            max_sweeps: self.max_sweeps,
            tol: self.envelope_tol,
            sor: self.sor,
            active_set: self.active_set,
            ..SolveOptions::default()
        }
    }

    pub fn fixed_point(&self, grid: &SurfaceGrid) -> FixedPointOptions {
        let base = FixedPointOptions::for_grid(grid);
        FixedPointOptions {
            max_outer: self.max_outer,
            gap_tol: self.gap_tol.unwrap_or(base.gap_tol),
            envelope: self.envelope(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub degrees: Vec<usize>,
    pub budget: u64,
    pub seed: u64,
    /// Zero sets written per degree.
    pub keep: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        let v = ValidationOptions::default();
        MonteCarloConfig { degrees: v.mc_degrees, budget: v.mc_budget, seed: v.seed, keep: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    pub fine_resolution: usize,
    pub montecarlo: bool,
    /// Test hook: anything but 1 mis-scales ω in the kernel checks.
    pub omega_scale: f64,
    pub only: Vec<u8>,
    /// Restrict to one model.
    pub model: Option<SurfaceModel>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        let v = ValidationOptions::default();
        ValidateConfig {
            fine_resolution: v.fine_resolution,
            montecarlo: v.montecarlo,
            omega_scale: v.omega_scale,
            only: v.only,
            model: v.model,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Range checks that do not need a grid.
    pub fn check(&self) -> Result<()> {
        if self.resolution < 4 || self.resolution % 4 != 0 {
            bail!("resolution must be a multiple of 4 and at least 4, got {}", self.resolution);
        }
        let s = &self.solver;
        if !(s.sor > 0.0 && s.sor < 2.0) {
            bail!("solver.sor must lie in (0, 2), got {}", s.sor);
        }
        if !(s.envelope_tol > 0.0) || s.gap_tol.is_some_and(|g| !(g > 0.0)) {
            bail!("solver tolerances must be positive");
        }
        if s.max_outer == 0 || s.max_sweeps == 0 {
            bail!("solver.max_outer and solver.max_sweeps must be positive");
        }
        let m = &self.montecarlo;
        if m.degrees.is_empty() || m.degrees.contains(&0) {
            bail!("montecarlo.degrees must be a nonempty list of positive degrees");
        }
        if m.budget == 0 {
            bail!("montecarlo.budget must be positive");
        }
        let v = &self.validate;
        if v.fine_resolution < 4 || v.fine_resolution % 4 != 0 {
            bail!("validate.fine_resolution must be a multiple of 4, got {}", v.fine_resolution);
        }
        if !(v.omega_scale > 0.0) {
            bail!("validate.omega_scale must be positive");
        }
        if let Some(bad) = v.only.iter().find(|c| !(1..=12).contains(*c)) {
            bail!("validate.only lists unknown criterion {bad}");
        }
        Ok(())
    }

    pub fn validation(&self) -> ValidationOptions {
        ValidationOptions {
            resolution: self.resolution,
            fine_resolution: self.validate.fine_resolution,
            fw_iters: self.solver.fw_iters,
            model: self.validate.model,
            omega_scale: self.validate.omega_scale,
            montecarlo: self.validate.montecarlo,
            mc_budget: self.montecarlo.budget,
            mc_degrees: self.montecarlo.degrees.clone(),
            seed: self.montecarlo.seed,
            only: self.validate.only.clone(),
        }
    }
}
