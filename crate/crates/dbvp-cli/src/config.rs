//! Experiment files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use dbvp_core::linalg::{c, CMat};
use dbvp_core::{BcRecipe, BoundaryCondition, BoundarySpectrum, EigenLine, SigmaAction};
use dbvp_modes::geometry::Shape;
use dbvp_modes::{Exec, Geometry, MultTable, SolverOptions};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub conditions: Vec<String>,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub params: CheckParams,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
pub enum GeometryConfig {
    Disk {
        cutoff: f64,
    },
    Cap {
        n: usize,
        r: f64,
        cutoff: f64,
        /// Boundary multiplicities per level; the built-in table otherwise.
        mult: Option<Vec<usize>>,
    },
    Horn {
        n: usize,
        cutoff: f64,
    },
    Cylinder {
        length: f64,
        cutoff: f64,
        fiber: FiberConfig,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    /// Spectrum JSON as written by `BoundarySpectrum::to_json`.
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub lines: Vec<LineConfig>,
    /// `standard` pairs kernel vectors; `i` acts as `i` on the kernel.
    #[serde(default = "standard")]
    pub kernel_sigma: String,
}

fn standard() -> String {
    "standard".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    pub lambda: f64,
    pub mult: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub grid_n: usize,
    pub rank_tol: f64,
    pub conv_tol: f64,
    /// Eigenvalues are reported in `[−window, window]`.
    pub window: f64,
    pub exec: Exec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverConfig { grid_n: d.grid_n, rank_tol: d.rank_tol, conv_tol: d.conv_tol, window: 4.0, exec: d.exec }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckParams {
    /// Largest `k` in the kernel ladder.
    pub ladder_max: usize,
    /// `(a, b)` cuts for the gaps shift.
    pub shifts: Vec<[f64; 2]>,
    /// Recipe pairs `B₁ ⊆ B₂`.
    pub nested: Vec<[String; 2]>,
    /// Chirality signs per boundary component; all `+1` when empty.
    pub signs: Vec<i32>,
    pub profiles: usize,
    pub seed: u64,
}

impl Default for CheckParams {
    fn default() -> Self {
        CheckParams { ladder_max: 8, shifts: vec![], nested: vec![], signs: vec![], profiles: 20, seed: 0 }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

pub const CHECKS: [&str; 11] = [
    "ladder",
    "gaps_shift",
    "agranovich_dynin",
    "offset",
    "splitting",
    "cobordism",
    "homotopy",
    "selfadjoint_index",
    "gap",
    "identities",
    "killing",
];

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub grid_n: Option<usize>,
    pub cutoff: Option<f64>,
    pub rank_tol: Option<f64>,
    pub checks: Vec<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        // relative fibre files are resolved against the config
        if let GeometryConfig::Cylinder { fiber, .. } = &mut cfg.geometry {
            if let (Some(f), Some(dir)) = (&fiber.file, path.parent()) {
                if f.is_relative() {
                    fiber.file = Some(dir.join(f));
                }
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.grid_n {
            self.solver.grid_n = n;
        }
        if let Some(t) = o.rank_tol {
            self.solver.rank_tol = t;
        }
        if let Some(cut) = o.cutoff {
            match &mut self.geometry {
                GeometryConfig::Disk { cutoff }
                | GeometryConfig::Cap { cutoff, .. }
                | GeometryConfig::Horn { cutoff, .. }
                | GeometryConfig::Cylinder { cutoff, .. } => *cutoff = cut,
            }
        }
        if !o.checks.is_empty() {
            self.checks = o.checks.clone();
        }
    }

    /// Rejects what cannot be run: non-positive tolerances, unknown checks
    /// or recipes, and configs that request nothing.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let s = &self.solver;
        for (name, v) in [("rank_tol", s.rank_tol), ("conv_tol", s.conv_tol), ("window", s.window)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("solver.{name} must be positive, got {v}"));
            }
        }
        if self.conditions.is_empty() && self.checks.is_empty() {
            return bad("nothing to do: no conditions and no checks".into());
        }
        if let Some(c) = self.checks.iter().find(|c| !CHECKS.contains(&c.as_str())) {
            return bad(format!("unknown check {c:?}; known: {}", CHECKS.join(", ")));
        }
        for r in self.conditions.iter().chain(self.params.nested.iter().flatten()) {
            r.parse::<BcRecipe>().map_err(|e| CliError::Config(e.to_string()))?;
        }
        self.geometry()?.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        let s = &self.solver;
        SolverOptions { grid_n: s.grid_n, rank_tol: s.rank_tol, conv_tol: s.conv_tol, exec: s.exec, check_convergence: true }
    }

    pub fn geometry(&self) -> Result<Geometry, CliError> {
        Ok(match &self.geometry {
            GeometryConfig::Disk { cutoff } => Geometry::disk(*cutoff),
            GeometryConfig::Cap { n, r, cutoff, mult } => Geometry {
                shape: Shape::WarpedCap {
                    n: *n,
                    r: *r,
                    mult: mult.clone().map(MultTable::Custom).unwrap_or(MultTable::Default),
                },
                cutoff: *cutoff,
            },
            GeometryConfig::Horn { n, cutoff } => Geometry::horn(*n, *cutoff),
            GeometryConfig::Cylinder { length, cutoff, fiber } => Geometry::cylinder(*length, fiber.build()?, *cutoff),
        })
    }

    pub fn condition(&self, spec: &Arc<BoundarySpectrum>, recipe: &str) -> Result<BoundaryCondition, CliError> {
        let r: BcRecipe = recipe.parse().map_err(|e: dbvp_core::ConditionError| CliError::Config(e.to_string()))?;
        BoundaryCondition::build(spec.clone(), &r).map_err(|e| CliError::Config(format!("{recipe}: {e}")))
    }
}

impl FiberConfig {
    fn build(&self) -> Result<Arc<BoundarySpectrum>, CliError> {
        if let Some(f) = &self.file {
            let text = std::fs::read_to_string(f).map_err(|e| CliError::Io(format!("{}: {e}", f.display())))?;
            let spec = BoundarySpectrum::from_json_allowing_odd_kernel(&text).map_err(|e| CliError::Config(e.to_string()))?;
            return Ok(Arc::new(spec));
        }
        if self.lines.is_empty() {
            return Err(CliError::Config("fiber needs lines or a file".into()));
        }
        let lines: Vec<EigenLine> = self
            .lines
            .iter()
            .enumerate()
            .map(|(i, l)| EigenLine { id: i as u32, lambda: l.lambda, mult: l.mult, component: 0 })
            .collect();
        let mut sigma = SigmaAction::standard(&lines).map_err(|e| CliError::Config(e.to_string()))?;
        match self.kernel_sigma.as_str() {
            "standard" => {}
            "i" => {
                let k = sigma.kernel.nrows();
                sigma.kernel = CMat::identity(k, k) * c(0.0, 1.0);
            }
            other => return Err(CliError::Config(format!("kernel_sigma must be standard or i, got {other:?}"))),
        }
        let spec = BoundarySpectrum::new_allowing_odd_kernel(lines, sigma).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Arc::new(spec))
    }
}
