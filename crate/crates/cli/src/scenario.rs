//! Scenario files.
//!
//! ```json
//! {
//!   "name": "cone fixture",
//!   "grid": { "n": 2, "N": 16 },
//!   "twist": {
//!     "chi0": [[-1.0, 0.0], [0.0, -0.8]],
//!     "psi": { "kind": "random", "amplitude": 0.2, "cutoff": 1 },
//!     "beta": 0.4
//!   },
//!   "seed": 11,
//!   "task": { "kind": "flow", "config": { "tol_residual": 1e-7 } }
//! }
//! ```
//!
//! Unknown keys are rejected everywhere. Relative file paths are resolved
//! against the directory of the scenario file.

use std::path::{Path, PathBuf};

use kjlab_core::flow::FlowConfig;
use kjlab_core::random::PotentialSampler;
use kjlab_core::snapshot::read_scalar;
use kjlab_core::{GridSpec, Herm, ScalarField, TwistData};
use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub grid: GridConfig,
    /// Required by every task except `verify`.
    #[serde(default)]
    pub twist: Option<TwistConfig>,
    #[serde(default)]
    pub seed: u64,
    pub task: TaskConfig,
    /// Output directory, overridden by `--out`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistConfig {
    /// Real part of the constant Hermitian matrix `chi_0`, row-major.
    pub chi0: Vec<Vec<f64>>,
    /// Imaginary part of `chi_0` (antisymmetric), if any.
    #[serde(default)]
    pub chi0_imag: Option<Vec<Vec<f64>>>,
    /// Exact part: `chi = chi_0 + i ∂∂̄ psi`.
    #[serde(default)]
    pub psi: PotentialConfig,
    pub beta: f64,
    #[serde(default = "one")]
    pub alpha: f64,
}

fn one() -> f64 {
    1.0
}

/// A potential on the scenario grid.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// Band-limited Gaussian potential whose complex Hessian has spectral
    /// radius `amplitude`. Without an explicit seed one is derived from the
    /// scenario seed.
    Random {
        amplitude: f64,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        cutoff: Option<usize>,
    },
    /// A scalar `.field` snapshot.
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskConfig {
    Functionals(FunctionalsTask),
    Flow(FlowTask),
    Geodesic(GeodesicTask),
    Verify(VerifyTask),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    Functionals,
    Flow,
    Geodesic,
    Verify,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Functionals => "functionals",
            TaskKind::Flow => "flow",
            TaskKind::Geodesic => "geodesic",
            TaskKind::Verify => "verify",
        }
    }
}

impl TaskConfig {
    pub fn kind(&self) -> TaskKind {
        match self {
            TaskConfig::Functionals(_) => TaskKind::Functionals,
            TaskConfig::Flow(_) => TaskKind::Flow,
            TaskConfig::Geodesic(_) => TaskKind::Geodesic,
            TaskConfig::Verify(_) => TaskKind::Verify,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalsTask {
    #[serde(default)]
    pub potentials: Vec<PotentialConfig>,
    /// Extra random potentials drawn from the scenario seed.
    #[serde(default)]
    pub random: usize,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Compare first variations with finite differences along a random
    /// direction at every potential.
    #[serde(default = "yes")]
    pub variations: bool,
    #[serde(default)]
    pub write_fields: bool,
}

fn default_amplitude() -> f64 {
    0.3
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowTask {
    #[serde(default)]
    pub start: PotentialConfig,
    #[serde(default)]
    pub config: FlowConfig,
    /// Compare the limit with the spectral solution (`n = 1` only).
    #[serde(default = "yes")]
    pub oracle: bool,
    #[serde(default)]
    pub write_snapshots: bool,
    #[serde(default)]
    pub ray: Option<RayConfig>,
}

/// Geodesic segments from a seed potential to flow snapshots.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayConfig {
    #[serde(default)]
    pub seed: PotentialConfig,
    /// Number of snapshots (evenly spaced over the recorded ones, ending at
    /// the last) that anchor a segment.
    #[serde(default = "default_targets")]
    pub targets: usize,
    #[serde(default = "default_segments")]
    pub segments: usize,
    #[serde(default = "default_geo_tol")]
    pub tol: f64,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
}

fn default_targets() -> usize {
    3
}

fn default_segments() -> usize {
    16
}

fn default_geo_tol() -> f64 {
    1e-9
}

fn default_residual_tol() -> f64 {
    1e-3
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicTask {
    pub phi0: PotentialConfig,
    pub phi1: PotentialConfig,
    #[serde(default = "default_segments")]
    pub segments: usize,
    /// Gradient-norm tolerance of the energy minimization.
    #[serde(default = "default_geo_tol")]
    pub tol: f64,
    /// Certification threshold for the geodesic-equation residual.
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    /// Also solve with swapped endpoints and compare distances.
    #[serde(default)]
    pub symmetry: bool,
    #[serde(default)]
    pub write_nodes: bool,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyTask {
    /// Overrides of the suite settings; missing keys keep the defaults.
    #[serde(default)]
    pub settings: Option<serde_json::Value>,
}

impl Scenario {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut s: Scenario =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        s.base_dir = base_dir.to_path_buf();
        s.grid()?;
        if s.twist.is_none() && s.task.kind() != TaskKind::Verify {
            return Err(CliError::Config(format!(
                "task {} needs a twist",
                s.task.kind().name()
            )));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.n, self.grid.size).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Seed of the `stream`-th derived random draw.
    pub fn derived_seed(&self, stream: u64) -> u64 {
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(stream)
    }

    pub fn potential(&self, p: &PotentialConfig, stream: u64) -> Result<ScalarField> {
        let grid = self.grid()?;
        match p {
            PotentialConfig::Zero => Ok(ScalarField::zeros(grid)),
            PotentialConfig::Constant { value } => Ok(ScalarField::constant(grid, *value)),
            PotentialConfig::Random {
                amplitude,
                seed,
                cutoff,
            } => {
                let mut sampler =
                    PotentialSampler::new(grid, seed.unwrap_or(self.derived_seed(stream)));
                if let Some(c) = cutoff {
                    sampler = sampler.with_cutoff(*c);
                }
                Ok(sampler.potential(*amplitude))
            }
            PotentialConfig::File { path } => {
                let full = self.base_dir.join(path);
                let f = read_scalar(&full)
                    .map_err(CliError::lab(format!("reading {}", full.display())))?;
                if f.grid() != grid {
                    return Err(CliError::Config(format!(
                        "{} is not on the scenario grid",
                        full.display()
                    )));
                }
                Ok(f)
            }
        }
    }

    pub fn twist(&self) -> Result<TwistData> {
        let cfg = self
            .twist
            .as_ref()
            .ok_or_else(|| CliError::Config("missing twist".into()))?;
        let n = self.grid.n;
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !square(&cfg.chi0) || !cfg.chi0_imag.as_ref().is_none_or(square) {
            return Err(CliError::Config(format!("chi0 must be {n}x{n}")));
        }
        let entries: Vec<Complex64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let im = cfg.chi0_imag.as_ref().map_or(0.0, |m| m[i][j]);
                Complex64::new(cfg.chi0[i][j], im)
            })
            .collect();
        let chi0 = Herm::from_row_major(n, &entries);
        if chi0.asymmetry() > 1e-12 {
            return Err(CliError::Config("chi0 is not Hermitian".into()));
        }
        let psi = self.potential(&cfg.psi, 0)?;
        TwistData::new(chi0, psi, cfg.beta, cfg.alpha).map_err(CliError::lab("building the twist"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario> {
        Scenario::from_json(text, Path::new("."))
    }

    const FLOW: &str = r#"{
        "grid": {"n": 1, "N": 16},
        "twist": {"chi0": [[-1.0]], "psi": {"kind": "random", "amplitude": 0.2}, "beta": 0.3},
        "seed": 5,
        "task": {"kind": "flow", "config": {"max_steps": 10}}
    }"#;

    #[test]
    fn parses_flow_scenario() {
        let s = parse(FLOW).unwrap();
        assert_eq!(s.task.kind(), TaskKind::Flow);
        let TaskConfig::Flow(f) = &s.task else {
            unreachable!()
        };
        assert_eq!(f.config.max_steps, 10);
        assert_eq!(f.start, PotentialConfig::Zero);
        let t = s.twist().unwrap();
        assert_eq!(t.beta(), 0.3);
        assert_eq!(t.alpha(), 1.0);
        // The derived seed makes the twist reproducible.
        assert_eq!(s.twist().unwrap().psi(), t.psi());
    }

    #[test]
    fn rejects_unknown_keys() {
        for bad in [
            FLOW.replace("\"seed\": 5", "\"seed\": 5, \"colour\": 1"),
            FLOW.replace("\"max_steps\"", "\"max_stepz\""),
            FLOW.replace("\"beta\": 0.3", "\"beta\": 0.3, \"gamma\": 1"),
            FLOW.replace("\"amplitude\": 0.2", "\"amplitude\": 0.2, \"sigma\": 1"),
            FLOW.replace("\"kind\": \"flow\",", "\"kind\": \"flow\", \"extra\": 1,"),
        ] {
            assert!(matches!(parse(&bad), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn rejects_bad_grid_and_chi() {
        assert!(parse(&FLOW.replace("\"N\": 16", "\"N\": 12")).is_err());
        let s = parse(&FLOW.replace("[[-1.0]]", "[[-1.0, 0.0]]")).unwrap();
        assert!(matches!(s.twist(), Err(CliError::Config(_))));
        let missing = r#"{"grid": {"n": 1, "N": 16}, "task": {"kind": "flow"}}"#;
        assert!(parse(missing).is_err());
        let verify = r#"{"grid": {"n": 1, "N": 16}, "task": {"kind": "verify"}}"#;
        assert!(parse(verify).is_ok());
    }
}
