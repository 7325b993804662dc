//! Experiment configuration files (TOML).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tvfcgcg::fcgcg::{InsertionMode, SolverOptions};
use tvfcgcg::mesh::{generate_square_mesh, TriMesh, MAX_JITTER};
use tvfcgcg::pde::{ControlSource, PdeProblem, PdeVariant, TargetSpec};
use tvfcgcg::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mesh: MeshConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub n: usize,
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Elliptic,
    Parabolic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub variant: Variant,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// `zero`, `indicator cx cy w h`, `forward-of phantom|<file>` or
    /// `file <file>`; relative paths are taken from the config's directory.
    #[serde(with = "text")]
    pub y_d: TargetSpec,
    /// Final time of the parabolic problem.
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    /// Number of implicit Euler steps.
    #[serde(rename = "N", default = "default_steps")]
    pub steps: usize,
    /// Constrain the coefficient of Ω to be nonnegative.
    #[serde(default)]
    pub nonneg_omega: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub mode: InsertionMode,
    #[serde(default)]
    pub include_omega: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "yes")]
    pub emit_fields: bool,
    /// Record wall-clock times in the trace. Turn off for byte-identical
    /// reruns.
    #[serde(default = "yes")]
    pub wall_time: bool,
}

fn default_alpha() -> f64 {
    1e-4
}
fn default_horizon() -> f64 {
    0.02
}
fn default_steps() -> usize {
    9
}
fn default_tolerance() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    1000
}
fn default_directory() -> PathBuf {
    PathBuf::from("runs/latest")
}
fn yes() -> bool {
    true
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: default_tolerance(),
            max_iter: default_max_iter(),
            mode: InsertionMode::default(),
            include_omega: false,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            emit_fields: true,
            wall_time: true,
        }
    }
}

mod text {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(value)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Canonical text form: every key present, fixed order.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: String| Err(Error::Config(format!("{key}: {why}")));
        if self.mesh.n == 0 {
            return bad("mesh.n", "must be >= 1".into());
        }
        if !(0.0..=MAX_JITTER).contains(&self.mesh.jitter) {
            return bad(
                "mesh.jitter",
                format!("must lie in [0, {MAX_JITTER}], got {}", self.mesh.jitter),
            );
        }
        if !(self.problem.alpha > 0.0 && self.problem.alpha.is_finite()) {
            return bad(
                "problem.alpha",
                format!("must be positive, got {}", self.problem.alpha),
            );
        }
        if !(self.problem.horizon > 0.0 && self.problem.horizon.is_finite()) {
            return bad(
                "problem.T",
                format!("must be positive, got {}", self.problem.horizon),
            );
        }
        if self.problem.steps == 0 {
            return bad("problem.N", "must be >= 1".into());
        }
        if !(self.solver.tolerance > 0.0) {
            return bad(
                "solver.tolerance",
                format!("must be positive, got {}", self.solver.tolerance),
            );
        }
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<TriMesh> {
        generate_square_mesh(self.mesh.n, self.mesh.jitter, self.mesh.seed)
    }

    /// Assembles the problem and its target; relative file names in `y_d`
    /// resolve against `base_dir`.
    pub fn build_problem(&self, mesh: TriMesh, base_dir: &Path) -> Result<PdeProblem> {
        let variant = match self.problem.variant {
            Variant::Elliptic => PdeVariant::Elliptic,
            Variant::Parabolic => PdeVariant::Parabolic {
                horizon: self.problem.horizon,
                steps: self.problem.steps,
            },
        };
        let mut problem = PdeProblem::new(mesh, variant, self.problem.alpha)?
            .with_include_omega(self.solver.include_omega)
            .with_nonneg(self.problem.nonneg_omega);
        let rebase = |p: &PathBuf| {
            if p.is_relative() {
                base_dir.join(p)
            } else {
                p.clone()
            }
        };
        let spec = match &self.problem.y_d {
            TargetSpec::File(p) => TargetSpec::File(rebase(p)),
            TargetSpec::ForwardOf(ControlSource::File(p)) => {
                TargetSpec::ForwardOf(ControlSource::File(rebase(p)))
            }
            other => other.clone(),
        };
        problem.set_target_spec(&spec)?;
        Ok(problem)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tolerance: self.solver.tolerance,
            max_iter: self.solver.max_iter,
            mode: self.solver.mode,
            wall_time: self.output.wall_time,
            ..SolverOptions::default()
        }
    }
}
