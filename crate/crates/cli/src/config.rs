//! Experiment configuration files.

use std::path::{Path, PathBuf};

use neuralchain::pinn::{MlpSpec, ProblemKind, ProblemSpec, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Reference-solver settings used for evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Grid points of the numerical reference.
    pub n: usize,
    /// Time step of the viscous solver; derived from the stability bounds when absent.
    #[serde(default)]
    pub dt: Option<f64>,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        // 2041 = 8·255 + 1 puts every evaluation point on a grid node.
        Self { n: 2041, dt: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    pub n_points: usize,
    pub time: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { n_points: 256, time: 0.3 }
    }
}

/// One experiment: problem, network, optimizer, reference and evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub output_dir: PathBuf,
    pub mlp: MlpSpec,
    pub train: TrainConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> CliResult<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        ProblemSpec::for_kind(self.problem)
    }

    /// Overrides both seeds.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.mlp.init_seed = seed;
        self.train.seed = seed;
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        self.mlp.validate()?;
        self.train.validate()?;
        self.problem_spec().validate()?;
        if self.reference.n < neuralchain::reference::MIN_GRID_POINTS {
            return Err(CliError::config(format!(
                "reference.n must be at least {}",
                neuralchain::reference::MIN_GRID_POINTS
            )));
        }
        if let Some(dt) = self.reference.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::config("reference.dt must be positive"));
            }
        }
        if self.evaluation.n_points < 2 {
            return Err(CliError::config("evaluation.n_points must be at least 2"));
        }
        let (t0, t1) = self.problem_spec().t_range;
        if !(t0..=t1).contains(&self.evaluation.time) {
            return Err(CliError::config(format!("evaluation.time must lie in [{t0}, {t1}]")));
        }
        Ok(())
    }
}
