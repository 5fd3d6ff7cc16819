use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;
use crate::data::CsvOptions;
use crate::feedback::FeedbackConfig;
use crate::labelers::SolverMode;
use crate::online::Exp3SetConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DataSource {
    /// Two Gaussian clusters regenerated for every seed.
    Blobs {
        dim: usize,
        separation: f64,
        noise: f64,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
        class_a: u32,
        class_b: u32,
        #[serde(default)]
        pca_components: Option<usize>,
    },
    Csv {
        path: PathBuf,
        #[serde(default)]
        options: CsvOptions,
        class_a: u32,
        class_b: u32,
        #[serde(default)]
        pca_components: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelerKind {
    Harmonic,
    Delalleau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Number of evenly spaced σ values on `[σ_min, σ_max]`.
    pub sigma_points: usize,
    /// CG iteration counts to compare.
    pub iterations: Vec<usize>,
    /// Also evaluate the explicit-inverse solver.
    pub direct: bool,
    /// Also evaluate tolerance-mode CG at this relative residual.
    pub tolerance: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sigma_points: 61,
            iterations: vec![5, 10, 20],
            direct: true,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OnlineConfig {
    pub rounds: usize,
    /// Distinct instances; round `t` sees instance `t mod pool`.
    pub pool: usize,
    /// Domain and seed are taken from the experiment; the rest is used as is.
    pub exp3: Exp3SetConfig,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self {
            rounds: 200,
            pool: 10,
            exp3: Exp3SetConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub source: DataSource,
    /// Points per instance, labeled and unlabeled.
    pub n: usize,
    /// Labeled points per instance; `None` means `n/10`.
    pub labeled: Option<usize>,
    /// Mutual k-NN parameter; `None` builds the complete graph.
    pub k: Option<usize>,
    pub labeler: LabelerKind,
    /// `|Ũ|` for the Delalleau labeler.
    pub subset_size: usize,
    pub delalleau_lambda: f64,
    pub solver: SolverMode,
    pub feedback: FeedbackConfig,
    /// Number of seeded instances.
    pub subsets: usize,
    pub seed: u64,
    pub sweep: SweepConfig,
    pub online: OnlineConfig,
    /// Not part of the config hash.
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: "blobs".into(),
            source: DataSource::Blobs {
                dim: 2,
                separation: 3.0,
                noise: 1.0,
            },
            n: 100,
            labeled: None,
            k: Some(6),
            labeler: LabelerKind::Harmonic,
            subset_size: 50,
            delalleau_lambda: 1.4,
            solver: SolverMode::Cg { iterations: 20 },
            feedback: FeedbackConfig::default(),
            subsets: 10,
            seed: 0,
            sweep: SweepConfig::default(),
            online: OnlineConfig::default(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| ExperimentError::Json(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled.unwrap_or(self.n / 10)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let l = self.n_labeled();
        if !(2 <= l && l < self.n) {
            return bad(format!("need 2 ≤ |L| < n, got |L| = {l}, n = {}", self.n));
        }
        if self.k == Some(0) {
            return bad("k must be positive".into());
        }
        if self.labeler == LabelerKind::Delalleau {
            if self.subset_size == 0 || self.subset_size > self.n - l {
                return bad(format!(
                    "|Ũ| = {} must lie in [1, n − |L|] = [1, {}]",
                    self.subset_size,
                    self.n - l
                ));
            }
            if !(self.delalleau_lambda > 0.0) {
                return bad(format!("delalleau_lambda = {}", self.delalleau_lambda));
            }
        }
        self.feedback
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        if self.subsets == 0 {
            return bad("subsets must be at least 1".into());
        }
        if self.sweep.sigma_points < 2 {
            return bad("sweep needs at least 2 σ points".into());
        }
        if self.online.rounds == 0 || self.online.pool == 0 {
            return bad("online rounds and pool must be positive".into());
        }
        Ok(())
    }

    /// SHA-256 of the JSON encoding with `out_dir` cleared, first 16 hex digits.
    pub fn hash(&self) -> String {
        let canonical = Self {
            out_dir: None,
            ..self.clone()
        };
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    /// The configured solver with the CG iteration count replaced by `t`.
    pub fn with_iterations(&self, t: usize) -> Self {
        Self {
            solver: SolverMode::Cg { iterations: t },
            ..self.clone()
        }
    }

    pub fn exp3(&self) -> Exp3SetConfig {
        Exp3SetConfig {
            sigma_min: self.feedback.sigma_min,
            sigma_max: self.feedback.sigma_max,
            seed: self.seed,
            ..self.online.exp3
        }
    }
}
