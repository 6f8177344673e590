//! Declarative run configuration (TOML).

use std::path::{Path, PathBuf};

use rfmp::flowmatch::PathKind;
use rfmp::metrics::Pairing;
use rfmp::odeint::SolverConfig;
use rfmp::policy::{LrSchedule, PolicyConfig};
use rfmp::ManifoldKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub policy: PolicyOverrides,
    pub rollout: RolloutConfig,
    pub eval: EvalConfig,
    pub flow: FlowConfig,
    pub ablation: AblationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out_dir: PathBuf::from("run"),
            dataset: DatasetConfig::default(),
            policy: PolicyOverrides::default(),
            rollout: RolloutConfig::default(),
            eval: EvalConfig::default(),
            flow: FlowConfig::default(),
            ablation: AblationConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synth,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldChoice {
    Euclidean,
    Sphere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub source: DataSource,
    /// Letter for synthesis: `S`, `W`, `J`, `L`, or `L_mirrored_pair`.
    pub shape: String,
    pub num_demos: usize,
    pub demo_len: usize,
    pub noise: f64,
    /// Raw 2-D CSV to ingest when `source = "csv"`.
    pub path: Option<PathBuf>,
    pub manifold: ManifoldChoice,
    pub tangent_radius: f64,
    pub split: [f64; 3],
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            source: DataSource::Synth,
            shape: "S".into(),
            num_demos: 7,
            demo_len: 200,
            noise: 0.1,
            path: None,
            manifold: ManifoldChoice::Euclidean,
            tangent_radius: 0.8,
            split: [0.8, 0.1, 0.1],
        }
    }
}

/// Policy settings; anything left out takes the manifold's default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyOverrides {
    pub horizon: Option<usize>,
    pub execute: Option<usize>,
    pub path: Option<PathKind>,
    pub base_sigma: Option<f64>,
    pub solver: Option<SolverConfig>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub lr_schedule: Option<LrSchedule>,
    pub ema_decay: Option<f64>,
    pub context_window: Option<usize>,
}

impl PolicyOverrides {
    /// Without an explicit `execute`, an overridden horizon executes half of itself.
    pub fn resolve(&self, kind: ManifoldKind, seed: u64) -> Result<PolicyConfig, CliError> {
        let mut c = PolicyConfig::for_manifold(kind);
        c.seed = seed;
        if let Some(h) = self.horizon {
            c.horizon = h;
            c.execute = match self.execute {
                Some(e) => e,
                None if h % 2 == 0 => h / 2,
                None => {
                    return Err(CliError::Usage(format!(
                        "horizon {h} is odd; set policy.execute explicitly"
                    )))
                }
            };
        } else if let Some(e) = self.execute {
            c.execute = e;
        }
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        take!(path, base_sigma, solver, epochs, batch_size, lr, lr_schedule, ema_decay);
        c.context_window = self.context_window;
        c.validate(kind).map_err(CliError::from)?;
        Ok(c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    DemoStarts,
    Perturbed,
}

impl std::str::FromStr for InitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "demo_starts" => Ok(InitMode::DemoStarts),
            "perturbed" => Ok(InitMode::Perturbed),
            _ => Err(format!("unknown init mode `{s}` (expected demo_starts or perturbed)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RolloutConfig {
    pub init: InitMode,
    pub perturb_scale: f64,
    /// Total trajectory length, initial history included.
    pub num_steps: usize,
    /// Number of demonstration states used as the initial history.
    pub history: usize,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig {
            init: InitMode::DemoStarts,
            perturb_scale: 0.05,
            num_steps: 200,
            history: 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Defaults to `matched` for demo-start rollouts and `nearest` for perturbed ones.
    pub pairing: Option<Pairing>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub num_samples: usize,
    pub num_snapshots: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            num_samples: 16,
            num_snapshots: 11,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub horizons: Vec<usize>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig { horizons: vec![2, 4, 8] }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Schema(m) => CliError::Schema(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Value checks that do not depend on the dataset.
    pub fn check(&self) -> Result<(), CliError> {
        let d = &self.dataset;
        d.shape
            .parse::<rfmp::data::LetterShape>()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if d.source == DataSource::Csv && d.path.is_none() {
            return Err(CliError::Schema("dataset.path is required when dataset.source = \"csv\"".into()));
        }
        let sum: f64 = d.split.iter().sum();
        if d.split.iter().any(|f| *f < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(CliError::Schema("dataset.split must be nonnegative and sum to 1".into()));
        }
        if self.rollout.history < 2 {
            return Err(CliError::Schema("rollout.history must be at least 2".into()));
        }
        if self.rollout.num_steps <= self.rollout.history {
            return Err(CliError::Schema("rollout.num_steps must exceed rollout.history".into()));
        }
        if !(self.rollout.perturb_scale >= 0.0) {
            return Err(CliError::Schema("rollout.perturb_scale must be nonnegative".into()));
        }
        if self.ablation.horizons.is_empty() {
            return Err(CliError::Schema("ablation.horizons must not be empty".into()));
        }
        Ok(())
    }

    /// SHA-256 of the resolved configuration, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }

    pub fn pairing(&self) -> Pairing {
        self.eval.pairing.unwrap_or(match self.rollout.init {
            InitMode::DemoStarts => Pairing::Matched,
            InitMode::Perturbed => Pairing::Nearest,
        })
    }
}
