//! Experiment configuration (TOML, versioned) and the shipped profiles.
//!
//! ```toml
//! version = 1
//! name = "quick"
//! output_dir = "runs/quick"
//! init_seed = 0            # the one init shared by every mask family
//! seeds = [1, 2]           # ordering seeds, consumed in pairs by the stability stage
//!
//! [dataset]
//! kind = "blobs"           # blobs | rings | idx
//! classes = 3
//! per_class = 200
//! dim = 2
//! spread = 1.0
//! seed = 7
//! val_fraction = 0.2
//! split_seed = 1
//!
//! [arch]
//! kind = "mlp"
//! layer_sizes = [2, 16, 16, 3]
//!
//! [train]
//! epochs = 30
//! batch_size = 16
//! learning_rate = 0.05
//! momentum = 0.9
//! ordering_seed = 0        # ordering of the pruning runs
//!
//! [prune]
//! rounds = 9
//! rate = 0.2
//! scope = "global"         # global | per_layer
//!
//! [distill]
//! ipc = 10
//! outer_steps = 200
//! inner_model_samples = 4
//! net_steps = 20
//! net_lr = 0.05
//! match_batch = 32
//! syn_lr = 0.1
//! init_mode = "real_sample"
//! seed = 0
//!
//! [analysis]               # every key optional
//! num_alphas = 21
//! stability_tolerance = 0.02
//! grid_resolution = [100, 100]
//! grid_padding = 0.25
//! landscape_seed = 1000    # ordering of the third reference model
//! hessian_method = "stochastic"
//! hessian_probes = 200
//! hessian_batch = 128
//! hessian_seed = 0
//! hessian_step = 1e-4      # exact_fd only
//! ```
//!
//! An `idx` dataset takes `images`, `labels`, optional `limit_per_class` and
//! `seed` in place of the generator keys.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_idx, make_blobs, make_rings, split, Dataset};
use crate::distill::DistillConfig;
use crate::hessian::HessianMethod;
use crate::nn::{ArchSpec, TrainConfig};
use crate::pruning::{PruneSchedule, PruneScope};
use crate::{digest, Error, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    Blobs {
        classes: usize,
        per_class: usize,
        dim: usize,
        spread: f64,
        seed: u64,
    },
    Rings {
        classes: usize,
        per_class: usize,
        noise: f64,
        seed: u64,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default)]
        limit_per_class: Option<usize>,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    #[serde(flatten)]
    pub source: DatasetSource,
    pub val_fraction: f64,
    #[serde(default)]
    pub split_seed: u64,
}

impl DatasetSpec {
    /// Generates or reads the data and splits it into `(train, val)`.
    /// Relative IDX paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<(Dataset, Dataset)> {
        let full = match &self.source {
            DatasetSource::Blobs {
                classes,
                per_class,
                dim,
                spread,
                seed,
            } => make_blobs(*classes, *per_class, *dim, *spread, *seed)?,
            DatasetSource::Rings {
                classes,
                per_class,
                noise,
                seed,
            } => make_rings(*classes, *per_class, *noise, *seed)?,
            DatasetSource::Idx {
                images,
                labels,
                limit_per_class,
                seed,
            } => load_idx(base.join(images), base.join(labels), *limit_per_class, *seed)?,
        };
        split(&full, self.val_fraction, self.split_seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillSpec {
    pub ipc: usize,
    #[serde(flatten)]
    pub config: DistillConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisSpec {
    pub num_alphas: usize,
    pub stability_tolerance: f64,
    pub grid_resolution: (usize, usize),
    pub grid_padding: f64,
    pub landscape_seed: u64,
    pub hessian_method: HessianMethod,
    pub hessian_probes: usize,
    pub hessian_batch: usize,
    pub hessian_seed: u64,
    pub hessian_step: f64,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            num_alphas: crate::stability::DEFAULT_NUM_ALPHAS,
            stability_tolerance: crate::stability::DEFAULT_TOLERANCE,
            grid_resolution: crate::landscape::DEFAULT_RESOLUTION,
            grid_padding: crate::landscape::DEFAULT_PADDING,
            landscape_seed: 1000,
            hessian_method: HessianMethod::Stochastic,
            hessian_probes: 200,
            hessian_batch: 128,
            hessian_seed: 0,
            hessian_step: crate::hessian::DEFAULT_EXACT_STEP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub version: u32,
    pub name: String,
    pub output_dir: PathBuf,
    pub init_seed: u64,
    pub seeds: Vec<u64>,
    pub dataset: DatasetSpec,
    pub arch: ArchSpec,
    pub train: TrainConfig,
    pub prune: PruneSchedule,
    pub distill: DistillSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    Quick,
    Full,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Profile::Quick),
            "full" => Ok(Profile::Full),
            other => Err(Error::InvalidConfig(format!("unknown profile `{other}` (quick | full)"))),
        }
    }
}

impl ExperimentConfig {
    /// Blobs and a small MLP; a few minutes on one core.
    pub fn quick() -> Self {
        Self {
            version: CONFIG_VERSION,
            name: "quick".into(),
            output_dir: "runs/quick".into(),
            init_seed: 0,
            seeds: vec![1, 2],
            dataset: DatasetSpec {
                source: DatasetSource::Blobs {
                    classes: 3,
                    per_class: 200,
                    dim: 2,
                    spread: 1.0,
                    seed: 7,
                },
                val_fraction: 0.2,
                split_seed: 1,
            },
            arch: ArchSpec::mlp(&[2, 16, 16, 3]),
            train: TrainConfig::default(),
            prune: PruneSchedule {
                rounds: 9,
                rate: 0.2,
                scope: PruneScope::Global,
            },
            distill: DistillSpec {
                ipc: 10,
                config: DistillConfig::default(),
            },
            analysis: AnalysisSpec::default(),
        }
    }

    /// MNIST subset (IDX files under `data/mnist`) and a two-block ConvNet.
    pub fn full() -> Self {
        Self {
            name: "full".into(),
            output_dir: "runs/full".into(),
            dataset: DatasetSpec {
                source: DatasetSource::Idx {
                    images: "data/mnist/train-images-idx3-ubyte".into(),
                    labels: "data/mnist/train-labels-idx1-ubyte".into(),
                    limit_per_class: Some(50),
                    seed: 0,
                },
                val_fraction: 0.2,
                split_seed: 1,
            },
            arch: ArchSpec::convnet((1, 28, 28), &[8, 16], 3, 10),
            train: TrainConfig {
                epochs: 15,
                batch_size: 32,
                learning_rate: 0.02,
                momentum: 0.9,
                ordering_seed: 0,
            },
            distill: DistillSpec {
                ipc: 10,
                config: DistillConfig {
                    outer_steps: 100,
                    inner_model_samples: 2,
                    ..DistillConfig::default()
                },
            },
            analysis: AnalysisSpec {
                grid_resolution: (25, 25),
                ..AnalysisSpec::default()
            },
            ..Self::quick()
        }
    }

    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Quick => Self::quick(),
            Profile::Full => Self::full(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Seed pairs for the stability stage: `(seeds[0], seeds[1])`, `(seeds[2], seeds[3])`, ...
    pub fn seed_pairs(&self) -> Vec<(u64, u64)> {
        self.seeds.chunks_exact(2).map(|p| (p[0], p[1])).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!("config version {} is not supported (expected {CONFIG_VERSION})", self.version));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("name `{}` must be non-empty and contain no path separators", self.name));
        }
        if self.seeds.len() < 2 || !self.seeds.len().is_multiple_of(2) {
            return bad(format!("seeds must hold a positive even number of entries, got {}", self.seeds.len()));
        }
        let distinct: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return bad("seeds must be distinct: paired orderings have to differ".into());
        }
        if distinct.contains(&self.analysis.landscape_seed) {
            return bad(format!(
                "landscape_seed {} must differ from the stability seeds",
                self.analysis.landscape_seed
            ));
        }
        self.arch.validate()?;
        self.train.validate()?;
        self.prune.validate()?;
        self.distill.config.validate()?;
        if self.distill.ipc == 0 {
            return bad("distill.ipc must be >= 1".into());
        }
        if self.train.batch_size > self.distill.ipc * self.arch.num_classes() {
            return bad(format!(
                "train.batch_size {} exceeds the synthetic set of {} rows",
                self.train.batch_size,
                self.distill.ipc * self.arch.num_classes()
            ));
        }
        if !(self.dataset.val_fraction > 0.0 && self.dataset.val_fraction < 1.0) {
            return bad(format!("dataset.val_fraction must lie in (0, 1), got {}", self.dataset.val_fraction));
        }
        let (dim, classes) = match &self.dataset.source {
            DatasetSource::Blobs { classes, dim, .. } => (Some(*dim), Some(*classes)),
            DatasetSource::Rings { classes, .. } => (Some(2), Some(*classes)),
            DatasetSource::Idx { .. } => (None, None),
        };
        if dim.is_some_and(|d| d != self.arch.input_dim()) || classes.is_some_and(|k| k != self.arch.num_classes()) {
            return bad(format!(
                "dataset (dim {dim:?}, classes {classes:?}) does not fit {}",
                self.arch.describe()
            ));
        }
        let a = &self.analysis;
        if a.num_alphas < 3 {
            return bad(format!("analysis.num_alphas must be >= 3, got {}", a.num_alphas));
        }
        if !(a.stability_tolerance >= 0.0) {
            return bad("analysis.stability_tolerance must be >= 0".into());
        }
        if a.grid_resolution.0 < 2 || a.grid_resolution.1 < 2 {
            return bad("analysis.grid_resolution must be at least [2, 2]".into());
        }
        if !(a.grid_padding >= 0.0 && a.grid_padding.is_finite()) {
            return bad("analysis.grid_padding must be >= 0".into());
        }
        if a.hessian_probes == 0 || a.hessian_batch == 0 {
            return bad("analysis.hessian_probes and hessian_batch must be >= 1".into());
        }
        if !(a.hessian_step > 0.0) {
            return bad("analysis.hessian_step must be > 0".into());
        }
        Ok(())
    }

    /// Hash of the parts of the config a stage's outputs depend on.
    pub fn stage_hash(&self, stage: Stage) -> String {
        let mut parts = vec![
            json(&self.dataset),
            json(&self.arch),
            format!("init_seed={}", self.init_seed),
        ];
        let with_prune = |parts: &mut Vec<String>| {
            parts.push(json(&self.train));
            parts.push(json(&self.prune));
        };
        match stage {
            Stage::Init => {}
            Stage::Distill => parts.push(json(&self.distill)),
            Stage::PruneImp => with_prune(&mut parts),
            Stage::PruneDistilled | Stage::Stability | Stage::Landscape | Stage::Hessian => {
                with_prune(&mut parts);
                parts.push(json(&self.distill));
            }
        }
        match stage {
            Stage::Stability => {
                parts.push(json(&self.seeds));
                parts.push(format!("alphas={}", self.analysis.num_alphas));
            }
            Stage::Landscape | Stage::Hessian => {
                parts.push(json(&self.seeds));
                parts.push(json(&self.analysis));
            }
            _ => {}
        }
        digest(parts.join("\n").as_bytes())
    }
}

fn json(value: &impl Serialize) -> String {
    serde_json::to_string(value).expect("config values serialize")
}

/// Pipeline stages, in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Init,
    Distill,
    PruneImp,
    PruneDistilled,
    Stability,
    Landscape,
    Hessian,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Init => "init",
            Stage::Distill => "distill",
            Stage::PruneImp => "prune_imp",
            Stage::PruneDistilled => "prune_distilled",
            Stage::Stability => "stability",
            Stage::Landscape => "landscape",
            Stage::Hessian => "hessian",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_validate_and_round_trip() {
        for cfg in [ExperimentConfig::quick(), ExperimentConfig::full()] {
            cfg.validate().unwrap();
            let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn documented_example_parses() {
        let doc = include_str!("config.rs");
        let example: String = doc
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").strip_prefix(' ').unwrap_or(""))
            .collect::<Vec<_>>()
            .join("\n");
        assert_eq!(ExperimentConfig::from_toml(&example).unwrap(), ExperimentConfig::quick());
    }

    #[test]
    fn rejects_bad_seeds() {
        let mut cfg = ExperimentConfig::quick();
        cfg.seeds = vec![1, 1];
        assert!(cfg.validate().is_err());
        cfg.seeds = vec![1, 2, 3];
        assert!(cfg.validate().is_err());
        cfg.seeds = vec![1, 1000];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_mismatched_dataset_and_unknown_version() {
        let mut cfg = ExperimentConfig::quick();
        cfg.arch = ArchSpec::mlp(&[3, 8, 3]);
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::quick();
        cfg.version = 7;
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_toml("version = 1").is_err());
    }

    #[test]
    fn stage_hashes_track_their_inputs() {
        let a = ExperimentConfig::quick();
        let mut b = a.clone();
        b.analysis.grid_resolution = (10, 10);
        assert_eq!(a.stage_hash(Stage::PruneImp), b.stage_hash(Stage::PruneImp));
        assert_eq!(a.stage_hash(Stage::Stability), b.stage_hash(Stage::Stability));
        assert_ne!(a.stage_hash(Stage::Landscape), b.stage_hash(Stage::Landscape));
        b.distill.ipc = 5;
        assert_eq!(a.stage_hash(Stage::PruneImp), b.stage_hash(Stage::PruneImp));
        assert_ne!(a.stage_hash(Stage::PruneDistilled), b.stage_hash(Stage::PruneDistilled));
    }
}
