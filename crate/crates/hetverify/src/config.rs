//! TOML experiment configuration.
//!
//! Every table is optional and falls back to desk-scale defaults; unknown
//! keys are rejected. A training table may name a `preset`
//! (`paper-stage1`, `paper-stage2` or `desk`) whose values individual keys
//! then override.
//!
//! ```toml
//! seed = 7
//! output_dir = "out"
//!
//! [data]
//! num_subjects = 60
//! domain_shift = 0.5
//!
//! [model]
//! hidden_dims = [32]
//! activation = "tanh"
//!
//! [pretrain]
//! preset = "desk"
//! total_steps = 400
//!
//! [finetune]
//! loss = "mps"
//! shared = false
//!
//! [eval]
//! k = 5
//! far_targets = [0.0001, 0.001]
//! ```

use std::path::{Path, PathBuf};

use hetverify_core::eval::CrossValConfig;
use hetverify_core::losses::MpsConfig;
use hetverify_core::model::{Activation, ModelConfig};
use hetverify_core::optim::{TrainConfig, DEFAULT_AM_MARGIN, DEFAULT_MOMENTUM, DEFAULT_MPS_MARGIN, DEFAULT_WEIGHT_DECAY};
use hetverify_core::synth::{random_domains, SynthConfig};
use hetverify_core::trainer::{FinetuneLoss, FinetuneOptions};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fsio;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub pretrain: PretrainSection,
    #[serde(default)]
    pub finetune: FinetuneSection,
    #[serde(default)]
    pub eval: EvalSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub num_subjects: usize,
    pub num_classes: usize,
    pub samples_per_class: usize,
    pub latent_dim: usize,
    pub input_dim: usize,
    /// Distance of the ID and selfie renderings from the source rendering.
    pub domain_shift: f64,
    pub nuisance_dim: usize,
    pub nuisance_sigma: f64,
    pub noise_sigma_source: f64,
    pub noise_sigma_id: f64,
    pub noise_sigma_selfie: f64,
    pub selfies_per_subject: (usize, usize),
    /// When set, `gen-data` also writes a second pair dataset whose selfie
    /// rendering is this far from the primary one.
    pub shifted_selfie_shift: Option<f64>,
    pub shifted_noise_sigma_selfie: f64,
    pub shifted_selfies_per_subject: (usize, usize),
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            num_subjects: 60,
            num_classes: 20,
            samples_per_class: 10,
            latent_dim: 8,
            input_dim: 16,
            domain_shift: 0.5,
            nuisance_dim: 0,
            nuisance_sigma: 0.0,
            noise_sigma_source: 0.1,
            noise_sigma_id: 0.12,
            noise_sigma_selfie: 0.06,
            selfies_per_subject: (1, 1),
            shifted_selfie_shift: None,
            shifted_noise_sigma_selfie: 0.09,
            shifted_selfies_per_subject: (1, 3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationName {
    Relu,
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub hidden_dims: Vec<usize>,
    /// Defaults to `data.latent_dim`.
    pub embedding_dim: Option<usize>,
    pub activation: ActivationName,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            hidden_dims: vec![32],
            embedding_dim: None,
            activation: ActivationName::Tanh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    PaperStage1,
    PaperStage2,
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum LossName {
    Mps,
    AmSoftmax,
    L2Softmax,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainSection {
    pub preset: Option<Preset>,
    pub batch_size: Option<usize>,
    pub total_steps: Option<u64>,
    pub lr_schedule: Option<Vec<(u64, f64)>>,
    pub momentum: Option<f64>,
    pub weight_decay: Option<f64>,
    pub log_every: Option<u64>,
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinetuneSection {
    pub preset: Option<Preset>,
    pub batch_size: Option<usize>,
    pub total_steps: Option<u64>,
    pub lr_schedule: Option<Vec<(u64, f64)>>,
    pub momentum: Option<f64>,
    pub weight_decay: Option<f64>,
    pub log_every: Option<u64>,
    pub loss: Option<LossName>,
    pub mps_margin: Option<f64>,
    /// Margin of the AM-Softmax fine-tuning head.
    pub am_margin: Option<f64>,
    pub shared: Option<bool>,
    pub train_size: Option<usize>,
    pub base_checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub k: usize,
    pub far_targets: Vec<f64>,
    pub roc_points: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            k: 5,
            far_targets: vec![0.0001, 0.001],
            roc_points: 200,
        }
    }
}

/// Fields shared by both training tables.
struct TrainKeys<'a> {
    preset: Option<Preset>,
    batch_size: Option<usize>,
    total_steps: Option<u64>,
    lr_schedule: &'a Option<Vec<(u64, f64)>>,
    momentum: Option<f64>,
    weight_decay: Option<f64>,
    log_every: Option<u64>,
}

impl TrainKeys<'_> {
    fn resolve(&self, desk: TrainConfig, seed: u64) -> Result<TrainConfig> {
        let mut cfg = match self.preset {
            Some(Preset::PaperStage1) => TrainConfig::paper_stage1(seed),
            Some(Preset::PaperStage2) => TrainConfig::paper_stage2(seed),
            Some(Preset::Desk) | None => desk,
        };
        cfg.rng_seed = seed;
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.total_steps {
            cfg.total_steps = v;
        }
        if let Some(v) = self.lr_schedule {
            cfg.lr_schedule = v.clone();
        }
        if let Some(v) = self.momentum {
            cfg.momentum = v;
        }
        if let Some(v) = self.weight_decay {
            cfg.weight_decay = v;
        }
        if let Some(v) = self.log_every {
            cfg.log_every = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn desk_pretrain(seed: u64) -> TrainConfig {
    TrainConfig {
        batch_size: 32,
        total_steps: 400,
        lr_schedule: vec![(0, 0.1), (300, 0.01)],
        momentum: DEFAULT_MOMENTUM,
        weight_decay: DEFAULT_WEIGHT_DECAY,
        rng_seed: seed,
        log_every: 20,
    }
}

fn desk_finetune(seed: u64) -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        total_steps: 100,
        lr_schedule: vec![(0, 0.01), (70, 0.001)],
        momentum: DEFAULT_MOMENTUM,
        weight_decay: DEFAULT_WEIGHT_DECAY,
        rng_seed: seed,
        log_every: 10,
    }
}

impl ExperimentConfig {
    /// Parses and validates; relative paths resolve against the current
    /// directory, and a configured base checkpoint must exist.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fsio::read(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::ConfigInvalid(format!("{} is not UTF-8", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        if let Some(p) = &self.finetune.base_checkpoint {
            if !p.is_file() {
                return Err(Error::ConfigInvalid(format!(
                    "finetune.base_checkpoint {} does not exist",
                    p.display()
                )));
            }
        }
        self.synth()?.validate()?;
        self.model_config().validate()?;
        self.pretrain_config()?;
        self.finetune_options(None, None)?;
        self.crossval_config(None)?;
        Ok(())
    }

    /// Primary pair data and source classes.
    pub fn synth(&self) -> Result<SynthConfig> {
        Ok(self.synth_pair()?.0)
    }

    /// Primary synthetic config and, when configured, the shifted one.
    pub fn synth_pair(&self) -> Result<(SynthConfig, Option<SynthConfig>)> {
        let d = &self.data;
        if d.latent_dim == 0 || d.input_dim < d.latent_dim {
            return Err(Error::ConfigInvalid(format!(
                "need 0 < latent_dim <= input_dim, got {} and {}",
                d.latent_dim, d.input_dim
            )));
        }
        if d.nuisance_dim > d.input_dim {
            return Err(Error::ConfigInvalid("nuisance_dim exceeds input_dim".into()));
        }
        let domains = random_domains(
            d.input_dim,
            d.latent_dim,
            d.domain_shift,
            d.shifted_selfie_shift.unwrap_or(0.0),
            d.nuisance_dim,
            self.seed,
        )?;
        let primary = SynthConfig {
            num_subjects: d.num_subjects,
            num_classes: d.num_classes,
            samples_per_class: d.samples_per_class,
            latent_dim: d.latent_dim,
            input_dim: d.input_dim,
            source_transform: domains.source,
            id_domain_transform: domains.id,
            selfie_domain_transform: domains.selfie,
            nuisance_transform: domains.nuisance,
            nuisance_sigma: d.nuisance_sigma,
            noise_sigma_source: d.noise_sigma_source,
            noise_sigma_id: d.noise_sigma_id,
            noise_sigma_selfie: d.noise_sigma_selfie,
            selfies_per_subject: d.selfies_per_subject,
            rng_seed: self.seed,
        };
        let shifted = d.shifted_selfie_shift.map(|_| {
            let mut s = primary.clone();
            s.rng_seed = self.seed.wrapping_add(1000);
            s.selfie_domain_transform = domains.shifted_selfie.clone();
            s.noise_sigma_selfie = d.shifted_noise_sigma_selfie;
            s.selfies_per_subject = d.shifted_selfies_per_subject;
            s
        });
        if let Some(s) = &shifted {
            s.validate()?;
        }
        Ok((primary, shifted))
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            input_dim: self.data.input_dim,
            hidden_dims: self.model.hidden_dims.clone(),
            embedding_dim: self.model.embedding_dim.unwrap_or(self.data.latent_dim),
            activation: match self.model.activation {
                ActivationName::Relu => Activation::Relu,
                ActivationName::Tanh => Activation::Tanh,
            },
            init_seed: self.seed,
        }
    }

    pub fn pretrain_config(&self) -> Result<TrainConfig> {
        let p = &self.pretrain;
        TrainKeys {
            preset: p.preset,
            batch_size: p.batch_size,
            total_steps: p.total_steps,
            lr_schedule: &p.lr_schedule,
            momentum: p.momentum,
            weight_decay: p.weight_decay,
            log_every: p.log_every,
        }
        .resolve(desk_pretrain(self.seed), self.seed)
    }

    pub fn pretrain_margin(&self) -> f64 {
        self.pretrain.margin.unwrap_or(DEFAULT_AM_MARGIN)
    }

    /// Fine-tuning options; `loss` and `shared` override the config file.
    pub fn finetune_options(&self, loss: Option<LossName>, shared: Option<bool>) -> Result<FinetuneOptions> {
        let f = &self.finetune;
        let train = TrainKeys {
            preset: f.preset,
            batch_size: f.batch_size,
            total_steps: f.total_steps,
            lr_schedule: &f.lr_schedule,
            momentum: f.momentum,
            weight_decay: f.weight_decay,
            log_every: f.log_every,
        }
        .resolve(desk_finetune(self.seed), self.seed)?;
        let loss = match loss.or(f.loss).unwrap_or(LossName::Mps) {
            LossName::Mps => FinetuneLoss::Mps(MpsConfig::new(f.mps_margin.unwrap_or(DEFAULT_MPS_MARGIN))?),
            LossName::AmSoftmax => FinetuneLoss::AmSoftmax {
                margin: f.am_margin.unwrap_or(DEFAULT_AM_MARGIN),
            },
            LossName::L2Softmax => FinetuneLoss::L2Softmax,
        };
        Ok(FinetuneOptions {
            train,
            loss,
            share_weights: shared.or(f.shared).unwrap_or(false),
            freeze_prefix: 0,
        })
    }

    pub fn crossval_config(&self, train_size: Option<usize>) -> Result<CrossValConfig> {
        let e = &self.eval;
        if e.k < 2 {
            return Err(Error::ConfigInvalid(format!("eval.k must be >= 2, got {}", e.k)));
        }
        if e.far_targets.is_empty() || e.far_targets.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(Error::ConfigInvalid("eval.far_targets must lie in (0, 1]".into()));
        }
        if e.roc_points < 2 {
            return Err(Error::ConfigInvalid("eval.roc_points must be >= 2".into()));
        }
        Ok(CrossValConfig {
            k: e.k,
            far_targets: e.far_targets.clone(),
            train_size: train_size.or(self.finetune.train_size),
            roc_points: e.roc_points,
        })
    }
}
