//! Desk-scale experiment recipes on synthetic data: the training-strategy
//! ablation, the training-set-size sweep and the cross-dataset evaluation.
//!
//! The benchmark domain: identities live in a 16-dim latent space; source
//! images use one orthonormal rendering, while ID photos and selfies use two
//! different perturbations of it, plus a shared nuisance subspace and
//! domain-specific noise (ID photos noisier).

use alloc::vec;
use alloc::vec::Vec;

use crate::data::PairDataset;
use crate::error::Result;
use crate::eval::{cross_validate, evaluate, CrossValConfig, EvalReport};
use crate::losses::MpsConfig;
use crate::model::{clone_siblings, Activation, EmbeddingModel, ModelConfig};
use crate::optim::TrainConfig;
use crate::synth::{gen_pair_dataset, gen_source_dataset, random_domains, SynthConfig};
use crate::trainer::{finetune, init_head, pretrain, FinetuneLoss, FinetuneOptions};

/// FAR used for the benchmark orderings.
pub const BENCH_FAR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    /// Source classes and the primary pair dataset.
    pub synth: SynthConfig,
    /// Second pair dataset with a shifted selfie domain.
    pub shifted: SynthConfig,
    pub model: ModelConfig,
    pub pretrain: TrainConfig,
    pub pretrain_margin: f64,
    pub finetune: TrainConfig,
    pub mps_margin: f64,
    /// AM-Softmax margin when fine-tuning on subjects.
    pub finetune_am_margin: f64,
    pub k: usize,
    pub far_targets: Vec<f64>,
}

/// The six training strategies compared by the ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// MPS siblings trained from a random initialization.
    FromScratch,
    /// Pretrained base model, no fine-tuning.
    BaseModel,
    TransferL2Softmax,
    TransferAmSoftmax,
    TransferMpsShared,
    TransferMpsSibling,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::FromScratch,
        Strategy::BaseModel,
        Strategy::TransferL2Softmax,
        Strategy::TransferAmSoftmax,
        Strategy::TransferMpsShared,
        Strategy::TransferMpsSibling,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::FromScratch => "FS   MPS        sibling",
            Strategy::BaseModel => "BM   -          shared",
            Strategy::TransferL2Softmax => "TL   L2-Softmax sibling",
            Strategy::TransferAmSoftmax => "TL   AM-Softmax sibling",
            Strategy::TransferMpsShared => "TL   MPS        shared",
            Strategy::TransferMpsSibling => "TL   MPS        sibling",
        }
    }
}

impl Benchmark {
    /// 200 subjects, 16-dim latents, distinct ID/selfie renderings, 5 folds.
    pub fn standard(seed: u64) -> Result<Self> {
        let latent_dim = 16;
        let input_dim = 48;
        let domains = random_domains(input_dim, latent_dim, 0.9, 0.3, 8, seed)?;

        let synth = SynthConfig {
            num_subjects: 200,
            num_classes: 500,
            samples_per_class: 16,
            latent_dim,
            input_dim,
            source_transform: domains.source,
            id_domain_transform: domains.id,
            selfie_domain_transform: domains.selfie,
            nuisance_transform: domains.nuisance,
            nuisance_sigma: 0.5,
            noise_sigma_source: 0.1,
            noise_sigma_id: 0.12,
            noise_sigma_selfie: 0.06,
            selfies_per_subject: (1, 1),
            rng_seed: seed,
        };
        let mut shifted = synth.clone();
        shifted.rng_seed = seed.wrapping_add(1000);
        shifted.selfie_domain_transform = domains.shifted_selfie;
        shifted.noise_sigma_selfie = 0.09;
        shifted.selfies_per_subject = (1, 3);

        Ok(Self {
            synth,
            shifted,
            model: ModelConfig {
                input_dim,
                hidden_dims: vec![64],
                embedding_dim: latent_dim,
                activation: Activation::Tanh,
                init_seed: seed,
            },
            pretrain: TrainConfig {
                batch_size: 64,
                total_steps: 3000,
                lr_schedule: vec![(0, 0.1), (2000, 0.01)],
                momentum: 0.9,
                weight_decay: 5e-4,
                rng_seed: seed,
                log_every: 100,
            },
            pretrain_margin: 5.0,
            finetune: TrainConfig {
                batch_size: 64,
                total_steps: 600,
                lr_schedule: vec![(0, 0.005), (400, 0.0005)],
                momentum: 0.9,
                weight_decay: 5e-4,
                rng_seed: seed,
                log_every: 10,
            },
            mps_margin: 0.5,
            finetune_am_margin: 5.0,
            k: 5,
            far_targets: vec![0.001, BENCH_FAR],
        })
    }

    pub fn pair_dataset(&self) -> Result<PairDataset> {
        gen_pair_dataset(&self.synth)
    }

    pub fn shifted_dataset(&self) -> Result<PairDataset> {
        gen_pair_dataset(&self.shifted)
    }

    /// AM-Softmax pretraining on the source classes.
    pub fn pretrain_base(&self) -> Result<EmbeddingModel> {
        let source = gen_source_dataset(&self.synth)?;
        let model = EmbeddingModel::init(self.model.clone())?;
        let head = init_head(
            self.model.embedding_dim,
            self.synth.num_classes,
            self.pretrain_margin,
            self.pretrain.rng_seed,
        )?;
        Ok(pretrain(model, head, &source, &self.pretrain)?.0)
    }

    /// A randomly initialized network of the same architecture.
    pub fn scratch_model(&self) -> Result<EmbeddingModel> {
        let mut cfg = self.model.clone();
        cfg.init_seed = cfg.init_seed.wrapping_add(1);
        EmbeddingModel::init(cfg)
    }

    pub fn finetune_options(&self, strategy: Strategy) -> FinetuneOptions {
        let mps = FinetuneLoss::Mps(MpsConfig {
            margin: self.mps_margin,
        });
        let (loss, share_weights, steps) = match strategy {
            Strategy::FromScratch | Strategy::TransferMpsSibling => (mps, false, self.finetune.total_steps),
            Strategy::TransferMpsShared => (mps, true, self.finetune.total_steps),
            Strategy::BaseModel => (mps, true, 0),
            Strategy::TransferL2Softmax => (FinetuneLoss::L2Softmax, false, self.finetune.total_steps),
            Strategy::TransferAmSoftmax => (
                FinetuneLoss::AmSoftmax {
                    margin: self.finetune_am_margin,
                },
                false,
                self.finetune.total_steps,
            ),
        };
        let mut train = self.finetune.clone();
        train.total_steps = steps;
        FinetuneOptions {
            train,
            loss,
            share_weights,
            freeze_prefix: 0,
        }
    }

    pub fn crossval_config(&self, train_size: Option<usize>) -> CrossValConfig {
        CrossValConfig {
            k: self.k,
            far_targets: self.far_targets.clone(),
            train_size,
            roc_points: 200,
        }
    }

    /// Cross-validated report for one strategy.
    pub fn run_strategy(
        &self,
        strategy: Strategy,
        base: &EmbeddingModel,
        scratch: &EmbeddingModel,
        dataset: &PairDataset,
    ) -> Result<EvalReport> {
        let start = if strategy == Strategy::FromScratch { scratch } else { base };
        cross_validate(
            dataset,
            start,
            &self.finetune_options(strategy),
            &self.crossval_config(None),
        )
    }

    /// All six strategies, in [`Strategy::ALL`] order.
    pub fn run_ablation(&self, base: &EmbeddingModel) -> Result<Vec<(Strategy, EvalReport)>> {
        let dataset = self.pair_dataset()?;
        let scratch = self.scratch_model()?;
        Strategy::ALL
            .iter()
            .map(|&s| Ok((s, self.run_strategy(s, base, &scratch, &dataset)?)))
            .collect()
    }

    /// Sibling MPS transfer trained on random subsets of each training split.
    pub fn run_size_sweep(&self, base: &EmbeddingModel, sizes: &[usize]) -> Result<Vec<(usize, EvalReport)>> {
        let dataset = self.pair_dataset()?;
        sizes
            .iter()
            .map(|&n| {
                // small subsets cap the batch at all available subjects
                let mut options = self.finetune_options(Strategy::TransferMpsSibling);
                options.train.batch_size = options.train.batch_size.min(2 * n);
                Ok((
                    n,
                    cross_validate(&dataset, base, &options, &self.crossval_config(Some(n)))?,
                ))
            })
            .collect()
    }

    /// Base model and siblings fine-tuned on the whole primary dataset, both
    /// evaluated on the shifted dataset (multi-selfie probes fused).
    pub fn run_cross_dataset(&self, base: &EmbeddingModel) -> Result<(EvalReport, EvalReport)> {
        let train = self.pair_dataset()?;
        let test = self.shifted_dataset()?;
        let (siblings, _) = finetune(base, &train, &self.finetune_options(Strategy::TransferMpsSibling))?;
        let base_report = evaluate(&test, &clone_siblings(base), &self.far_targets, 200)?;
        let tuned_report = evaluate(&test, &siblings, &self.far_targets, 200)?;
        Ok((base_report, tuned_report))
    }
}
