//! Two-stage transfer pipeline: AM-Softmax pretraining of a base model on
//! labeled source data, then fine-tuning of sibling (or shared) networks on
//! ID/selfie pairs.
//!
//! Every run is a pure function of its inputs and `rng_seed`; per-sample
//! gradients are accumulated in batch order.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{sample_class_batch, sample_pair_batch, LabeledDataset, PairDataset};
use crate::error::{Error, Result};
use crate::losses::{
    am_softmax_forward, l2_softmax_forward, mps_forward, AmSoftmaxHead, LossOutput, MpsConfig,
    DEFAULT_INIT_SCALE,
};
use crate::model::{clone_siblings, EmbeddingModel, ForwardCache, ParamGrads, SiblingPair};
use crate::numerics::EmbeddingVector;
use crate::optim::{lr_at, sgd_step, OptimizerState, TrainConfig};

/// Learning-rate factor for the classifier weights `W*`, which start from a
/// random draw while the embedding network is already trained.
pub const HEAD_LR_MULTIPLIER: f64 = 10.0;

/// Learning-rate factor applied to `ln s` of a learnable-scale head. At the
/// full rate the scale collapses toward zero in the first steps, before the
/// features separate, and the features then stop receiving gradient.
pub const SCALE_LR_MULTIPLIER: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    /// Steps completed when the row was written.
    pub step: u64,
    pub lr: f64,
    /// Mean loss over the preceding `log_every` steps.
    pub loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossTrace {
    pub entries: Vec<TraceEntry>,
    /// Loss of every individual step.
    pub step_losses: Vec<f64>,
}

impl LossTrace {
    fn record(&mut self, step: u64, lr: f64, loss: f64, log_every: u64) {
        self.step_losses.push(loss);
        if (step + 1).is_multiple_of(log_every) {
            let window = &self.step_losses[self.step_losses.len() - log_every as usize..];
            self.entries.push(TraceEntry {
                step: step + 1,
                lr,
                loss: window.iter().sum::<f64>() / window.len() as f64,
            });
        }
    }

    /// Mean of `step_losses[range]`.
    pub fn mean_loss(&self, range: core::ops::Range<usize>) -> f64 {
        let w = &self.step_losses[range];
        w.iter().sum::<f64>() / w.len() as f64
    }
}

/// Loss used to fine-tune on pair data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FinetuneLoss {
    Mps(MpsConfig),
    /// Classification over training subjects with a fresh learnable-scale head.
    AmSoftmax { margin: f64 },
    /// Classification over training subjects, zero margin, fixed scale.
    L2Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneOptions {
    pub train: TrainConfig,
    pub loss: FinetuneLoss,
    /// Train one network for both domains instead of two siblings.
    pub share_weights: bool,
    /// Leading layers left untouched by the optimizer.
    pub freeze_prefix: usize,
}

impl FinetuneOptions {
    pub fn mps(train: TrainConfig, mps: MpsConfig) -> Self {
        Self {
            train,
            loss: FinetuneLoss::Mps(mps),
            share_weights: false,
            freeze_prefix: 0,
        }
    }
}

struct Learner {
    model: EmbeddingModel,
    state: OptimizerState,
    frozen_tensors: usize,
}

impl Learner {
    fn new(model: EmbeddingModel, freeze_prefix: usize) -> Result<Self> {
        if freeze_prefix > model.num_layers() {
            return Err(Error::ConfigInvalid(format!(
                "freeze_prefix {freeze_prefix} exceeds {} layers",
                model.num_layers()
            )));
        }
        let frozen_tensors = 2 * freeze_prefix;
        let state = OptimizerState::for_tensors(&model.tensors()[frozen_tensors..]);
        Ok(Self {
            model,
            state,
            frozen_tensors,
        })
    }

    fn step(&mut self, grads: &ParamGrads, lr: f64, config: &TrainConfig) -> Result<()> {
        let mut params = self.model.tensors_mut();
        let grads = grads.tensors();
        sgd_step(
            &mut params[self.frozen_tensors..],
            &grads[self.frozen_tensors..],
            &mut self.state,
            lr,
            config.momentum,
            config.weight_decay,
        )
    }
}

struct HeadLearner {
    head: AmSoftmaxHead,
    weight_state: OptimizerState,
    scale_state: OptimizerState,
}

impl HeadLearner {
    fn new(head: AmSoftmaxHead) -> Self {
        let weight_state = OptimizerState::for_tensors(&[head.weights().as_slice()]);
        let scale_state = OptimizerState::for_tensors(&[&[0.0]]);
        Self {
            head,
            weight_state,
            scale_state,
        }
    }

    /// Updates `W*` with weight decay and, when learnable, `ln s` without it,
    /// each at its own multiple of `lr`.
    fn step(&mut self, out: &LossOutput, lr: f64, config: &TrainConfig) -> Result<()> {
        let Some(hg) = &out.head_grads else {
            return Ok(());
        };
        sgd_step(
            &mut [self.head.weights_mut().as_mut_slice()],
            &[hg.weights.as_slice()],
            &mut self.weight_state,
            lr * HEAD_LR_MULTIPLIER,
            config.momentum,
            config.weight_decay,
        )?;
        if self.head.learnable_scale() {
            let grad_log_scale = hg.scale * self.head.scale();
            let log_scale = self.head.log_scale_mut();
            sgd_step(
                &mut [core::slice::from_mut(log_scale)],
                &[&[grad_log_scale]],
                &mut self.scale_state,
                lr * SCALE_LR_MULTIPLIER,
                config.momentum,
                0.0,
            )?;
        }
        Ok(())
    }
}

fn forward_batch(
    model: &EmbeddingModel,
    inputs: &[&[f64]],
) -> Result<(Vec<EmbeddingVector>, Vec<ForwardCache>)> {
    let mut embeddings = Vec::with_capacity(inputs.len());
    let mut caches = Vec::with_capacity(inputs.len());
    for x in inputs {
        let (e, c) = model.forward(x)?;
        embeddings.push(e);
        caches.push(c);
    }
    Ok((embeddings, caches))
}

fn accumulate(
    model: &EmbeddingModel,
    caches: &[ForwardCache],
    upstream: &[Vec<f64>],
    into: &mut ParamGrads,
) -> Result<()> {
    for (cache, g) in caches.iter().zip(upstream) {
        into.add_assign(&model.backward(cache, g)?);
    }
    Ok(())
}

fn check_finite_loss(value: f64, step: u64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteValue(format!("loss at step {step}")))
    }
}

/// Learnable-scale AM-Softmax head for pretraining, with Gaussian weights
/// drawn from stream 7 of `seed`.
pub fn init_head(dim: usize, num_classes: usize, margin: f64, seed: u64) -> Result<AmSoftmaxHead> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    AmSoftmaxHead::random(dim, num_classes, DEFAULT_INIT_SCALE, margin, true, &mut rng)
}

/// Trains a base model and AM-Softmax head on labeled source data.
pub fn pretrain(
    model: EmbeddingModel,
    head: AmSoftmaxHead,
    dataset: &LabeledDataset,
    config: &TrainConfig,
) -> Result<(EmbeddingModel, AmSoftmaxHead, LossTrace)> {
    config.validate()?;
    if head.num_classes() != dataset.num_classes() {
        return Err(Error::ConfigInvalid(format!(
            "head has {} classes, dataset has {}",
            head.num_classes(),
            dataset.num_classes()
        )));
    }
    if head.dim() != model.config().embedding_dim {
        return Err(Error::DimMismatch {
            expected: model.config().embedding_dim,
            found: head.dim(),
        });
    }
    if config.total_steps > 0 && dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut learner = Learner::new(model, 0)?;
    let mut head = HeadLearner::new(head);
    let mut trace = LossTrace::default();

    for step in 0..config.total_steps {
        let lr = lr_at(config, step)?;
        let batch = sample_class_batch(dataset, config.batch_size, &mut rng)?;
        let inputs: Vec<&[f64]> = batch.iter().map(|(x, _)| *x).collect();
        let labels: Vec<usize> = batch.iter().map(|(_, y)| *y).collect();
        let (embeddings, caches) = forward_batch(&learner.model, &inputs)?;
        let out = am_softmax_forward(&head.head, &embeddings, &labels)?;
        check_finite_loss(out.value, step)?;

        let mut grads = ParamGrads::zeros_like(&learner.model);
        accumulate(&learner.model, &caches, &out.grads_on_embeddings, &mut grads)?;
        learner.step(&grads, lr, config)?;
        head.step(&out, lr, config)?;
        trace.record(step, lr, out.value, config.log_every);
    }
    Ok((learner.model, head.head, trace))
}

/// Fine-tunes copies of `base` on pair data. `base` itself is never mutated.
///
/// With `share_weights`, both returned models are the same single network.
pub fn finetune(
    base: &EmbeddingModel,
    dataset: &PairDataset,
    options: &FinetuneOptions,
) -> Result<(SiblingPair, LossTrace)> {
    let config = &options.train;
    config.validate()?;
    if let Some(dim) = dataset.input_dim() {
        if dim != base.config().input_dim {
            return Err(Error::DimMismatch {
                expected: base.config().input_dim,
                found: dim,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let pair = clone_siblings(base);
    let mut id_learner = Learner::new(pair.id_model, options.freeze_prefix)?;
    let mut selfie_learner = if options.share_weights {
        None
    } else {
        Some(Learner::new(pair.selfie_model, options.freeze_prefix)?)
    };

    let emb_dim = base.config().embedding_dim;
    let mut head = match options.loss {
        FinetuneLoss::Mps(_) => None,
        FinetuneLoss::AmSoftmax { margin } => Some(HeadLearner::new(AmSoftmaxHead::random(
            emb_dim,
            dataset.len().max(1),
            DEFAULT_INIT_SCALE,
            margin,
            true,
            &mut rng,
        )?)),
        FinetuneLoss::L2Softmax => Some(HeadLearner::new(AmSoftmaxHead::l2_softmax(
            emb_dim,
            dataset.len().max(1),
            &mut rng,
        )?)),
    };

    let mut trace = LossTrace::default();
    for step in 0..config.total_steps {
        let lr = lr_at(config, step)?;
        let batch = sample_pair_batch(dataset, config.batch_size, &mut rng)?;
        let p = batch.subject_indices.len();
        let (g, g_caches) = forward_batch(&id_learner.model, &batch.id_inputs)?;
        let selfie_model = selfie_learner.as_ref().map_or(&id_learner.model, |l| &l.model);
        let (h, h_caches) = forward_batch(selfie_model, &batch.selfie_inputs)?;

        let out = match (&options.loss, head.as_ref()) {
            (FinetuneLoss::Mps(mps), _) => mps_forward(mps, &g, &h)?,
            (loss, Some(hl)) => {
                let embeddings: Vec<EmbeddingVector> = g.into_iter().chain(h).collect();
                let labels: Vec<usize> = batch
                    .subject_indices
                    .iter()
                    .chain(&batch.subject_indices)
                    .copied()
                    .collect();
                match loss {
                    FinetuneLoss::L2Softmax => l2_softmax_forward(&hl.head, &embeddings, &labels)?,
                    _ => am_softmax_forward(&hl.head, &embeddings, &labels)?,
                }
            }
            (_, None) => unreachable!("softmax losses always carry a head"),
        };
        check_finite_loss(out.value, step)?;
        let (g_up, h_up) = out.grads_on_embeddings.split_at(p);

        let mut id_grads = ParamGrads::zeros_like(&id_learner.model);
        accumulate(&id_learner.model, &g_caches, g_up, &mut id_grads)?;
        match selfie_learner.as_mut() {
            Some(sl) => {
                let mut sg = ParamGrads::zeros_like(&sl.model);
                accumulate(&sl.model, &h_caches, h_up, &mut sg)?;
                sl.step(&sg, lr, config)?;
            }
            None => accumulate(&id_learner.model, &h_caches, h_up, &mut id_grads)?,
        }
        id_learner.step(&id_grads, lr, config)?;
        if let Some(hl) = head.as_mut() {
            hl.step(&out, lr, config)?;
        }
        trace.record(step, lr, out.value, config.log_every);
    }

    let id_model = id_learner.model;
    let selfie_model = match selfie_learner {
        Some(l) => l.model,
        None => id_model.clone(),
    };
    Ok((
        SiblingPair {
            id_model,
            selfie_model,
        },
        trace,
    ))
}

