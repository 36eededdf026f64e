//! SGD with momentum and weight decay, and step-threshold learning-rate
//! schedules.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Samples per batch; for pair training this is `M`, giving `M/2` pairs.
    pub batch_size: usize,
    pub total_steps: u64,
    /// `(first_step, learning_rate)`, thresholds strictly increasing from 0.
    pub lr_schedule: Vec<(u64, f64)>,
    pub momentum: f64,
    pub weight_decay: f64,
    pub rng_seed: u64,
    /// Loss-trace granularity: one row per `log_every` steps.
    pub log_every: u64,
}

pub const DEFAULT_MOMENTUM: f64 = 0.9;
pub const DEFAULT_WEIGHT_DECAY: f64 = 5e-4;
/// AM-Softmax margin `m` used for base-model training.
pub const DEFAULT_AM_MARGIN: f64 = 5.0;
/// MPS margin `m′` used for fine-tuning.
pub const DEFAULT_MPS_MARGIN: f64 = 0.5;

impl TrainConfig {
    /// Base-model schedule: batch 256, 280K steps, LR 0.1 → 0.01 @160K → 0.001 @240K.
    pub fn paper_stage1(rng_seed: u64) -> Self {
        Self {
            batch_size: 256,
            total_steps: 280_000,
            lr_schedule: vec![(0, 0.1), (160_000, 0.01), (240_000, 0.001)],
            momentum: DEFAULT_MOMENTUM,
            weight_decay: DEFAULT_WEIGHT_DECAY,
            rng_seed,
            log_every: 1000,
        }
    }

    /// Sibling fine-tuning schedule: batch 256, 800 steps, LR 0.01 → 0.001 @500.
    pub fn paper_stage2(rng_seed: u64) -> Self {
        Self {
            batch_size: 256,
            total_steps: 800,
            lr_schedule: vec![(0, 0.01), (500, 0.001)],
            momentum: DEFAULT_MOMENTUM,
            weight_decay: DEFAULT_WEIGHT_DECAY,
            rng_seed,
            log_every: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::ConfigInvalid("batch_size must be positive".into()));
        }
        if self.log_every == 0 {
            return Err(Error::ConfigInvalid("log_every must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::ConfigInvalid(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        match self.lr_schedule.first() {
            Some((0, _)) => {}
            _ => {
                return Err(Error::ConfigInvalid(
                    "lr_schedule must start at step 0".into(),
                ))
            }
        }
        if self.lr_schedule.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::ConfigInvalid(
                "lr_schedule thresholds must be strictly increasing".into(),
            ));
        }
        if self
            .lr_schedule
            .iter()
            .any(|(_, lr)| !(*lr >= 0.0 && lr.is_finite()))
        {
            return Err(Error::ConfigInvalid("learning rates must be >= 0".into()));
        }
        Ok(())
    }
}

/// Learning rate of the last schedule entry whose threshold is `<= step`.
pub fn lr_at(config: &TrainConfig, step: u64) -> Result<f64> {
    if step >= config.total_steps {
        return Err(Error::StepOutOfRange {
            step,
            total_steps: config.total_steps,
        });
    }
    config
        .lr_schedule
        .iter()
        .rev()
        .find(|(threshold, _)| *threshold <= step)
        .map(|(_, lr)| *lr)
        .ok_or_else(|| Error::ConfigInvalid("lr_schedule must start at step 0".into()))
}

/// Momentum buffers, one per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    velocities: Vec<Vec<f64>>,
    step_count: u64,
}

impl OptimizerState {
    /// Zero velocities shaped like `tensors`.
    pub fn for_tensors(tensors: &[&[f64]]) -> Self {
        Self {
            velocities: tensors.iter().map(|t| vec![0.0; t.len()]).collect(),
            step_count: 0,
        }
    }

    pub fn velocities(&self) -> &[Vec<f64>] {
        &self.velocities
    }

    pub fn velocities_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.velocities
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// One SGD step over every tensor:
/// `v ← μ·v + g + λ·p`, then `p ← p − lr·v`.
pub fn sgd_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut OptimizerState,
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.velocities.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} params, {} grads, {} velocity buffers",
            params.len(),
            grads.len(),
            state.velocities.len()
        )));
    }
    for (k, ((p, g), v)) in params.iter().zip(grads).zip(&state.velocities).enumerate() {
        if p.len() != g.len() || p.len() != v.len() {
            return Err(Error::ShapeMismatch(format!(
                "tensor {k}: param {}, grad {}, velocity {}",
                p.len(),
                g.len(),
                v.len()
            )));
        }
    }
    for ((p, g), v) in params.iter_mut().zip(grads).zip(state.velocities.iter_mut()) {
        for ((pi, gi), vi) in p.iter_mut().zip(g.iter()).zip(v.iter_mut()) {
            *vi = momentum * *vi + gi + weight_decay * *pi;
            *pi -= lr * *vi;
        }
    }
    state.step_count += 1;
    Ok(())
}
