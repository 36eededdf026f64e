//! Fully-connected embedding network and sibling cloning.
//!
//! The network maps a flattened input to an L2-normalized embedding:
//! hidden layers apply `act(W·h + b)`, the last layer is affine, and the
//! output is normalized inside [`EmbeddingModel::forward`]. Weight matrices
//! are stored `fan_in × fan_out`, so a linear model is a single
//! `input_dim × embedding_dim` matrix.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{l2_normalize, l2_normalize_backward, EmbeddingVector, Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => libm::tanh(x),
        }
    }

    /// Derivative given the pre-activation `x` and the activation output `y`.
    #[inline]
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelConfig {
    pub input_dim: usize,
    /// Empty for a linear model.
    pub hidden_dims: Vec<usize>,
    pub embedding_dim: usize,
    pub activation: Activation,
    pub init_seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::ConfigInvalid("input_dim must be positive".into()));
        }
        if self.embedding_dim < 2 {
            return Err(Error::ConfigInvalid(format!(
                "embedding_dim must be >= 2, got {}",
                self.embedding_dim
            )));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::ConfigInvalid("hidden dims must be positive".into()));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` for every layer, input to output.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(self.embedding_dim);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    config: ModelConfig,
    weights: Vec<Matrix>,
    biases: Vec<Vector>,
}

/// Activations recorded by [`EmbeddingModel::forward`] for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer (`layer_inputs[0]` is the network input).
    layer_inputs: Vec<Vec<f64>>,
    /// Pre-activations of the hidden layers.
    pre_activations: Vec<Vec<f64>>,
    /// Final affine output before normalization.
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn raw_output(&self) -> &[f64] {
        &self.output
    }
}

/// Gradients with the same shapes as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl ParamGrads {
    pub fn zeros_like(model: &EmbeddingModel) -> Self {
        Self {
            weights: model
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &ParamGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for w in &mut self.weights {
            w.as_mut_slice().iter_mut().for_each(|x| *x *= k);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|x| *x *= k);
        }
    }

    /// Tensors in parameter order: `W0, b0, W1, b1, …`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }
}

impl EmbeddingModel {
    /// Seeded init: weights `U(−1/√fan_in, 1/√fan_in)`, biases zero.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (fan_in, fan_out) in config.layer_shapes() {
            let bound = 1.0 / libm::sqrt(fan_in as f64);
            weights.push(Matrix::from_fn(fan_in, fan_out, |_, _| {
                rng.random_range(-bound..bound)
            }));
            biases.push(Vector::zeros(fan_out));
        }
        Ok(Self {
            config,
            weights,
            biases,
        })
    }

    /// Builds a model from explicit parameters, checking the shape chain.
    pub fn from_parts(config: ModelConfig, weights: Vec<Matrix>, biases: Vec<Vector>) -> Result<Self> {
        config.validate()?;
        let shapes = config.layer_shapes();
        if weights.len() != shapes.len() || biases.len() != shapes.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} layers, got {} weights and {} biases",
                shapes.len(),
                weights.len(),
                biases.len()
            )));
        }
        for (l, ((fan_in, fan_out), (w, b))) in shapes.iter().zip(weights.iter().zip(&biases)).enumerate() {
            if w.rows() != *fan_in || w.cols() != *fan_out || b.len() != *fan_out {
                return Err(Error::ShapeMismatch(format!(
                    "layer {l}: expected {fan_in}x{fan_out}, got {}x{} with bias {}",
                    w.rows(),
                    w.cols(),
                    b.len()
                )));
            }
        }
        Ok(Self {
            config,
            weights,
            biases,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vector] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Tensors in parameter order: `W0, b0, W1, b1, …`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    /// Overwrites all parameters from a flat slice in [`Self::tensors`] order.
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::DimMismatch {
                expected: self.num_params(),
                found: flat.len(),
            });
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[offset..offset + t.len()]);
            offset += t.len();
        }
        Ok(())
    }

    fn affine(w: &Matrix, b: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = b.to_vec();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &w.as_slice()[i * w.cols()..(i + 1) * w.cols()];
            for (o, wij) in out.iter_mut().zip(row) {
                *o += xi * wij;
            }
        }
        out
    }

    pub fn forward(&self, x: &[f64]) -> Result<(EmbeddingVector, ForwardCache)> {
        if x.len() != self.config.input_dim {
            return Err(Error::DimMismatch {
                expected: self.config.input_dim,
                found: x.len(),
            });
        }
        let act = self.config.activation;
        let last = self.weights.len() - 1;
        let mut layer_inputs = Vec::with_capacity(self.weights.len());
        let mut pre_activations = Vec::with_capacity(last);
        let mut h = x.to_vec();
        for l in 0..last {
            let a = Self::affine(&self.weights[l], &self.biases[l], &h);
            let next = a.iter().map(|&v| act.apply(v)).collect();
            layer_inputs.push(core::mem::replace(&mut h, next));
            pre_activations.push(a);
        }
        let output = Self::affine(&self.weights[last], &self.biases[last], &h);
        layer_inputs.push(h);
        let (embedding, _) = l2_normalize(&output)?;
        Ok((
            embedding,
            ForwardCache {
                layer_inputs,
                pre_activations,
                output,
            },
        ))
    }

    /// Forward pass without keeping the cache.
    pub fn embed(&self, x: &[f64]) -> Result<EmbeddingVector> {
        self.forward(x).map(|(e, _)| e)
    }

    /// Parameter gradients given `∂L/∂embedding`.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<ParamGrads> {
        let n = self.weights.len();
        if cache.layer_inputs.len() != n || cache.pre_activations.len() + 1 != n {
            return Err(Error::ShapeMismatch(format!(
                "cache has {} layers, model has {n}",
                cache.layer_inputs.len()
            )));
        }
        if upstream.len() != self.config.embedding_dim || cache.output.len() != upstream.len() {
            return Err(Error::ShapeMismatch(format!(
                "upstream gradient has dim {}, embedding dim is {}",
                upstream.len(),
                self.config.embedding_dim
            )));
        }
        let act = self.config.activation;
        let mut grads = ParamGrads::zeros_like(self);
        let mut delta = l2_normalize_backward(&cache.output, upstream)?;
        for l in (0..n).rev() {
            let w = &self.weights[l];
            let input = &cache.layer_inputs[l];
            if input.len() != w.rows() {
                return Err(Error::ShapeMismatch(format!("layer {l} input width")));
            }
            let gw = grads.weights[l].as_mut_slice();
            for (i, &hi) in input.iter().enumerate() {
                if hi == 0.0 {
                    continue;
                }
                let row = &mut gw[i * w.cols()..(i + 1) * w.cols()];
                for (g, d) in row.iter_mut().zip(&delta) {
                    *g = hi * d;
                }
            }
            grads.biases[l].copy_from_slice(&delta);
            if l > 0 {
                let a = &cache.pre_activations[l - 1];
                delta = w
                    .as_slice()
                    .chunks_exact(w.cols())
                    .zip(a.iter().zip(input))
                    .map(|(row, (&ai, &yi))| {
                        row.iter().zip(&delta).map(|(wij, dj)| wij * dj).sum::<f64>()
                            * act.derivative(ai, yi)
                    })
                    .collect();
            }
        }
        Ok(grads)
    }
}

/// The two domain-specific networks: one for ID photos, one for selfies.
#[derive(Debug, Clone, PartialEq)]
pub struct SiblingPair {
    pub id_model: EmbeddingModel,
    pub selfie_model: EmbeddingModel,
}

/// Deep-copies `base` into two independent siblings with identical
/// parameters.
pub fn clone_siblings(base: &EmbeddingModel) -> SiblingPair {
    SiblingPair {
        id_model: base.clone(),
        selfie_model: base.clone(),
    }
}
