//! Training losses on unit embeddings, each returning its value and
//! analytic gradients.
//!
//! * AM-Softmax: `−log[e^{s·cosθ_y − m} / (e^{s·cosθ_y − m} + Σ_{j≠y} e^{s·cosθ_j})]`
//!   with `cosθ_j = Ŵ_jᵀf`, `Ŵ_j` the normalized `j`-th weight column and a
//!   learnable scale `s` (stored as `ln s`). The margin is subtracted after
//!   scaling.
//! * L2-Softmax: AM-Softmax with `m = 0` and a fixed scale.
//! * MPS (max-margin pairwise score): per subject `i` of a pair batch,
//!   `[max_{j≠i} max(g_jᵀh_i, g_iᵀh_j) − g_iᵀh_i + m′]₊`, averaged over the
//!   batch.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::{
    dot, l2_normalize, l2_normalize_backward, max_relative_error, numerical_gradient,
    EmbeddingVector, Matrix, DEGENERATE_NORM,
};

/// Default initial scale for a learnable AM-Softmax head.
pub const DEFAULT_INIT_SCALE: f64 = 10.0;

/// Fixed scale used by the L2-Softmax baseline.
pub const L2_SOFTMAX_SCALE: f64 = 16.0;

/// Minimum gap kept from hinge kinks and argmax ties by [`mps_gradient_check`].
pub const KINK_GUARD: f64 = 1e-6;

/// Classification head `W* ∈ ℝ^{d×C}` with scale and additive margin.
#[derive(Debug, Clone, PartialEq)]
pub struct AmSoftmaxHead {
    weights: Matrix,
    log_scale: f64,
    margin: f64,
    learnable_scale: bool,
}

/// Gradients on the head parameters.
type Columns = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGrads {
    /// `∂L/∂W*` (un-normalized columns).
    pub weights: Matrix,
    /// `∂L/∂s`; exactly zero when the scale is fixed.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    /// One gradient per input embedding. For MPS the first `P` entries are
    /// `∂L/∂g_i` and the next `P` are `∂L/∂h_i`.
    pub grads_on_embeddings: Vec<Vec<f64>>,
    pub head_grads: Option<HeadGrads>,
}

impl AmSoftmaxHead {
    pub fn new(weights: Matrix, scale: f64, margin: f64, learnable_scale: bool) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::ConfigInvalid(format!("scale must be positive, got {scale}")));
        }
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::ConfigInvalid(format!("margin must be >= 0, got {margin}")));
        }
        for c in 0..weights.cols() {
            let n = crate::numerics::norm(&weights.column(c));
            if n <= DEGENERATE_NORM {
                return Err(Error::DegenerateNorm(n));
            }
        }
        Ok(Self {
            weights,
            log_scale: libm::log(scale),
            margin,
            learnable_scale,
        })
    }

    /// Gaussian-initialized head with `num_classes` columns of dimension `dim`.
    pub fn random<R: Rng + ?Sized>(
        dim: usize,
        num_classes: usize,
        scale: f64,
        margin: f64,
        learnable_scale: bool,
        rng: &mut R,
    ) -> Result<Self> {
        if dim == 0 || num_classes == 0 {
            return Err(Error::ConfigInvalid("head dims must be positive".into()));
        }
        let weights = Matrix::from_fn(dim, num_classes, |_, _| StandardNormal.sample(rng));
        Self::new(weights, scale, margin, learnable_scale)
    }

    /// L2-Softmax head: zero margin, fixed scale.
    pub fn l2_softmax<R: Rng + ?Sized>(dim: usize, num_classes: usize, rng: &mut R) -> Result<Self> {
        Self::random(dim, num_classes, L2_SOFTMAX_SCALE, 0.0, false, rng)
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    pub fn scale(&self) -> f64 {
        libm::exp(self.log_scale)
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn log_scale_mut(&mut self) -> &mut f64 {
        &mut self.log_scale
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn learnable_scale(&self) -> bool {
        self.learnable_scale
    }

    pub fn num_classes(&self) -> usize {
        self.weights.cols()
    }

    pub fn dim(&self) -> usize {
        self.weights.rows()
    }

    /// Columns of `W*` divided by their norms, plus those norms.
    /// Raw and unit-norm weight columns.
    fn normalized_columns(&self) -> Result<(Columns, Columns)> {
        let mut raw = Vec::with_capacity(self.num_classes());
        let mut unit = Vec::with_capacity(self.num_classes());
        for c in 0..self.num_classes() {
            let col = self.weights.column(c);
            let (u, _) = l2_normalize(&col)?;
            unit.push(u.into_inner());
            raw.push(col);
        }
        Ok((raw, unit))
    }
}

fn softmax_loss(
    head: &AmSoftmaxHead,
    margin: f64,
    embeddings: &[EmbeddingVector],
    labels: &[usize],
) -> Result<LossOutput> {
    if embeddings.is_empty() {
        return Err(Error::ShapeMismatch("empty batch".into()));
    }
    if embeddings.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} embeddings but {} labels",
            embeddings.len(),
            labels.len()
        )));
    }
    let c = head.num_classes();
    let d = head.dim();
    for (e, &y) in embeddings.iter().zip(labels) {
        if e.dim() != d {
            return Err(Error::DimMismatch {
                expected: d,
                found: e.dim(),
            });
        }
        if y >= c {
            return Err(Error::LabelOutOfRange {
                label: y,
                num_classes: c,
            });
        }
    }
    let (raw_cols, unit_cols) = head.normalized_columns()?;
    let s = head.scale();
    let inv_b = 1.0 / embeddings.len() as f64;

    let mut value = 0.0;
    let mut grad_unit_cols = vec![vec![0.0; d]; c];
    let mut grad_s = 0.0;
    let mut grads_on_embeddings = Vec::with_capacity(embeddings.len());
    let mut cosines = vec![0.0; c];
    let mut logits = vec![0.0; c];

    for (f, &y) in embeddings.iter().zip(labels) {
        for j in 0..c {
            cosines[j] = dot(&unit_cols[j], f);
            logits[j] = s * cosines[j] - if j == y { margin } else { 0.0 };
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|z| libm::exp(z - max)).sum();
        let lse = max + libm::log(sum);
        value += lse - logits[y];

        let mut gf = vec![0.0; d];
        for j in 0..c {
            let p = libm::exp(logits[j] - lse);
            let g = (p - if j == y { 1.0 } else { 0.0 }) * inv_b;
            grad_s += g * cosines[j];
            let gc = s * g;
            for k in 0..d {
                gf[k] += gc * unit_cols[j][k];
                grad_unit_cols[j][k] += gc * f[k];
            }
        }
        grads_on_embeddings.push(gf);
    }

    let mut gw = Matrix::zeros(d, c);
    for j in 0..c {
        let g = l2_normalize_backward(&raw_cols[j], &grad_unit_cols[j])?;
        for (k, v) in g.into_iter().enumerate() {
            gw.set(k, j, v);
        }
    }
    Ok(LossOutput {
        value: value * inv_b,
        grads_on_embeddings,
        head_grads: Some(HeadGrads {
            weights: gw,
            scale: if head.learnable_scale { grad_s } else { 0.0 },
        }),
    })
}

/// Batch-mean AM-Softmax loss with gradients on embeddings, `W*` and `s`.
pub fn am_softmax_forward(
    head: &AmSoftmaxHead,
    embeddings: &[EmbeddingVector],
    labels: &[usize],
) -> Result<LossOutput> {
    softmax_loss(head, head.margin, embeddings, labels)
}

/// L2-Softmax: requires a zero-margin head; the scale gradient is zero.
pub fn l2_softmax_forward(
    head: &AmSoftmaxHead,
    embeddings: &[EmbeddingVector],
    labels: &[usize],
) -> Result<LossOutput> {
    if head.margin != 0.0 {
        return Err(Error::ConfigInvalid(format!(
            "L2-Softmax needs margin 0, head has {}",
            head.margin
        )));
    }
    let mut out = softmax_loss(head, 0.0, embeddings, labels)?;
    if let Some(h) = out.head_grads.as_mut() {
        h.scale = 0.0;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpsConfig {
    pub margin: f64,
}

impl MpsConfig {
    pub fn new(margin: f64) -> Result<Self> {
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::ConfigInvalid(format!("MPS margin must be >= 0, got {margin}")));
        }
        Ok(Self { margin })
    }
}

/// Which cross pair supplied the hardest impostor score for subject `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpostorDirection {
    /// `g_jᵀh_i`: another subject's ID photo against this selfie.
    IdOfOther,
    /// `g_iᵀh_j`: this ID photo against another subject's selfie.
    SelfieOfOther,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardestImpostor {
    pub other: usize,
    pub direction: ImpostorDirection,
    pub score: f64,
}

fn check_pair_batch(g: &[EmbeddingVector], h: &[EmbeddingVector]) -> Result<usize> {
    if g.len() != h.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} ID embeddings but {} selfie embeddings",
            g.len(),
            h.len()
        )));
    }
    if g.len() < 2 {
        return Err(Error::BatchTooSmall(g.len()));
    }
    let d = g[0].dim();
    for e in g.iter().chain(h) {
        if e.dim() != d {
            return Err(Error::DimMismatch {
                expected: d,
                found: e.dim(),
            });
        }
    }
    Ok(g.len())
}

/// Cross-score matrix `S[a][b] = g_aᵀh_b`.
fn cross_scores(g: &[EmbeddingVector], h: &[EmbeddingVector]) -> Vec<Vec<f64>> {
    g.iter()
        .map(|ga| h.iter().map(|hb| dot(ga, hb)).collect())
        .collect()
}

fn hardest_from_scores(scores: &[Vec<f64>], i: usize) -> HardestImpostor {
    let mut best = HardestImpostor {
        other: usize::MAX,
        direction: ImpostorDirection::IdOfOther,
        score: f64::NEG_INFINITY,
    };
    // strict '>' keeps the first candidate on ties
    for j in (0..scores.len()).filter(|&j| j != i) {
        for (direction, score) in [
            (ImpostorDirection::IdOfOther, scores[j][i]),
            (ImpostorDirection::SelfieOfOther, scores[i][j]),
        ] {
            if score > best.score {
                best = HardestImpostor {
                    other: j,
                    direction,
                    score,
                };
            }
        }
    }
    best
}

/// Hardest in-batch impostor for every subject.
pub fn mps_hardest_impostors(
    g: &[EmbeddingVector],
    h: &[EmbeddingVector],
) -> Result<Vec<HardestImpostor>> {
    let p = check_pair_batch(g, h)?;
    let scores = cross_scores(g, h);
    Ok((0..p).map(|i| hardest_from_scores(&scores, i)).collect())
}

/// Batch-mean MPS loss; subgradients flow through the genuine score and
/// the selected impostor of every pair with a strictly positive hinge.
pub fn mps_forward(
    config: &MpsConfig,
    g: &[EmbeddingVector],
    h: &[EmbeddingVector],
) -> Result<LossOutput> {
    let p = check_pair_batch(g, h)?;
    let d = g[0].dim();
    let scores = cross_scores(g, h);
    let inv_p = 1.0 / p as f64;
    let mut value = 0.0;
    let mut grads = vec![vec![0.0; d]; 2 * p];
    let add = |dst: &mut Vec<f64>, src: &[f64], k: f64| {
        dst.iter_mut().zip(src).for_each(|(a, b)| *a += k * b);
    };
    for i in 0..p {
        let imp = hardest_from_scores(&scores, i);
        let hinge = imp.score - scores[i][i] + config.margin;
        if hinge <= 0.0 {
            continue;
        }
        value += hinge;
        add(&mut grads[i], &h[i], -inv_p);
        add(&mut grads[p + i], &g[i], -inv_p);
        let j = imp.other;
        match imp.direction {
            ImpostorDirection::IdOfOther => {
                add(&mut grads[j], &h[i], inv_p);
                add(&mut grads[p + i], &g[j], inv_p);
            }
            ImpostorDirection::SelfieOfOther => {
                add(&mut grads[i], &h[j], inv_p);
                add(&mut grads[p + j], &g[i], inv_p);
            }
        }
    }
    Ok(LossOutput {
        value: value * inv_p,
        grads_on_embeddings: grads,
        head_grads: None,
    })
}

/// Compares MPS gradients on raw (pre-normalization) features against
/// central differences and returns the max relative error.
///
/// Fails with [`Error::TieAtKink`] when an active pair's top-2 impostor
/// scores or any pair's hinge argument lie within [`KINK_GUARD`].
pub fn mps_gradient_check(
    config: &MpsConfig,
    g_raw: &[Vec<f64>],
    h_raw: &[Vec<f64>],
    step: f64,
) -> Result<f64> {
    let normalize_all = |raw: &[Vec<f64>]| -> Result<Vec<EmbeddingVector>> {
        raw.iter().map(|v| l2_normalize(v).map(|(e, _)| e)).collect()
    };
    let g = normalize_all(g_raw)?;
    let h = normalize_all(h_raw)?;
    let p = check_pair_batch(&g, &h)?;
    let d = g[0].dim();
    let scores = cross_scores(&g, &h);
    for i in 0..p {
        let mut cands: Vec<f64> = (0..p)
            .filter(|&j| j != i)
            .flat_map(|j| [scores[j][i], scores[i][j]])
            .collect();
        cands.sort_by(|a, b| b.total_cmp(a));
        let arg = cands[0] - scores[i][i] + config.margin;
        if arg.abs() < KINK_GUARD {
            return Err(Error::TieAtKink);
        }
        if arg > 0.0 && cands[0] - cands[1] < KINK_GUARD {
            return Err(Error::TieAtKink);
        }
    }

    let out = mps_forward(config, &g, &h)?;
    let mut analytic = Vec::with_capacity(2 * p * d);
    for (k, raw) in g_raw.iter().chain(h_raw).enumerate() {
        analytic.extend(l2_normalize_backward(raw, &out.grads_on_embeddings[k])?);
    }

    let point: Vec<f64> = g_raw.iter().chain(h_raw).flatten().copied().collect();
    let objective = |x: &[f64]| -> f64 {
        let unit = |k: usize| l2_normalize(&x[k * d..(k + 1) * d]).map(|(e, _)| e);
        let gs: Result<Vec<_>> = (0..p).map(unit).collect();
        let hs: Result<Vec<_>> = (p..2 * p).map(unit).collect();
        match (gs, hs) {
            (Ok(gs), Ok(hs)) => mps_forward(config, &gs, &hs).map_or(f64::NAN, |o| o.value),
            _ => f64::NAN,
        }
    };
    let numeric = numerical_gradient(objective, &point, step)?;
    Ok(max_relative_error(&analytic, &numeric))
}
