//! Verification protocol: cosine scoring of ID templates against selfie
//! probes, VR@FAR and ROC, subject-level k-fold splits and cross-validation.
//!
//! A comparison is accepted when `score >= threshold`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::PairDataset;
use crate::error::{Error, Result};
use crate::model::{clone_siblings, EmbeddingModel, SiblingPair};
use crate::numerics::{cosine_similarity, l2_normalize, EmbeddingVector};
use crate::trainer::{finetune, FinetuneOptions};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSet {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl ScoreSet {
    fn check(&self) -> Result<()> {
        if self.genuine.is_empty() || self.impostor.is_empty() {
            return Err(Error::EmptyScores);
        }
        if self.genuine.iter().chain(&self.impostor).any(|s| !s.is_finite()) {
            return Err(Error::NonFiniteValue("score".into()));
        }
        Ok(())
    }

    pub fn extend(&mut self, other: &ScoreSet) {
        self.genuine.extend_from_slice(&other.genuine);
        self.impostor.extend_from_slice(&other.impostor);
    }
}

/// Embeddings of one subject: ID template and selfie probes.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectEmbeddings {
    pub subject_id: u64,
    pub id: EmbeddingVector,
    pub selfies: Vec<EmbeddingVector>,
}

/// ID inputs go through `id_model` only, selfies through `selfie_model` only.
pub fn embed_dataset(dataset: &PairDataset, siblings: &SiblingPair) -> Result<Vec<SubjectEmbeddings>> {
    dataset
        .subjects()
        .iter()
        .map(|s| {
            Ok(SubjectEmbeddings {
                subject_id: s.subject_id,
                id: siblings.id_model.embed(&s.id_input)?,
                selfies: s
                    .selfie_inputs
                    .iter()
                    .map(|x| siblings.selfie_model.embed(x))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}

/// Mean of the embeddings, re-normalized to unit length.
pub fn fuse_selfies(embeddings: &[EmbeddingVector]) -> Result<EmbeddingVector> {
    let first = embeddings
        .first()
        .ok_or_else(|| Error::ShapeMismatch("cannot fuse zero embeddings".into()))?;
    if embeddings.len() == 1 {
        return Ok(first.clone());
    }
    let d = first.dim();
    let mut mean = vec![0.0; d];
    for e in embeddings {
        if e.dim() != d {
            return Err(Error::DimMismatch {
                expected: d,
                found: e.dim(),
            });
        }
        mean.iter_mut().zip(e.iter()).for_each(|(m, x)| *m += x);
    }
    let n = embeddings.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    l2_normalize(&mean).map(|(u, _)| u)
}

/// Genuine scores `cos(g_i, h_i)` and impostor scores `cos(g_i, h_j)` for
/// every ordered `i ≠ j`; multi-selfie subjects are fused first.
pub fn score_protocol(subjects: &[SubjectEmbeddings]) -> Result<ScoreSet> {
    if subjects.len() < 2 {
        return Err(Error::TooFewSubjects {
            needed: 2,
            available: subjects.len(),
        });
    }
    let probes = subjects
        .iter()
        .map(|s| fuse_selfies(&s.selfies))
        .collect::<Result<Vec<_>>>()?;
    let n = subjects.len();
    let mut scores = ScoreSet {
        genuine: Vec::with_capacity(n),
        impostor: Vec::with_capacity(n * (n - 1)),
    };
    for (i, s) in subjects.iter().enumerate() {
        for (j, probe) in probes.iter().enumerate() {
            let c = cosine_similarity(&s.id, probe)?;
            if i == j {
                scores.genuine.push(c);
            } else {
                scores.impostor.push(c);
            }
        }
    }
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VrAtFar {
    pub far_target: f64,
    pub vr: f64,
    /// `+∞` when no finite threshold meets the target.
    pub threshold: f64,
    /// FAR actually achieved at `threshold` (never above the target).
    pub achieved_far: f64,
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Number of entries of ascending `sorted` that are `>= t`.
fn count_at_least(sorted: &[f64], t: f64) -> usize {
    sorted.len() - sorted.partition_point(|&x| x < t)
}

/// Verification rate at the smallest threshold whose FAR does not exceed
/// `far_target`.
///
/// Candidate thresholds are the distinct genuine and impostor scores plus
/// `+∞`. FAR only changes at impostor scores, so including genuine scores
/// lets the threshold sit just above the critical impostor score.
pub fn vr_at_far(scores: &ScoreSet, far_target: f64) -> Result<VrAtFar> {
    scores.check()?;
    if !(far_target > 0.0 && far_target <= 1.0) {
        return Err(Error::ConfigInvalid(format!(
            "FAR target must lie in (0, 1], got {far_target}"
        )));
    }
    let imp = sorted(&scores.impostor);
    let gen = sorted(&scores.genuine);
    let n_imp = imp.len() as f64;
    let mut candidates: Vec<f64> = imp.iter().chain(&gen).copied().collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    candidates.push(f64::INFINITY);

    // FAR is non-increasing in t: binary search for the first admissible t.
    let first_ok = candidates.partition_point(|&t| count_at_least(&imp, t) as f64 / n_imp > far_target);
    let threshold = candidates[first_ok];
    Ok(VrAtFar {
        far_target,
        vr: count_at_least(&gen, threshold) as f64 / gen.len() as f64,
        threshold,
        achieved_far: count_at_least(&imp, threshold) as f64 / n_imp,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub far: f64,
    pub tar: f64,
    pub threshold: f64,
}

/// ROC over every distinct score threshold (plus `+∞`), ordered by
/// non-decreasing FAR and TAR, evenly downsampled to `num_points` when
/// longer. The first and last points are always kept.
pub fn roc_curve(scores: &ScoreSet, num_points: usize) -> Result<Vec<RocPoint>> {
    scores.check()?;
    if num_points < 2 {
        return Err(Error::ConfigInvalid("ROC needs at least 2 points".into()));
    }
    let imp = sorted(&scores.impostor);
    let gen = sorted(&scores.genuine);
    let mut thresholds: Vec<f64> = imp.iter().chain(&gen).copied().collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    thresholds.insert(0, f64::INFINITY);
    let point = |t: f64| RocPoint {
        far: count_at_least(&imp, t) as f64 / imp.len() as f64,
        tar: count_at_least(&gen, t) as f64 / gen.len() as f64,
        threshold: t,
    };
    let full: Vec<RocPoint> = thresholds.into_iter().map(point).collect();
    if full.len() <= num_points {
        return Ok(full);
    }
    let last = full.len() - 1;
    let mut out: Vec<RocPoint> = (0..num_points)
        .map(|k| full[(k * last + (num_points - 1) / 2) / (num_points - 1)])
        .collect();
    out.dedup_by(|a, b| a.threshold == b.threshold);
    Ok(out)
}

/// Assignment of subjects to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub k: usize,
    /// `assignments[subject] = fold`.
    pub assignments: Vec<usize>,
}

impl FoldSplit {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded permutation cut into `k` folds; the first `n mod k` folds hold
/// one extra subject.
pub fn kfold_split(num_subjects: usize, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 || num_subjects < k {
        return Err(Error::BadK { k, num_subjects });
    }
    let mut order: Vec<usize> = (0..num_subjects).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = num_subjects / k;
    let extra = num_subjects % k;
    let mut assignments = vec![0; num_subjects];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &subject in &order[pos..pos + size] {
            assignments[subject] = fold;
        }
        pos += size;
    }
    Ok(FoldSplit { k, assignments })
}

/// Per-fold VR values and their mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldStats {
    pub folds: Vec<FoldResult>,
    /// Per FAR target, in `EvalReport::vr_at_far` order.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub train_subjects: usize,
    pub test_subjects: usize,
    pub vr_at_far: Vec<VrAtFar>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// For cross-validation these are computed on scores pooled across folds.
    pub vr_at_far: Vec<VrAtFar>,
    pub roc_points: Vec<RocPoint>,
    pub fold_stats: Option<FoldStats>,
    pub num_subjects: usize,
    /// Subjects whose probe was fused from more than one selfie.
    pub fused_probes: usize,
}

impl EvalReport {
    fn from_scores(scores: &ScoreSet, far_targets: &[f64], roc_points: usize) -> Result<Self> {
        Ok(Self {
            vr_at_far: far_targets
                .iter()
                .map(|&f| vr_at_far(scores, f))
                .collect::<Result<_>>()?,
            roc_points: roc_curve(scores, roc_points)?,
            fold_stats: None,
            num_subjects: scores.genuine.len(),
            fused_probes: 0,
        })
    }

    /// VR at `far_target`: the fold mean when fold stats exist, otherwise
    /// the single-run value.
    pub fn vr(&self, far_target: f64) -> Option<f64> {
        let idx = self.vr_at_far.iter().position(|v| v.far_target == far_target)?;
        Some(match &self.fold_stats {
            Some(stats) => stats.mean[idx],
            None => self.vr_at_far[idx].vr,
        })
    }
}

/// Scores one dataset with a fixed pair of models.
pub fn evaluate(
    dataset: &PairDataset,
    siblings: &SiblingPair,
    far_targets: &[f64],
    roc_points: usize,
) -> Result<EvalReport> {
    let embedded = embed_dataset(dataset, siblings)?;
    let scores = score_protocol(&embedded)?;
    let mut report = EvalReport::from_scores(&scores, far_targets, roc_points)?;
    report.fused_probes = dataset
        .subjects()
        .iter()
        .filter(|s| s.selfie_inputs.len() > 1)
        .count();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValConfig {
    pub k: usize,
    pub far_targets: Vec<f64>,
    /// Train on a random subset of this many subjects from each training split.
    pub train_size: Option<usize>,
    pub roc_points: usize,
}

/// Mean and sample standard deviation (`n − 1` denominator).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

/// Training subjects for `fold`: the full training split, or a seeded
/// subset of `train_size` of them.
pub fn fold_train_indices(
    split: &FoldSplit,
    fold: usize,
    train_size: Option<usize>,
    fold_seed: u64,
) -> Result<Vec<usize>> {
    let train = split.train_indices(fold);
    match train_size {
        None => Ok(train),
        Some(n) if n > train.len() => Err(Error::TooFewSubjects {
            needed: n,
            available: train.len(),
        }),
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(fold_seed);
            rng.set_stream(1);
            let mut picked: Vec<usize> = index::sample(&mut rng, train.len(), n)
                .into_iter()
                .map(|i| train[i])
                .collect();
            picked.sort_unstable();
            Ok(picked)
        }
    }
}

/// Runs one fold: fine-tune on the training subjects, score the held-out
/// fold. Fold `f` trains with seed `options.train.rng_seed + f`.
pub fn run_fold(
    dataset: &PairDataset,
    base: &EmbeddingModel,
    options: &FinetuneOptions,
    split: &FoldSplit,
    fold: usize,
    config: &CrossValConfig,
) -> Result<(FoldResult, ScoreSet)> {
    let fold_seed = options.train.rng_seed.wrapping_add(fold as u64);
    let train_idx = fold_train_indices(split, fold, config.train_size, fold_seed)?;
    let test_idx = split.test_indices(fold);
    let siblings = if options.train.total_steps == 0 {
        clone_siblings(base)
    } else {
        let mut fold_options = options.clone();
        fold_options.train.rng_seed = fold_seed;
        finetune(base, &dataset.select(&train_idx)?, &fold_options)?.0
    };
    let test = dataset.select(&test_idx)?;
    let scores = score_protocol(&embed_dataset(&test, &siblings)?)?;
    let vr = config
        .far_targets
        .iter()
        .map(|&f| vr_at_far(&scores, f))
        .collect::<Result<_>>()?;
    Ok((
        FoldResult {
            fold,
            train_subjects: train_idx.len(),
            test_subjects: test_idx.len(),
            vr_at_far: vr,
        },
        scores,
    ))
}

/// k-fold cross-validation over subjects. The split is seeded with
/// `options.train.rng_seed`.
pub fn cross_validate(
    dataset: &PairDataset,
    base: &EmbeddingModel,
    options: &FinetuneOptions,
    config: &CrossValConfig,
) -> Result<EvalReport> {
    let split = kfold_split(dataset.len(), config.k, options.train.rng_seed)?;
    let mut folds = Vec::with_capacity(config.k);
    let mut pooled = ScoreSet::default();
    for fold in 0..config.k {
        let (result, scores) = run_fold(dataset, base, options, &split, fold, config)?;
        pooled.extend(&scores);
        folds.push(result);
    }
    let (mean, std) = (0..config.far_targets.len())
        .map(|t| {
            let values: Vec<f64> = folds.iter().map(|f| f.vr_at_far[t].vr).collect();
            mean_std(&values)
        })
        .unzip();
    let mut report = EvalReport::from_scores(&pooled, &config.far_targets, config.roc_points)?;
    report.num_subjects = dataset.len();
    report.fold_stats = Some(FoldStats { folds, mean, std });
    Ok(report)
}
