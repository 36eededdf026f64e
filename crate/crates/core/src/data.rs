//! Source-domain labeled data, target-domain ID/selfie pairs, and the
//! batch samplers used by both training stages.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<(Vector, usize)>,
    num_classes: usize,
}

impl LabeledDataset {
    pub fn new(samples: Vec<(Vector, usize)>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::ConfigInvalid("num_classes must be positive".into()));
        }
        if let Some((first, _)) = samples.first() {
            let dim = first.len();
            for (x, y) in &samples {
                if *y >= num_classes {
                    return Err(Error::LabelOutOfRange {
                        label: *y,
                        num_classes,
                    });
                }
                if x.len() != dim {
                    return Err(Error::DimMismatch {
                        expected: dim,
                        found: x.len(),
                    });
                }
            }
        }
        Ok(Self {
            samples,
            num_classes,
        })
    }

    pub fn samples(&self) -> &[(Vector, usize)] {
        &self.samples
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.samples.first().map(|(x, _)| x.len())
    }
}

/// One subject of the target domain: an ID photo and one or more selfies.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSubject {
    pub subject_id: u64,
    pub id_input: Vector,
    pub selfie_inputs: Vec<Vector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDataset {
    subjects: Vec<PairSubject>,
}

impl PairDataset {
    pub fn new(subjects: Vec<PairSubject>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let dim = subjects.first().map(|s| s.id_input.len());
        for s in &subjects {
            if !seen.insert(s.subject_id) {
                return Err(Error::ConfigInvalid(format!(
                    "duplicate subject id {}",
                    s.subject_id
                )));
            }
            if s.selfie_inputs.is_empty() {
                return Err(Error::ConfigInvalid(format!(
                    "subject {} has no selfies",
                    s.subject_id
                )));
            }
            let dim = dim.unwrap_or_default();
            for x in core::iter::once(&s.id_input).chain(&s.selfie_inputs) {
                if x.len() != dim {
                    return Err(Error::DimMismatch {
                        expected: dim,
                        found: x.len(),
                    });
                }
            }
        }
        Ok(Self { subjects })
    }

    pub fn subjects(&self) -> &[PairSubject] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.subjects.first().map(|s| s.id_input.len())
    }

    /// `n` subjects drawn without replacement with a seeded generator, in
    /// dataset order.
    pub fn random_subset(&self, n: usize, seed: u64) -> Result<Self> {
        if n > self.len() {
            return Err(Error::TooFewSubjects {
                needed: n,
                available: self.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, self.len(), n).into_vec();
        picked.sort_unstable();
        self.select(&picked)
    }

    /// New dataset holding the subjects at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let subjects = indices
            .iter()
            .map(|&i| {
                self.subjects.get(i).cloned().ok_or_else(|| {
                    Error::ConfigInvalid(format!("subject index {i} out of range"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(subjects)
    }
}

/// `batch_size` samples drawn uniformly with replacement.
pub fn sample_class_batch<'a, R: Rng + ?Sized>(
    dataset: &'a LabeledDataset,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<(&'a [f64], usize)>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok((0..batch_size)
        .map(|_| {
            let (x, y) = &dataset.samples[rng.random_range(0..dataset.len())];
            (x.as_slice(), *y)
        })
        .collect())
}

/// `M/2` distinct subjects, each contributing its ID input and one
/// uniformly chosen selfie.
#[derive(Debug, Clone)]
pub struct PairBatch<'a> {
    pub id_inputs: Vec<&'a [f64]>,
    pub selfie_inputs: Vec<&'a [f64]>,
    /// Positions in the dataset of the sampled subjects.
    pub subject_indices: Vec<usize>,
}

pub fn sample_pair_batch<'a, R: Rng + ?Sized>(
    dataset: &'a PairDataset,
    batch_size: usize,
    rng: &mut R,
) -> Result<PairBatch<'a>> {
    if !batch_size.is_multiple_of(2) {
        return Err(Error::OddBatch(batch_size));
    }
    let pairs = batch_size / 2;
    if pairs < 2 || dataset.len() < pairs {
        return Err(Error::TooFewSubjects {
            needed: pairs.max(2),
            available: dataset.len(),
        });
    }
    let subject_indices = index::sample(rng, dataset.len(), pairs).into_vec();
    let mut id_inputs = Vec::with_capacity(pairs);
    let mut selfie_inputs = Vec::with_capacity(pairs);
    for &i in &subject_indices {
        let s = &dataset.subjects[i];
        id_inputs.push(s.id_input.as_slice());
        let k = rng.random_range(0..s.selfie_inputs.len());
        selfie_inputs.push(s.selfie_inputs[k].as_slice());
    }
    Ok(PairBatch {
        id_inputs,
        selfie_inputs,
        subject_indices,
    })
}
