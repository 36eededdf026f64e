//! Synthetic heterogeneous-identity data.
//!
//! Each identity is a unit latent vector `z`. A domain renders it as
//! `normalize(T·z + N·u + σ·ε)`: a fixed linear transform `T` per domain
//! (source, ID document, selfie), an optional shared nuisance subspace `N`
//! driven by per-image factors `u`, and isotropic noise `ε`. Source classes
//! and target subjects draw latents from separate seeded streams, so the two
//! identity pools never overlap.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{LabeledDataset, PairDataset, PairSubject};
use crate::error::{Error, Result};
use crate::numerics::{dot, l2_normalize, Matrix, Vector};

const SOURCE_LATENT_STREAM: u64 = 0;
const TARGET_LATENT_STREAM: u64 = 1;
const SOURCE_SAMPLE_STREAM: u64 = 2;
const TARGET_SAMPLE_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_subjects: usize,
    pub num_classes: usize,
    pub samples_per_class: usize,
    pub latent_dim: usize,
    pub input_dim: usize,
    /// `input_dim × latent_dim`.
    pub source_transform: Matrix,
    pub id_domain_transform: Matrix,
    pub selfie_domain_transform: Matrix,
    /// `input_dim × k` nuisance directions shared by all domains.
    pub nuisance_transform: Option<Matrix>,
    pub nuisance_sigma: f64,
    pub noise_sigma_source: f64,
    pub noise_sigma_id: f64,
    pub noise_sigma_selfie: f64,
    /// Inclusive range of selfies per subject.
    pub selfies_per_subject: (usize, usize),
    pub rng_seed: u64,
}

impl SynthConfig {
    /// Identity transforms, no noise, one selfie per subject.
    pub fn identity(dim: usize, num_subjects: usize, num_classes: usize, rng_seed: u64) -> Self {
        Self {
            num_subjects,
            num_classes,
            samples_per_class: 1,
            latent_dim: dim,
            input_dim: dim,
            source_transform: Matrix::identity(dim),
            id_domain_transform: Matrix::identity(dim),
            selfie_domain_transform: Matrix::identity(dim),
            nuisance_transform: None,
            nuisance_sigma: 0.0,
            noise_sigma_source: 0.0,
            noise_sigma_id: 0.0,
            noise_sigma_selfie: 0.0,
            selfies_per_subject: (1, 1),
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: alloc::string::String| Err(Error::ConfigInvalid(msg));
        if self.latent_dim == 0 || self.input_dim == 0 {
            return invalid("latent_dim and input_dim must be positive".into());
        }
        for (name, t) in [
            ("source_transform", &self.source_transform),
            ("id_domain_transform", &self.id_domain_transform),
            ("selfie_domain_transform", &self.selfie_domain_transform),
        ] {
            if t.rows() != self.input_dim || t.cols() != self.latent_dim {
                return invalid(format!(
                    "{name} is {}x{}, expected {}x{}",
                    t.rows(),
                    t.cols(),
                    self.input_dim,
                    self.latent_dim
                ));
            }
        }
        if let Some(n) = &self.nuisance_transform {
            if n.rows() != self.input_dim {
                return invalid(format!(
                    "nuisance_transform has {} rows, expected {}",
                    n.rows(),
                    self.input_dim
                ));
            }
        }
        for (name, s) in [
            ("nuisance_sigma", self.nuisance_sigma),
            ("noise_sigma_source", self.noise_sigma_source),
            ("noise_sigma_id", self.noise_sigma_id),
            ("noise_sigma_selfie", self.noise_sigma_selfie),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return invalid(format!("{name} must be finite and >= 0, got {s}"));
            }
        }
        let (lo, hi) = self.selfies_per_subject;
        if lo == 0 || hi < lo {
            return invalid(format!("bad selfies_per_subject range [{lo}, {hi}]"));
        }
        Ok(())
    }
}

fn gaussian_vec<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Uniform point on the unit sphere in `ℝ^dim`.
pub fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        if let Ok((u, _)) = l2_normalize(&gaussian_vec(dim, rng)) {
            return u.into_inner();
        }
    }
}

/// Orthonormalizes the columns of `m` (modified Gram–Schmidt).
pub fn orthonormalize_columns(m: &Matrix) -> Result<Matrix> {
    if m.rows() < m.cols() {
        return Err(Error::ConfigInvalid(format!(
            "cannot orthonormalize {} columns in {} dims",
            m.cols(),
            m.rows()
        )));
    }
    let mut cols: Vec<Vec<f64>> = (0..m.cols()).map(|c| m.column(c)).collect();
    for c in 0..cols.len() {
        for prev in 0..c {
            let proj = dot(&cols[c], &cols[prev]);
            let (head, tail) = cols.split_at_mut(c);
            tail[0].iter_mut().zip(&head[prev]).for_each(|(x, q)| *x -= proj * q);
        }
        cols[c] = l2_normalize(&cols[c])?.0.into_inner();
    }
    Ok(Matrix::from_fn(m.rows(), m.cols(), |r, c| cols[c][r]))
}

/// Random `rows × cols` matrix with orthonormal columns.
pub fn random_orthonormal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<Matrix> {
    let g = Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng));
    orthonormalize_columns(&g)
}

/// `orthonormalize(base + amount·G/√rows)` for Gaussian `G`: a random
/// domain shift of size roughly `amount` away from `base`.
pub fn perturb_orthonormal<R: Rng + ?Sized>(base: &Matrix, amount: f64, rng: &mut R) -> Result<Matrix> {
    let k = amount / libm::sqrt(base.rows() as f64);
    let shifted = Matrix::from_fn(base.rows(), base.cols(), |r, c| {
        let e: f64 = StandardNormal.sample(rng);
        base.get(r, c) + k * e
    });
    orthonormalize_columns(&shifted)
}

/// Transforms of a synthetic benchmark domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Domains {
    pub source: Matrix,
    pub id: Matrix,
    pub selfie: Matrix,
    /// Selfie rendering of a second, shifted dataset.
    pub shifted_selfie: Matrix,
    pub nuisance: Option<Matrix>,
}

/// Seeded domain transforms: a random orthonormal source rendering, ID and
/// selfie renderings each `domain_shift` away from it, a shifted selfie
/// rendering `shifted_selfie_shift` away from the selfie one, and
/// `nuisance_dim` shared nuisance directions.
pub fn random_domains(
    input_dim: usize,
    latent_dim: usize,
    domain_shift: f64,
    shifted_selfie_shift: f64,
    nuisance_dim: usize,
    seed: u64,
) -> Result<Domains> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source = random_orthonormal(input_dim, latent_dim, &mut rng)?;
    let id = perturb_orthonormal(&source, domain_shift, &mut rng)?;
    let selfie = perturb_orthonormal(&source, domain_shift, &mut rng)?;
    let shifted_selfie = perturb_orthonormal(&selfie, shifted_selfie_shift, &mut rng)?;
    let nuisance = match nuisance_dim {
        0 => None,
        k => Some(random_orthonormal(input_dim, k, &mut rng)?),
    };
    Ok(Domains {
        source,
        id,
        selfie,
        shifted_selfie,
        nuisance,
    })
}

struct Renderer<'a> {
    config: &'a SynthConfig,
    rng: ChaCha8Rng,
}

impl Renderer<'_> {
    fn render(&mut self, transform: &Matrix, latent: &[f64], sigma: f64) -> Result<Vector> {
        let cfg = self.config;
        let mut x = transform.mul_vec(latent)?;
        if let Some(n) = &cfg.nuisance_transform {
            let u = gaussian_vec(n.cols(), &mut self.rng);
            for (xi, ni) in x.iter_mut().zip(n.mul_vec(&u)?) {
                *xi += cfg.nuisance_sigma * ni;
            }
        }
        if sigma > 0.0 {
            for xi in x.iter_mut() {
                let e: f64 = StandardNormal.sample(&mut self.rng);
                *xi += sigma * e;
            }
        }
        Vector::new(l2_normalize(&x)?.0.into_inner())
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Unit latents of the source classes.
pub fn source_latents(config: &SynthConfig) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(config.rng_seed, SOURCE_LATENT_STREAM);
    (0..config.num_classes)
        .map(|_| random_unit(config.latent_dim, &mut rng))
        .collect()
}

/// Unit latents of the target subjects.
pub fn target_latents(config: &SynthConfig) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(config.rng_seed, TARGET_LATENT_STREAM);
    (0..config.num_subjects)
        .map(|_| random_unit(config.latent_dim, &mut rng))
        .collect()
}

/// Labeled source-domain data, class-major.
pub fn gen_source_dataset(config: &SynthConfig) -> Result<LabeledDataset> {
    config.validate()?;
    if config.num_classes < 2 {
        return Err(Error::ConfigInvalid("source data needs >= 2 classes".into()));
    }
    let latents = source_latents(config);
    let mut r = Renderer {
        config,
        rng: stream_rng(config.rng_seed, SOURCE_SAMPLE_STREAM),
    };
    let mut samples = Vec::with_capacity(config.num_classes * config.samples_per_class);
    for (label, z) in latents.iter().enumerate() {
        for _ in 0..config.samples_per_class {
            let x = r.render(&config.source_transform, z, config.noise_sigma_source)?;
            samples.push((x, label));
        }
    }
    LabeledDataset::new(samples, config.num_classes)
}

/// Target-domain ID/selfie pairs; subject ids are `0..num_subjects`.
pub fn gen_pair_dataset(config: &SynthConfig) -> Result<PairDataset> {
    config.validate()?;
    if config.num_subjects < 2 {
        return Err(Error::ConfigInvalid("pair data needs >= 2 subjects".into()));
    }
    let latents = target_latents(config);
    let mut r = Renderer {
        config,
        rng: stream_rng(config.rng_seed, TARGET_SAMPLE_STREAM),
    };
    let (lo, hi) = config.selfies_per_subject;
    let mut subjects = Vec::with_capacity(config.num_subjects);
    for (i, z) in latents.iter().enumerate() {
        let n_selfies = r.rng.random_range(lo..=hi);
        let id_input = r.render(&config.id_domain_transform, z, config.noise_sigma_id)?;
        let mut selfie_inputs = vec![];
        for _ in 0..n_selfies {
            selfie_inputs.push(r.render(&config.selfie_domain_transform, z, config.noise_sigma_selfie)?);
        }
        subjects.push(PairSubject {
            subject_id: i as u64,
            id_input,
            selfie_inputs,
        });
    }
    PairDataset::new(subjects)
}
