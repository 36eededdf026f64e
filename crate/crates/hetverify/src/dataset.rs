//! Dataset files: magic `HVDATA`, version, a kind byte, counts, then the
//! samples as little-endian `f64`s.
//!
//! Labeled body: `num_classes, len, dim`, then per sample `label, x`.
//! Pair body: `len, dim`, then per subject `id, num_selfies, id_input, selfies…`.

use std::path::Path;

use hetverify_core::data::{LabeledDataset, PairDataset, PairSubject};
use hetverify_core::numerics::Vector;

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::fsio;

pub const MAGIC: &[u8; 6] = b"HVDATA";
pub const VERSION: u32 = 1;

const KIND_LABELED: u8 = 0;
const KIND_PAIR: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Labeled(LabeledDataset),
    Pair(PairDataset),
}

pub fn encode_labeled(data: &LabeledDataset) -> Vec<u8> {
    let mut w = Writer::default();
    w.u8(KIND_LABELED);
    w.usize(data.num_classes());
    w.usize(data.len());
    w.usize(data.input_dim().unwrap_or(0));
    for (x, y) in data.samples() {
        w.usize(*y);
        w.f64s(x);
    }
    w.finish(MAGIC, VERSION)
}

pub fn encode_pair(data: &PairDataset) -> Vec<u8> {
    let mut w = Writer::default();
    w.u8(KIND_PAIR);
    w.usize(data.len());
    w.usize(data.input_dim().unwrap_or(0));
    for s in data.subjects() {
        w.u64(s.subject_id);
        w.usize(s.selfie_inputs.len());
        w.f64s(&s.id_input);
        for x in &s.selfie_inputs {
            w.f64s(x);
        }
    }
    w.finish(MAGIC, VERSION)
}

fn vector(r: &mut Reader<'_>, dim: usize) -> Result<Vector> {
    Ok(Vector::new(r.f64s(dim)?)?)
}

pub fn decode(bytes: &[u8]) -> Result<Dataset> {
    let mut r = Reader::open(bytes, MAGIC, VERSION)?;
    let data = match r.u8()? {
        KIND_LABELED => {
            let num_classes = r.usize()?;
            let len = r.usize()?;
            let dim = r.usize()?;
            let samples = (0..len)
                .map(|_| {
                    let y = r.usize()?;
                    Ok((vector(&mut r, dim)?, y))
                })
                .collect::<Result<Vec<_>>>()?;
            Dataset::Labeled(LabeledDataset::new(samples, num_classes)?)
        }
        KIND_PAIR => {
            let len = r.usize()?;
            let dim = r.usize()?;
            let subjects = (0..len)
                .map(|_| {
                    let subject_id = r.u64()?;
                    let k = r.usize()?;
                    let id_input = vector(&mut r, dim)?;
                    let selfie_inputs = (0..k).map(|_| vector(&mut r, dim)).collect::<Result<_>>()?;
                    Ok(PairSubject {
                        subject_id,
                        id_input,
                        selfie_inputs,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Dataset::Pair(PairDataset::new(subjects)?)
        }
        other => return Err(Error::FormatVersionMismatch(format!("unknown dataset kind {other}"))),
    };
    r.finish()?;
    Ok(data)
}

pub fn save_labeled(path: &Path, data: &LabeledDataset) -> Result<()> {
    fsio::write_atomic(path, &encode_labeled(data))
}

pub fn save_pair(path: &Path, data: &PairDataset) -> Result<()> {
    fsio::write_atomic(path, &encode_pair(data))
}

pub fn load(path: &Path) -> Result<Dataset> {
    decode(&fsio::read(path)?)
}

pub fn load_labeled(path: &Path) -> Result<LabeledDataset> {
    match load(path)? {
        Dataset::Labeled(d) => Ok(d),
        Dataset::Pair(_) => Err(Error::ConfigInvalid(format!(
            "{} holds pair data, expected labeled data",
            path.display()
        ))),
    }
}

pub fn load_pair(path: &Path) -> Result<PairDataset> {
    match load(path)? {
        Dataset::Pair(d) => Ok(d),
        Dataset::Labeled(_) => Err(Error::ConfigInvalid(format!(
            "{} holds labeled data, expected pair data",
            path.display()
        ))),
    }
}
