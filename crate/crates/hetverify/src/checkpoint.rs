//! Model checkpoints: magic `HVCKPT`, version, the model configuration, then
//! every parameter as a little-endian `f64` in layer order (`W0, b0, W1, …`).

use std::path::Path;

use hetverify_core::model::{Activation, EmbeddingModel, ModelConfig};

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::fsio;

pub const MAGIC: &[u8; 6] = b"HVCKPT";
pub const VERSION: u32 = 1;

fn activation_code(a: Activation) -> u8 {
    match a {
        Activation::Relu => 0,
        Activation::Tanh => 1,
    }
}

pub fn encode(model: &EmbeddingModel) -> Vec<u8> {
    let cfg = model.config();
    let mut w = Writer::default();
    w.usize(cfg.input_dim);
    w.usize(cfg.hidden_dims.len());
    for &h in &cfg.hidden_dims {
        w.usize(h);
    }
    w.usize(cfg.embedding_dim);
    w.u8(activation_code(cfg.activation));
    w.u64(cfg.init_seed);
    let params = model.flatten();
    w.usize(params.len());
    w.f64s(&params);
    w.finish(MAGIC, VERSION)
}

pub fn decode(bytes: &[u8]) -> Result<EmbeddingModel> {
    let mut r = Reader::open(bytes, MAGIC, VERSION)?;
    let input_dim = r.usize()?;
    let n_hidden = r.usize()?;
    let hidden_dims = (0..n_hidden).map(|_| r.usize()).collect::<Result<Vec<_>>>()?;
    let embedding_dim = r.usize()?;
    let activation = match r.u8()? {
        0 => Activation::Relu,
        1 => Activation::Tanh,
        other => {
            return Err(Error::FormatVersionMismatch(format!("unknown activation code {other}")));
        }
    };
    let init_seed = r.u64()?;
    let n = r.usize()?;
    let params = r.f64s(n)?;
    r.finish()?;
    let mut model = EmbeddingModel::init(ModelConfig {
        input_dim,
        hidden_dims,
        embedding_dim,
        activation,
        init_seed,
    })?;
    if n != model.num_params() {
        return Err(Error::FormatVersionMismatch(format!(
            "{n} parameters stored, configuration needs {}",
            model.num_params()
        )));
    }
    model.set_flat(&params)?;
    Ok(model)
}

pub fn save(path: &Path, model: &EmbeddingModel) -> Result<()> {
    fsio::write_atomic(path, &encode(model))
}

pub fn load(path: &Path) -> Result<EmbeddingModel> {
    decode(&fsio::read(path)?)
}
