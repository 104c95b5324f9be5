//! Binary checkpoints: autoencoder weights, both coefficient matrices, and
//! the hyperparameters that produced them.
//!
//! Layout (all integers little-endian, all floats IEEE-754 f64 LE):
//! magic `DSESCKPT`, u8 identity flag, then (for non-identity autoencoders)
//! the encoder and decoder layer lists as `count, {out, in, activation,
//! weights row-major, biases}`, then u64 n, C, theta, and the hyperparameter
//! block.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Activation, Autoencoder, CoeffMatrix, HyperParams, Layer, RegOrder};
use crate::numerics::Matrix;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DSESCKPT";

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub ae: Autoencoder,
    pub c: CoeffMatrix,
    pub theta: CoeffMatrix,
    pub hp: HyperParams,
}

fn activation_code(a: Activation) -> u8 {
    match a {
        Activation::Linear => 0,
        Activation::Tanh => 1,
        Activation::Relu => 2,
        Activation::Sigmoid => 3,
    }
}

fn activation_from_code(code: u8) -> Result<Activation> {
    match code {
        0 => Ok(Activation::Linear),
        1 => Ok(Activation::Tanh),
        2 => Ok(Activation::Relu),
        3 => Ok(Activation::Sigmoid),
        other => Err(Error::Numeric(format!("unknown activation code {other}"))),
    }
}

fn push_matrix(bytes: &mut Vec<u8>, m: &Matrix) {
    for v in m.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
}

fn push_layers(bytes: &mut Vec<u8>, layers: &[Layer]) {
    bytes.extend_from_slice(&(layers.len() as u64).to_le_bytes());
    for layer in layers {
        bytes.extend_from_slice(&(layer.out_dim() as u64).to_le_bytes());
        bytes.extend_from_slice(&(layer.in_dim() as u64).to_le_bytes());
        bytes.push(activation_code(layer.activation));
        push_matrix(bytes, &layer.weight);
        push_matrix(bytes, &layer.bias);
    }
}

pub fn save_checkpoint(
    path: &Path,
    ae: &Autoencoder,
    c: &CoeffMatrix,
    theta: &CoeffMatrix,
    hp: &HyperParams,
) -> Result<()> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.push(u8::from(ae.is_identity()));
    if !ae.is_identity() {
        push_layers(&mut bytes, ae.encoder());
        push_layers(&mut bytes, ae.decoder());
    }
    let n = c.n() as u64;
    bytes.extend_from_slice(&n.to_le_bytes());
    push_matrix(&mut bytes, c.matrix());
    push_matrix(&mut bytes, theta.matrix());

    for v in [hp.lambda1, hp.lambda2, hp.lambda3, hp.lambda4, hp.gamma, hp.tau] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes.push(u8::from(hp.p));
    bytes.extend_from_slice(&(hp.pretrain_epochs as u64).to_le_bytes());
    bytes.extend_from_slice(&(hp.train_epochs as u64).to_le_bytes());
    bytes.extend_from_slice(&hp.lr_pretrain.to_le_bytes());
    bytes.extend_from_slice(&hp.lr_train.to_le_bytes());
    bytes.extend_from_slice(&hp.seed.to_le_bytes());

    atomic_write(path, &bytes)
}

/// Writes through a temp file plus rename so concurrent readers never see a
/// partial checkpoint.
pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: String,
}

impl<'a> Reader<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: 0,
            message: format!("{} (offset {})", message.into(), self.pos),
        }
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.bytes.len() {
            return Err(self.err("unexpected end of checkpoint"));
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let raw = self.take(8 * rows * cols)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Matrix::from_vec(rows, cols, data)
    }

    fn layers(&mut self) -> Result<Vec<Layer>> {
        let count = self.u64()? as usize;
        if count > 1024 {
            return Err(self.err(format!("implausible layer count {count}")));
        }
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let out = self.u64()? as usize;
            let inp = self.u64()? as usize;
            let activation = activation_from_code(self.u8()?)?;
            let weight = self.matrix(out, inp)?;
            let bias = self.matrix(out, 1)?;
            layers.push(Layer {
                weight,
                bias,
                activation,
            });
        }
        Ok(layers)
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        path: path.display().to_string(),
    };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(r.err("bad magic, expected DSESCKPT"));
    }
    let identity = r.u8()? != 0;
    let ae = if identity {
        Autoencoder::identity()
    } else {
        let encoder = r.layers()?;
        let decoder = r.layers()?;
        Autoencoder::from_layers(encoder, decoder)?
    };
    let n = r.u64()? as usize;
    let c = CoeffMatrix::new(r.matrix(n, n)?)?;
    let theta = CoeffMatrix::new(r.matrix(n, n)?)?;

    let lambda1 = r.f64()?;
    let lambda2 = r.f64()?;
    let lambda3 = r.f64()?;
    let lambda4 = r.f64()?;
    let gamma = r.f64()?;
    let tau = r.f64()?;
    let p = RegOrder::try_from(r.u8()?).map_err(Error::Numeric)?;
    let pretrain_epochs = r.u64()? as usize;
    let train_epochs = r.u64()? as usize;
    let lr_pretrain = r.f64()?;
    let lr_train = r.f64()?;
    let seed = r.u64()?;
    if r.pos != bytes.len() {
        return Err(r.err("trailing bytes after checkpoint payload"));
    }

    Ok(Checkpoint {
        ae,
        c,
        theta,
        hp: HyperParams {
            lambda1,
            lambda2,
            lambda3,
            lambda4,
            gamma,
            tau,
            p,
            pretrain_epochs,
            train_epochs,
            lr_pretrain,
            lr_train,
            seed,
        },
    })
}
