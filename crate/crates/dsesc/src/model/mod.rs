//! The double self-expressive model: autoencoder, both coefficient layers,
//! loss terms with analytic gradients, and the two-stage training loop.

mod autoencoder;
pub(crate) mod checkpoint;
mod grad;
mod loss;
mod train;

pub use autoencoder::{Activation, Autoencoder, Layer, LayerGrad};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC};
pub use grad::{grad_total, Gradients};
pub use loss::{
    loss_contrastive, loss_double, loss_dsc, loss_pretrain, loss_total, reg_norm,
};
pub use train::{pretrain, train, LossCurves, TrainOutput};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Order of the coefficient regularizer: entrywise L1 or squared Frobenius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum RegOrder {
    One,
    Two,
}

impl TryFrom<u8> for RegOrder {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(RegOrder::One),
            2 => Ok(RegOrder::Two),
            other => Err(format!("regularizer order must be 1 or 2, got {other}")),
        }
    }
}

impl From<RegOrder> for u8 {
    fn from(p: RegOrder) -> u8 {
        match p {
            RegOrder::One => 1,
            RegOrder::Two => 2,
        }
    }
}

/// All tunable scalars of the objective and the training schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub gamma: f64,
    pub tau: f64,
    pub p: RegOrder,
    pub pretrain_epochs: usize,
    pub train_epochs: usize,
    pub lr_pretrain: f64,
    pub lr_train: f64,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            lambda1: 1.0,
            lambda2: 10.0,
            lambda3: 10.0,
            lambda4: 1.0,
            gamma: 0.1,
            tau: 1.0,
            p: RegOrder::Two,
            pretrain_epochs: 500,
            train_epochs: 1000,
            lr_pretrain: 1e-3,
            lr_train: 1e-3,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let lambdas = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("lambda4", self.lambda4),
            ("gamma", self.gamma),
        ];
        for (name, v) in lambdas {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tau must be finite and > 0, got {}",
                self.tau
            )));
        }
        for (name, v) in [
            ("lr_pretrain", self.lr_pretrain),
            ("lr_train", self.lr_train),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// An n x n self-expressive coefficient matrix with an exactly zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffMatrix(Matrix);

impl CoeffMatrix {
    pub fn zeros(n: usize) -> Self {
        CoeffMatrix(Matrix::zeros(n, n))
    }

    /// Wraps a matrix, validating squareness, finiteness, and the zero
    /// diagonal.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "coefficient matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if !m.is_finite() {
            return Err(Error::Numeric(
                "coefficient matrix has non-finite entries".into(),
            ));
        }
        if m.diag().iter().any(|&d| d != 0.0) {
            return Err(Error::Constraint(
                "coefficient matrix diagonal must be exactly zero".into(),
            ));
        }
        Ok(CoeffMatrix(m))
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl std::ops::Deref for CoeffMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// One full forward evaluation shared by loss and gradient computation.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub z: Matrix,
    pub zc: Matrix,
    pub xhat: Matrix,
    pub(crate) enc_cache: autoencoder::ForwardCache,
    pub(crate) dec_cache: autoencoder::ForwardCache,
}

/// Computes Z = f(X), ZC, and X_hat = g(ZC), keeping the layer caches needed
/// for backprop.
pub fn forward_pass(ae: &Autoencoder, x: &Matrix, c: &Matrix) -> Result<ForwardPass> {
    if c.rows() != x.cols() || !c.is_square() {
        return Err(Error::Dimension(format!(
            "coefficient matrix must be {n}x{n} for {n} samples, got {}x{}",
            c.rows(),
            c.cols(),
            n = x.cols()
        )));
    }
    let (z, enc_cache) = if ae.is_identity() {
        (x.clone(), autoencoder::ForwardCache::empty())
    } else {
        autoencoder::forward(ae.encoder(), x)?
    };
    let zc = z.matmul(c)?;
    let (xhat, dec_cache) = if ae.is_identity() {
        (zc.clone(), autoencoder::ForwardCache::empty())
    } else {
        autoencoder::forward(ae.decoder(), &zc)?
    };
    Ok(ForwardPass {
        z,
        zc,
        xhat,
        enc_cache,
        dec_cache,
    })
}
