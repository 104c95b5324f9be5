//! Analytic gradients of the total objective with respect to every
//! trainable block: encoder layers, decoder layers, C, and theta.
//!
//! Quadratic terms are differentiated in closed form; the L1 regularizer
//! uses the subgradient sign(.) with sign(0) = 0; diagonal entries of the
//! C and theta gradients are forced to zero because those entries are
//! constrained, not free.

use crate::error::{Error, Result};
use crate::model::autoencoder::{backward, LayerGrad};
use crate::model::loss::{contrastive_softmax, cosine_stats};
use crate::model::{forward_pass, Autoencoder, ForwardPass, HyperParams, RegOrder};
use crate::numerics::Matrix;

#[derive(Debug, Clone)]
pub struct Gradients {
    /// Empty for the identity autoencoder.
    pub encoder: Vec<LayerGrad>,
    pub decoder: Vec<LayerGrad>,
    pub c: Matrix,
    pub theta: Matrix,
}

/// Gradient of `lambda * ||M||_p`.
fn reg_grad(m: &Matrix, p: RegOrder, lambda: f64) -> Matrix {
    match p {
        RegOrder::One => m.map(|v| {
            if v > 0.0 {
                lambda
            } else if v < 0.0 {
                -lambda
            } else {
                0.0
            }
        }),
        RegOrder::Two => m.scale(2.0 * lambda),
    }
}

/// Gradients of the total loss at `(ae, c, theta)` for data `x`.
/// Runs its own forward pass; see [`grad_total_with`] to reuse one.
pub fn grad_total(
    x: &Matrix,
    c: &Matrix,
    theta: &Matrix,
    ae: &Autoencoder,
    hp: &HyperParams,
) -> Result<Gradients> {
    if c.diag().iter().any(|&d| d != 0.0) || theta.diag().iter().any(|&d| d != 0.0) {
        return Err(Error::Constraint(
            "C and theta must have exactly zero diagonals".into(),
        ));
    }
    if c.shape() != theta.shape() {
        return Err(Error::Dimension(format!(
            "C shape {:?} does not match theta shape {:?}",
            c.shape(),
            theta.shape()
        )));
    }
    if !(hp.tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be > 0, got {}",
            hp.tau
        )));
    }
    let fp = forward_pass(ae, x, c)?;
    grad_total_with(&fp, x, c, theta, ae, hp)
}

/// Same as [`grad_total`] but reusing an existing forward pass.
pub(crate) fn grad_total_with(
    fp: &ForwardPass,
    x: &Matrix,
    c: &Matrix,
    theta: &Matrix,
    ae: &Autoencoder,
    hp: &HyperParams,
) -> Result<Gradients> {
    let z = &fp.z;
    let n = c.rows();
    let identity = ae.is_identity();

    // Reconstruction: dL/dXhat, then back through the decoder to dL/d(ZC).
    let dxhat = fp.xhat.sub(x)?;
    let (decoder_grads, mut d_zc) = if identity {
        (Vec::new(), dxhat)
    } else {
        backward(ae.decoder(), &fp.dec_cache, &dxhat)?
    };

    // Contrastive term: dL3/d(ZC) folds into d_zc; the direct dL3/dZ part is
    // kept for the encoder path.
    let mut d_z_contrastive: Option<Matrix> = None;
    if hp.gamma > 0.0 {
        let (d_first, d_zhat) = contrastive_grads(z, &fp.zc, hp.tau)?;
        d_zc.axpy(hp.gamma, &d_zhat)?;
        d_z_contrastive = Some(d_first);
    }

    // dL/dC = lambda1 * reg'(C) - 2 lambda2 Z^T (Z - ZC) + Z^T dL/d(ZC)
    //         + 2 lambda3 (C - C theta)(I - theta)^T.
    let zt = z.transpose();
    let mut grad_c = reg_grad(c, hp.p, hp.lambda1);
    let resid_z = z.sub(&fp.zc)?;
    if hp.lambda2 > 0.0 {
        grad_c.axpy(-2.0 * hp.lambda2, &zt.matmul(&resid_z)?)?;
    }
    grad_c.axpy(1.0, &zt.matmul(&d_zc)?)?;

    let mut grad_theta = reg_grad(theta, hp.p, hp.lambda4);
    if hp.lambda3 > 0.0 {
        let resid_c = c.sub(&c.matmul(theta)?)?;
        // d/dC: 2 l3 (R - R theta^T), d/dtheta: -2 l3 C^T R, R = C - C theta.
        grad_c.axpy(2.0 * hp.lambda3, &resid_c)?;
        grad_c.axpy(-2.0 * hp.lambda3, &resid_c.matmul(&theta.transpose())?)?;
        grad_theta.axpy(-2.0 * hp.lambda3, &c.transpose().matmul(&resid_c)?)?;
    }

    // Constrained entries carry no gradient.
    grad_c.zero_diagonal();
    grad_theta.zero_diagonal();
    debug_assert_eq!(grad_c.shape(), (n, n));

    // Encoder path: dL/dZ = 2 lambda2 (R - R C^T) + dL/d(ZC) C^T + gamma dL3/dZ.
    let encoder_grads = if identity {
        Vec::new()
    } else {
        let ct = c.transpose();
        let mut d_z = d_zc.matmul(&ct)?;
        if hp.lambda2 > 0.0 {
            d_z.axpy(2.0 * hp.lambda2, &resid_z)?;
            d_z.axpy(-2.0 * hp.lambda2, &resid_z.matmul(&ct)?)?;
        }
        if let Some(d_first) = &d_z_contrastive {
            d_z.axpy(hp.gamma, d_first)?;
        }
        backward(ae.encoder(), &fp.enc_cache, &d_z)?.0
    };

    Ok(Gradients {
        encoder: encoder_grads,
        decoder: decoder_grads,
        c: grad_c,
        theta: grad_theta,
    })
}

/// Gradients of the raw contrastive loss (no gamma factor) with respect to
/// the columns of Z directly and the columns of ZC.
///
/// With u_i = z_i/|z_i|, v_j = zhat_j/|zhat_j|, s_ij = u_i . v_j and
/// A_ij = (P_ij - delta_ij)/tau:
///   dL3/dz_i    = sum_j A_ij (v_j - s_ij u_i) / |z_i|
///   dL3/dzhat_j = sum_i A_ij (u_i - s_ij v_j) / |zhat_j|
/// Terms involving a zero column are defined as zero.
fn contrastive_grads(z: &Matrix, zc: &Matrix, tau: f64) -> Result<(Matrix, Matrix)> {
    let stats = cosine_stats(z, zc)?;
    let (probs, _) = contrastive_softmax(&stats.s, tau);
    let n = z.cols();
    let d = z.rows();

    let mut a = probs;
    for i in 0..n {
        a.set(i, i, a.get(i, i) - 1.0);
    }
    let a = a.scale(1.0 / tau);

    // Unit-column versions of Z and ZC, with zero columns left zero.
    let mut u = z.clone();
    let mut v = zc.clone();
    for j in 0..n {
        let zn = stats.z_norms[j];
        let vn = stats.zc_norms[j];
        for i in 0..d {
            u.set(i, j, if zn > 0.0 { u.get(i, j) / zn } else { 0.0 });
            v.set(i, j, if vn > 0.0 { v.get(i, j) / vn } else { 0.0 });
        }
    }

    // Row sums and column sums of A (.) S.
    let mut row_sums = vec![0.0; n];
    let mut col_sums = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let w = a.get(i, j) * stats.s.get(i, j);
            row_sums[i] += w;
            col_sums[j] += w;
        }
    }

    // dZ_first = (V A^T - U diag(row_sums)) diag(1/|z_i|).
    let mut d_first = v.matmul(&a.transpose())?;
    for j in 0..n {
        let zn = stats.z_norms[j];
        for i in 0..d {
            let val = if zn > 0.0 {
                (d_first.get(i, j) - row_sums[j] * u.get(i, j)) / zn
            } else {
                0.0
            };
            d_first.set(i, j, val);
        }
    }

    // dZhat = (U A - V diag(col_sums)) diag(1/|zhat_j|).
    let mut d_zhat = u.matmul(&a)?;
    for j in 0..n {
        let vn = stats.zc_norms[j];
        for i in 0..d {
            let val = if vn > 0.0 {
                (d_zhat.get(i, j) - col_sums[j] * v.get(i, j)) / vn
            } else {
                0.0
            };
            d_zhat.set(i, j, val);
        }
    }

    Ok((d_first, d_zhat))
}
