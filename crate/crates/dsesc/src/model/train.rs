//! Two-stage training: reconstruction-only pretraining of the autoencoder,
//! then joint full-batch Adam over encoder, decoder, C, and theta.
//!
//! Both stages are deterministic functions of their inputs: all randomness
//! lives in the weight initialization that happens before training starts.

use crate::error::{Error, Result};
use crate::model::autoencoder::backward;
use crate::model::grad::grad_total_with;
use crate::model::{
    forward_pass, loss_contrastive, loss_double, loss_dsc, Autoencoder, CoeffMatrix,
    HyperParams,
};
use crate::numerics::{adam_step, AdamState, Matrix};

/// Per-epoch values of each loss term during joint training.
#[derive(Debug, Clone, Default)]
pub struct LossCurves {
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub l3: Vec<f64>,
    pub total: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub c: CoeffMatrix,
    pub theta: CoeffMatrix,
    pub ae: Autoencoder,
    pub curves: LossCurves,
}

struct LayerStates {
    weights: Vec<AdamState>,
    biases: Vec<AdamState>,
}

fn layer_states(layers: &[crate::model::Layer], lr: f64) -> LayerStates {
    LayerStates {
        weights: layers
            .iter()
            .map(|l| AdamState::new(l.weight.rows(), l.weight.cols(), lr))
            .collect(),
        biases: layers
            .iter()
            .map(|l| AdamState::new(l.bias.rows(), 1, lr))
            .collect(),
    }
}

fn step_layers(
    layers: &mut [crate::model::Layer],
    grads: &[crate::model::LayerGrad],
    states: &mut LayerStates,
) -> Result<()> {
    for (i, (layer, grad)) in layers.iter_mut().zip(grads).enumerate() {
        adam_step(&mut layer.weight, &grad.weight, &mut states.weights[i])?;
        adam_step(&mut layer.bias, &grad.bias, &mut states.biases[i])?;
    }
    Ok(())
}

/// Stage one: full-batch Adam on `0.5 ||X - g(f(X))||_F^2`.
/// Returns the trained autoencoder and the per-epoch loss curve.
pub fn pretrain(mut ae: Autoencoder, x: &Matrix, hp: &HyperParams) -> Result<(Autoencoder, Vec<f64>)> {
    hp.validate()?;
    let mut curve = Vec::with_capacity(hp.pretrain_epochs);
    let mut enc_states = layer_states(ae.encoder(), hp.lr_pretrain);
    let mut dec_states = layer_states(ae.decoder(), hp.lr_pretrain);

    for epoch in 0..hp.pretrain_epochs {
        let (z, enc_cache) = if ae.is_identity() {
            (x.clone(), super::autoencoder::ForwardCache::empty())
        } else {
            super::autoencoder::forward(ae.encoder(), x)?
        };
        let (xhat, dec_cache) = if ae.is_identity() {
            (z.clone(), super::autoencoder::ForwardCache::empty())
        } else {
            super::autoencoder::forward(ae.decoder(), &z)?
        };
        let loss = crate::model::loss_pretrain(x, &xhat)?;
        if !loss.is_finite() {
            return Err(Error::Training {
                epoch,
                message: format!("pretraining loss became non-finite ({loss})"),
            });
        }
        curve.push(loss);

        if !ae.is_identity() {
            let dxhat = xhat.sub(x)?;
            let (dec_grads, d_z) = backward(ae.decoder(), &dec_cache, &dxhat)?;
            let (enc_grads, _) = backward(ae.encoder(), &enc_cache, &d_z)?;
            step_layers(ae.decoder_mut(), &dec_grads, &mut dec_states)?;
            step_layers(ae.encoder_mut(), &enc_grads, &mut enc_states)?;
        }
    }
    Ok((ae, curve))
}

/// Stage two: joint full-batch Adam on the total objective over encoder,
/// decoder, C, and theta. C and theta start at zero and have their diagonals
/// re-zeroed after every optimizer step.
pub fn train(mut ae: Autoencoder, x: &Matrix, hp: &HyperParams) -> Result<TrainOutput> {
    hp.validate()?;
    let n = x.cols();
    let mut c = Matrix::zeros(n, n);
    let mut theta = Matrix::zeros(n, n);

    let mut curves = LossCurves::default();
    let mut enc_states = layer_states(ae.encoder(), hp.lr_train);
    let mut dec_states = layer_states(ae.decoder(), hp.lr_train);
    let mut c_state = AdamState::new(n, n, hp.lr_train);
    let mut theta_state = AdamState::new(n, n, hp.lr_train);

    for epoch in 0..hp.train_epochs {
        let fp = forward_pass(&ae, x, &c)?;
        let l1 = loss_dsc(x, &fp.xhat, &fp.z, &c, hp)?;
        let l2 = loss_double(&c, &theta, hp)?;
        let l3 = loss_contrastive(&fp.z, &c, hp.tau)?;
        let total = l1 + l2 + hp.gamma * l3;
        if !total.is_finite() {
            return Err(Error::Training {
                epoch,
                message: format!(
                    "loss became non-finite (L1 = {l1}, L2 = {l2}, L3 = {l3})"
                ),
            });
        }
        curves.l1.push(l1);
        curves.l2.push(l2);
        curves.l3.push(l3);
        curves.total.push(total);

        let grads = grad_total_with(&fp, x, &c, &theta, &ae, hp)?;
        adam_step(&mut c, &grads.c, &mut c_state)?;
        adam_step(&mut theta, &grads.theta, &mut theta_state)?;
        step_layers(ae.encoder_mut(), &grads.encoder, &mut enc_states)?;
        step_layers(ae.decoder_mut(), &grads.decoder, &mut dec_states)?;
        c.zero_diagonal();
        theta.zero_diagonal();
    }

    Ok(TrainOutput {
        c: CoeffMatrix::new(c)?,
        theta: CoeffMatrix::new(theta)?,
        ae,
        curves,
    })
}
