//! Dense autoencoder with manual forward/backward passes.
//!
//! Layers act on matrices whose columns are samples: `h' = act(W h + b)`.
//! The identity autoencoder (no layers) is first-class so the
//! self-expressive machinery can run directly on raw data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Derivative as a function of the pre-activation value.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 - s)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    /// out_dim x in_dim.
    pub weight: Matrix,
    /// out_dim x 1, added to every column.
    pub bias: Matrix,
    pub activation: Activation,
}

impl Layer {
    /// Xavier/Glorot uniform init: weights in (-a, a) with
    /// a = sqrt(6 / (fan_in + fan_out)), biases zero.
    pub fn glorot(out_dim: usize, in_dim: usize, activation: Activation, rng: &mut Rng) -> Self {
        let a = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let mut weight = Matrix::zeros(out_dim, in_dim);
        for v in weight.data_mut() {
            *v = rng.uniform(-a, a);
        }
        Layer {
            weight,
            bias: Matrix::zeros(out_dim, 1),
            activation,
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Gradient of one layer's parameters, shaped like the layer itself.
#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub weight: Matrix,
    pub bias: Matrix,
}

#[derive(Debug, Clone)]
pub struct Autoencoder {
    encoder: Vec<Layer>,
    decoder: Vec<Layer>,
    identity: bool,
}

impl Autoencoder {
    /// The identity map: encode and decode return their input unchanged.
    pub fn identity() -> Self {
        Autoencoder {
            encoder: Vec::new(),
            decoder: Vec::new(),
            identity: true,
        }
    }

    /// Symmetric dense autoencoder `input -> hidden... -> latent` with a
    /// mirrored decoder whose final layer is linear.
    pub fn dense(
        input_dim: usize,
        hidden: &[usize],
        latent_dim: usize,
        activation: Activation,
        rng: &mut Rng,
    ) -> Result<Self> {
        if input_dim == 0 || latent_dim == 0 || hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidArgument(
                "autoencoder layer sizes must be positive".into(),
            ));
        }
        let mut enc_dims = vec![input_dim];
        enc_dims.extend_from_slice(hidden);
        enc_dims.push(latent_dim);

        let mut encoder = Vec::with_capacity(enc_dims.len() - 1);
        for w in enc_dims.windows(2) {
            encoder.push(Layer::glorot(w[1], w[0], activation, rng));
        }
        let dec_dims: Vec<usize> = enc_dims.iter().rev().copied().collect();
        let mut decoder = Vec::with_capacity(dec_dims.len() - 1);
        for (idx, w) in dec_dims.windows(2).enumerate() {
            let act = if idx == dec_dims.len() - 2 {
                Activation::Linear
            } else {
                activation
            };
            decoder.push(Layer::glorot(w[1], w[0], act, rng));
        }
        Ok(Autoencoder {
            encoder,
            decoder,
            identity: false,
        })
    }

    pub fn from_layers(encoder: Vec<Layer>, decoder: Vec<Layer>) -> Result<Self> {
        if encoder.is_empty() && decoder.is_empty() {
            return Ok(Autoencoder::identity());
        }
        let enc_out = encoder.last().map(Layer::out_dim);
        let dec_in = decoder.first().map(Layer::in_dim);
        if let (Some(e), Some(d)) = (enc_out, dec_in) {
            if e != d {
                return Err(Error::Dimension(format!(
                    "encoder output dim {e} does not match decoder input dim {d}"
                )));
            }
        }
        Ok(Autoencoder {
            encoder,
            decoder,
            identity: false,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn encoder(&self) -> &[Layer] {
        &self.encoder
    }

    pub fn decoder(&self) -> &[Layer] {
        &self.decoder
    }

    pub(crate) fn encoder_mut(&mut self) -> &mut Vec<Layer> {
        &mut self.encoder
    }

    pub(crate) fn decoder_mut(&mut self) -> &mut Vec<Layer> {
        &mut self.decoder
    }

    pub fn latent_dim(&self, input_dim: usize) -> usize {
        if self.identity {
            input_dim
        } else {
            self.encoder.last().map_or(input_dim, Layer::out_dim)
        }
    }

    /// Z = f(X).
    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        if self.identity {
            return Ok(x.clone());
        }
        Ok(forward(&self.encoder, x)?.0)
    }

    /// Decodes a latent matrix back to data space.
    pub fn decode(&self, m: &Matrix) -> Result<Matrix> {
        if self.identity {
            return Ok(m.clone());
        }
        Ok(forward(&self.decoder, m)?.0)
    }
}

/// Per-layer values cached by the forward pass for backprop.
#[derive(Debug, Clone)]
pub(crate) struct ForwardCache {
    /// Input to each layer (length = number of layers).
    pub inputs: Vec<Matrix>,
    /// Pre-activation of each layer.
    pub preacts: Vec<Matrix>,
}

impl ForwardCache {
    pub fn empty() -> Self {
        ForwardCache {
            inputs: Vec::new(),
            preacts: Vec::new(),
        }
    }
}

pub(crate) fn forward(layers: &[Layer], x: &Matrix) -> Result<(Matrix, ForwardCache)> {
    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(layers.len()),
        preacts: Vec::with_capacity(layers.len()),
    };
    let mut h = x.clone();
    for layer in layers {
        if layer.in_dim() != h.rows() {
            return Err(Error::Dimension(format!(
                "layer expects {} input rows, got {}",
                layer.in_dim(),
                h.rows()
            )));
        }
        let mut pre = layer.weight.matmul(&h)?;
        for i in 0..pre.rows() {
            let b = layer.bias.get(i, 0);
            for j in 0..pre.cols() {
                pre.set(i, j, pre.get(i, j) + b);
            }
        }
        let out = pre.map(|v| layer.activation.apply(v));
        cache.inputs.push(h);
        cache.preacts.push(pre);
        h = out;
    }
    Ok((h, cache))
}

/// Backpropagates `grad_output` (gradient w.r.t. the stack's output) through
/// the layers, returning per-layer parameter gradients and the gradient
/// w.r.t. the stack's input.
pub(crate) fn backward(
    layers: &[Layer],
    cache: &ForwardCache,
    grad_output: &Matrix,
) -> Result<(Vec<LayerGrad>, Matrix)> {
    let mut grads: Vec<LayerGrad> = Vec::with_capacity(layers.len());
    let mut upstream = grad_output.clone();
    for (layer, (input, pre)) in layers
        .iter()
        .zip(cache.inputs.iter().zip(&cache.preacts))
        .rev()
    {
        // delta = upstream (.) act'(pre)
        let mut delta = upstream.clone();
        for (d, &p) in delta.data_mut().iter_mut().zip(pre.data()) {
            *d *= layer.activation.derivative(p);
        }
        let grad_w = delta.matmul(&input.transpose())?;
        let mut grad_b = Matrix::zeros(delta.rows(), 1);
        for i in 0..delta.rows() {
            grad_b.set(i, 0, delta.row(i).iter().sum());
        }
        upstream = layer.weight.transpose().matmul(&delta)?;
        grads.push(LayerGrad {
            weight: grad_w,
            bias: grad_b,
        });
    }
    grads.reverse();
    Ok((grads, upstream))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_encode_decode() {
        let ae = Autoencoder::identity();
        let x = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(ae.encode(&x).unwrap(), x);
        assert_eq!(ae.decode(&x).unwrap(), x);
        assert_eq!(ae.latent_dim(2), 2);
    }

    #[test]
    fn single_linear_layer_is_matrix_product() {
        let w = Matrix::from_vec(2, 3, vec![1.0, 0.0, 1.0, 0.0, 2.0, 0.0]).unwrap();
        let layer = Layer {
            weight: w.clone(),
            bias: Matrix::zeros(2, 1),
            activation: Activation::Linear,
        };
        let ae = Autoencoder::from_layers(vec![layer], vec![]).unwrap();
        let x = Matrix::from_vec(3, 2, vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]).unwrap();
        assert_eq!(ae.encode(&x).unwrap(), w.matmul(&x).unwrap());
    }

    #[test]
    fn zero_weights_tanh_gives_zero() {
        let layer = Layer {
            weight: Matrix::zeros(2, 2),
            bias: Matrix::zeros(2, 1),
            activation: Activation::Tanh,
        };
        let ae = Autoencoder::from_layers(vec![layer], vec![]).unwrap();
        let x = Matrix::from_vec(2, 2, vec![1.0, -3.0, 0.5, 2.0]).unwrap();
        let z = ae.encode(&x).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn encode_rejects_wrong_input_dim() {
        let mut rng = Rng::new(1);
        let ae = Autoencoder::dense(4, &[3], 2, Activation::Tanh, &mut rng).unwrap();
        let x = Matrix::zeros(5, 2);
        assert!(matches!(ae.encode(&x), Err(Error::Dimension(_))));
    }

    #[test]
    fn dense_shapes_mirror() {
        let mut rng = Rng::new(2);
        let ae = Autoencoder::dense(6, &[5], 4, Activation::Tanh, &mut rng).unwrap();
        assert_eq!(ae.encoder().len(), 2);
        assert_eq!(ae.decoder().len(), 2);
        assert_eq!(ae.latent_dim(6), 4);
        assert_eq!(ae.decoder().last().unwrap().out_dim(), 6);
        assert_eq!(ae.decoder().last().unwrap().activation, Activation::Linear);
        let x = Matrix::zeros(6, 3);
        let z = ae.encode(&x).unwrap();
        assert_eq!(z.shape(), (4, 3));
        assert_eq!(ae.decode(&z).unwrap().shape(), (6, 3));
    }

    #[test]
    fn mismatched_encoder_decoder_dims_rejected() {
        let mut rng = Rng::new(3);
        let enc = vec![Layer::glorot(4, 6, Activation::Tanh, &mut rng)];
        let dec = vec![Layer::glorot(6, 5, Activation::Linear, &mut rng)];
        assert!(Autoencoder::from_layers(enc, dec).is_err());
    }

    #[test]
    fn backward_matches_finite_differences_on_one_layer() {
        let mut rng = Rng::new(9);
        let layers = vec![Layer::glorot(3, 4, Activation::Tanh, &mut rng)];
        let x = {
            let mut m = Matrix::zeros(4, 5);
            for v in m.data_mut() {
                *v = rng.normal();
            }
            m
        };
        // Scalar objective: sum of outputs.
        let (out, cache) = forward(&layers, &x).unwrap();
        let grad_out = out.map(|_| 1.0);
        let (grads, _) = backward(&layers, &cache, &grad_out).unwrap();

        let h = 1e-6;
        for r in 0..3 {
            for c in 0..4 {
                let mut plus = layers.clone();
                let wp = plus[0].weight.get(r, c);
                plus[0].weight.set(r, c, wp + h);
                let mut minus = layers.clone();
                let wm = minus[0].weight.get(r, c);
                minus[0].weight.set(r, c, wm - h);
                let fp = forward(&plus, &x).unwrap().0.sum();
                let fm = forward(&minus, &x).unwrap().0.sum();
                let fd = (fp - fm) / (2.0 * h);
                assert!(
                    (grads[0].weight.get(r, c) - fd).abs() < 1e-6,
                    "weight ({r},{c}): {} vs {fd}",
                    grads[0].weight.get(r, c)
                );
            }
        }
    }
}
