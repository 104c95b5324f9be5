//! Adam optimizer state and update step.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Per-parameter Adam state: exponential moving averages of the gradient and
/// its square, plus the step counter driving bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Matrix,
    second_moment: Matrix,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
}

impl AdamState {
    /// State for a `rows x cols` parameter with the standard
    /// beta1=0.9, beta2=0.999, epsilon=1e-8 coefficients.
    pub fn new(rows: usize, cols: usize, learning_rate: f64) -> Self {
        AdamState {
            first_moment: Matrix::zeros(rows, cols),
            second_moment: Matrix::zeros(rows, cols),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            learning_rate,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update, applied in place to `param`.
pub fn adam_step(param: &mut Matrix, grad: &Matrix, state: &mut AdamState) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != state.first_moment.shape() {
        return Err(Error::Dimension(format!(
            "adam shapes disagree: param {:?}, grad {:?}, state {:?}",
            param.shape(),
            grad.shape(),
            state.first_moment.shape()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);

    let m = state.first_moment.data_mut();
    let v = state.second_moment.data_mut();
    let p = param.data_mut();
    let g = grad.data();
    for i in 0..p.len() {
        m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
        v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        p[i] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}
