//! Loss terms: reconstruction pretraining, the self-expressive objective,
//! the second (coefficient-level) self-expressive objective, and the
//! contrastive term, plus their sum.
//!
//! The contrastive denominator sums `exp(cos(z_i, zhat_j)/tau)` over all
//! columns `zhat_j` of ZC (the InfoNCE softmax over candidate
//! reconstructions), with the cosine of a zero vector defined as 0.

use crate::error::{Error, Result};
use crate::model::{HyperParams, RegOrder};
use crate::numerics::Matrix;

/// ||M||_p for the coefficient regularizer: entrywise absolute sum for p=1,
/// squared Frobenius norm for p=2.
pub fn reg_norm(m: &Matrix, p: RegOrder) -> f64 {
    match p {
        RegOrder::One => m.abs_sum(),
        RegOrder::Two => m.frob_norm_sq(),
    }
}

/// Reconstruction loss `0.5 ||X - X_hat||_F^2`.
pub fn loss_pretrain(x: &Matrix, xhat: &Matrix) -> Result<f64> {
    if x.shape() != xhat.shape() {
        return Err(Error::Dimension(format!(
            "reconstruction shapes disagree: {:?} vs {:?}",
            x.shape(),
            xhat.shape()
        )));
    }
    Ok(0.5 * x.sub(xhat)?.frob_norm_sq())
}

fn check_zero_diag(m: &Matrix, name: &str) -> Result<()> {
    if m.diag().iter().any(|&d| d != 0.0) {
        return Err(Error::Constraint(format!(
            "{name} must have an exactly zero diagonal"
        )));
    }
    Ok(())
}

/// The self-expressive subspace clustering loss:
/// `0.5||X - X_hat||_F^2 + lambda1 ||C||_p + lambda2 ||Z - ZC||_F^2`.
pub fn loss_dsc(
    x: &Matrix,
    xhat: &Matrix,
    z: &Matrix,
    c: &Matrix,
    hp: &HyperParams,
) -> Result<f64> {
    if !c.is_square() || c.rows() != z.cols() {
        return Err(Error::Dimension(format!(
            "coefficient matrix {}x{} does not match {} samples",
            c.rows(),
            c.cols(),
            z.cols()
        )));
    }
    check_zero_diag(c, "C")?;
    let rec = loss_pretrain(x, xhat)?;
    let zc = z.matmul(c)?;
    let se = z.sub(&zc)?.frob_norm_sq();
    Ok(rec + hp.lambda1 * reg_norm(c, hp.p) + hp.lambda2 * se)
}

/// The coefficient-level self-expressive loss:
/// `lambda3 ||C - C theta||_F^2 + lambda4 ||theta||_p`.
pub fn loss_double(c: &Matrix, theta: &Matrix, hp: &HyperParams) -> Result<f64> {
    if c.shape() != theta.shape() || !c.is_square() {
        return Err(Error::Dimension(format!(
            "C and theta must be square with equal shape, got {:?} and {:?}",
            c.shape(),
            theta.shape()
        )));
    }
    check_zero_diag(theta, "theta")?;
    let ct = c.matmul(theta)?;
    let se = c.sub(&ct)?.frob_norm_sq();
    Ok(hp.lambda3 * se + hp.lambda4 * reg_norm(theta, hp.p))
}

/// Cosine similarity matrix between the columns of `z` and the columns of
/// `zc`, plus both sets of column norms. Zero columns get cosine 0.
pub(crate) struct CosineStats {
    /// s[i][j] = cos(z_i, zc_j).
    pub s: Matrix,
    pub z_norms: Vec<f64>,
    pub zc_norms: Vec<f64>,
}

pub(crate) fn cosine_stats(z: &Matrix, zc: &Matrix) -> Result<CosineStats> {
    let gram = z.transpose().matmul(zc)?;
    let z_norms = z.col_norms();
    let zc_norms = zc.col_norms();
    let n = z.cols();
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let denom = z_norms[i] * zc_norms[j];
            let v = if denom > 0.0 { gram.get(i, j) / denom } else { 0.0 };
            s.set(i, j, v);
        }
    }
    Ok(CosineStats { s, z_norms, zc_norms })
}

/// Row-wise softmax probabilities of `s / tau` and the loss contribution
/// `logsumexp_j(s_ij/tau) - s_ii/tau` per row.
pub(crate) fn contrastive_softmax(s: &Matrix, tau: f64) -> (Matrix, f64) {
    let n = s.rows();
    let mut probs = Matrix::zeros(n, n);
    let mut loss = 0.0;
    for i in 0..n {
        let row = s.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for &v in row {
            denom += ((v - max) / tau).exp();
        }
        // Guard: tau-scaled shift must use the same scaling as the terms.
        // exp((v - max)/tau) keeps every exponent <= 0.
        let lse = max / tau + denom.ln();
        loss += lse - s.get(i, i) / tau;
        for j in 0..n {
            probs.set(i, j, ((s.get(i, j) - max) / tau).exp() / denom);
        }
    }
    (probs, loss)
}

/// InfoNCE contrastive loss over positive pairs `(z_i, (ZC)_i)`:
/// `-sum_i log( exp(cos(z_i, zhat_i)/tau) / sum_j exp(cos(z_i, zhat_j)/tau) )`.
pub fn loss_contrastive(z: &Matrix, c: &Matrix, tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "temperature must be finite and > 0, got {tau}"
        )));
    }
    if !c.is_square() || c.rows() != z.cols() {
        return Err(Error::Dimension(format!(
            "coefficient matrix {}x{} does not match {} samples",
            c.rows(),
            c.cols(),
            z.cols()
        )));
    }
    let zc = z.matmul(c)?;
    let stats = cosine_stats(z, &zc)?;
    let (_, loss) = contrastive_softmax(&stats.s, tau);
    Ok(loss)
}

/// Total objective `L1 + L2 + gamma * L3`.
pub fn loss_total(
    x: &Matrix,
    xhat: &Matrix,
    z: &Matrix,
    c: &Matrix,
    theta: &Matrix,
    hp: &HyperParams,
) -> Result<f64> {
    let l1 = loss_dsc(x, xhat, z, c, hp)?;
    let l2 = loss_double(c, theta, hp)?;
    let l3 = loss_contrastive(z, c, hp.tau)?;
    Ok(l1 + l2 + hp.gamma * l3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn hp() -> HyperParams {
        HyperParams::default()
    }

    /// Direct-evaluation oracle for the self-expressive loss, written with
    /// plain loops so it shares no code with the implementation.
    fn oracle_dsc(x: &Matrix, xhat: &Matrix, z: &Matrix, c: &Matrix, hp: &HyperParams) -> f64 {
        let mut rec = 0.0;
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                let r = x.get(i, j) - xhat.get(i, j);
                rec += r * r;
            }
        }
        let mut reg = 0.0;
        for i in 0..c.rows() {
            for j in 0..c.cols() {
                reg += match hp.p {
                    RegOrder::One => c.get(i, j).abs(),
                    RegOrder::Two => c.get(i, j) * c.get(i, j),
                };
            }
        }
        let mut se = 0.0;
        for i in 0..z.rows() {
            for j in 0..z.cols() {
                let mut zc = 0.0;
                for m in 0..z.cols() {
                    zc += z.get(i, m) * c.get(m, j);
                }
                let r = z.get(i, j) - zc;
                se += r * r;
            }
        }
        0.5 * rec + hp.lambda1 * reg + hp.lambda2 * se
    }

    fn oracle_double(c: &Matrix, theta: &Matrix, hp: &HyperParams) -> f64 {
        let n = c.rows();
        let mut se = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut ct = 0.0;
                for m in 0..n {
                    ct += c.get(i, m) * theta.get(m, j);
                }
                let r = c.get(i, j) - ct;
                se += r * r;
            }
        }
        let mut reg = 0.0;
        for i in 0..n {
            for j in 0..n {
                reg += match hp.p {
                    RegOrder::One => theta.get(i, j).abs(),
                    RegOrder::Two => theta.get(i, j) * theta.get(i, j),
                };
            }
        }
        hp.lambda3 * se + hp.lambda4 * reg
    }

    fn random_zero_diag(n: usize, rng: &mut Rng) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.set(i, j, rng.normal());
                }
            }
        }
        m
    }

    #[test]
    fn pretrain_zero_when_equal() {
        let x = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(loss_pretrain(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn pretrain_identity_vs_zero() {
        let x = Matrix::identity(2);
        let zero = Matrix::zeros(2, 2);
        assert!((loss_pretrain(&x, &zero).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pretrain_quadratic_homogeneity() {
        let x = Matrix::from_vec(2, 2, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let xhat = Matrix::from_vec(2, 2, vec![0.0, 1.0, 1.5, 2.0]).unwrap();
        let base = loss_pretrain(&x, &xhat).unwrap();
        // Doubling the residual: xhat' = x - 2(x - xhat).
        let doubled = x.sub(&x.sub(&xhat).unwrap().scale(2.0)).unwrap();
        let scaled = loss_pretrain(&x, &doubled).unwrap();
        assert!((scaled - 4.0 * base).abs() < 1e-12);
    }

    #[test]
    fn dsc_zero_coefficient_reduces_to_lambda2_z_norm() {
        let mut params = hp();
        params.lambda1 = 0.7;
        params.lambda2 = 3.0;
        let z = Matrix::from_vec(2, 2, vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let c = Matrix::zeros(2, 2);
        let x = z.clone();
        let got = loss_dsc(&x, &x, &z, &c, &params).unwrap();
        assert!((got - params.lambda2 * z.frob_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn dsc_degenerates_to_pretrain() {
        let mut params = hp();
        params.lambda1 = 0.0;
        params.lambda2 = 0.0;
        let mut rng = Rng::new(5);
        let x = Matrix::from_vec(3, 4, (0..12).map(|_| rng.normal()).collect()).unwrap();
        let xhat = Matrix::from_vec(3, 4, (0..12).map(|_| rng.normal()).collect()).unwrap();
        let z = x.clone();
        let c = random_zero_diag(4, &mut rng);
        let got = loss_dsc(&x, &xhat, &z, &c, &params).unwrap();
        assert!((got - loss_pretrain(&x, &xhat).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn dsc_matches_direct_oracle() {
        // Frozen instance from the module contract: Z = I2, C = [[0,1],[1,0]],
        // X_hat = X, lambda1 = 0, lambda2 = 1 gives ||Z - ZC||_F^2 = 4.
        let mut params = hp();
        params.lambda1 = 0.0;
        params.lambda2 = 1.0;
        let z = Matrix::identity(2);
        let c = Matrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let got = loss_dsc(&z, &z, &z, &c, &params).unwrap();
        assert!((got - oracle_dsc(&z, &z, &z, &c, &params)).abs() < 1e-12);
        assert!((got - 4.0).abs() < 1e-12);

        // And on random instances, for both regularizer orders.
        let mut rng = Rng::new(8);
        for p in [RegOrder::One, RegOrder::Two] {
            let mut params = hp();
            params.p = p;
            params.lambda1 = 0.3;
            params.lambda2 = 2.5;
            let x = Matrix::from_vec(3, 5, (0..15).map(|_| rng.normal()).collect()).unwrap();
            let xhat = Matrix::from_vec(3, 5, (0..15).map(|_| rng.normal()).collect()).unwrap();
            let z = Matrix::from_vec(3, 5, (0..15).map(|_| rng.normal()).collect()).unwrap();
            let c = random_zero_diag(5, &mut rng);
            let got = loss_dsc(&x, &xhat, &z, &c, &params).unwrap();
            let want = oracle_dsc(&x, &xhat, &z, &c, &params);
            assert!((got - want).abs() < 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn dsc_rejects_nonzero_diagonal() {
        let z = Matrix::identity(2);
        let c = Matrix::from_vec(2, 2, vec![0.1, 1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(
            loss_dsc(&z, &z, &z, &c, &hp()),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn double_zero_theta_gives_lambda3_c_norm() {
        let mut params = hp();
        params.lambda3 = 2.0;
        params.lambda4 = 5.0;
        let c = Matrix::from_vec(2, 2, vec![0.0, 1.5, -0.5, 0.0]).unwrap();
        let theta = Matrix::zeros(2, 2);
        let got = loss_double(&c, &theta, &params).unwrap();
        assert!((got - params.lambda3 * c.frob_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn double_zero_c_gives_lambda4_reg() {
        let mut params = hp();
        params.lambda3 = 2.0;
        params.lambda4 = 5.0;
        params.p = RegOrder::One;
        let c = Matrix::zeros(2, 2);
        let theta = Matrix::from_vec(2, 2, vec![0.0, -2.0, 3.0, 0.0]).unwrap();
        let got = loss_double(&c, &theta, &params).unwrap();
        assert!((got - params.lambda4 * 5.0).abs() < 1e-12);
    }

    #[test]
    fn double_hand_computed_product() {
        // C = theta = [[0,1],[1,0]]: C theta = I, ||C - I||_F^2 = 4.
        let mut params = hp();
        params.lambda3 = 1.0;
        params.lambda4 = 0.0;
        let c = Matrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let got = loss_double(&c, &c, &params).unwrap();
        assert!((got - 4.0).abs() < 1e-12);
        assert!((got - oracle_double(&c, &c, &params)).abs() < 1e-12);
    }

    #[test]
    fn contrastive_single_sample_is_zero() {
        let z = Matrix::from_vec(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let c = Matrix::zeros(1, 1);
        assert!(loss_contrastive(&z, &c, 1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn contrastive_uniform_cosines_give_n_log_n() {
        // All columns of Z identical and C constant: every cosine is 1.
        let z = Matrix::from_vec(2, 3, vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]).unwrap();
        let mut c = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    c.set(i, j, 0.5);
                }
            }
        }
        let got = loss_contrastive(&z, &c, 1.0).unwrap();
        let want = 3.0 * 3.0_f64.ln();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn contrastive_orthonormal_case() {
        // cos matrix = I2 at tau = 1: loss = 2 ln(1 + e^-1).
        let z = Matrix::identity(2);
        let c = Matrix::identity(2); // L3 places no constraint on diag(C)
        let got = loss_contrastive(&z, &c, 1.0).unwrap();
        let want = 2.0 * (1.0 + (-1.0_f64).exp()).ln();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn contrastive_rejects_nonpositive_tau() {
        let z = Matrix::identity(2);
        let c = Matrix::zeros(2, 2);
        assert!(matches!(
            loss_contrastive(&z, &c, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            loss_contrastive(&z, &c, -1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn contrastive_handles_zero_columns() {
        let z = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let c = Matrix::zeros(2, 2); // ZC = 0, all cosines 0
        let got = loss_contrastive(&z, &c, 1.0).unwrap();
        assert!((got - 2.0 * 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn contrastive_invariant_to_global_rescaling() {
        let mut rng = Rng::new(21);
        let z = Matrix::from_vec(3, 4, (0..12).map(|_| rng.normal()).collect()).unwrap();
        let c = random_zero_diag(4, &mut rng);
        let base = loss_contrastive(&z, &c, 0.7).unwrap();
        for scale in [0.01, 3.0, 250.0] {
            let scaled = loss_contrastive(&z.scale(scale), &c, 0.7).unwrap();
            assert!((scaled - base).abs() < 1e-9, "scale {scale}");
        }
    }

    #[test]
    fn contrastive_invariant_to_column_rescaling_with_single_support() {
        // When every column of C has a single nonzero entry, each zhat_j is a
        // multiple of one z column, so rescaling any z column preserves all
        // cosines.
        let mut rng = Rng::new(33);
        let z = Matrix::from_vec(3, 3, (0..9).map(|_| rng.normal()).collect()).unwrap();
        let mut c = Matrix::zeros(3, 3);
        c.set(1, 0, 2.0);
        c.set(2, 1, 0.5);
        c.set(0, 2, 1.5);
        let base = loss_contrastive(&z, &c, 1.0).unwrap();
        let mut scaled = z.clone();
        for i in 0..3 {
            scaled.set(i, 1, scaled.get(i, 1) * 7.0);
        }
        let got = loss_contrastive(&scaled, &c, 1.0).unwrap();
        assert!((got - base).abs() < 1e-10);
    }

    #[test]
    fn total_is_sum_of_components() {
        let mut rng = Rng::new(13);
        let params = hp();
        let x = Matrix::from_vec(3, 5, (0..15).map(|_| rng.normal()).collect()).unwrap();
        let xhat = Matrix::from_vec(3, 5, (0..15).map(|_| rng.normal()).collect()).unwrap();
        let z = Matrix::from_vec(3, 5, (0..15).map(|_| rng.normal()).collect()).unwrap();
        let c = random_zero_diag(5, &mut rng);
        let theta = random_zero_diag(5, &mut rng);
        let total = loss_total(&x, &xhat, &z, &c, &theta, &params).unwrap();
        let sum = loss_dsc(&x, &xhat, &z, &c, &params).unwrap()
            + loss_double(&c, &theta, &params).unwrap()
            + params.gamma * loss_contrastive(&z, &c, params.tau).unwrap();
        assert!((total - sum).abs() < 1e-12);
    }

    #[test]
    fn total_with_gamma_zero_drops_contrastive() {
        let mut rng = Rng::new(14);
        let mut params = hp();
        params.gamma = 0.0;
        let x = Matrix::from_vec(2, 4, (0..8).map(|_| rng.normal()).collect()).unwrap();
        let xhat = Matrix::from_vec(2, 4, (0..8).map(|_| rng.normal()).collect()).unwrap();
        let z = Matrix::from_vec(2, 4, (0..8).map(|_| rng.normal()).collect()).unwrap();
        let c = random_zero_diag(4, &mut rng);
        let theta = random_zero_diag(4, &mut rng);
        let total = loss_total(&x, &xhat, &z, &c, &theta, &params).unwrap();
        let want = loss_dsc(&x, &xhat, &z, &c, &params).unwrap()
            + loss_double(&c, &theta, &params).unwrap();
        assert!((total - want).abs() < 1e-12);
    }

    #[test]
    fn total_with_all_weights_zero_is_pretrain() {
        let mut rng = Rng::new(15);
        let params = HyperParams {
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 0.0,
            lambda4: 0.0,
            gamma: 0.0,
            ..hp()
        };
        let x = Matrix::from_vec(2, 3, (0..6).map(|_| rng.normal()).collect()).unwrap();
        let xhat = Matrix::from_vec(2, 3, (0..6).map(|_| rng.normal()).collect()).unwrap();
        let z = x.clone();
        let c = random_zero_diag(3, &mut rng);
        let theta = random_zero_diag(3, &mut rng);
        let total = loss_total(&x, &xhat, &z, &c, &theta, &params).unwrap();
        assert!((total - loss_pretrain(&x, &xhat).unwrap()).abs() < 1e-12);
    }
}
