//! Affinity construction and normalized spectral clustering.
//!
//! Affinities come from coefficient matrices, either one at a time,
//! `W = (|C| + |C^T|)/2`, or fused, `W = (|C + theta| + |(C + theta)^T|)/2`.
//! Clustering uses the symmetric-normalized Laplacian
//! `L = I - D^{-1/2} W D^{-1/2}` with a row-normalized embedding, the
//! standard relaxation in this family of methods.

use crate::error::{Error, Result};
use crate::numerics::{kmeans, sym_eig, Matrix, Rng, DEFAULT_RESTARTS};

/// A symmetric, entrywise-nonnegative affinity matrix. Symmetry and
/// nonnegativity hold by construction; the diagonal is zero whenever the
/// source coefficient matrices have zero diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Affinity {
    w: Matrix,
}

impl Affinity {
    /// Wraps an existing matrix, validating symmetry and nonnegativity.
    pub fn from_matrix(w: Matrix) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::Dimension(format!(
                "affinity must be square, got {}x{}",
                w.rows(),
                w.cols()
            )));
        }
        for i in 0..w.rows() {
            for j in 0..w.cols() {
                if w.get(i, j) < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "affinity entry ({i},{j}) is negative"
                    )));
                }
                if w.get(i, j) != w.get(j, i) {
                    return Err(Error::InvalidArgument(format!(
                        "affinity is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Affinity { w })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    pub fn n(&self) -> usize {
        self.w.rows()
    }
}

/// `W = (|C| + |C^T|)/2`.
pub fn affinity_single(c: &Matrix) -> Result<Affinity> {
    if !c.is_square() {
        return Err(Error::Dimension(format!(
            "coefficient matrix must be square, got {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    let n = c.rows();
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = 0.5 * (c.get(i, j).abs() + c.get(j, i).abs());
            w.set(i, j, v);
            w.set(j, i, v);
        }
    }
    Ok(Affinity { w })
}

/// `W = (|C + theta| + |(C + theta)^T|)/2`; the sum happens before the
/// absolute value, so opposing coefficients cancel.
pub fn affinity_fused(c: &Matrix, theta: &Matrix) -> Result<Affinity> {
    if c.shape() != theta.shape() {
        return Err(Error::Dimension(format!(
            "coefficient shapes disagree: {:?} vs {:?}",
            c.shape(),
            theta.shape()
        )));
    }
    affinity_single(&c.add(theta)?)
}

/// Row-normalized spectral embedding: n x k, one row per sample.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    pub q: Matrix,
}

/// Symmetric-normalized Laplacian `I - D^{-1/2} W D^{-1/2}`. Vertices with
/// zero degree get a zero `D^{-1/2}` entry, leaving their row as the
/// identity row.
pub fn normalized_laplacian(w: &Affinity) -> Matrix {
    let n = w.n();
    let mut inv_sqrt_deg = vec![0.0; n];
    for i in 0..n {
        let d: f64 = w.w.row(i).iter().sum();
        if d > 0.0 {
            inv_sqrt_deg[i] = 1.0 / d.sqrt();
        }
    }
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let off = -inv_sqrt_deg[i] * w.w.get(i, j) * inv_sqrt_deg[j];
            let v = if i == j { 1.0 + off } else { off };
            l.set(i, j, v);
            l.set(j, i, v);
        }
    }
    l
}

/// Normalized spectral clustering: eigenvectors of the k smallest Laplacian
/// eigenvalues, rows normalized to unit length (zero rows left alone), then
/// k-means on the rows.
pub fn spectral_cluster(
    w: &Affinity,
    k: usize,
    rng: &mut Rng,
) -> Result<(Vec<usize>, SpectralEmbedding)> {
    let n = w.n();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds number of samples {n}"
        )));
    }

    let laplacian = normalized_laplacian(w);
    let (_, vectors) = sym_eig(&laplacian)?;

    let mut q = Matrix::zeros(n, k);
    for col in 0..k {
        for i in 0..n {
            q.set(i, col, vectors.get(i, col));
        }
    }
    for i in 0..n {
        let norm: f64 = q.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in q.row_mut(i) {
                *v /= norm;
            }
        }
    }

    let labels = kmeans(&q, k, rng, DEFAULT_RESTARTS)?;
    Ok((labels, SpectralEmbedding { q }))
}

/// Fraction of total affinity mass that lies within clusters:
/// `sum_{labels_i = labels_j} w_ij / sum_{ij} w_ij`, with 0/0 defined as 0.
pub fn block_mass_ratio(w: &Affinity, labels: &[usize]) -> Result<f64> {
    let n = w.n();
    if labels.len() != n {
        return Err(Error::Dimension(format!(
            "labels length {} does not match affinity size {n}",
            labels.len()
        )));
    }
    let mut within = 0.0;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = w.w.get(i, j);
            total += v;
            if labels[i] == labels[j] {
                within += v;
            }
        }
    }
    Ok(if total > 0.0 { within / total } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use crate::numerics::Rng;

    /// Block-diagonal affinity with the given block sizes, unit weights
    /// within blocks, zero diagonal.
    fn block_affinity(sizes: &[usize], off_block: f64) -> (Affinity, Vec<usize>) {
        let n: usize = sizes.iter().sum();
        let mut labels = Vec::with_capacity(n);
        for (b, &s) in sizes.iter().enumerate() {
            labels.extend(std::iter::repeat(b).take(s));
        }
        let mut w = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                w.set(
                    i,
                    j,
                    if labels[i] == labels[j] { 1.0 } else { off_block },
                );
            }
        }
        (Affinity::from_matrix(w).unwrap(), labels)
    }

    #[test]
    fn affinity_single_zero_and_fixed_point() {
        let zero = Matrix::zeros(3, 3);
        assert_eq!(affinity_single(&zero).unwrap().matrix(), &zero);

        // Symmetric nonnegative input is a fixed point.
        let mut sym = Matrix::zeros(3, 3);
        sym.set(0, 1, 2.0);
        sym.set(1, 0, 2.0);
        sym.set(1, 2, 0.5);
        sym.set(2, 1, 0.5);
        assert_eq!(affinity_single(&sym).unwrap().matrix(), &sym);
    }

    #[test]
    fn affinity_single_direct_arithmetic() {
        let c = Matrix::from_vec(2, 2, vec![0.0, 2.0, -1.0, 0.0]).unwrap();
        let w = affinity_single(&c).unwrap();
        assert_eq!(w.matrix().get(0, 1), 1.5);
        assert_eq!(w.matrix().get(1, 0), 1.5);
        assert_eq!(w.matrix().get(0, 0), 0.0);
    }

    #[test]
    fn affinity_single_rejects_non_square() {
        assert!(matches!(
            affinity_single(&Matrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn fused_with_zero_theta_equals_single() {
        let c = Matrix::from_vec(2, 2, vec![0.0, -3.0, 4.0, 0.0]).unwrap();
        let zero = Matrix::zeros(2, 2);
        assert_eq!(
            affinity_fused(&c, &zero).unwrap(),
            affinity_single(&c).unwrap()
        );
    }

    #[test]
    fn fused_cancels_before_absolute_value() {
        let c = Matrix::from_vec(2, 2, vec![0.0, 2.0, -1.0, 0.0]).unwrap();
        let neg = c.scale(-1.0);
        let w = affinity_fused(&c, &neg).unwrap();
        assert_eq!(w.matrix().max_abs(), 0.0);
    }

    #[test]
    fn fused_direct_arithmetic() {
        let c = Matrix::from_vec(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let theta = Matrix::from_vec(2, 2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let w = affinity_fused(&c, &theta).unwrap();
        assert_eq!(w.matrix().get(0, 1), 1.0);
        assert_eq!(w.matrix().get(1, 0), 1.0);
    }

    #[test]
    fn laplacian_eigenvalues_in_zero_two_and_nullity_counts_components() {
        let (w, _) = block_affinity(&[4, 3, 5], 0.0);
        let l = normalized_laplacian(&w);
        let (vals, _) = sym_eig(&l).unwrap();
        for &v in &vals {
            assert!(v >= -1e-8 && v <= 2.0 + 1e-8, "eigenvalue {v}");
        }
        let near_zero = vals.iter().filter(|v| v.abs() < 1e-8).count();
        assert_eq!(near_zero, 3);
    }

    #[test]
    fn block_diagonal_recovers_blocks_exactly() {
        for sizes in [vec![5usize, 7], vec![4, 4, 6], vec![3, 3, 3, 4, 5]] {
            let (w, truth) = block_affinity(&sizes, 0.0);
            let mut rng = Rng::new(11);
            let (labels, q) = spectral_cluster(&w, sizes.len(), &mut rng).unwrap();
            assert_eq!(q.q.shape(), (truth.len(), sizes.len()));
            // Same-block samples share a label; distinct blocks get distinct
            // labels.
            for i in 0..truth.len() {
                for j in 0..truth.len() {
                    assert_eq!(
                        labels[i] == labels[j],
                        truth[i] == truth[j],
                        "samples {i},{j}"
                    );
                }
            }
        }
    }

    #[test]
    fn perturbed_two_block_affinity_still_recovers() {
        let (w, truth) = block_affinity(&[6, 6], 0.01);
        let mut rng = Rng::new(13);
        let (labels, _) = spectral_cluster(&w, 2, &mut rng).unwrap();
        for i in 0..truth.len() {
            for j in 0..truth.len() {
                assert_eq!(labels[i] == labels[j], truth[i] == truth[j]);
            }
        }
    }

    #[test]
    fn k_one_gives_single_label() {
        let (w, _) = block_affinity(&[4, 4], 0.2);
        let mut rng = Rng::new(7);
        let (labels, _) = spectral_cluster(&w, 1, &mut rng).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn k_exceeding_n_is_error() {
        let (w, _) = block_affinity(&[2, 2], 0.0);
        let mut rng = Rng::new(7);
        assert!(matches!(
            spectral_cluster(&w, 5, &mut rng),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn spectral_deterministic_given_seed() {
        let (w, _) = block_affinity(&[5, 5, 5], 0.05);
        let (a, _) = spectral_cluster(&w, 3, &mut Rng::new(3)).unwrap();
        let (b, _) = spectral_cluster(&w, 3, &mut Rng::new(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_affinity_is_handled() {
        let w = Affinity::from_matrix(Matrix::zeros(4, 4)).unwrap();
        let mut rng = Rng::new(1);
        let (labels, _) = spectral_cluster(&w, 2, &mut rng).unwrap();
        assert_eq!(labels.len(), 4);
        assert_eq!(block_mass_ratio(&w, &labels).unwrap(), 0.0);
    }

    #[test]
    fn block_mass_extremes_and_hand_sum() {
        let (w, labels) = block_affinity(&[3, 3], 0.0);
        assert_eq!(block_mass_ratio(&w, &labels).unwrap(), 1.0);

        // All mass across blocks.
        let mut cross = Matrix::zeros(4, 4);
        for i in 0..2 {
            for j in 2..4 {
                cross.set(i, j, 1.0);
                cross.set(j, i, 1.0);
            }
        }
        let w_cross = Affinity::from_matrix(cross).unwrap();
        assert_eq!(block_mass_ratio(&w_cross, &[0, 0, 1, 1]).unwrap(), 0.0);

        // Hand sum: within-mass 3.0 of total 4.0.
        let mut m = Matrix::zeros(4, 4);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(2, 3, 0.5);
        m.set(3, 2, 0.5);
        m.set(0, 2, 0.5);
        m.set(2, 0, 0.5);
        let w = Affinity::from_matrix(m).unwrap();
        assert!((block_mass_ratio(&w, &[0, 0, 1, 1]).unwrap() - 0.75).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn affinities_always_symmetric_nonnegative(values in proptest::collection::vec(-5.0f64..5.0, 16)) {
            let mut c = Matrix::from_vec(4, 4, values).unwrap();
            c.zero_diagonal();
            let w = affinity_single(&c).unwrap();
            let m = w.matrix();
            for i in 0..4 {
                prop_assert_eq!(m.get(i, i), 0.0);
                for j in 0..4 {
                    prop_assert!(m.get(i, j) >= 0.0);
                    prop_assert_eq!(m.get(i, j), m.get(j, i));
                }
            }
        }

        #[test]
        fn laplacian_spectrum_bounded(values in proptest::collection::vec(0.0f64..3.0, 25)) {
            let mut raw = Matrix::from_vec(5, 5, values).unwrap();
            raw.zero_diagonal();
            let w = affinity_single(&raw).unwrap();
            let l = normalized_laplacian(&w);
            let (vals, _) = sym_eig(&l).unwrap();
            for v in vals {
                prop_assert!(v >= -1e-8 && v <= 2.0 + 1e-8);
            }
        }
    }
}
