//! Clustering evaluation: accuracy under optimal label matching (ACC),
//! normalized mutual information (NMI), subspace-preserving representation
//! error (SRE, percent), and affinity connectivity (CONN).

mod hungarian;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{sym_eig, Matrix};
use crate::spectral::{normalized_laplacian, Affinity};

/// One evaluation of a coefficient matrix / affinity pair against ground
/// truth.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct MetricReport {
    /// Clustering accuracy in [0, 1].
    pub acc: f64,
    /// Normalized mutual information in [0, 1].
    pub nmi: f64,
    /// Subspace-preserving representation error in [0, 100] percent.
    pub sre: f64,
    /// Minimum algebraic connectivity over within-cluster subgraphs, >= 0.
    pub conn: f64,
    /// Fraction of affinity mass inside ground-truth blocks, in [0, 1].
    pub block_mass: f64,
}

impl MetricReport {
    pub fn is_finite(&self) -> bool {
        self.acc.is_finite()
            && self.nmi.is_finite()
            && self.sre.is_finite()
            && self.conn.is_finite()
            && self.block_mass.is_finite()
    }
}

fn check_lengths(pred: &[usize], truth: &[usize]) -> Result<usize> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "label vectors have different lengths: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("label vectors are empty".into()));
    }
    Ok(pred.len())
}

/// Maps arbitrary label values to dense ids 0..k and returns (ids, k).
fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut sorted: Vec<usize> = labels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let ids = labels
        .iter()
        .map(|l| sorted.binary_search(l).unwrap())
        .collect();
    (ids, sorted.len())
}

fn contingency(pred: &[usize], truth: &[usize]) -> (Vec<Vec<usize>>, usize, usize) {
    let (p_ids, kp) = dense_ids(pred);
    let (t_ids, kt) = dense_ids(truth);
    let mut table = vec![vec![0usize; kt]; kp];
    for (&p, &t) in p_ids.iter().zip(&t_ids) {
        table[p][t] += 1;
    }
    (table, kp, kt)
}

/// Clustering accuracy: the best achievable fraction of agreeing samples
/// over all injective mappings of predicted clusters onto true clusters,
/// computed by Hungarian assignment on the contingency table.
pub fn acc(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let n = check_lengths(pred, truth)?;
    let (table, kp, kt) = contingency(pred, truth);
    let k = kp.max(kt);
    // Pad to square and minimize negated matches.
    let cost: Vec<Vec<i64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let matches = if i < kp && j < kt { table[i][j] } else { 0 };
                    -(matches as i64)
                })
                .collect()
        })
        .collect();
    let assign = hungarian::min_cost_assignment(&cost);
    let matched: i64 = assign.iter().enumerate().map(|(i, &j)| -cost[i][j]).sum();
    Ok(matched as f64 / n as f64)
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information with arithmetic-mean normalization:
/// `I(pred; truth) / ((H(pred) + H(truth)) / 2)`, natural logarithms.
/// Both partitions trivial (single cluster) gives 1.0; exactly one zero
/// entropy gives 0.0.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let n = check_lengths(pred, truth)? as f64;
    let (table, kp, kt) = contingency(pred, truth);
    let row_sums: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..kt).map(|j| table.iter().map(|r| r[j]).sum()).collect();

    let h_pred = entropy(&row_sums, n);
    let h_truth = entropy(&col_sums, n);
    if h_pred == 0.0 && h_truth == 0.0 {
        return Ok(1.0);
    }
    if h_pred == 0.0 || h_truth == 0.0 {
        return Ok(0.0);
    }

    let mut mi = 0.0;
    for i in 0..kp {
        for j in 0..kt {
            let nij = table[i][j];
            if nij == 0 {
                continue;
            }
            let pij = nij as f64 / n;
            mi += pij * ((nij as f64 * n) / (row_sums[i] as f64 * col_sums[j] as f64)).ln();
        }
    }
    Ok((2.0 * mi / (h_pred + h_truth)).clamp(0.0, 1.0))
}

/// Subspace-preserving representation error, in percent. For each sample j,
/// the fraction of |c_ij| mass assigned to samples outside j's true cluster;
/// averaged and scaled by 100. An all-zero column contributes full error.
pub fn sre(c: &Matrix, truth: &[usize]) -> Result<f64> {
    let n = c.rows();
    if !c.is_square() || truth.len() != n {
        return Err(Error::Dimension(format!(
            "need square C matching labels: C is {}x{}, labels {}",
            c.rows(),
            c.cols(),
            truth.len()
        )));
    }
    let mut total_err = 0.0;
    for j in 0..n {
        let mut total = 0.0;
        let mut within = 0.0;
        for i in 0..n {
            let v = c.get(i, j).abs();
            total += v;
            if truth[i] == truth[j] {
                within += v;
            }
        }
        total_err += if total > 0.0 { 1.0 - within / total } else { 1.0 };
    }
    Ok(100.0 * total_err / n as f64)
}

/// Union-find connectivity of the positive-weight graph on `idx` under `w`.
fn is_connected(w: &Affinity, idx: &[usize]) -> bool {
    let m = idx.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for a in 0..m {
        for b in (a + 1)..m {
            if w.matrix().get(idx[a], idx[b]) > 0.0 {
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }
    let root = find(&mut parent, 0);
    (1..m).all(|x| find(&mut parent, x) == root)
}

/// Connectivity of the affinity: the minimum over ground-truth clusters of
/// the second-smallest normalized-Laplacian eigenvalue of the cluster's
/// induced subgraph. Singleton clusters contribute 1.0; a disconnected
/// induced subgraph contributes exactly 0.0.
pub fn conn(w: &Affinity, truth: &[usize]) -> Result<f64> {
    let n = w.n();
    if truth.len() != n {
        return Err(Error::Dimension(format!(
            "labels length {} does not match affinity size {n}",
            truth.len()
        )));
    }
    let k = truth.iter().copied().max().map_or(0, |m| m + 1);
    let mut result = f64::INFINITY;
    for cluster in 0..k {
        let idx: Vec<usize> = (0..n).filter(|&i| truth[i] == cluster).collect();
        if idx.is_empty() {
            continue;
        }
        let candidate = if idx.len() == 1 {
            1.0
        } else if !is_connected(w, &idx) {
            0.0
        } else {
            let m = idx.len();
            let mut sub = Matrix::zeros(m, m);
            for a in 0..m {
                for b in 0..m {
                    sub.set(a, b, w.matrix().get(idx[a], idx[b]));
                }
            }
            let sub_aff = Affinity::from_matrix(sub)?;
            let laplacian = normalized_laplacian(&sub_aff);
            let (vals, _) = sym_eig(&laplacian)?;
            vals[1].max(0.0)
        };
        result = result.min(candidate);
    }
    if result.is_infinite() {
        return Err(Error::InvalidArgument("no clusters in labels".into()));
    }
    Ok(result)
}
