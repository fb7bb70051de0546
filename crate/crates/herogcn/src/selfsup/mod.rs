//! Trinary self-supervision: Student-t soft assignments, the sharpened
//! target distribution, KL losses against encoder and clustering head, and
//! the modularity constraint on graph structure.

mod kmeans;

pub use kmeans::{init_centers, kmeans, KmeansOutcome};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::tensor::{Real, Tape, Tensor, Var};

/// Denominator clamp in KL terms.
pub const KL_EPS: f64 = 1e-10;

/// Soft-assignment frequency below which a cluster counts as collapsed.
pub const COLLAPSE_EPS: f64 = 1e-12;

/// Student-t soft assignments (one degree of freedom) of embedding rows to
/// cluster centers: `q_ik = (1 + ||e_i - mu_k||^2)^-1`, row-normalized.
pub fn soft_assign<F: Real>(tape: &mut Tape<F>, embedding: Var, centers: Var) -> Result<Var> {
    let (e_shape, c_shape) = (tape.value(embedding).shape(), tape.value(centers).shape());
    if e_shape.1 != c_shape.1 {
        return Err(Error::shape("soft_assign", e_shape, c_shape));
    }
    // ||e_i - mu_k||^2 = ||e_i||^2 + ||mu_k||^2 - 2 e_i . mu_k
    let centers_t = tape.transpose(centers);
    let cross = tape.matmul(embedding, centers_t)?;
    let minus_two_cross = tape.scale(cross, F::of(-2.0));
    let e_sq = tape.square(embedding);
    let e_norms = tape.sum_axis1(e_sq);
    let c_sq = tape.square(centers);
    let c_norms_col = tape.sum_axis1(c_sq);
    let c_norms = tape.transpose(c_norms_col);
    let with_rows = tape.add_row_vec(minus_two_cross, c_norms)?;
    let sq_dist = tape.add_col_vec(with_rows, e_norms)?;

    let shifted = tape.add_scalar(sq_dist, F::one());
    let kernel = tape.recip(shifted)?;
    row_normalize(tape, kernel)
}

fn row_normalize<F: Real>(tape: &mut Tape<F>, x: Var) -> Result<Var> {
    let sums = tape.sum_axis1(x);
    let inv = tape.recip(sums)?;
    tape.mul_col_vec(x, inv)
}

/// Sharpened target `p_ik = (q_ik^2 / f_k) / sum_k' (q_ik'^2 / f_k')` with
/// `f_k = sum_i q_ik`, computed on plain values (no gradient flows through
/// the target when it supervises the KL terms).
pub fn target_distribution<F: Real>(q: &Tensor<F>) -> Result<Tensor<F>> {
    let (n, k) = q.shape();
    let mut freq = vec![F::zero(); k];
    for i in 0..n {
        for (j, f) in freq.iter_mut().enumerate() {
            *f += q.get(i, j);
        }
    }
    for (j, &f) in freq.iter().enumerate() {
        if f <= F::zero() {
            return Err(Error::ClusterCollapse { cluster: j });
        }
    }
    let mut p = Tensor::zeros(n, k);
    for i in 0..n {
        let mut denom = F::zero();
        for j in 0..k {
            let v = q.get(i, j) * q.get(i, j) / freq[j];
            p.set(i, j, v);
            denom += v;
        }
        for j in 0..k {
            let v = p.get(i, j) / denom;
            p.set(i, j, v);
        }
    }
    Ok(p)
}

/// Differentiable version of [`target_distribution`], used when the
/// modularity loss is evaluated on the target so that gradient flows back
/// into the soft assignments.
pub fn target_distribution_var<F: Real>(tape: &mut Tape<F>, q: Var) -> Result<Var> {
    let q_sq = tape.square(q);
    let freq = tape.sum_axis0(q);
    if tape.value(freq).data().iter().any(|f| *f <= F::zero()) {
        let cluster = tape
            .value(freq)
            .data()
            .iter()
            .position(|f| *f <= F::zero())
            .unwrap_or(0);
        return Err(Error::ClusterCollapse { cluster });
    }
    let inv_freq = tape.recip(freq)?;
    let weighted = tape.mul_row_vec(q_sq, inv_freq)?;
    row_normalize(tape, weighted)
}

/// `KL(P || Q) = sum_ik p_ik log(p_ik / q_ik)` with the target held
/// constant; `0 log 0 = 0` and denominators clamped at [`KL_EPS`].
pub fn kl_loss<F: Real>(tape: &mut Tape<F>, target: &Tensor<F>, q: Var) -> Result<Var> {
    let q_shape = tape.value(q).shape();
    if target.shape() != q_shape {
        return Err(Error::shape("kl_loss", target.shape(), q_shape));
    }
    // Constant entropy part: sum p log p.
    let entropy_part = target
        .data()
        .iter()
        .map(|&p| {
            if p > F::zero() {
                (p * p.ln()).as_f64()
            } else {
                0.0
            }
        })
        .sum::<f64>();

    let clamped = tape.clamp(q, F::of(KL_EPS), F::infinity());
    let log_q = tape.log(clamped)?;
    let p_const = tape.constant(target.clone());
    let weighted = tape.mul(p_const, log_q)?;
    let cross = tape.sum(weighted);
    let neg_cross = tape.scale(cross, -F::one());
    let entropy = tape.constant(Tensor::scalar(F::of(entropy_part)));
    tape.add(entropy, neg_cross)
}

/// Clustering head: one more convolution over the final hybrid layer with a
/// row softmax, `R = softmax(A_hat H~ W)`.
pub fn cluster_head<F: Real>(
    tape: &mut Tape<F>,
    hybrid: Var,
    a_hat: Var,
    weight: Var,
) -> Result<Var> {
    let propagated = tape.matmul(a_hat, hybrid)?;
    let logits = tape.matmul(propagated, weight)?;
    Ok(tape.row_softmax(logits))
}

/// Modularity loss `-(1/2m) tr(P^T B P)` with `B` the modularity matrix.
///
/// Equals the negative Newman modularity when `P` is one-hot.
pub fn modularity_loss<F: Real>(
    tape: &mut Tape<F>,
    modularity_matrix: Var,
    assignments: Var,
    edge_count: usize,
) -> Result<Var> {
    if edge_count == 0 {
        return Err(Error::Domain {
            op: "modularity_loss",
            detail: "undefined on a graph with no edges".to_string(),
        });
    }
    let bp = tape.matmul(modularity_matrix, assignments)?;
    let quad = tape.mul(assignments, bp)?;
    let total = tape.sum(quad);
    Ok(tape.scale(total, F::of(-1.0 / (2.0 * edge_count as f64))))
}

/// Value-level modularity of a soft assignment matrix (no tape), used by
/// callers that only need the number.
pub fn modularity_value<F: Real>(g: &AttributedGraph<F>, assignments: &Tensor<F>) -> Result<f64> {
    let b = g.modularity_matrix()?;
    let bp = b.matmul(assignments)?;
    let quad = assignments.hadamard(&bp)?;
    Ok(quad.sum().as_f64() / (2.0 * g.edge_count() as f64))
}

/// One-hot matrix of hard labels, width `k`.
pub fn one_hot<F: Real>(labels: &[usize], k: usize) -> Result<Tensor<F>> {
    let mut m = Tensor::zeros(labels.len(), k);
    for (i, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(Error::Config(format!(
                "label {label} out of range for {k} clusters"
            )));
        }
        m.set(i, label, F::one());
    }
    Ok(m)
}

/// Detect collapsed clusters: indices whose soft-assignment mass is below
/// [`COLLAPSE_EPS`].
pub fn collapsed_clusters<F: Real>(q: &Tensor<F>) -> Vec<usize> {
    let (n, k) = q.shape();
    (0..k)
        .filter(|&j| {
            let mass: f64 = (0..n).map(|i| q.get(i, j).as_f64()).sum();
            mass < COLLAPSE_EPS
        })
        .collect()
}

/// Recovery policy for a collapsed cluster: move its center onto the
/// embedding farthest from its currently assigned center.
pub fn reseed_center<F: Real>(centers: &mut Tensor<F>, embedding: &Tensor<F>, cluster: usize) {
    let (n, _) = embedding.shape();
    let k = centers.rows();
    let mut worst = (0usize, -1.0f64);
    for i in 0..n {
        let mut best = f64::INFINITY;
        for c in 0..k {
            let d: f64 = embedding
                .row(i)
                .iter()
                .zip(centers.row(c))
                .map(|(a, b)| (a.as_f64() - b.as_f64()).powi(2))
                .sum();
            best = best.min(d);
        }
        if best > worst.1 {
            worst = (i, best);
        }
    }
    for j in 0..centers.cols() {
        centers.set(cluster, j, embedding.get(worst.0, j));
    }
    log::warn!("cluster {cluster} collapsed; reseeded its center to node {}", worst.0);
}
