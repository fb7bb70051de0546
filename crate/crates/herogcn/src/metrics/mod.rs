//! External clustering evaluation: accuracy under optimal label matching,
//! normalized mutual information, adjusted Rand index, macro F1, and the
//! Newman modularity of a hard partition.
//!
//! All metrics are invariant to relabeling of the predicted clusters.

mod hungarian;

pub use hungarian::min_cost_assignment;

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::tensor::Real;

fn check_lengths(pred: &[usize], truth: &[usize]) -> Result<usize> {
    if pred.len() != truth.len() {
        return Err(Error::shape(
            "metrics",
            (pred.len(), 1),
            (truth.len(), 1),
        ));
    }
    if pred.is_empty() {
        return Err(Error::Config("metrics need at least one label".into()));
    }
    Ok(pred.len())
}

fn alphabet_size(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |&m| m + 1)
}

/// Square contingency matrix padded to `k x k`,
/// `counts[cluster][class] = |{i : pred_i = cluster, truth_i = class}|`.
fn contingency(pred: &[usize], truth: &[usize]) -> Vec<Vec<f64>> {
    let k = alphabet_size(pred).max(alphabet_size(truth));
    let mut counts = vec![vec![0.0f64; k]; k];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[p][t] += 1.0;
    }
    counts
}

/// Cluster-to-class map maximizing total agreement (optimal assignment on
/// the contingency matrix).
///
/// Agreement ties are broken toward the matching with the best summed
/// per-pair F1, which keeps every derived metric invariant to how the
/// predicted clusters happen to be numbered.
pub fn optimal_mapping(pred: &[usize], truth: &[usize]) -> Result<Vec<usize>> {
    check_lengths(pred, truth)?;
    let counts = contingency(pred, truth);
    let k = counts.len();
    let pred_sizes: Vec<f64> = counts.iter().map(|r| r.iter().sum()).collect();
    let truth_sizes: Vec<f64> = (0..k).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
    // Secondary objective in (0, 1] per pair; scale keeps one unit of
    // agreement worth more than any total secondary gain.
    let scale = (k + 1) as f64;
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| -(counts[i][j] * scale + pair_f1(counts[i][j], pred_sizes[i], truth_sizes[j])))
                .collect()
        })
        .collect();
    Ok(min_cost_assignment(&cost))
}

/// F1 of matching cluster `i` (size `pred_size`) to class `j` (size
/// `truth_size`) with `tp` members in common: `2 tp / (pred + truth)`.
fn pair_f1(tp: f64, pred_size: f64, truth_size: f64) -> f64 {
    if pred_size + truth_size == 0.0 {
        0.0
    } else {
        2.0 * tp / (pred_size + truth_size)
    }
}

/// Clustering accuracy: best mean agreement over cluster-to-class matchings.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let n = check_lengths(pred, truth)?;
    let mapping = optimal_mapping(pred, truth)?;
    let hits = pred
        .iter()
        .zip(truth)
        .filter(|&(&p, &t)| mapping[p] == t)
        .count();
    Ok(hits as f64 / n as f64)
}

/// Normalized mutual information with geometric-mean normalization:
/// `I(pred; truth) / sqrt(H(pred) H(truth))`.
///
/// Both labelings constant is a trivially identical partition (1.0); only
/// one constant carries no shared information (0.0).
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let n = check_lengths(pred, truth)? as f64;
    let counts = contingency(pred, truth);
    let k = counts.len();
    let row_sums: Vec<f64> = counts.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..k).map(|j| counts.iter().map(|r| r[j]).sum()).collect();

    let entropy = |sums: &[f64]| -> f64 {
        sums.iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| {
                let p = s / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_pred = entropy(&row_sums);
    let h_truth = entropy(&col_sums);
    if h_pred == 0.0 && h_truth == 0.0 {
        return Ok(1.0);
    }
    if h_pred == 0.0 || h_truth == 0.0 {
        return Ok(0.0);
    }

    let mut mi = 0.0;
    for i in 0..k {
        for j in 0..k {
            let joint = counts[i][j];
            if joint > 0.0 {
                mi += (joint / n) * ((n * joint) / (row_sums[i] * col_sums[j])).ln();
            }
        }
    }
    Ok((mi / (h_pred * h_truth).sqrt()).clamp(0.0, 1.0))
}

/// Adjusted Rand index via pair counting with expected-index correction.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let n = check_lengths(pred, truth)? as f64;
    let counts = contingency(pred, truth);
    let k = counts.len();
    let choose2 = |x: f64| x * (x - 1.0) / 2.0;

    let sum_cells: f64 = counts.iter().flatten().map(|&c| choose2(c)).sum();
    let sum_rows: f64 = counts.iter().map(|r| choose2(r.iter().sum())).sum();
    let sum_cols: f64 = (0..k)
        .map(|j| choose2(counts.iter().map(|r| r[j]).sum()))
        .sum();
    let total_pairs = choose2(n);

    let expected = sum_rows * sum_cols / total_pairs;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() < 1e-12 {
        // Both partitions trivial (all-singleton or all-together): identical.
        return Ok(1.0);
    }
    Ok((sum_cells - expected) / (max_index - expected))
}

/// Macro F1 after the same optimal matching as [`accuracy`]: per-class F1
/// of each truth class against its matched cluster, averaged unweighted
/// over the classes observed in the truth. Classes with neither true nor
/// predicted members have F1 = 0 and never enter the average.
pub fn macro_f1(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let mapping = optimal_mapping(pred, truth)?;
    let mapped: Vec<usize> = pred.iter().map(|&p| mapping[p]).collect();

    let truth_classes: std::collections::BTreeSet<usize> = truth.iter().copied().collect();
    let mut f1_sum = 0.0;
    for &c in &truth_classes {
        let tp = mapped
            .iter()
            .zip(truth)
            .filter(|&(&p, &t)| p == c && t == c)
            .count() as f64;
        let pred_c = mapped.iter().filter(|&&p| p == c).count() as f64;
        let truth_c = truth.iter().filter(|&&t| t == c).count() as f64;
        f1_sum += pair_f1(tp, pred_c, truth_c);
    }
    Ok(f1_sum / truth_classes.len() as f64)
}

/// Newman modularity of a hard partition, by per-community edge counting:
/// `Q = sum_c (L_c / m - (K_c / 2m)^2)`.
///
/// Kept independent of the trace-form modularity loss so the two can
/// cross-check each other.
pub fn partition_modularity<F: Real>(g: &AttributedGraph<F>, labels: &[usize]) -> Result<f64> {
    if labels.len() != g.node_count() {
        return Err(Error::shape(
            "partition_modularity",
            (labels.len(), 1),
            (g.node_count(), 1),
        ));
    }
    let m = g.edge_count() as f64;
    if g.edge_count() == 0 {
        return Err(Error::Domain {
            op: "partition_modularity",
            detail: "undefined on a graph with no edges".to_string(),
        });
    }
    let k = alphabet_size(labels);
    let mut internal = vec![0.0f64; k]; // L_c
    let mut degree_mass = vec![0.0f64; k]; // K_c
    for &(i, j) in g.edges() {
        if labels[i] == labels[j] {
            internal[labels[i]] += 1.0;
        }
    }
    for (node, &label) in labels.iter().enumerate() {
        degree_mass[label] += g.degree(node) as f64;
    }
    Ok((0..k)
        .map(|c| internal[c] / m - (degree_mass[c] / (2.0 * m)).powi(2))
        .sum())
}
