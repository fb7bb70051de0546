//! K-means with greedy farthest-point seeding, used to initialize the
//! trainable cluster centers from pretrained embeddings.

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_LLOYD_ITERS: usize = 100;

/// Result of one k-means run.
#[derive(Clone, Debug)]
pub struct KmeansOutcome<F> {
    pub centers: Tensor<F>,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares of the returned partition.
    pub wcss: f64,
}

/// Best of `restarts` independent k-means runs; each run picks a random
/// first center, extends greedily to the farthest point, then iterates
/// Lloyd updates to convergence. Deterministic under `seed`.
pub fn kmeans<F: Real>(
    data: &Tensor<F>,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<KmeansOutcome<F>> {
    let n = data.rows();
    if k == 0 {
        return Err(Error::Config("k-means requires k >= 1".into()));
    }
    if n < k {
        return Err(Error::Config(format!(
            "k-means requires at least k={k} points, got {n}"
        )));
    }
    if restarts == 0 {
        return Err(Error::Config("k-means requires restarts >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KmeansOutcome<F>> = None;
    for _ in 0..restarts {
        let outcome = single_run(data, k, rng.random_range(0..n))?;
        let better = best.as_ref().is_none_or(|b| outcome.wcss < b.wcss);
        if better {
            best = Some(outcome);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// Centers only, for seeding the trainable `mu`.
pub fn init_centers<F: Real>(
    embedding: &Tensor<F>,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<Tensor<F>> {
    Ok(kmeans(embedding, k, restarts, seed)?.centers)
}

fn sq_dist<F: Real>(a: &[F], b: &[F]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.as_f64() - y.as_f64()).powi(2))
        .sum()
}

fn single_run<F: Real>(data: &Tensor<F>, k: usize, first: usize) -> Result<KmeansOutcome<F>> {
    let n = data.rows();
    let d = data.cols();

    // Greedy farthest-point seeding from the chosen first center.
    let mut center_rows = vec![first];
    let mut min_dist: Vec<f64> = (0..n)
        .map(|i| sq_dist(data.row(i), data.row(first)))
        .collect();
    while center_rows.len() < k {
        let mut next = 0;
        for i in 1..n {
            if min_dist[i] > min_dist[next] {
                next = i;
            }
        }
        center_rows.push(next);
        for i in 0..n {
            min_dist[i] = min_dist[i].min(sq_dist(data.row(i), data.row(next)));
        }
    }
    let mut centers = Tensor::zeros(k, d);
    for (c, &row) in center_rows.iter().enumerate() {
        for j in 0..d {
            centers.set(c, j, data.get(row, j));
        }
    }

    let mut labels = vec![0usize; n];
    for _ in 0..MAX_LLOYD_ITERS {
        // Assignment step, ties to the lowest cluster index.
        let mut changed = false;
        for i in 0..n {
            let mut best = 0;
            let mut best_d = sq_dist(data.row(i), centers.row(0));
            for c in 1..k {
                let dist = sq_dist(data.row(i), centers.row(c));
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }

        // Update step; an emptied cluster grabs the point farthest from its
        // current assignment.
        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0f64; d]; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for j in 0..d {
                sums[labels[i]][j] += data.get(i, j).as_f64();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let mut farthest = (0usize, -1.0f64);
                for i in 0..n {
                    let dist = sq_dist(data.row(i), centers.row(labels[i]));
                    if dist > farthest.1 {
                        farthest = (i, dist);
                    }
                }
                labels[farthest.0] = c;
                for j in 0..d {
                    centers.set(c, j, data.get(farthest.0, j));
                }
                changed = true;
                continue;
            }
            for j in 0..d {
                centers.set(c, j, F::of(sums[c][j] / counts[c] as f64));
            }
        }
        if !changed {
            break;
        }
    }

    let wcss: f64 = (0..n)
        .map(|i| sq_dist(data.row(i), centers.row(labels[i])))
        .sum();
    Ok(KmeansOutcome {
        centers,
        labels,
        wcss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn n_equals_k_returns_exact_points() {
        let data = Tensor::<f64>::from_rows(&[vec![0.0, 0.0], vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let outcome = kmeans(&data, 3, 5, 7).unwrap();
        assert!(outcome.wcss < 1e-24);
        let mut rows: Vec<Vec<u64>> = (0..3)
            .map(|i| outcome.centers.row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        rows.sort();
        let mut expected: Vec<Vec<u64>> = (0..3)
            .map(|i| data.row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        expected.sort();
        assert_eq!(rows, expected);
    }

    #[test]
    fn two_separated_blobs_are_recovered() {
        let sigma = 0.2;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut rows = Vec::new();
        let means = [[0.0, 0.0], [8.0, 8.0]];
        for mean in &means {
            for _ in 0..40 {
                rows.push(vec![
                    mean[0] + sigma * rng.random_range(-1.0..1.0),
                    mean[1] + sigma * rng.random_range(-1.0..1.0),
                ]);
            }
        }
        let data = Tensor::<f64>::from_rows(&rows).unwrap();
        let centers = init_centers(&data, 2, 20, 3).unwrap();
        for mean in &means {
            let closest = (0..2)
                .map(|c| sq_dist(centers.row(c), mean).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(closest < 3.0 * sigma, "center missed {mean:?} by {closest}");
        }
    }

    #[test]
    fn fixed_seed_reproduces_centers() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = Tensor::<f64>::uniform(30, 3, 5.0, &mut rng);
        let a = kmeans(&data, 4, 10, 99).unwrap();
        let b = kmeans(&data, 4, 10, 99).unwrap();
        assert_eq!(a.centers, b.centers);
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn too_few_points_is_a_config_error() {
        let data = Tensor::<f64>::zeros(2, 2);
        assert!(kmeans(&data, 3, 1, 0).is_err());
    }
}
