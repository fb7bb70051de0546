//! Graph mutual infomax: corrupted negatives, concatenated multi-layer
//! samples, mean readout, and a bilinear discriminator trained with BCE.

use crate::error::{Error, Result};
use crate::tensor::{Real, Tape, Tensor, Var};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Clamp bound applied to discriminator probabilities before the log.
pub const PROB_EPS: f64 = 1e-7;

/// Corrupt attributes by permuting rows uniformly at random; adjacency is
/// left untouched by the caller. Deterministic under `seed`.
pub fn corrupt<F: Real>(x: &Tensor<F>, seed: u64) -> Result<Tensor<F>> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::Config(format!(
            "corruption needs at least two rows, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let rows: Vec<Vec<F>> = order.iter().map(|&i| x.row(i).to_vec()).collect();
    Tensor::from_rows(&rows)
}

/// Positive rows, negative rows, and their shared graph-level summary.
#[derive(Clone, Copy, Debug)]
pub struct SamplePair {
    /// `N x c` concatenation of the first `t` hybrid layers (clean pass).
    pub positives: Var,
    /// `M x c` concatenation from the corrupted pass.
    pub negatives: Var,
    /// `1 x c` mean of the positive rows.
    pub summary: Var,
}

/// Concatenate the first `t` layers of both passes and pool the positives.
pub fn build_samples<F: Real>(
    tape: &mut Tape<F>,
    positive_hybrids: &[Var],
    negative_hybrids: &[Var],
    t: usize,
) -> Result<SamplePair> {
    if t == 0 || t > positive_hybrids.len() || t > negative_hybrids.len() {
        return Err(Error::Config(format!(
            "sampled layer count t={t} must lie in 1..={}",
            positive_hybrids.len().min(negative_hybrids.len())
        )));
    }
    let positives = tape.concat_cols(&positive_hybrids[..t])?;
    let negatives = tape.concat_cols(&negative_hybrids[..t])?;
    if tape.value(positives).shape() != tape.value(negatives).shape() {
        return Err(Error::shape(
            "build_samples",
            tape.value(positives).shape(),
            tape.value(negatives).shape(),
        ));
    }
    let summary = tape.mean_axis0(positives);
    Ok(SamplePair {
        positives,
        negatives,
        summary,
    })
}

/// Bilinear patch-summary scores `sigmoid(H W_S g^T)`, one per row of `rows`.
pub fn discriminate<F: Real>(
    tape: &mut Tape<F>,
    rows: Var,
    summary: Var,
    scoring: Var,
) -> Result<Var> {
    let projected = tape.matmul(rows, scoring)?;
    let summary_col = tape.transpose(summary);
    let logits = tape.matmul(projected, summary_col)?;
    Ok(tape.sigmoid(logits))
}

/// Binary cross-entropy over positive and negative scores:
/// `-(1/(N+M)) (sum log D(h_i, g) + sum log (1 - D(z_j, g)))`,
/// with probabilities clamped to `[PROB_EPS, 1 - PROB_EPS]`.
pub fn infomax_loss<F: Real>(tape: &mut Tape<F>, pair: &SamplePair, scoring: Var) -> Result<Var> {
    let n = tape.value(pair.positives).rows();
    let m = tape.value(pair.negatives).rows();
    if n == 0 || m == 0 {
        return Err(Error::Config("need at least one sample per side".into()));
    }
    let eps = F::of(PROB_EPS);
    let one = F::one();

    let pos_scores = discriminate(tape, pair.positives, pair.summary, scoring)?;
    let pos_clamped = tape.clamp(pos_scores, eps, one - eps);
    let pos_log = tape.log(pos_clamped)?;
    let pos_term = tape.sum(pos_log);

    let neg_scores = discriminate(tape, pair.negatives, pair.summary, scoring)?;
    let ones = tape.constant(Tensor::filled(m, 1, one));
    let neg_flipped = tape.sub(ones, neg_scores)?;
    let neg_clamped = tape.clamp(neg_flipped, eps, one - eps);
    let neg_log = tape.log(neg_clamped)?;
    let neg_term = tape.sum(neg_log);

    let total = tape.add(pos_term, neg_term)?;
    Ok(tape.scale(total, -one / F::of((n + m) as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck;
    use crate::tensor::Adam;
    use rand::Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn corrupt_preserves_row_multiset_and_column_sums() {
        let x = Tensor::<f64>::uniform(9, 4, 1.0, &mut rng(3));
        let shuffled = corrupt(&x, 17).unwrap();
        let mut original: Vec<Vec<u64>> = (0..9)
            .map(|i| x.row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        let mut permuted: Vec<Vec<u64>> = (0..9)
            .map(|i| shuffled.row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        original.sort();
        permuted.sort();
        assert_eq!(original, permuted);
        for j in 0..4 {
            let a: f64 = (0..9).map(|i| x.get(i, j)).sum();
            let b: f64 = (0..9).map(|i| shuffled.get(i, j)).sum();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn corrupt_two_rows_is_seed_stable() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let a = corrupt(&x, 5).unwrap();
        let b = corrupt(&x, 5).unwrap();
        assert_eq!(a, b);
        // Either the identity or the swap.
        let swapped = Tensor::from_rows(&[vec![3.0, 4.0], vec![1.0, 2.0]]).unwrap();
        assert!(a == x || a == swapped);
    }

    #[test]
    fn corrupt_rejects_single_row() {
        let x = Tensor::<f64>::zeros(1, 3);
        assert!(corrupt(&x, 0).is_err());
    }

    #[test]
    fn build_samples_t1_is_first_layer() {
        let mut tape = Tape::<f64>::new();
        let h1 = tape.constant(Tensor::uniform(5, 3, 1.0, &mut rng(4)));
        let h2 = tape.constant(Tensor::uniform(5, 2, 1.0, &mut rng(5)));
        let z1 = tape.constant(Tensor::uniform(5, 3, 1.0, &mut rng(6)));
        let z2 = tape.constant(Tensor::uniform(5, 2, 1.0, &mut rng(7)));
        let pair = build_samples(&mut tape, &[h1, h2], &[z1, z2], 1).unwrap();
        assert_eq!(tape.value(pair.positives), tape.value(h1));
        assert_eq!(tape.value(pair.negatives), tape.value(z1));
    }

    #[test]
    fn summary_of_identical_rows_is_that_row() {
        let mut tape = Tape::<f64>::new();
        let row = vec![0.5, -1.5, 2.0];
        let h = tape.constant(Tensor::from_rows(&[row.clone(), row.clone(), row.clone()]).unwrap());
        let pair = build_samples(&mut tape, &[h], &[h], 1).unwrap();
        let g = tape.value(pair.summary);
        for (a, b) in g.data().iter().zip(&row) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn summary_matches_independent_column_means() {
        let mut tape = Tape::<f64>::new();
        let hv = Tensor::uniform(8, 5, 2.0, &mut rng(8));
        let h = tape.constant(hv.clone());
        let pair = build_samples(&mut tape, &[h], &[h], 1).unwrap();
        for j in 0..5 {
            let mean: f64 = (0..8).map(|i| hv.get(i, j)).sum::<f64>() / 8.0;
            assert!((tape.value(pair.summary).get(0, j) - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn build_samples_rejects_excess_t() {
        let mut tape = Tape::<f64>::new();
        let h = tape.constant(Tensor::zeros(3, 2));
        assert!(build_samples(&mut tape, &[h], &[h], 2).is_err());
        assert!(build_samples(&mut tape, &[h], &[h], 0).is_err());
    }

    #[test]
    fn zero_scoring_matrix_scores_half() {
        let mut tape = Tape::<f64>::new();
        let rows = tape.constant(Tensor::uniform(4, 3, 1.0, &mut rng(9)));
        let g = tape.constant(Tensor::uniform(1, 3, 1.0, &mut rng(10)));
        let w = tape.param(Tensor::zeros(3, 3));
        let scores = discriminate(&mut tape, rows, g, w).unwrap();
        for &s in tape.value(scores).data() {
            assert_eq!(s, 0.5);
        }
    }

    #[test]
    fn identity_scoring_on_unit_vectors() {
        let mut tape = Tape::<f64>::new();
        let e1 = Tensor::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let rows = tape.constant(e1.clone());
        let g = tape.constant(e1);
        let w = tape.param(Tensor::identity(3));
        let scores = discriminate(&mut tape, rows, g, w).unwrap();
        let expected = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((tape.value(scores).item() - expected).abs() < 1e-12);
    }

    #[test]
    fn discriminator_gradient_matches_finite_differences() {
        let mut r = rng(11);
        let rows_v = Tensor::<f64>::uniform(4, 3, 1.0, &mut r);
        let g_v = Tensor::<f64>::uniform(1, 3, 1.0, &mut r);
        let w_v = Tensor::<f64>::uniform(3, 3, 0.5, &mut r);

        let loss_of = |w: &Tensor<f64>| {
            let mut tape = Tape::new();
            let rows = tape.constant(rows_v.clone());
            let g = tape.constant(g_v.clone());
            let w = tape.constant(w.clone());
            let scores = discriminate(&mut tape, rows, g, w).unwrap();
            let l = tape.sum(scores);
            tape.value(l).item()
        };

        let mut tape = Tape::new();
        let rows = tape.constant(rows_v.clone());
        let g = tape.constant(g_v.clone());
        let w = tape.param(w_v.clone());
        let scores = discriminate(&mut tape, rows, g, w).unwrap();
        let l = tape.sum(scores);
        tape.backward(l).unwrap();
        let analytic = tape.grad(w).unwrap().clone();

        let numeric =
            gradcheck::numeric_gradients(std::slice::from_ref(&w_v), gradcheck::DEFAULT_STEP, |p| {
                loss_of(&p[0])
            });
        assert!(gradcheck::max_rel_err(&[analytic], &numeric, 1e-6) < 1e-5);
    }

    #[test]
    fn chance_level_scores_give_ln_two() {
        let mut tape = Tape::<f64>::new();
        let pos = tape.constant(Tensor::uniform(6, 4, 1.0, &mut rng(12)));
        let neg = tape.constant(Tensor::uniform(6, 4, 1.0, &mut rng(13)));
        let pair = build_samples(&mut tape, &[pos], &[neg], 1).unwrap();
        let w = tape.param(Tensor::zeros(4, 4));
        let loss = infomax_loss(&mut tape, &pair, w).unwrap();
        assert!((tape.value(loss).item() - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn confident_correct_scores_drive_loss_to_zero() {
        // Positives along +e1, negatives along -e1, scoring matrix strongly
        // aligned: scores saturate the clamp and the loss lands near zero.
        let mut tape = Tape::<f64>::new();
        let pos = tape.constant(Tensor::from_rows(&[vec![30.0, 0.0], vec![30.0, 0.0]]).unwrap());
        let neg = tape.constant(Tensor::from_rows(&[vec![-30.0, 0.0], vec![-30.0, 0.0]]).unwrap());
        let pair = build_samples(&mut tape, &[pos], &[neg], 1).unwrap();
        let w = tape.param(Tensor::identity(2));
        let loss = infomax_loss(&mut tape, &pair, w).unwrap();
        assert!(tape.value(loss).item() < 1e-6);
        assert!(tape.value(loss).item() >= 0.0);
    }

    #[test]
    fn loss_matches_independent_bce_summation() {
        let mut r = rng(14);
        let pos_v = Tensor::<f64>::uniform(5, 3, 1.0, &mut r);
        let neg_v = Tensor::<f64>::uniform(4, 3, 1.0, &mut r);
        let w_v = Tensor::<f64>::uniform(3, 3, 0.7, &mut r);

        // Direct per-sample evaluation with scalar arithmetic only.
        let g: Vec<f64> = (0..3)
            .map(|j| (0..5).map(|i| pos_v.get(i, j)).sum::<f64>() / 5.0)
            .collect();
        let score = |row: &[f64]| {
            let mut s = 0.0;
            for (a, wrow) in row.iter().zip(0..3) {
                for (j, &gj) in g.iter().enumerate() {
                    s += a * w_v.get(wrow, j) * gj;
                }
            }
            1.0 / (1.0 + (-s).exp())
        };
        let mut direct = 0.0;
        for i in 0..5 {
            direct += score(pos_v.row(i)).clamp(PROB_EPS, 1.0 - PROB_EPS).ln();
        }
        for i in 0..4 {
            direct += (1.0 - score(neg_v.row(i)))
                .clamp(PROB_EPS, 1.0 - PROB_EPS)
                .ln();
        }
        direct /= -9.0;

        let mut tape = Tape::new();
        let pos = tape.constant(pos_v);
        let neg = tape.constant(neg_v);
        let pos_cat = tape.concat_cols(&[pos]).unwrap();
        let neg_cat = tape.concat_cols(&[neg]).unwrap();
        let summary = tape.mean_axis0(pos_cat);
        let pair = SamplePair {
            positives: pos_cat,
            negatives: neg_cat,
            summary,
        };
        let w = tape.param(w_v);
        let loss = infomax_loss(&mut tape, &pair, w).unwrap();
        assert!((tape.value(loss).item() - direct).abs() < 1e-10);
    }

    #[test]
    fn training_on_separable_samples_reaches_low_loss() {
        // Positives = e1 + noise, negatives = -e1 + noise.
        let c = 4;
        let n = 8;
        let mut r = rng(15);
        let mut pos = Tensor::<f64>::zeros(n, c);
        let mut neg = Tensor::<f64>::zeros(n, c);
        for i in 0..n {
            for j in 0..c {
                let base = if j == 0 { 1.0 } else { 0.0 };
                pos.set(i, j, base + 0.05 * r.random_range(-1.0..1.0));
                neg.set(i, j, -base + 0.05 * r.random_range(-1.0..1.0));
            }
        }
        let mut w = Tensor::<f64>::zeros(c, c);
        let mut opt = Adam::new(0.1).unwrap();
        let mut final_loss = f64::INFINITY;
        for _ in 0..500 {
            let mut tape = Tape::new();
            let p = tape.constant(pos.clone());
            let q = tape.constant(neg.clone());
            let pair = build_samples(&mut tape, &[p], &[q], 1).unwrap();
            let w_var = tape.param(w.clone());
            let loss = infomax_loss(&mut tape, &pair, w_var).unwrap();
            final_loss = tape.value(loss).item();
            tape.backward(loss).unwrap();
            let grad = tape.grad_or_zeros(w_var);
            opt.step(&mut [&mut w], &[grad]).unwrap();
        }
        assert!(final_loss < 0.1, "loss stayed at {final_loss}");
    }
}
