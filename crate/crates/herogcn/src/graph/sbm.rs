use super::AttributedGraph;
use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Stochastic block model configuration.
#[derive(Clone, Copy, Debug)]
pub struct SbmParams {
    pub blocks: usize,
    pub per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Standard deviation of Gaussian noise added to the one-hot attributes.
    pub noise: f64,
    pub seed: u64,
}

/// Sample a block-structured graph with one-hot-plus-noise attributes.
///
/// Nodes `b * per_block .. (b+1) * per_block` belong to block `b`; returned
/// labels follow that layout. Deterministic under `seed`.
pub fn sbm_generate<F: Real>(params: &SbmParams) -> Result<(AttributedGraph<F>, Vec<usize>)> {
    let SbmParams {
        blocks,
        per_block,
        p_in,
        p_out,
        noise,
        seed,
    } = *params;
    if blocks == 0 || per_block == 0 {
        return Err(Error::Config(format!(
            "degenerate block model: {blocks} blocks of {per_block} nodes"
        )));
    }
    let n = blocks * per_block;
    if n < 2 {
        return Err(Error::Config("block model needs at least two nodes".into()));
    }
    if !(0.0..=1.0).contains(&p_out) || !(0.0..=1.0).contains(&p_in) || p_out >= p_in {
        return Err(Error::Config(format!(
            "need 0 <= p_out < p_in <= 1, got p_in={p_in}, p_out={p_out}"
        )));
    }
    if noise < 0.0 {
        return Err(Error::Config(format!("noise must be >= 0, got {noise}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|v| v / per_block).collect();

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }

    let mut attributes = Tensor::zeros(n, blocks);
    for (i, &label) in labels.iter().enumerate() {
        attributes.set(i, label, F::one());
    }
    if noise > 0.0 {
        let normal = Normal::new(0.0, noise).expect("noise validated above");
        for v in attributes.data_mut() {
            *v += F::of(normal.sample(&mut rng));
        }
    }

    Ok((AttributedGraph::new(attributes, &edges)?, labels))
}
