//! Attribute-enriched GCN: graph convolutions over hybrid representations,
//! fused layer by layer with the encoder outputs.

use crate::autoencoder::EncoderStack;
use crate::error::{Error, Result};
use crate::tensor::{Real, Tape, Tensor, Var};
use rand::Rng;

/// Convolution weights, one per layer, widths mirroring the encoder so the
/// fusion `alpha * H + (1 - alpha) * E` is shape-congruent. No bias terms.
#[derive(Clone, Debug)]
pub struct GcnStack<F> {
    weights: Vec<Tensor<F>>,
}

impl<F: Real> GcnStack<F> {
    pub fn glorot_like<R: Rng>(encoder: &EncoderStack<F>, rng: &mut R) -> Self {
        let dims = encoder.dims();
        let weights = dims
            .windows(2)
            .map(|w| Tensor::glorot(w[0], w[1], w[0], w[1], rng))
            .collect();
        GcnStack { weights }
    }

    pub fn weights(&self) -> &[Tensor<F>] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Tensor<F>] {
        &mut self.weights
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }
}

#[derive(Clone, Debug)]
pub struct GcnVars {
    pub weights: Vec<Var>,
}

pub fn register_gcn<F: Real>(tape: &mut Tape<F>, gcn: &GcnStack<F>) -> GcnVars {
    GcnVars {
        weights: gcn.weights.iter().map(|w| tape.param(w.clone())).collect(),
    }
}

/// Run the convolution stack and fuse each layer with the encoder output.
///
/// `H^(1) = relu(A_hat X W^(1))`, `H^(l) = relu(A_hat H~^(l-1) W^(l))`,
/// `H~^(l) = alpha H^(l) + (1 - alpha) E^(l)`. Returns all hybrid layers.
pub fn agcn_forward<F: Real>(
    tape: &mut Tape<F>,
    gcn: &GcnVars,
    encoder_outputs: &[Var],
    a_hat: Var,
    x: Var,
    alpha: f64,
) -> Result<Vec<Var>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!(
            "fusion coefficient must lie in [0, 1], got {alpha}"
        )));
    }
    if encoder_outputs.len() != gcn.weights.len() {
        return Err(Error::Config(format!(
            "encoder depth {} differs from GCN depth {}",
            encoder_outputs.len(),
            gcn.weights.len()
        )));
    }
    let a = F::of(alpha);
    let b = F::of(1.0 - alpha);
    let mut hybrids = Vec::with_capacity(gcn.weights.len());
    let mut previous = x;
    for (layer, &weight) in gcn.weights.iter().enumerate() {
        let propagated = tape.matmul(a_hat, previous)?;
        let projected = tape.matmul(propagated, weight)?;
        let conv = tape.relu(projected);
        let scaled_conv = tape.scale(conv, a);
        let scaled_enc = tape.scale(encoder_outputs[layer], b);
        let hybrid = tape.add(scaled_conv, scaled_enc)?;
        hybrids.push(hybrid);
        previous = hybrid;
    }
    Ok(hybrids)
}
