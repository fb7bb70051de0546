//! The full model: every trainable parameter and the joint forward pass
//! that produces the five loss terms on one tape.

use crate::agcn::{agcn_forward, register_gcn, GcnStack, GcnVars};
use crate::autoencoder::{
    decode, encode, register_decoder, register_encoder, DecoderStack, EncoderStack, StackVars,
};
use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::infomax::{build_samples, corrupt, infomax_loss};
use crate::selfsup::{cluster_head, kl_loss, modularity_loss, soft_assign, target_distribution_var};
use crate::tensor::{Real, Tape, Tensor, Var};
use rand::Rng;

/// All trainable parameters.
#[derive(Clone, Debug)]
pub struct ModelState<F> {
    pub encoder: EncoderStack<F>,
    pub decoder: DecoderStack<F>,
    pub gcn: GcnStack<F>,
    /// Bilinear scoring matrix of the infomax discriminator, `c x c` where
    /// `c` is the concatenated width of the first `t` hybrid layers.
    pub scoring: Tensor<F>,
    /// Cluster centers, `K x dim_L`, seeded by k-means after pretraining.
    pub centers: Tensor<F>,
    /// Clustering-head weight, `dim_L x K`.
    pub head: Tensor<F>,
}

impl<F: Real> ModelState<F> {
    /// Glorot-initialized model; centers start at zero until seeded.
    pub fn init<R: Rng>(
        attribute_dim: usize,
        layer_dims: &[usize],
        clusters: usize,
        sampled_layers: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if sampled_layers == 0 || sampled_layers > layer_dims.len() {
            return Err(Error::Config(format!(
                "sampled layer count {sampled_layers} must lie in 1..={}",
                layer_dims.len()
            )));
        }
        if clusters < 2 {
            return Err(Error::Config(format!(
                "clustering needs at least 2 clusters, got {clusters}"
            )));
        }
        let encoder = EncoderStack::glorot(attribute_dim, layer_dims, rng)?;
        let decoder = DecoderStack::glorot_mirror(&encoder.dims(), rng)?;
        let gcn = GcnStack::glorot_like(&encoder, rng);
        let concat_width: usize = layer_dims[..sampled_layers].iter().sum();
        let scoring = Tensor::glorot(concat_width, concat_width, concat_width, concat_width, rng);
        let bottleneck = *layer_dims.last().expect("non-empty dims");
        let centers = Tensor::zeros(clusters, bottleneck);
        let head = Tensor::glorot(bottleneck, clusters, bottleneck, clusters, rng);
        Ok(ModelState {
            encoder,
            decoder,
            gcn,
            scoring,
            centers,
            head,
        })
    }

    /// Parameters in the fixed order shared with [`ModelVars::all`].
    pub fn params_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut out = Vec::new();
        for layer in self.encoder.layers_mut() {
            out.push(&mut layer.weight);
            out.push(&mut layer.bias);
        }
        for layer in self.decoder.layers_mut() {
            out.push(&mut layer.weight);
            out.push(&mut layer.bias);
        }
        for w in self.gcn.weights_mut() {
            out.push(w);
        }
        out.push(&mut self.scoring);
        out.push(&mut self.centers);
        out.push(&mut self.head);
        out
    }

    pub fn params(&self) -> Vec<&Tensor<F>> {
        let mut out = Vec::new();
        for layer in self.encoder.layers() {
            out.push(&layer.weight);
            out.push(&layer.bias);
        }
        for layer in self.decoder.layers() {
            out.push(&layer.weight);
            out.push(&layer.bias);
        }
        for w in self.gcn.weights() {
            out.push(w);
        }
        out.push(&self.scoring);
        out.push(&self.centers);
        out.push(&self.head);
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }
}

/// Tape handles of the registered parameters.
#[derive(Clone, Debug)]
pub struct ModelVars {
    pub encoder: StackVars,
    pub decoder: StackVars,
    pub gcn: GcnVars,
    pub scoring: Var,
    pub centers: Var,
    pub head: Var,
}

impl ModelVars {
    /// Same order as [`ModelState::params_mut`].
    pub fn all(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for &(w, b) in &self.encoder.layers {
            out.push(w);
            out.push(b);
        }
        for &(w, b) in &self.decoder.layers {
            out.push(w);
            out.push(b);
        }
        out.extend(&self.gcn.weights);
        out.push(self.scoring);
        out.push(self.centers);
        out.push(self.head);
        out
    }
}

pub fn register_model<F: Real>(tape: &mut Tape<F>, state: &ModelState<F>) -> ModelVars {
    ModelVars {
        encoder: register_encoder(tape, &state.encoder),
        decoder: register_decoder(tape, &state.decoder),
        gcn: register_gcn(tape, &state.gcn),
        scoring: tape.param(state.scoring.clone()),
        centers: tape.param(state.centers.clone()),
        head: tape.param(state.head.clone()),
    }
}

/// Graph-derived constants of the joint phase.
#[derive(Clone, Debug)]
pub struct GraphInputs<F> {
    pub attributes: Tensor<F>,
    pub a_hat: Tensor<F>,
    /// Modularity matrix and edge count; `None` when the graph has no edges.
    pub modularity: Option<(Tensor<F>, usize)>,
}

impl<F: Real> GraphInputs<F> {
    pub fn from_graph(graph: &AttributedGraph<F>) -> Self {
        let modularity = if graph.edge_count() == 0 {
            None
        } else {
            Some((
                graph.modularity_matrix().expect("edge count checked"),
                graph.edge_count(),
            ))
        };
        GraphInputs {
            attributes: graph.attributes().clone(),
            a_hat: crate::graph::normalize(graph).into_matrix(),
            modularity,
        }
    }
}

/// Loss weights, toggles, and the per-epoch corruption seed.
#[derive(Clone, Copy, Debug)]
pub struct LossSettings {
    pub alpha: f64,
    pub sampled_layers: usize,
    pub lambda_infomax: f64,
    pub lambda_cluster: f64,
    pub lambda_structure: f64,
    pub lambda_modularity: f64,
    pub enable_infomax: bool,
    pub enable_modularity: bool,
    /// Evaluate the modularity loss on the sharpened target (differentiable
    /// through the soft assignments) instead of on the assignments directly.
    pub modularity_on_target: bool,
    pub corruption_seed: u64,
}

/// Forward state after the encoder half: enough to read the current soft
/// assignments before the target distribution is fixed for the epoch.
pub struct PartialForward {
    pub vars: ModelVars,
    pub x: Var,
    pub a_hat: Var,
    pub encoder_outputs: Vec<Var>,
    pub embedding: Var,
    pub reconstruction: Var,
    pub soft_assignments: Var,
}

/// Every loss term plus the assignment matrices, all on one tape.
pub struct ForwardPass {
    pub vars: ModelVars,
    pub soft_assignments: Var,
    pub head_assignments: Var,
    pub reconstruction: Var,
    pub infomax: Option<Var>,
    pub cluster_kl: Var,
    pub structure_kl: Var,
    pub modularity: Option<Var>,
    pub total: Var,
}

/// Stage one: encoder, decoder, reconstruction loss, soft assignments.
pub fn forward_to_assignments<F: Real>(
    tape: &mut Tape<F>,
    state: &ModelState<F>,
    inputs: &GraphInputs<F>,
) -> Result<PartialForward> {
    let vars = register_model(tape, state);
    let x = tape.constant(inputs.attributes.clone());
    let a_hat = tape.constant(inputs.a_hat.clone());
    let encoder_outputs = encode(tape, &vars.encoder, x)?;
    let embedding = *encoder_outputs.last().expect("non-empty encoder");
    let reconstructed = decode(tape, &vars.decoder, embedding)?;
    let reconstruction = crate::autoencoder::reconstruction_loss(tape, x, reconstructed)?;
    let soft_assignments = soft_assign(tape, embedding, vars.centers)?;
    Ok(PartialForward {
        vars,
        x,
        a_hat,
        encoder_outputs,
        embedding,
        reconstruction,
        soft_assignments,
    })
}

/// Stage two: hybrid layers, infomax, clustering head, and the combined
/// objective against a fixed target distribution.
pub fn complete_losses<F: Real>(
    tape: &mut Tape<F>,
    partial: PartialForward,
    inputs: &GraphInputs<F>,
    target: &Tensor<F>,
    settings: &LossSettings,
) -> Result<ForwardPass> {
    let PartialForward {
        vars,
        x,
        a_hat,
        encoder_outputs,
        embedding: _,
        reconstruction,
        soft_assignments,
    } = partial;

    let hybrids = agcn_forward(
        tape,
        &vars.gcn,
        &encoder_outputs,
        a_hat,
        x,
        settings.alpha,
    )?;

    let infomax = if settings.enable_infomax {
        let corrupted = corrupt(tape.value(x), settings.corruption_seed)?;
        let x_neg = tape.constant(corrupted);
        let neg_enc = encode(tape, &vars.encoder, x_neg)?;
        let neg_hybrids = agcn_forward(tape, &vars.gcn, &neg_enc, a_hat, x_neg, settings.alpha)?;
        let pair = build_samples(tape, &hybrids, &neg_hybrids, settings.sampled_layers)?;
        Some(infomax_loss(tape, &pair, vars.scoring)?)
    } else {
        None
    };

    let final_hybrid = *hybrids.last().expect("non-empty stack");
    let head_assignments = cluster_head(tape, final_hybrid, a_hat, vars.head)?;

    let cluster_kl = kl_loss(tape, target, soft_assignments)?;
    let structure_kl = kl_loss(tape, target, head_assignments)?;

    let modularity = match (&inputs.modularity, settings.enable_modularity) {
        (Some((b_matrix, edge_count)), true) => {
            let b = tape.constant(b_matrix.clone());
            let p = if settings.modularity_on_target {
                target_distribution_var(tape, soft_assignments)?
            } else {
                soft_assignments
            };
            Some(modularity_loss(tape, b, p, *edge_count)?)
        }
        (None, true) => {
            log::warn!("graph has no edges; modularity loss reported as 0 and excluded");
            None
        }
        _ => None,
    };

    // L = L_R + l1 L_I + l2 L_C + l3 L_G + l4 L_M, disabled terms omitted.
    let mut total = reconstruction;
    if let Some(l_i) = infomax {
        let scaled = tape.scale(l_i, F::of(settings.lambda_infomax));
        total = tape.add(total, scaled)?;
    }
    let scaled_c = tape.scale(cluster_kl, F::of(settings.lambda_cluster));
    total = tape.add(total, scaled_c)?;
    let scaled_g = tape.scale(structure_kl, F::of(settings.lambda_structure));
    total = tape.add(total, scaled_g)?;
    if let Some(l_m) = modularity {
        let scaled = tape.scale(l_m, F::of(settings.lambda_modularity));
        total = tape.add(total, scaled)?;
    }

    Ok(ForwardPass {
        vars,
        soft_assignments,
        head_assignments,
        reconstruction,
        infomax,
        cluster_kl,
        structure_kl,
        modularity,
        total,
    })
}
