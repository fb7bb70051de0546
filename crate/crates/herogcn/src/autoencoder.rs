//! Fully connected encoder/decoder stacks, the reconstruction loss, and the
//! pretraining pass that seeds cluster-center initialization.

use crate::error::{Error, Result};
use crate::tensor::{Adam, Real, Tape, Tensor, Var};
use rand::seq::SliceRandom;
use rand::Rng;
use std::io::Write;
use std::path::Path;

/// One dense layer mapping `in_dim -> out_dim`.
///
/// The weight is stored `in_dim x out_dim` so activations are `X . W + b`.
#[derive(Clone, Debug)]
pub struct DenseLayer<F> {
    pub weight: Tensor<F>,
    pub bias: Tensor<F>,
}

impl<F: Real> DenseLayer<F> {
    fn glorot<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        DenseLayer {
            weight: Tensor::glorot(in_dim, out_dim, in_dim, out_dim, rng),
            bias: Tensor::zeros(1, out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Encoder: `input_dim -> layer_dims[0] -> ... -> layer_dims[L-1]`,
/// ReLU after every layer.
#[derive(Clone, Debug)]
pub struct EncoderStack<F> {
    layers: Vec<DenseLayer<F>>,
}

/// Decoder: exact mirror of the encoder dims, ReLU on all but the final
/// layer, which stays linear so negative attribute values reconstruct.
#[derive(Clone, Debug)]
pub struct DecoderStack<F> {
    layers: Vec<DenseLayer<F>>,
}

fn stack_dims<F: Real>(layers: &[DenseLayer<F>]) -> Vec<usize> {
    let mut dims = vec![layers[0].in_dim()];
    dims.extend(layers.iter().map(DenseLayer::out_dim));
    dims
}

impl<F: Real> EncoderStack<F> {
    pub fn glorot<R: Rng>(input_dim: usize, layer_dims: &[usize], rng: &mut R) -> Result<Self> {
        check_dims(input_dim, layer_dims)?;
        let mut layers = Vec::with_capacity(layer_dims.len());
        let mut prev = input_dim;
        for &dim in layer_dims {
            layers.push(DenseLayer::glorot(prev, dim, rng));
            prev = dim;
        }
        Ok(EncoderStack { layers })
    }

    pub fn layers(&self) -> &[DenseLayer<F>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer<F>] {
        &mut self.layers
    }

    /// `[input_dim, dim_1, ..., dim_L]`.
    pub fn dims(&self) -> Vec<usize> {
        stack_dims(&self.layers)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn bottleneck_dim(&self) -> usize {
        self.layers.last().expect("non-empty stack").out_dim()
    }

    /// Forward pass over plain values (no tape).
    pub fn encode_values(&self, x: &Tensor<F>) -> Result<Vec<Tensor<F>>> {
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut current = x.clone();
        for layer in &self.layers {
            let mut z = current.matmul(&layer.weight)?;
            for i in 0..z.rows() {
                for j in 0..z.cols() {
                    let v = (z.get(i, j) + layer.bias.get(0, j)).max(F::zero());
                    z.set(i, j, v);
                }
            }
            outputs.push(z.clone());
            current = z;
        }
        Ok(outputs)
    }
}

impl<F: Real> DecoderStack<F> {
    /// Mirror of `encoder_dims = [d, dim_1, .., dim_L]`.
    pub fn glorot_mirror<R: Rng>(encoder_dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut rev = encoder_dims.to_vec();
        rev.reverse();
        check_dims(rev[0], &rev[1..])?;
        let mut layers = Vec::with_capacity(rev.len() - 1);
        for w in rev.windows(2) {
            layers.push(DenseLayer::glorot(w[0], w[1], rng));
        }
        Ok(DecoderStack { layers })
    }

    pub fn layers(&self) -> &[DenseLayer<F>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer<F>] {
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        stack_dims(&self.layers)
    }
}

fn check_dims(input_dim: usize, layer_dims: &[usize]) -> Result<()> {
    if input_dim == 0 || layer_dims.is_empty() || layer_dims.contains(&0) {
        return Err(Error::Config(format!(
            "invalid layer dims {layer_dims:?} for input width {input_dim}"
        )));
    }
    Ok(())
}

/// Tape handles for one registered dense stack.
#[derive(Clone, Debug)]
pub struct StackVars {
    pub layers: Vec<(Var, Var)>,
}

pub fn register_encoder<F: Real>(tape: &mut Tape<F>, enc: &EncoderStack<F>) -> StackVars {
    register_layers(tape, &enc.layers)
}

pub fn register_decoder<F: Real>(tape: &mut Tape<F>, dec: &DecoderStack<F>) -> StackVars {
    register_layers(tape, &dec.layers)
}

fn register_layers<F: Real>(tape: &mut Tape<F>, layers: &[DenseLayer<F>]) -> StackVars {
    StackVars {
        layers: layers
            .iter()
            .map(|l| (tape.param(l.weight.clone()), tape.param(l.bias.clone())))
            .collect(),
    }
}

/// Differentiable encoder forward; returns every intermediate `E^(l)`.
pub fn encode<F: Real>(tape: &mut Tape<F>, enc: &StackVars, x: Var) -> Result<Vec<Var>> {
    let mut outputs = Vec::with_capacity(enc.layers.len());
    let mut current = x;
    for &(weight, bias) in &enc.layers {
        let z = tape.matmul(current, weight)?;
        let zb = tape.add_row_vec(z, bias)?;
        let activated = tape.relu(zb);
        outputs.push(activated);
        current = activated;
    }
    Ok(outputs)
}

/// Differentiable decoder forward; final layer is linear.
pub fn decode<F: Real>(tape: &mut Tape<F>, dec: &StackVars, code: Var) -> Result<Var> {
    let mut current = code;
    let last = dec.layers.len() - 1;
    for (idx, &(weight, bias)) in dec.layers.iter().enumerate() {
        let z = tape.matmul(current, weight)?;
        let zb = tape.add_row_vec(z, bias)?;
        current = if idx == last { zb } else { tape.relu(zb) };
    }
    Ok(current)
}

/// `L_R = (1/2N) * ||X - X_hat||_F^2` with `N` the number of rows.
pub fn reconstruction_loss<F: Real>(tape: &mut Tape<F>, x: Var, x_hat: Var) -> Result<Var> {
    let (xr, xh) = (tape.value(x).shape(), tape.value(x_hat).shape());
    if xr != xh {
        return Err(Error::shape("reconstruction_loss", xr, xh));
    }
    let diff = tape.sub(x, x_hat)?;
    let sq = tape.square(diff);
    let total = tape.sum(sq);
    Ok(tape.scale(total, F::of(1.0 / (2.0 * xr.0 as f64))))
}

/// Minimize the reconstruction loss alone with mini-batch Adam.
///
/// Returns the mean per-batch loss of each epoch. Deterministic under the
/// caller-provided RNG.
pub fn pretrain<F: Real, R: Rng>(
    enc: &mut EncoderStack<F>,
    dec: &mut DecoderStack<F>,
    x: &Tensor<F>,
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if epochs == 0 {
        return Err(Error::Config("pretraining requires epochs >= 1".into()));
    }
    if batch_size == 0 {
        return Err(Error::Config("pretraining requires batch_size >= 1".into()));
    }
    let n = x.rows();
    let batch = if batch_size > n {
        log::warn!("batch size {batch_size} exceeds {n} rows; clamping");
        n
    } else {
        batch_size
    };

    let mut optimizer = Adam::new(F::of(learning_rate))?;
    let mut history = Vec::with_capacity(epochs);
    let mut order: Vec<usize> = (0..n).collect();

    for _ in 0..epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0.0;
        for chunk in order.chunks(batch) {
            let rows: Vec<Vec<F>> = chunk.iter().map(|&i| x.row(i).to_vec()).collect();
            let x_batch = Tensor::from_rows(&rows)?;

            let mut tape = Tape::new();
            let enc_vars = register_encoder(&mut tape, enc);
            let dec_vars = register_decoder(&mut tape, dec);
            let input = tape.constant(x_batch);
            let encoded = encode(&mut tape, &enc_vars, input)?;
            let code = *encoded.last().expect("non-empty encoder");
            let reconstructed = decode(&mut tape, &dec_vars, code)?;
            let loss = reconstruction_loss(&mut tape, input, reconstructed)?;
            epoch_loss += tape.value(loss).item().as_f64();
            batches += 1.0;
            tape.backward(loss)?;

            let grads: Vec<Tensor<F>> = enc_vars
                .layers
                .iter()
                .chain(&dec_vars.layers)
                .flat_map(|&(w, b)| [tape.grad_or_zeros(w), tape.grad_or_zeros(b)])
                .collect();
            let mut params: Vec<&mut Tensor<F>> = Vec::new();
            for layer in enc.layers.iter_mut().chain(dec.layers.iter_mut()) {
                params.push(&mut layer.weight);
                params.push(&mut layer.bias);
            }
            optimizer.step(&mut params, &grads)?;
        }
        history.push(epoch_loss / batches);
    }
    Ok(history)
}

// ---- checkpointing --------------------------------------------------------

const CHECKPOINT_MAGIC: &str = "herogcn-ae v1";

/// Write both stacks as a versioned text dump: dims line, then one
/// whitespace-separated block per parameter tensor in registration order.
pub fn save_checkpoint<F: Real>(
    path: &Path,
    enc: &EncoderStack<F>,
    dec: &DecoderStack<F>,
) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = String::new();
    out.push_str(CHECKPOINT_MAGIC);
    out.push('\n');
    let dims = enc.dims();
    out.push_str(&format!(
        "dims {}\n",
        dims.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
    ));
    for layer in enc.layers().iter().chain(dec.layers()) {
        for t in [&layer.weight, &layer.bias] {
            out.push_str(&format!("block {} {}\n", t.rows(), t.cols()));
            let values: Vec<String> = t.data().iter().map(|v| format!("{:e}", v.as_f64())).collect();
            out.push_str(&values.join(" "));
            out.push('\n');
        }
    }
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(out.as_bytes()).map_err(io_err)?;
    Ok(())
}

/// Load a checkpoint, rejecting version or dimension mismatches.
pub fn load_checkpoint<F: Real>(path: &Path) -> Result<(EncoderStack<F>, DecoderStack<F>)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let perr = |line: usize, detail: String| Error::Parse {
        path: path.display().to_string(),
        line,
        detail,
    };
    let mut lines = text.lines().enumerate();

    let (_, magic) = lines
        .next()
        .ok_or_else(|| perr(1, "empty checkpoint".into()))?;
    if magic.trim() != CHECKPOINT_MAGIC {
        return Err(perr(1, format!("unsupported checkpoint header '{magic}'")));
    }
    let (_, dims_line) = lines.next().ok_or_else(|| perr(2, "missing dims".into()))?;
    let dims: Vec<usize> = dims_line
        .trim()
        .strip_prefix("dims ")
        .ok_or_else(|| perr(2, "expected 'dims ...'".into()))?
        .split_whitespace()
        .map(|s| s.parse::<usize>().map_err(|_| perr(2, format!("bad dim '{s}'"))))
        .collect::<Result<_>>()?;
    if dims.len() < 2 {
        return Err(perr(2, "need an input width and at least one layer".into()));
    }

    let mut read_block = |expect_rows: usize, expect_cols: usize| -> Result<Tensor<F>> {
        let (lineno, header) = lines
            .next()
            .ok_or_else(|| perr(0, "truncated checkpoint: missing block header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "block" {
            return Err(perr(lineno + 1, format!("expected 'block r c', found '{header}'")));
        }
        let rows: usize = fields[1].parse().map_err(|_| perr(lineno + 1, "bad row count".into()))?;
        let cols: usize = fields[2].parse().map_err(|_| perr(lineno + 1, "bad col count".into()))?;
        if (rows, cols) != (expect_rows, expect_cols) {
            return Err(perr(
                lineno + 1,
                format!("dimension mismatch: checkpoint block is {rows}x{cols}, dims line implies {expect_rows}x{expect_cols}"),
            ));
        }
        let (lineno, data_line) = lines
            .next()
            .ok_or_else(|| perr(lineno + 2, "truncated checkpoint: missing block data".into()))?;
        let data: Vec<F> = data_line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map(F::of)
                    .map_err(|_| perr(lineno + 1, format!("bad value '{s}'")))
            })
            .collect::<Result<_>>()?;
        if data.len() != rows * cols {
            return Err(perr(
                lineno + 1,
                format!("block holds {} values, expected {}", data.len(), rows * cols),
            ));
        }
        Tensor::from_vec(rows, cols, data)
    };

    let mut enc_layers = Vec::new();
    for w in dims.windows(2) {
        enc_layers.push(DenseLayer {
            weight: read_block(w[0], w[1])?,
            bias: read_block(1, w[1])?,
        });
    }
    let mut rev = dims.clone();
    rev.reverse();
    let mut dec_layers = Vec::new();
    for w in rev.windows(2) {
        dec_layers.push(DenseLayer {
            weight: read_block(w[0], w[1])?,
            bias: read_block(1, w[1])?,
        });
    }
    Ok((EncoderStack { layers: enc_layers }, DecoderStack { layers: dec_layers }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_weights_give_zero_outputs() {
        let mut enc = EncoderStack::<f64>::glorot(3, &[4, 2], &mut rng(0)).unwrap();
        for layer in enc.layers_mut() {
            layer.weight = Tensor::zeros(layer.weight.rows(), layer.weight.cols());
            layer.bias = Tensor::zeros(1, layer.bias.cols());
        }
        let mut tape = Tape::new();
        let vars = register_encoder(&mut tape, &enc);
        let x = tape.constant(Tensor::filled(5, 3, 1.3));
        let outs = encode(&mut tape, &vars, x).unwrap();
        for out in outs {
            assert!(tape.value(out).data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn identity_layer_is_transparent_on_nonnegatives() {
        let mut enc = EncoderStack::<f64>::glorot(3, &[3], &mut rng(0)).unwrap();
        enc.layers_mut()[0].weight = Tensor::identity(3);
        enc.layers_mut()[0].bias = Tensor::zeros(1, 3);
        let x_val = Tensor::from_rows(&[vec![1.0, 0.0, 2.5], vec![0.3, 4.0, 0.0]]).unwrap();
        let mut tape = Tape::new();
        let vars = register_encoder(&mut tape, &enc);
        let x = tape.constant(x_val.clone());
        let outs = encode(&mut tape, &vars, x).unwrap();
        assert_eq!(tape.value(outs[0]), &x_val);
    }

    #[test]
    fn encoder_shape_contract() {
        let enc = EncoderStack::<f64>::glorot(7, &[5, 3], &mut rng(1)).unwrap();
        let mut tape = Tape::new();
        let vars = register_encoder(&mut tape, &enc);
        let x = tape.constant(Tensor::uniform(12, 7, 1.0, &mut rng(2)));
        let outs = encode(&mut tape, &vars, x).unwrap();
        assert_eq!(tape.value(outs[0]).shape(), (12, 5));
        assert_eq!(tape.value(outs[1]).shape(), (12, 3));
    }

    #[test]
    fn encoder_rejects_width_mismatch() {
        let enc = EncoderStack::<f64>::glorot(7, &[5], &mut rng(1)).unwrap();
        let mut tape = Tape::new();
        let vars = register_encoder(&mut tape, &enc);
        let x = tape.constant(Tensor::<f64>::zeros(4, 6));
        assert!(encode(&mut tape, &vars, x).is_err());
    }

    #[test]
    fn decode_round_trip_preserves_shape() {
        let enc = EncoderStack::<f64>::glorot(6, &[4, 2], &mut rng(3)).unwrap();
        let dec = DecoderStack::<f64>::glorot_mirror(&enc.dims(), &mut rng(4)).unwrap();
        let mut tape = Tape::new();
        let enc_vars = register_encoder(&mut tape, &enc);
        let dec_vars = register_decoder(&mut tape, &dec);
        let x = tape.constant(Tensor::uniform(9, 6, 1.0, &mut rng(5)));
        let outs = encode(&mut tape, &enc_vars, x).unwrap();
        let xh = decode(&mut tape, &dec_vars, *outs.last().unwrap()).unwrap();
        assert_eq!(tape.value(xh).shape(), (9, 6));
    }

    #[test]
    fn reconstruction_loss_zero_when_equal() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::<f64>::filled(4, 3, 2.0));
        let y = tape.constant(Tensor::<f64>::filled(4, 3, 2.0));
        let loss = reconstruction_loss(&mut tape, x, y).unwrap();
        assert_eq!(tape.value(loss).item(), 0.0);
    }

    #[test]
    fn reconstruction_loss_hand_case() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::from_rows(&[vec![1.0, 1.0]]).unwrap());
        let y = tape.constant(Tensor::from_rows(&[vec![0.0, 0.0]]).unwrap());
        let loss = reconstruction_loss(&mut tape, x, y).unwrap();
        assert_eq!(tape.value(loss).item(), 1.0);
    }

    #[test]
    fn reconstruction_loss_matches_direct_summation() {
        let mut r = rng(6);
        let xv = Tensor::<f64>::uniform(10, 4, 2.0, &mut r);
        let yv = Tensor::<f64>::uniform(10, 4, 2.0, &mut r);
        let direct: f64 = xv
            .data()
            .iter()
            .zip(yv.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / 20.0;
        let mut tape = Tape::new();
        let x = tape.constant(xv);
        let y = tape.constant(yv);
        let loss = reconstruction_loss(&mut tape, x, y).unwrap();
        assert!((tape.value(loss).item() - direct).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_loss_shape_mismatch() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::<f64>::zeros(2, 2));
        let y = tape.constant(Tensor::<f64>::zeros(2, 3));
        assert!(reconstruction_loss(&mut tape, x, y).is_err());
    }

    #[test]
    fn reconstruction_gradient_is_residual_over_n() {
        // d L_R / d X_hat = (X_hat - X) / N, against finite differences.
        let mut r = rng(7);
        let xv = Tensor::<f64>::uniform(5, 3, 1.0, &mut r);
        let xhv = Tensor::<f64>::uniform(5, 3, 1.0, &mut r);

        let mut tape = Tape::new();
        let x = tape.constant(xv.clone());
        let xh = tape.param(xhv.clone());
        let loss = reconstruction_loss(&mut tape, x, xh).unwrap();
        tape.backward(loss).unwrap();
        let analytic = tape.grad(xh).unwrap().clone();

        let expected = xhv.sub(&xv).unwrap().scale(1.0 / 5.0);
        assert!(
            gradcheck::max_rel_err(std::slice::from_ref(&analytic), &[expected], 1e-6) < 1e-12,
            "closed form disagrees"
        );
        gradcheck::check_single(&xhv, &analytic, gradcheck::DEFAULT_STEP, 1e-6, |p| {
            let mut t = Tape::new();
            let x = t.constant(xv.clone());
            let xh = t.constant(p[0].clone());
            let l = reconstruction_loss(&mut t, x, xh).unwrap();
            t.value(l).item()
        });
    }

    #[test]
    fn pretrain_reduces_loss_on_reconstructible_input() {
        let mut x = Tensor::<f64>::zeros(12, 4);
        for i in 0..12 {
            x.set(i, i % 4, 1.0);
        }
        let mut r = rng(8);
        let mut enc = EncoderStack::glorot(4, &[6, 3], &mut r).unwrap();
        let mut dec = DecoderStack::glorot_mirror(&enc.dims(), &mut r).unwrap();
        let history = pretrain(&mut enc, &mut dec, &x, 200, 1e-2, 12, &mut r).unwrap();
        let first = history[0];
        let last = *history.last().unwrap();
        assert!(
            last < 0.1 * first,
            "loss {last} did not fall below 10% of initial {first}"
        );
        // Monotone on average: mean over later halves keeps shrinking.
        let half = history.len() / 2;
        let early: f64 = history[..half].iter().sum::<f64>() / half as f64;
        let late: f64 = history[half..].iter().sum::<f64>() / (history.len() - half) as f64;
        assert!(late < early);
    }

    #[test]
    fn pretrain_rejects_zero_epochs() {
        let mut r = rng(9);
        let mut enc = EncoderStack::<f64>::glorot(4, &[2], &mut r).unwrap();
        let mut dec = DecoderStack::glorot_mirror(&enc.dims(), &mut r).unwrap();
        let x = Tensor::zeros(4, 4);
        assert!(pretrain(&mut enc, &mut dec, &x, 0, 1e-3, 4, &mut r).is_err());
    }

    #[test]
    fn pretrain_clamps_oversized_batches() {
        let x = Tensor::<f64>::uniform(10, 4, 1.0, &mut rng(14));
        let mut r = rng(15);
        let mut enc = EncoderStack::glorot(4, &[3], &mut r).unwrap();
        let mut dec = DecoderStack::glorot_mirror(&enc.dims(), &mut r).unwrap();
        let history = pretrain(&mut enc, &mut dec, &x, 2, 1e-3, 512, &mut r).unwrap();
        assert_eq!(history.len(), 2);
    }

    #[test]
    fn pretrain_is_deterministic_under_seed() {
        let x = Tensor::<f64>::uniform(10, 5, 1.0, &mut rng(10));
        let run = || {
            let mut r = rng(11);
            let mut enc = EncoderStack::glorot(5, &[4, 2], &mut r).unwrap();
            let mut dec = DecoderStack::glorot_mirror(&enc.dims(), &mut r).unwrap();
            pretrain(&mut enc, &mut dec, &x, 20, 1e-3, 4, &mut r).unwrap();
            (enc, dec)
        };
        let (e1, d1) = run();
        let (e2, d2) = run();
        for (a, b) in e1.layers().iter().zip(e2.layers()) {
            assert_eq!(a.weight, b.weight);
            assert_eq!(a.bias, b.bias);
        }
        for (a, b) in d1.layers().iter().zip(d2.layers()) {
            assert_eq!(a.weight, b.weight);
        }
    }

    #[test]
    fn checkpoint_round_trip_and_mismatch_rejection() {
        let mut r = rng(12);
        let enc = EncoderStack::<f64>::glorot(5, &[4, 2], &mut r).unwrap();
        let dec = DecoderStack::glorot_mirror(&enc.dims(), &mut r).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ae.ckpt");

        save_checkpoint(&path, &enc, &dec).unwrap();
        let (enc2, dec2) = load_checkpoint::<f64>(&path).unwrap();
        for (a, b) in enc.layers().iter().zip(enc2.layers()) {
            assert_eq!(a.weight, b.weight);
            assert_eq!(a.bias, b.bias);
        }
        assert_eq!(dec.dims(), dec2.dims());

        // Corrupt the dims line: load must reject the mismatching blocks.
        let text = std::fs::read_to_string(&path).unwrap();
        let bad = text.replace("dims 5 4 2", "dims 5 3 2");
        std::fs::write(&path, bad).unwrap();
        assert!(load_checkpoint::<f64>(&path).is_err());
    }

    #[test]
    fn glorot_weights_are_bounded() {
        let enc = EncoderStack::<f64>::glorot(10, &[6], &mut rng(13)).unwrap();
        let limit = (6.0 / 16.0_f64).sqrt();
        for &w in enc.layers()[0].weight.data() {
            assert!(w.abs() <= limit + 1e-12);
        }
        assert!(enc.layers()[0].bias.data().iter().all(|&b| b == 0.0));
    }
}
