//! Randomized finite-difference checks for every differentiable tape op.
//!
//! Each trial draws random shapes and inputs, builds `sum(op(..))` as the
//! probe loss, and compares the tape gradient of every input against
//! central differences.

use herogcn::gradcheck::{max_rel_err, numeric_gradients, DEFAULT_STEP};
use herogcn::tensor::{Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type BuildFn = fn(&mut Tape<f64>, &[Var]) -> Var;

struct OpCase {
    name: &'static str,
    /// Input tensors for one random trial.
    make_inputs: fn(&mut ChaCha8Rng) -> Vec<Tensor<f64>>,
    build: BuildFn,
}

fn rand_shape(rng: &mut ChaCha8Rng) -> (usize, usize) {
    (rng.random_range(1..5), rng.random_range(1..5))
}

fn rand_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, limit: f64) -> Tensor<f64> {
    Tensor::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.random_range(-limit..limit))
            .collect(),
    )
    .unwrap()
}

fn positive_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor<f64> {
    Tensor::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(0.2..3.0)).collect(),
    )
    .unwrap()
}

fn cases() -> Vec<OpCase> {
    vec![
        OpCase {
            name: "matmul",
            make_inputs: |rng| {
                let (m, k) = rand_shape(rng);
                let n = rng.random_range(1..5);
                vec![rand_tensor(rng, m, k, 2.0), rand_tensor(rng, k, n, 2.0)]
            },
            build: |t, v| {
                let p = t.matmul(v[0], v[1]).unwrap();
                t.sum(p)
            },
        },
        OpCase {
            name: "transpose",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 2.0)]
            },
            build: |t, v| {
                let x = t.transpose(v[0]);
                let sq = t.square(x);
                t.sum(sq)
            },
        },
        OpCase {
            name: "add",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 2.0), rand_tensor(rng, m, n, 2.0)]
            },
            build: |t, v| {
                let s = t.add(v[0], v[1]).unwrap();
                let sq = t.square(s);
                t.sum(sq)
            },
        },
        OpCase {
            name: "sub",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 2.0), rand_tensor(rng, m, n, 2.0)]
            },
            build: |t, v| {
                let s = t.sub(v[0], v[1]).unwrap();
                let sq = t.square(s);
                t.sum(sq)
            },
        },
        OpCase {
            name: "mul",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 2.0), rand_tensor(rng, m, n, 2.0)]
            },
            build: |t, v| {
                let s = t.mul(v[0], v[1]).unwrap();
                t.sum(s)
            },
        },
        OpCase {
            name: "scale",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 2.0)]
            },
            build: |t, v| {
                let s = t.scale(v[0], -1.7);
                t.sum(s)
            },
        },
        OpCase {
            name: "add_scalar",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 2.0)]
            },
            build: |t, v| {
                let s = t.add_scalar(v[0], 0.9);
                let sq = t.square(s);
                t.sum(sq)
            },
        },
        OpCase {
            name: "relu",
            // Inputs bounded away from the kink at 0.
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                let data: Vec<f64> = (0..m * n)
                    .map(|_| {
                        let v: f64 = rng.random_range(0.05..2.0);
                        if rng.random::<bool>() {
                            v
                        } else {
                            -v
                        }
                    })
                    .collect();
                vec![Tensor::from_vec(m, n, data).unwrap()]
            },
            build: |t, v| {
                let r = t.relu(v[0]);
                let sq = t.square(r);
                t.sum(sq)
            },
        },
        OpCase {
            name: "sigmoid",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 3.0)]
            },
            build: |t, v| {
                let s = t.sigmoid(v[0]);
                t.sum(s)
            },
        },
        OpCase {
            name: "log",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![positive_tensor(rng, m, n)]
            },
            build: |t, v| {
                let l = t.log(v[0]).unwrap();
                t.sum(l)
            },
        },
        OpCase {
            name: "square",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 2.0)]
            },
            build: |t, v| {
                let s = t.square(v[0]);
                t.sum(s)
            },
        },
        OpCase {
            name: "recip",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![positive_tensor(rng, m, n)]
            },
            build: |t, v| {
                let r = t.recip(v[0]).unwrap();
                t.sum(r)
            },
        },
        OpCase {
            name: "clamp",
            // Inputs bounded away from the clamp edges at +-1.
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                let data: Vec<f64> = (0..m * n)
                    .map(|_| {
                        let v: f64 = rng.random_range(0.0..0.9);
                        if rng.random::<bool>() {
                            v + 1.2
                        } else {
                            v - 0.95
                        }
                    })
                    .collect();
                vec![Tensor::from_vec(m, n, data).unwrap()]
            },
            build: |t, v| {
                let c = t.clamp(v[0], -1.0, 1.0);
                let sq = t.square(c);
                t.sum(sq)
            },
        },
        OpCase {
            name: "row_softmax",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 3.0)]
            },
            build: |t, v| {
                let s = t.row_softmax(v[0]);
                let sq = t.square(s);
                t.sum(sq)
            },
        },
        OpCase {
            name: "sum_axis0",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 2.0)]
            },
            build: |t, v| {
                let s = t.sum_axis0(v[0]);
                let sq = t.square(s);
                t.sum(sq)
            },
        },
        OpCase {
            name: "sum_axis1",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 2.0)]
            },
            build: |t, v| {
                let s = t.sum_axis1(v[0]);
                let sq = t.square(s);
                t.sum(sq)
            },
        },
        OpCase {
            name: "add_row_vec",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 2.0), rand_tensor(rng, 1, n, 2.0)]
            },
            build: |t, v| {
                let s = t.add_row_vec(v[0], v[1]).unwrap();
                let sq = t.square(s);
                t.sum(sq)
            },
        },
        OpCase {
            name: "add_col_vec",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 2.0), rand_tensor(rng, m, 1, 2.0)]
            },
            build: |t, v| {
                let s = t.add_col_vec(v[0], v[1]).unwrap();
                let sq = t.square(s);
                t.sum(sq)
            },
        },
        OpCase {
            name: "mul_row_vec",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 2.0), rand_tensor(rng, 1, n, 2.0)]
            },
            build: |t, v| {
                let s = t.mul_row_vec(v[0], v[1]).unwrap();
                t.sum(s)
            },
        },
        OpCase {
            name: "mul_col_vec",
            make_inputs: |rng| {
                let (m, n) = rand_shape(rng);
                vec![rand_tensor(rng, m, n, 2.0), rand_tensor(rng, m, 1, 2.0)]
            },
            build: |t, v| {
                let s = t.mul_col_vec(v[0], v[1]).unwrap();
                t.sum(s)
            },
        },
        OpCase {
            name: "concat_cols",
            make_inputs: |rng| {
                let m = rng.random_range(1..5);
                let n1 = rng.random_range(1..4);
                let n2 = rng.random_range(1..4);
                vec![rand_tensor(rng, m, n1, 2.0), rand_tensor(rng, m, n2, 2.0)]
            },
            build: |t, v| {
                let c = t.concat_cols(v).unwrap();
                let sq = t.square(c);
                t.sum(sq)
            },
        },
    ]
}

#[test]
fn every_op_matches_central_differences_over_100_trials() {
    let cases = cases();
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1FF);
    let trials_per_op = 100usize.div_ceil(cases.len()).max(5);
    let mut total_trials = 0;
    for case in &cases {
        for trial in 0..trials_per_op {
            total_trials += 1;
            let inputs = (case.make_inputs)(&mut rng);

            let mut tape = Tape::new();
            let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
            let loss = (case.build)(&mut tape, &vars);
            tape.backward(loss).unwrap();
            let analytic: Vec<Tensor<f64>> =
                vars.iter().map(|&v| tape.grad_or_zeros(v)).collect();

            let numeric = numeric_gradients(&inputs, DEFAULT_STEP, |params| {
                let mut t = Tape::new();
                let vs: Vec<Var> = params.iter().map(|p| t.constant(p.clone())).collect();
                let l = (case.build)(&mut t, &vs);
                t.value(l).item()
            });
            let err = max_rel_err(&analytic, &numeric, 1e-6);
            assert!(
                err < 1e-4,
                "{} trial {trial}: rel err {err}",
                case.name
            );
        }
    }
    assert!(total_trials >= 100, "only ran {total_trials} trials");
}
