use super::{Real, Tensor};
use crate::error::{Error, Result};

/// Adam optimizer with bias correction over an ordered parameter list.
///
/// Moment buffers are allocated on the first `step` call and stay congruent
/// with their parameters afterwards.
pub struct Adam<F> {
    learning_rate: F,
    beta1: F,
    beta2: F,
    epsilon: F,
    step: u64,
    first_moment: Vec<Tensor<F>>,
    second_moment: Vec<Tensor<F>>,
}

impl<F: Real> Adam<F> {
    pub fn new(learning_rate: F) -> Result<Self> {
        if learning_rate <= F::zero() {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(Adam {
            learning_rate,
            beta1: F::of(0.9),
            beta2: F::of(0.999),
            epsilon: F::of(1e-8),
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        })
    }

    pub fn with_betas(mut self, beta1: F, beta2: F) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over parameters and their order-matched gradients.
    pub fn step(&mut self, params: &mut [&mut Tensor<F>], grads: &[Tensor<F>]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Config(format!(
                "{} parameters but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        if self.first_moment.is_empty() {
            self.first_moment = params
                .iter()
                .map(|p| Tensor::zeros(p.rows(), p.cols()))
                .collect();
            self.second_moment = self.first_moment.clone();
        }
        if self.first_moment.len() != params.len() {
            return Err(Error::Config(format!(
                "optimizer state holds {} parameters, step called with {}",
                self.first_moment.len(),
                params.len()
            )));
        }
        self.step += 1;
        let one = F::one();
        let bias1 = one - self.beta1.powi(self.step as i32);
        let bias2 = one - self.beta2.powi(self.step as i32);

        for (idx, (param, grad)) in params.iter_mut().zip(grads).enumerate() {
            if !param.same_shape(grad) {
                return Err(Error::shape("adam_step", param.shape(), grad.shape()));
            }
            let m = &mut self.first_moment[idx];
            let v = &mut self.second_moment[idx];
            if !m.same_shape(param) {
                return Err(Error::shape("adam_step", m.shape(), param.shape()));
            }
            for ((p, g), (m, v)) in param
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()))
            {
                *m = self.beta1 * *m + (one - self.beta1) * *g;
                *v = self.beta2 * *v + (one - self.beta2) * *g * *g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
