//! Adam with bias correction.

use crate::error::{PrismError, Result};
use crate::params::ParamStore;
use crate::tape::GradMap;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step_count: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    /// Zeroed moments shaped like every parameter in `params`.
    pub fn new(params: &ParamStore, lr: f64) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|(_, _, t)| Tensor::zeros(t.shape())).collect();
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_count: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn first_moment(&self, id: usize) -> &Tensor {
        &self.m[id]
    }

    pub fn second_moment(&self, id: usize) -> &Tensor {
        &self.v[id]
    }

    /// One Adam update over every parameter. Each parameter must have a
    /// gradient in `grads`.
    pub fn step(&mut self, params: &mut ParamStore, grads: &GradMap) -> Result<()> {
        if self.m.len() != params.len() {
            return Err(PrismError::Internal(format!(
                "optimizer tracks {} parameters, store has {}",
                self.m.len(),
                params.len()
            )));
        }
        for id in 0..params.len() {
            if grads.get(id).is_none() {
                return Err(PrismError::Internal(format!(
                    "no gradient for parameter {}",
                    params.name(id)
                )));
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for id in 0..params.len() {
            let g = grads.get(id).expect("checked above");
            let p = params.get_mut(id);
            let m = self.m[id].data_mut();
            let v = self.v[id].data_mut();
            for (((p, &g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::step`].
pub fn adam_step(params: &mut ParamStore, grads: &GradMap, state: &mut AdamState) -> Result<()> {
    state.step(params, grads)
}
