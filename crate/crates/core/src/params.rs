//! Named trainable tensors.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{PrismError, Result};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

pub type ParamId = usize;

/// Flat, ordered collection of every trainable tensor of a model.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(value);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id]
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.names
            .iter()
            .zip(&self.tensors)
            .enumerate()
            .map(|(i, (n, t))| (i, n.as_str(), t))
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    /// Replaces the values of an existing parameter, keeping its shape.
    pub fn set(&mut self, id: ParamId, value: Tensor) -> Result<()> {
        let slot = self
            .tensors
            .get_mut(id)
            .ok_or_else(|| PrismError::Internal(format!("no parameter {id}")))?;
        if slot.shape() != value.shape() {
            return Err(PrismError::shape(format!(
                "parameter {} has shape {:?}, got {:?}",
                self.names[id],
                slot.shape(),
                value.shape()
            )));
        }
        *slot = value;
        Ok(())
    }
}

/// Weight and bias of one dense layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LinearIds {
    pub weight: ParamId,
    pub bias: ParamId,
}

/// Ids of a two-layer perceptron `in → hidden → out`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MlpIds {
    pub hidden: LinearIds,
    pub output: LinearIds,
}

/// Registers a dense layer initialised from `U(-1/√fan_in, 1/√fan_in)`.
pub fn init_linear(
    store: &mut ParamStore,
    prefix: &str,
    fan_in: usize,
    fan_out: usize,
    rng: &mut ChaCha8Rng,
) -> LinearIds {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-bound..bound)).collect() };
    let w = Tensor::new(vec![fan_out, fan_in], draw(fan_out * fan_in)).expect("shape");
    let b = Tensor::vector(draw(fan_out));
    LinearIds {
        weight: store.push(format!("{prefix}.weight"), w),
        bias: store.push(format!("{prefix}.bias"), b),
    }
}

pub fn init_mlp(
    store: &mut ParamStore,
    prefix: &str,
    n_in: usize,
    n_hidden: usize,
    n_out: usize,
    rng: &mut ChaCha8Rng,
) -> MlpIds {
    MlpIds {
        hidden: init_linear(store, &format!("{prefix}.fc1"), n_in, n_hidden, rng),
        output: init_linear(store, &format!("{prefix}.fc2"), n_hidden, n_out, rng),
    }
}

/// Binds a dense layer's parameters onto a tape and applies it to `x`.
pub fn linear(tape: &mut Tape, store: &ParamStore, ids: LinearIds, x: Var) -> Result<Var> {
    let w = tape.param(ids.weight, store.get(ids.weight).clone());
    let b = tape.param(ids.bias, store.get(ids.bias).clone());
    tape.affine(x, w, b)
}

/// `fc2(relu(fc1(x)))` row-wise.
pub fn mlp(tape: &mut Tape, store: &ParamStore, ids: MlpIds, x: Var) -> Result<Var> {
    let h = linear(tape, store, ids.hidden, x)?;
    let h = tape.relu(h);
    linear(tape, store, ids.output, h)
}
