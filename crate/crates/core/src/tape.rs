//! Define-by-run reverse-mode differentiation over [`Tensor`] values.
//!
//! A [`Tape`] is rebuilt for every forward pass. Each recorded node keeps its
//! value, the indices of its inputs and a closure producing the vector-Jacobian
//! product for those inputs. Nodes are appended after their inputs, so a single
//! reverse sweep visits them in valid order. [`Tape::backward`] consumes the
//! tape.

use std::collections::BTreeMap;

use crate::error::{PrismError, Result};
use crate::params::ParamId;
use crate::tensor::{gemm, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Inputs handed to a node's backward closure.
pub struct BackwardCtx<'a> {
    /// Gradient of the loss with respect to this node's value.
    pub grad: &'a Tensor,
    pub inputs: &'a [&'a Tensor],
    pub output: &'a Tensor,
    /// Which inputs need a gradient; closures may return `None` for the rest.
    pub needs: &'a [bool],
}

pub type BackwardFn = Box<dyn Fn(&BackwardCtx<'_>) -> Vec<Option<Tensor>>>;

struct Node {
    value: Tensor,
    parents: Vec<usize>,
    backward: Option<BackwardFn>,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<(ParamId, usize)>,
}

/// Gradients keyed by parameter id.
#[derive(Clone, Debug, Default)]
pub struct GradMap {
    grads: BTreeMap<ParamId, Tensor>,
}

impl GradMap {
    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.grads.get(&id)
    }

    pub fn insert(&mut self, id: ParamId, grad: Tensor) {
        self.grads.insert(id, grad);
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.grads.iter().map(|(&id, t)| (id, t))
    }

    /// Sums another gradient map into this one.
    pub fn accumulate(&mut self, other: &GradMap) {
        for (&id, g) in &other.grads {
            match self.grads.get_mut(&id) {
                Some(mine) => mine.add_assign(g),
                None => {
                    self.grads.insert(id, g.clone());
                }
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.grads.values_mut().for_each(|g| g.scale(factor));
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Tensor, parents: Vec<usize>, backward: Option<BackwardFn>) -> Var {
        let requires_grad = backward.is_some() && parents.iter().any(|&p| self.nodes[p].requires_grad);
        self.nodes.push(Node {
            value,
            parents,
            backward: if requires_grad { backward } else { None },
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// A value that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Vec::new(), None)
    }

    /// A trainable leaf bound to a parameter id.
    pub fn param(&mut self, id: ParamId, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            parents: Vec::new(),
            backward: None,
            requires_grad: true,
        });
        let idx = self.nodes.len() - 1;
        self.params.push((id, idx));
        Var(idx)
    }

    /// Records an arbitrary differentiable operation.
    pub fn custom(&mut self, inputs: &[Var], value: Tensor, backward: BackwardFn) -> Var {
        self.push(value, inputs.iter().map(|v| v.0).collect(), Some(backward))
    }

    /// `x·Wᵀ + b` applied to every row of `x`.
    ///
    /// `x` is `[.., n_in]`, `w` is `[n_out, n_in]`, `b` is `[n_out]`; the
    /// result keeps the leading axes of `x` with a last axis of `n_out`.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        if wv.shape().len() != 2 {
            return Err(PrismError::config(format!(
                "weight must be a matrix, got {:?}",
                wv.shape()
            )));
        }
        let (n_out, n_in) = (wv.shape()[0], wv.shape()[1]);
        if xv.last_dim() != n_in || bv.shape() != [n_out] {
            return Err(PrismError::config(format!(
                "affine: x {:?}, W {:?}, b {:?} do not conform",
                xv.shape(),
                wv.shape(),
                bv.shape()
            )));
        }
        let rows = xv.row_count();
        let mut out = Vec::with_capacity(rows * n_out);
        for _ in 0..rows {
            out.extend_from_slice(bv.data());
        }
        gemm(rows, n_in, n_out, 1.0, xv.data(), false, wv.data(), true, 1.0, &mut out);
        let mut shape = xv.shape().to_vec();
        match shape.last_mut() {
            Some(last) => *last = n_out,
            None => shape.push(n_out),
        }
        let value = Tensor::new(shape, out)?;
        Ok(self.custom(
            &[x, w, b],
            value,
            Box::new(move |ctx| {
                let (x, w) = (ctx.inputs[0], ctx.inputs[1]);
                let g = ctx.grad.data();
                let gx = ctx.needs[0].then(|| {
                    let mut gx = Tensor::zeros(x.shape());
                    gemm(rows, n_out, n_in, 1.0, g, false, w.data(), false, 0.0, gx.data_mut());
                    gx
                });
                let gw = ctx.needs[1].then(|| {
                    let mut gw = Tensor::zeros(&[n_out, n_in]);
                    gemm(n_out, rows, n_in, 1.0, g, true, x.data(), false, 0.0, gw.data_mut());
                    gw
                });
                let gb = ctx.needs[2].then(|| {
                    let mut gb = vec![0.0; n_out];
                    for row in g.chunks_exact(n_out) {
                        for (acc, v) in gb.iter_mut().zip(row) {
                            *acc += v;
                        }
                    }
                    Tensor::vector(gb)
                });
                vec![gx, gw, gb]
            }),
        ))
    }

    /// Elementwise `max(0, x)`; the subgradient at 0 is 0.
    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(|v| v.max(0.0));
        self.custom(
            &[x],
            value,
            Box::new(|ctx| {
                let mut g = ctx.grad.clone();
                for (gi, &xi) in g.data_mut().iter_mut().zip(ctx.inputs[0].data()) {
                    if xi <= 0.0 {
                        *gi = 0.0;
                    }
                }
                vec![Some(g)]
            }),
        )
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.add_n(&[a, b])
    }

    /// Sum of same-shaped tensors.
    pub fn add_n(&mut self, terms: &[Var]) -> Result<Var> {
        let first = terms
            .first()
            .ok_or_else(|| PrismError::Usage("add_n of nothing".into()))?;
        let mut value = self.value(*first).clone();
        for &t in &terms[1..] {
            let tv = self.value(t);
            if tv.shape() != value.shape() {
                return Err(PrismError::shape(format!("add {:?} + {:?}", value.shape(), tv.shape())));
            }
            value.add_assign(tv);
        }
        let n = terms.len();
        Ok(self.custom(
            terms,
            value,
            Box::new(move |ctx| (0..n).map(|i| ctx.needs[i].then(|| ctx.grad.clone())).collect()),
        ))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(PrismError::shape(format!("mul {:?} * {:?}", av.shape(), bv.shape())));
        }
        let data = av.data().iter().zip(bv.data()).map(|(x, y)| x * y).collect();
        let value = Tensor::new(av.shape().to_vec(), data)?;
        Ok(self.custom(
            &[a, b],
            value,
            Box::new(|ctx| {
                let g = ctx.grad.data();
                let prod = |other: &Tensor| {
                    let data = g.iter().zip(other.data()).map(|(x, y)| x * y).collect();
                    Tensor::new(other.shape().to_vec(), data).expect("same shape")
                };
                vec![
                    ctx.needs[0].then(|| prod(ctx.inputs[1])),
                    ctx.needs[1].then(|| prod(ctx.inputs[0])),
                ]
            }),
        ))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let value = self.value(x).map(|v| v * factor);
        self.custom(
            &[x],
            value,
            Box::new(move |ctx| vec![Some(ctx.grad.map(|g| g * factor))]),
        )
    }

    /// Sum of all elements, as a scalar.
    pub fn sum(&mut self, x: Var) -> Var {
        let value = Tensor::scalar(self.value(x).sum());
        self.custom(
            &[x],
            value,
            Box::new(|ctx| vec![Some(Tensor::full(ctx.inputs[0].shape(), ctx.grad.item()))]),
        )
    }

    /// Mean squared error between two same-shaped tensors, as a scalar.
    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (p, t) = (self.value(pred), self.value(target));
        if p.shape() != t.shape() {
            return Err(PrismError::shape(format!("mse {:?} vs {:?}", p.shape(), t.shape())));
        }
        let n = p.len().max(1) as f64;
        let loss = p
            .data()
            .iter()
            .zip(t.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n;
        Ok(self.custom(
            &[pred, target],
            Tensor::scalar(loss),
            Box::new(move |ctx| {
                let scale = 2.0 * ctx.grad.item() / n;
                let diff: Vec<f64> = ctx.inputs[0]
                    .data()
                    .iter()
                    .zip(ctx.inputs[1].data())
                    .map(|(a, b)| scale * (a - b))
                    .collect();
                let shape = ctx.inputs[0].shape().to_vec();
                let gp = ctx.needs[0].then(|| Tensor::new(shape.clone(), diff.clone()).expect("shape"));
                let gt =
                    ctx.needs[1].then(|| Tensor::new(shape.clone(), diff.iter().map(|v| -v).collect()).expect("shape"));
                vec![gp, gt]
            }),
        ))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(x).clone().reshape(shape)?;
        Ok(self.custom(
            &[x],
            value,
            Box::new(|ctx| {
                let g = ctx.grad.clone().reshape(ctx.inputs[0].shape()).expect("same size");
                vec![Some(g)]
            }),
        ))
    }

    /// Columns `start..start + len` of the last axis.
    pub fn slice_last(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let xv = self.value(x);
        let width = xv.last_dim();
        if start + len > width {
            return Err(PrismError::shape(format!(
                "slice {start}..{} of width {width}",
                start + len
            )));
        }
        let mut data = Vec::with_capacity(xv.row_count() * len);
        for row in xv.rows() {
            data.extend_from_slice(&row[start..start + len]);
        }
        let mut shape = xv.shape().to_vec();
        *shape.last_mut().expect("non-scalar") = len;
        let value = Tensor::new(shape, data)?;
        Ok(self.custom(
            &[x],
            value,
            Box::new(move |ctx| {
                let mut g = Tensor::zeros(ctx.inputs[0].shape());
                for (dst, src) in g.data_mut().chunks_exact_mut(width).zip(ctx.grad.rows()) {
                    dst[start..start + len].copy_from_slice(src);
                }
                vec![Some(g)]
            }),
        ))
    }

    /// Reverse sweep from a scalar node.
    ///
    /// Gradients accumulate additively across fan-out. Every parameter
    /// registered on the tape gets an entry, zero when unreachable.
    pub fn backward(self, loss: Var) -> Result<GradMap> {
        let loss_value = &self.nodes[loss.0].value;
        if loss_value.len() != 1 {
            return Err(PrismError::Usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                loss_value.shape()
            )));
        }
        if !loss_value.is_finite() {
            return Err(PrismError::Numeric {
                node: loss.0,
                context: "loss value".into(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(loss_value.shape(), 1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            let Some(backward) = &node.backward else { continue };
            let Some(grad) = grads[idx].take() else { continue };
            if !grad.is_finite() || !node.value.is_finite() {
                return Err(PrismError::Numeric {
                    node: idx,
                    context: "gradient or value during backward".into(),
                });
            }
            let inputs: Vec<&Tensor> = node.parents.iter().map(|&p| &self.nodes[p].value).collect();
            let needs: Vec<bool> = node.parents.iter().map(|&p| self.nodes[p].requires_grad).collect();
            let parent_grads = backward(&BackwardCtx {
                grad: &grad,
                inputs: &inputs,
                output: &node.value,
                needs: &needs,
            });
            for ((&p, g), &need) in node.parents.iter().zip(parent_grads).zip(&needs) {
                let (Some(g), true) = (g, need) else { continue };
                if g.len() != self.nodes[p].value.len() {
                    return Err(PrismError::Internal(format!(
                        "node {idx} produced a gradient of size {} for input {p} of size {}",
                        g.len(),
                        self.nodes[p].value.len()
                    )));
                }
                match &mut grads[p] {
                    Some(acc) => acc.add_assign(&g),
                    slot @ None => *slot = Some(g),
                }
            }
        }

        let mut out = GradMap::default();
        for (id, idx) in self.params {
            let g = grads[idx]
                .take()
                .unwrap_or_else(|| Tensor::zeros(self.nodes[idx].value.shape()));
            if !g.is_finite() {
                return Err(PrismError::Numeric {
                    node: idx,
                    context: format!("gradient of parameter {id}"),
                });
            }
            match out.grads.get_mut(&id) {
                Some(acc) => acc.add_assign(&g),
                None => out.insert(id, g),
            }
        }
        Ok(out)
    }
}
