//! Overlapping binary time partitions and cross-fade stitching.
//!
//! A segment of length `T(i)` is split into two children of length
//! `T(i+1) = (T(i) + o) / 2` that share `o` central samples. Stitching
//! blends the shared samples with a linear ramp, so `stitch(split(x)) == x`.

use crate::error::{PrismError, Result};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Validated geometry of a depth-`d` partition tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionPlan {
    pub context: usize,
    pub overlap: usize,
    /// Number of split iterations; the tree has `2^depth` leaves.
    pub depth: usize,
    /// `T(0) .. T(depth)`.
    pub level_lengths: Vec<usize>,
}

impl PartitionPlan {
    /// Checks the parity and length constraints at every level. `min_leaf`
    /// is the shortest leaf the downstream filter bank accepts.
    pub fn new(context: usize, overlap: usize, depth: usize, min_leaf: usize) -> Result<Self> {
        if context == 0 {
            return Err(PrismError::config("context length must be positive"));
        }
        if depth > 16 {
            return Err(PrismError::config(format!("depth {depth} is unreasonably deep")));
        }
        let mut level_lengths = vec![context];
        for level in 0..depth {
            let len = level_lengths[level];
            if overlap >= len {
                return Err(PrismError::config(format!(
                    "level {level}: overlap {overlap} must be shorter than the segment length {len}"
                )));
            }
            if !(len + overlap).is_multiple_of(2) {
                return Err(PrismError::config(format!(
                    "level {level}: length {len} + overlap {overlap} is odd, children would not be integral"
                )));
            }
            level_lengths.push((len + overlap) / 2);
        }
        let leaf = *level_lengths.last().expect("non-empty");
        if depth > 0 && overlap >= leaf {
            return Err(PrismError::config(format!(
                "level {depth}: overlap {overlap} must be shorter than the leaf length {leaf}"
            )));
        }
        if leaf < min_leaf {
            return Err(PrismError::config(format!(
                "level {depth}: leaf length {leaf} is shorter than the filter bank minimum {min_leaf}"
            )));
        }
        Ok(PartitionPlan {
            context,
            overlap,
            depth,
            level_lengths,
        })
    }

    pub fn leaf_count(&self) -> usize {
        1 << self.depth
    }

    pub fn leaf_len(&self) -> usize {
        *self.level_lengths.last().expect("non-empty")
    }

    pub fn len_at(&self, level: usize) -> usize {
        self.level_lengths[level]
    }

    /// Start offset of the right child of a level-`level` segment.
    pub fn right_offset(&self, level: usize) -> usize {
        self.level_lengths[level] - self.level_lengths[level + 1]
    }

    /// Absolute `[start, end)` sample range of node `index` at `level`.
    pub fn node_span(&self, level: usize, index: usize) -> (usize, usize) {
        let mut start = 0;
        for l in 0..level {
            let bit = (index >> (level - 1 - l)) & 1;
            if bit == 1 {
                start += self.right_offset(l);
            }
        }
        (start, start + self.level_lengths[level])
    }
}

pub fn plan(context: usize, overlap: usize, depth: usize, min_leaf: usize) -> Result<PartitionPlan> {
    PartitionPlan::new(context, overlap, depth, min_leaf)
}

/// Left and right children of a row: the first and last `child_len` samples.
pub fn split_row(x: &[f64], child_len: usize) -> (&[f64], &[f64]) {
    (&x[..child_len], &x[x.len() - child_len..])
}

/// Cross-fade weight of the right input at overlap position `j`.
pub fn fade_in(j: usize, overlap: usize) -> f64 {
    (j + 1) as f64 / (overlap + 1) as f64
}

/// Joins two length-`L` rows that share `o` samples into `2L − o` samples.
pub fn stitch_row(left: &[f64], right: &[f64], overlap: usize, out: &mut [f64]) {
    let len = left.len();
    debug_assert_eq!(right.len(), len);
    debug_assert_eq!(out.len(), 2 * len - overlap);
    let lead = len - overlap;
    out[..lead].copy_from_slice(&left[..lead]);
    for j in 0..overlap {
        let a = fade_in(j, overlap);
        out[lead + j] = (1.0 - a) * left[lead + j] + a * right[j];
    }
    out[len..].copy_from_slice(&right[overlap..]);
}

fn segment_len(t: &Tensor) -> Result<usize> {
    match t.shape() {
        [len, _] => Ok(*len),
        other => Err(PrismError::shape(format!("segment must be L×C, got {other:?}"))),
    }
}

/// Splits a `T(i) × C` segment at `level` of `plan`.
pub fn split(segment: &Tensor, plan: &PartitionPlan, level: usize) -> Result<(Tensor, Tensor)> {
    if level >= plan.depth {
        return Err(PrismError::config(format!("plan has no split at level {level}")));
    }
    let len = segment_len(segment)?;
    if len != plan.len_at(level) {
        return Err(PrismError::shape(format!(
            "level {level} expects {} samples, got {len}",
            plan.len_at(level)
        )));
    }
    let child = plan.len_at(level + 1);
    let c = segment.shape()[1];
    let left = Tensor::new(vec![child, c], segment.data()[..child * c].to_vec())?;
    let right = Tensor::new(vec![child, c], segment.data()[(len - child) * c..].to_vec())?;
    Ok((left, right))
}

/// Inverse of [`split`] for time-major `L × C` segments.
pub fn stitch(left: &Tensor, right: &Tensor, overlap: usize) -> Result<Tensor> {
    let len = segment_len(left)?;
    if left.shape() != right.shape() {
        return Err(PrismError::shape(format!(
            "stitch {:?} with {:?}",
            left.shape(),
            right.shape()
        )));
    }
    if overlap >= len && len > 0 {
        return Err(PrismError::config(format!(
            "overlap {overlap} not shorter than segment {len}"
        )));
    }
    let c = left.shape()[1];
    let (lt, rt) = (left.transpose(), right.transpose());
    let mut out = Tensor::zeros(&[c, 2 * len - overlap]);
    for ch in 0..c {
        stitch_row(lt.row(ch), rt.row(ch), overlap, out.row_mut(ch));
    }
    Ok(out.transpose())
}

/// Tape op over the last axis: `[.., L]` × 2 → `[.., 2L − o]`.
pub fn stitch_var(tape: &mut Tape, left: Var, right: Var, overlap: usize) -> Result<Var> {
    let (lv, rv) = (tape.value(left), tape.value(right));
    if lv.shape() != rv.shape() {
        return Err(PrismError::shape(format!(
            "stitch {:?} with {:?}",
            lv.shape(),
            rv.shape()
        )));
    }
    let len = lv.last_dim();
    if overlap >= len {
        return Err(PrismError::config(format!(
            "overlap {overlap} not shorter than segment {len}"
        )));
    }
    let width = 2 * len - overlap;
    let mut data = vec![0.0; lv.row_count() * width];
    for ((l, r), out) in lv.rows().zip(rv.rows()).zip(data.chunks_exact_mut(width)) {
        stitch_row(l, r, overlap, out);
    }
    let mut shape = lv.shape().to_vec();
    *shape.last_mut().expect("non-scalar") = width;
    let value = Tensor::new(shape, data)?;
    Ok(tape.custom(
        &[left, right],
        value,
        Box::new(move |ctx| {
            let lead = len - overlap;
            let mut gl = Tensor::zeros(ctx.inputs[0].shape());
            let mut gr = Tensor::zeros(ctx.inputs[1].shape());
            let rows = gl.row_count();
            for r in 0..rows {
                let g = ctx.grad.row(r);
                let l = gl.row_mut(r);
                l[..lead].copy_from_slice(&g[..lead]);
                for j in 0..overlap {
                    l[lead + j] = (1.0 - fade_in(j, overlap)) * g[lead + j];
                }
                let right = gr.row_mut(r);
                for j in 0..overlap {
                    right[j] = fade_in(j, overlap) * g[lead + j];
                }
                right[overlap..].copy_from_slice(&g[len..]);
            }
            vec![ctx.needs[0].then_some(gl), ctx.needs[1].then_some(gr)]
        }),
    ))
}

/// Splits `x` (`[.., T(0)]`) down to the leaves, left to right.
pub fn split_to_leaves(x: &[f64], plan: &PartitionPlan) -> Vec<Vec<f64>> {
    let mut nodes = vec![x.to_vec()];
    for level in 0..plan.depth {
        let child = plan.len_at(level + 1);
        nodes = nodes
            .iter()
            .flat_map(|n| {
                let (l, r) = split_row(n, child);
                [l.to_vec(), r.to_vec()]
            })
            .collect();
    }
    nodes
}

/// Stitches `2^depth` leaves back into a `T(0)` row, bottom-up.
pub fn stitch_leaves(leaves: &[Vec<f64>], plan: &PartitionPlan) -> Vec<f64> {
    assert_eq!(leaves.len(), plan.leaf_count());
    let mut nodes = leaves.to_vec();
    for level in (0..plan.depth).rev() {
        let parent_len = plan.len_at(level);
        nodes = nodes
            .chunks_exact(2)
            .map(|pair| {
                let mut out = vec![0.0; parent_len];
                stitch_row(&pair[0], &pair[1], plan.overlap, &mut out);
                out
            })
            .collect();
    }
    nodes.pop().expect("root")
}
