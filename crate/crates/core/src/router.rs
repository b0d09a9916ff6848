//! Band importance routing.
//!
//! Each band of each channel is summarised by six statistics; a small MLP
//! turns them into a score and a temperature softmax over the bands of a
//! channel turns scores into mixing weights.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PrismError, Result};
use crate::params::{init_mlp, mlp, MlpIds, ParamStore};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;
use crate::tree::PartitionPlan;

pub const STAT_EPS: f64 = 1e-8;
pub const STAT_COUNT: usize = 6;

/// Summary of one band of one channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub max_abs: f64,
    /// Mean absolute first difference.
    pub diff1: f64,
    /// Mean absolute second difference.
    pub diff2: f64,
    /// `max_abs / (std + 1e-8)`.
    pub crest: f64,
}

impl BandStats {
    pub fn to_array(self) -> [f64; STAT_COUNT] {
        [self.mean, self.std, self.max_abs, self.diff1, self.diff2, self.crest]
    }
}

pub fn band_stats(x: &[f64]) -> Result<BandStats> {
    if x.len() < 3 {
        return Err(PrismError::config(format!(
            "band statistics need at least 3 samples, got {}",
            x.len()
        )));
    }
    let mut out = [0.0; STAT_COUNT];
    stats_into(x, None, &mut out);
    Ok(BandStats {
        mean: out[0],
        std: out[1],
        max_abs: out[2],
        diff1: out[3],
        diff2: out[4],
        crest: out[5],
    })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Index of the first maximum of `|x|`.
fn argmax_abs(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    best
}

fn stats_into(x: &[f64], crest_clamp: Option<f64>, out: &mut [f64]) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let max_abs = x[argmax_abs(x)].abs();
    let diff1 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (n - 1.0);
    let diff2 = x.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).sum::<f64>() / (n - 2.0);
    let mut crest = max_abs / (std + STAT_EPS);
    if let Some(c) = crest_clamp {
        crest = crest.min(c);
    }
    out.copy_from_slice(&[mean, std, max_abs, diff1, diff2, crest]);
}

/// Vector-Jacobian product of the statistics of one row. Kinks take the
/// zero subgradient for `|·|` and route `max` to its first maximiser.
fn stats_vjp(x: &[f64], stats: &[f64], g: &[f64], crest_clamp: Option<f64>, out: &mut [f64]) {
    let len = x.len();
    let n = len as f64;
    let (mean, std, max_abs) = (stats[0], stats[1], stats[2]);
    let denom = std + STAT_EPS;
    let crest_live = crest_clamp.is_none_or(|c| max_abs / denom < c);
    // total upstream weight on std and max_abs, including through crest
    let (g_std, g_max) = if crest_live {
        (g[1] - g[5] * max_abs / (denom * denom), g[2] + g[5] / denom)
    } else {
        (g[1], g[2])
    };
    let mean_term = g[0] / n;
    for (o, &v) in out.iter_mut().zip(x) {
        *o = mean_term;
        if std > 0.0 {
            *o += g_std * (v - mean) / (n * std);
        }
    }
    let peak = argmax_abs(x);
    out[peak] += g_max * sign(x[peak]);
    let s1 = g[3] / (n - 1.0);
    for t in 0..len - 1 {
        let s = s1 * sign(x[t + 1] - x[t]);
        out[t + 1] += s;
        out[t] -= s;
    }
    let s2 = g[4] / (n - 2.0);
    for t in 0..len - 2 {
        let s = s2 * sign(x[t + 2] - 2.0 * x[t + 1] + x[t]);
        out[t + 2] += s;
        out[t + 1] -= 2.0 * s;
        out[t] += s;
    }
}

/// Tape op: `[.., L]` → `[.., 6]` statistics per row.
pub fn stats_var(tape: &mut Tape, x: Var, crest_clamp: Option<f64>) -> Result<Var> {
    let xv = tape.value(x);
    let len = xv.last_dim();
    if len < 3 {
        return Err(PrismError::config(format!(
            "band statistics need at least 3 samples, got {len}"
        )));
    }
    let mut data = vec![0.0; xv.row_count() * STAT_COUNT];
    for (row, out) in xv.rows().zip(data.chunks_exact_mut(STAT_COUNT)) {
        stats_into(row, crest_clamp, out);
    }
    let mut shape = xv.shape().to_vec();
    *shape.last_mut().expect("non-scalar") = STAT_COUNT;
    let value = Tensor::new(shape, data)?;
    Ok(tape.custom(
        &[x],
        value,
        Box::new(move |ctx| {
            let x = ctx.inputs[0];
            let mut gx = Tensor::zeros(x.shape());
            for r in 0..x.row_count() {
                stats_vjp(x.row(r), ctx.output.row(r), ctx.grad.row(r), crest_clamp, gx.row_mut(r));
            }
            vec![Some(gx)]
        }),
    ))
}

/// Row-wise `softmax(s / τ)` over the last axis.
pub fn softmax_var(tape: &mut Tape, scores: Var, temperature: f64) -> Var {
    let sv = tape.value(scores);
    let k = sv.last_dim();
    let mut w = sv.clone();
    for row in w.data_mut().chunks_exact_mut(k) {
        softmax_in_place(row, temperature);
    }
    tape.custom(
        &[scores],
        w,
        Box::new(move |ctx| {
            let mut g = Tensor::zeros(ctx.output.shape());
            for ((gr, wr), up) in g
                .data_mut()
                .chunks_exact_mut(k)
                .zip(ctx.output.rows())
                .zip(ctx.grad.rows())
            {
                let dot: f64 = wr.iter().zip(up).map(|(a, b)| a * b).sum();
                for ((o, &w), &u) in gr.iter_mut().zip(wr).zip(up) {
                    *o = w * (u - dot) / temperature;
                }
            }
            vec![Some(g)]
        }),
    )
}

pub fn softmax_in_place(row: &mut [f64], temperature: f64) {
    let top = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = ((*v - top) / temperature).exp();
        total += *v;
    }
    row.iter_mut().for_each(|v| *v /= total);
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouterMode {
    /// One MLP per tree level, shared by all nodes of that level.
    #[default]
    PerLevel,
    /// One MLP for the whole tree.
    SharedAll,
    /// A separate MLP for every node.
    PerNode,
    /// No MLP; every band weighted `1/K`.
    Uniform,
    /// No MLP; every band weighted 1 (plain reconstruction).
    Passthrough,
}

impl RouterMode {
    pub fn is_learned(self) -> bool {
        matches!(self, RouterMode::PerLevel | RouterMode::SharedAll | RouterMode::PerNode)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouterConfig {
    pub mode: RouterMode,
    pub hidden: usize,
    pub temperature: f64,
    /// Optional ceiling on the crest statistic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crest_clamp: Option<f64>,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig {
            mode: RouterMode::PerLevel,
            hidden: 32,
            temperature: 1.0,
            crest_clamp: None,
        }
    }
}

impl RouterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(PrismError::config("router.hidden must be at least 1"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(PrismError::config(format!(
                "router.temperature must be positive, got {}",
                self.temperature
            )));
        }
        if let Some(c) = self.crest_clamp {
            if !(c.is_finite() && c > 0.0) {
                return Err(PrismError::config("router.crest_clamp must be positive"));
            }
        }
        Ok(())
    }
}

/// A tree node: `index` counts left to right within `level`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub level: usize,
    pub index: usize,
}

/// Levels at which bands are routed: the children of every split, or the
/// root alone for a tree without splits.
pub fn routed_levels(plan: &PartitionPlan) -> Vec<usize> {
    if plan.depth == 0 {
        vec![0]
    } else {
        (1..=plan.depth).collect()
    }
}

/// Router MLPs and the rule mapping nodes onto them.
#[derive(Clone, Debug, PartialEq)]
pub struct RouterParams {
    pub config: RouterConfig,
    pub bands: usize,
    levels: Vec<usize>,
    groups: Vec<MlpIds>,
}

impl RouterParams {
    pub fn init(
        config: &RouterConfig,
        plan: &PartitionPlan,
        bands: usize,
        store: &mut ParamStore,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        config.validate()?;
        let levels = routed_levels(plan);
        let group_names: Vec<String> = match config.mode {
            RouterMode::PerLevel => levels.iter().map(|l| format!("router.level{l}")).collect(),
            RouterMode::SharedAll => vec!["router.shared".into()],
            RouterMode::PerNode => levels
                .iter()
                .flat_map(|&l| (0..1usize << l).map(move |i| format!("router.level{l}.node{i}")))
                .collect(),
            RouterMode::Uniform | RouterMode::Passthrough => Vec::new(),
        };
        let groups = group_names
            .iter()
            .map(|name| init_mlp(store, name, STAT_COUNT, config.hidden, 1, rng))
            .collect();
        Ok(RouterParams {
            config: config.clone(),
            bands,
            levels,
            groups,
        })
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// MLP serving `node`, if the mode has any.
    pub fn group_of(&self, node: NodeId) -> Option<MlpIds> {
        let pos = self.levels.iter().position(|&l| l == node.level)?;
        let idx = match self.config.mode {
            RouterMode::PerLevel => pos,
            RouterMode::SharedAll => 0,
            RouterMode::PerNode => self.levels[..pos].iter().map(|&l| 1usize << l).sum::<usize>() + node.index,
            RouterMode::Uniform | RouterMode::Passthrough => return None,
        };
        self.groups.get(idx).copied()
    }

    /// Scores and weights (`[.., K]` each) for a `[.., K, L]` band tensor.
    pub fn route_var(&self, tape: &mut Tape, store: &ParamStore, node: NodeId, bands: Var) -> Result<(Var, Var)> {
        let shape = tape.value(bands).shape().to_vec();
        if shape.len() < 2 || shape[shape.len() - 2] != self.bands {
            return Err(PrismError::shape(format!(
                "router expects [.., {}, L], got {shape:?}",
                self.bands
            )));
        }
        let lead = &shape[..shape.len() - 1];
        match self.config.mode {
            RouterMode::Uniform => {
                let s = tape.constant(Tensor::zeros(lead));
                let w = tape.constant(Tensor::full(lead, 1.0 / self.bands as f64));
                Ok((s, w))
            }
            RouterMode::Passthrough => {
                let s = tape.constant(Tensor::zeros(lead));
                let w = tape.constant(Tensor::full(lead, 1.0));
                Ok((s, w))
            }
            _ => {
                let ids = self
                    .group_of(node)
                    .ok_or_else(|| PrismError::Internal(format!("no router group for {node:?}")))?;
                let stats = stats_var(tape, bands, self.config.crest_clamp)?;
                let s = mlp(tape, store, ids, stats)?;
                let s = tape.reshape(s, lead)?;
                let w = softmax_var(tape, s, self.config.temperature);
                Ok((s, w))
            }
        }
    }
}

/// Scores `s` and weights `w`, both `K × C`, at one node.
#[derive(Clone, Debug, PartialEq)]
pub struct ImportanceWeights {
    pub node: NodeId,
    pub scores: Tensor,
    pub weights: Tensor,
}

/// Routes precomputed statistics (`stats[k][c]`) without a filter pass.
pub fn score_and_weight(
    stats: &[Vec<BandStats>],
    params: &RouterParams,
    store: &ParamStore,
    node: NodeId,
) -> Result<ImportanceWeights> {
    let k = stats.len();
    if k != params.bands {
        return Err(PrismError::shape(format!(
            "{k} bands of statistics, router expects {}",
            params.bands
        )));
    }
    let c = stats.first().map_or(0, Vec::len);
    if stats.iter().any(|s| s.len() != c) {
        return Err(PrismError::shape("ragged statistics"));
    }
    // rows ordered (c, k) so the softmax runs over bands
    let mut data = Vec::with_capacity(c * k * STAT_COUNT);
    for ch in 0..c {
        for band in stats {
            let mut s = band[ch].to_array();
            if let Some(clamp) = params.config.crest_clamp {
                s[5] = s[5].min(clamp);
            }
            data.extend_from_slice(&s);
        }
    }
    let (scores, weights) = match params.config.mode {
        RouterMode::Uniform => (Tensor::zeros(&[c, k]), Tensor::full(&[c, k], 1.0 / k as f64)),
        RouterMode::Passthrough => (Tensor::zeros(&[c, k]), Tensor::full(&[c, k], 1.0)),
        _ => {
            let ids = params
                .group_of(node)
                .ok_or_else(|| PrismError::config(format!("node {node:?} is not routed by this tree")))?;
            let mut tape = Tape::new();
            let x = tape.constant(Tensor::new(vec![c, k, STAT_COUNT], data)?);
            let s = mlp(&mut tape, store, ids, x)?;
            let s = tape.reshape(s, &[c, k])?;
            let w = softmax_var(&mut tape, s, params.config.temperature);
            (tape.value(s).clone(), tape.value(w).clone())
        }
    };
    Ok(ImportanceWeights {
        node,
        scores: scores.transpose(),
        weights: weights.transpose(),
    })
}
