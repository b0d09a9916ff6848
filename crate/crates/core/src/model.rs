//! The PRISM forward pass.
//!
//! Per channel, the context is split recursively. Every child segment is
//! decomposed into `K` bands and routed. Above the leaves the weighted bands
//! are summed back into one joint signal before the next split. At the
//! leaves the weighted bands are kept apart and stitched band by band into
//! full-length signals. Each of the `M` contiguous chunks of each band feeds
//! its own two-layer head; the forecast is the sum of all `M·K` heads.
//!
//! Tensors flowing through the tape are row-batched: row `b·C + c` holds
//! channel `c` of window `b`, because every stage acts on channels
//! independently and heads are shared across channels.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PrismError, Result};
use crate::filter::{recombine_var, scale_bands_var, select_band_var, FilterBank, FilterSpec};
use crate::params::{init_mlp, mlp, MlpIds, ParamStore};
use crate::router::{ImportanceWeights, NodeId, RouterConfig, RouterParams};
use crate::tape::{GradMap, Tape, Var};
use crate::tensor::Tensor;
use crate::tree::{stitch_leaves, stitch_var, PartitionPlan};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrismConfig {
    /// Context window `T_context`.
    pub context: usize,
    /// Forecast horizon `T_forecast`.
    pub horizon: usize,
    /// Samples shared by sibling segments.
    pub overlap: usize,
    /// Split iterations; `2^depth` leaf segments.
    pub depth: usize,
    pub filter: FilterSpec,
    pub router: RouterConfig,
    pub head_hidden: usize,
}

impl Default for PrismConfig {
    fn default() -> Self {
        PrismConfig {
            context: 336,
            horizon: 96,
            overlap: 8,
            depth: 1,
            filter: FilterSpec::haar(6),
            router: RouterConfig::default(),
            head_hidden: 64,
        }
    }
}

impl PrismConfig {
    /// Validates every sub-config and returns the partition plan.
    pub fn plan(&self) -> Result<PartitionPlan> {
        self.filter.validate()?;
        self.router.validate()?;
        if self.horizon == 0 {
            return Err(PrismError::config("horizon must be positive"));
        }
        if self.head_hidden == 0 {
            return Err(PrismError::config("head_hidden must be positive"));
        }
        let mut min_leaf = self.filter.min_len();
        if self.router.mode.is_learned() {
            min_leaf = min_leaf.max(3);
        }
        let plan = PartitionPlan::new(self.context, self.overlap, self.depth, min_leaf)?;
        if !self.context.is_multiple_of(plan.leaf_count()) {
            return Err(PrismError::config(format!(
                "context {} is not divisible by the {} leaf segments",
                self.context,
                plan.leaf_count()
            )));
        }
        Ok(plan)
    }

    pub fn leaf_count(&self) -> usize {
        1 << self.depth
    }

    pub fn bands(&self) -> usize {
        self.filter.bands
    }

    /// Context samples per head.
    pub fn chunk_len(&self) -> usize {
        self.context / self.leaf_count()
    }
}

/// Handles produced by one taped forward pass.
pub struct ForwardPass {
    /// `[R, H]`.
    pub forecast: Var,
    /// Full-length weighted bands, `[R, K, T_context]`.
    pub stitched: Var,
    /// Weighted leaf bands, `[R, K, T(d)]`, left to right.
    pub leaves: Vec<Var>,
    /// Scores and weights (`[R, K]`) of every routed node.
    pub routes: Vec<(NodeId, Var, Var)>,
    /// Head outputs, `[R, H]`, ordered segment-major.
    pub contributions: Vec<Var>,
}

#[derive(Debug)]
pub struct Prism {
    config: PrismConfig,
    plan: PartitionPlan,
    /// Filter bank per tree level (absent where nothing is decomposed).
    banks: Vec<Option<Arc<FilterBank>>>,
    router: RouterParams,
    heads: Vec<MlpIds>,
}

impl Prism {
    /// Builds the model and draws its initial parameters from `seed`.
    pub fn new(config: &PrismConfig, seed: u64) -> Result<(Prism, ParamStore)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Prism::with_rng(config, &mut rng)
    }

    pub fn with_rng(config: &PrismConfig, rng: &mut ChaCha8Rng) -> Result<(Prism, ParamStore)> {
        let plan = config.plan()?;
        let mut store = ParamStore::new();
        let router = RouterParams::init(&config.router, &plan, config.bands(), &mut store, rng)?;
        let mut banks = vec![None; plan.depth + 1];
        for level in crate::router::routed_levels(&plan) {
            banks[level] = Some(Arc::new(FilterBank::new(&config.filter, plan.len_at(level))?));
        }
        let mut heads = Vec::with_capacity(plan.leaf_count() * config.bands());
        for m in 0..plan.leaf_count() {
            for k in 0..config.bands() {
                heads.push(init_mlp(
                    &mut store,
                    &format!("head.seg{m}.band{k}"),
                    config.chunk_len(),
                    config.head_hidden,
                    config.horizon,
                    rng,
                ));
            }
        }
        Ok((
            Prism {
                config: config.clone(),
                plan,
                banks,
                router,
                heads,
            },
            store,
        ))
    }

    /// Rebuilds the model around existing parameters, checking that every
    /// name and shape matches the config.
    pub fn from_params(config: &PrismConfig, store: &ParamStore) -> Result<Prism> {
        let (model, template) = Prism::new(config, 0)?;
        if template.len() != store.len() {
            return Err(PrismError::Checkpoint(format!(
                "config expects {} parameter tensors, found {}",
                template.len(),
                store.len()
            )));
        }
        for ((_, name_a, a), (_, name_b, b)) in template.iter().zip(store.iter()) {
            if name_a != name_b || a.shape() != b.shape() {
                return Err(PrismError::Checkpoint(format!(
                    "parameter mismatch: config expects {name_a} {:?}, found {name_b} {:?}",
                    a.shape(),
                    b.shape()
                )));
            }
        }
        Ok(model)
    }

    pub fn config(&self) -> &PrismConfig {
        &self.config
    }

    pub fn plan(&self) -> &PartitionPlan {
        &self.plan
    }

    pub fn router(&self) -> &RouterParams {
        &self.router
    }

    pub fn head(&self, segment: usize, band: usize) -> MlpIds {
        self.heads[segment * self.config.bands() + band]
    }

    fn bank(&self, level: usize) -> &Arc<FilterBank> {
        self.banks[level].as_ref().expect("bank exists at routed levels")
    }

    /// Decomposes and routes one node; returns `(bands, scores, weights)`.
    fn route_node(&self, tape: &mut Tape, store: &ParamStore, node: NodeId, x: Var) -> Result<(Var, Var, Var)> {
        let bands = self.bank(node.level).decompose_var(tape, x)?;
        let (s, w) = self.router.route_var(tape, store, node, bands)?;
        Ok((bands, s, w))
    }

    /// Records the full forward pass for `[R, T_context]` input rows.
    pub fn forward_tape(&self, tape: &mut Tape, store: &ParamStore, context: Var) -> Result<ForwardPass> {
        let shape = tape.value(context).shape().to_vec();
        if shape.len() != 2 || shape[1] != self.config.context {
            return Err(PrismError::shape(format!(
                "expected [rows, {}] context, got {shape:?}",
                self.config.context
            )));
        }
        let mut routes = Vec::new();
        let depth = self.plan.depth;
        let mut leaves = Vec::with_capacity(self.plan.leaf_count());
        if depth == 0 {
            let node = NodeId { level: 0, index: 0 };
            let (bands, s, w) = self.route_node(tape, store, node, context)?;
            routes.push((node, s, w));
            leaves.push(scale_bands_var(tape, bands, w)?);
        } else {
            let mut nodes = vec![context];
            for level in 0..depth {
                let parent_len = self.plan.len_at(level);
                let child_len = self.plan.len_at(level + 1);
                let child_level = level + 1;
                let mut next = Vec::with_capacity(nodes.len() * 2);
                for (j, &parent) in nodes.iter().enumerate() {
                    let left = tape.slice_last(parent, 0, child_len)?;
                    let right = tape.slice_last(parent, parent_len - child_len, child_len)?;
                    for (side, child) in [left, right].into_iter().enumerate() {
                        let node = NodeId {
                            level: child_level,
                            index: 2 * j + side,
                        };
                        let (bands, s, w) = self.route_node(tape, store, node, child)?;
                        routes.push((node, s, w));
                        if child_level < depth {
                            next.push(recombine_var(tape, bands, w)?);
                        } else {
                            leaves.push(scale_bands_var(tape, bands, w)?);
                        }
                    }
                }
                nodes = next;
            }
        }

        let mut stitched_level = leaves.clone();
        for _ in 0..depth {
            stitched_level = stitched_level
                .chunks_exact(2)
                .map(|pair| stitch_var(tape, pair[0], pair[1], self.plan.overlap))
                .collect::<Result<_>>()?;
        }
        let stitched = stitched_level[0];

        let k_count = self.config.bands();
        let chunk = self.config.chunk_len();
        let per_band: Vec<Var> = (0..k_count)
            .map(|k| select_band_var(tape, stitched, k))
            .collect::<Result<_>>()?;
        let mut contributions = Vec::with_capacity(self.heads.len());
        for m in 0..self.plan.leaf_count() {
            for (k, &band) in per_band.iter().enumerate() {
                let input = tape.slice_last(band, m * chunk, chunk)?;
                contributions.push(mlp(tape, store, self.head(m, k), input)?);
            }
        }
        let forecast = tape.add_n(&contributions)?;
        Ok(ForwardPass {
            forecast,
            stitched,
            leaves,
            routes,
            contributions,
        })
    }

    /// Forecasts for `[R, T_context]` rows, returning `[R, H]`.
    pub fn predict_rows(&self, store: &ParamStore, rows: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let x = tape.constant(rows.clone());
        let pass = self.forward_tape(&mut tape, store, x)?;
        Ok(tape.value(pass.forecast).clone())
    }

    /// Forecast for one `T_context × C` window, returned as `T_forecast × C`.
    pub fn forward(&self, store: &ParamStore, context: &Tensor) -> Result<Tensor> {
        let rows = window_rows(context, self.config.context)?;
        Ok(self.predict_rows(store, &rows)?.transpose())
    }

    /// MSE loss and parameter gradients for `[R, T]` inputs and `[R, H]` targets.
    pub fn loss_and_grads(&self, store: &ParamStore, rows: &Tensor, targets: &Tensor) -> Result<(f64, GradMap)> {
        let mut tape = Tape::new();
        let x = tape.constant(rows.clone());
        let pass = self.forward_tape(&mut tape, store, x)?;
        let y = tape.constant(targets.clone());
        let loss = tape.mse(pass.forecast, y)?;
        let value = tape.value(loss).item();
        let grads = tape.backward(loss)?;
        Ok((value, grads))
    }

    /// Router output at every node for `[R, T]` rows.
    pub fn importance_rows(&self, store: &ParamStore, rows: &Tensor) -> Result<Vec<(NodeId, Tensor, Tensor)>> {
        let mut tape = Tape::new();
        let x = tape.constant(rows.clone());
        let pass = self.forward_tape(&mut tape, store, x)?;
        Ok(pass
            .routes
            .iter()
            .map(|&(node, s, w)| (node, tape.value(s).clone(), tape.value(w).clone()))
            .collect())
    }

    /// Per-component breakdown of one window's forecast.
    pub fn decompose_trace(&self, store: &ParamStore, context: &Tensor) -> Result<ForecastTrace> {
        let rows = window_rows(context, self.config.context)?;
        let channels = rows.row_count();
        let mut tape = Tape::new();
        let x = tape.constant(rows);
        let pass = self.forward_tape(&mut tape, store, x)?;
        let k_count = self.config.bands();
        let leaf_len = self.plan.leaf_len();
        let leaf_count = self.plan.leaf_count();
        let leaf_node = |m: usize| NodeId {
            level: self.plan.depth,
            index: m,
        };

        let mut components = Vec::with_capacity(leaf_count * k_count);
        for m in 0..leaf_count {
            let leaf = tape.value(pass.leaves[m]);
            let weights = pass
                .routes
                .iter()
                .find(|(node, _, _)| *node == leaf_node(m))
                .map(|&(_, _, w)| tape.value(w).clone())
                .ok_or_else(|| PrismError::Internal(format!("leaf {m} was not routed")))?;
            for k in 0..k_count {
                let mut context_part = Tensor::zeros(&[channels, self.config.context]);
                for c in 0..channels {
                    let mut parts = vec![vec![0.0; leaf_len]; leaf_count];
                    parts[m] = leaf.row(c * k_count + k).to_vec();
                    context_part
                        .row_mut(c)
                        .copy_from_slice(&stitch_leaves(&parts, &self.plan));
                }
                components.push(TraceComponent {
                    segment: m,
                    band: k,
                    weights: (0..channels).map(|c| weights.at(c, k)).collect(),
                    context: context_part.transpose(),
                    forecast: tape.value(pass.contributions[m * k_count + k]).transpose(),
                });
            }
        }
        let cumulate = |pick: fn(&TraceComponent) -> &Tensor| {
            let mut acc: Option<Tensor> = None;
            components
                .iter()
                .map(|c| {
                    let t = pick(c);
                    let next = match &acc {
                        Some(a) => {
                            let mut n = a.clone();
                            n.add_assign(t);
                            n
                        }
                        None => t.clone(),
                    };
                    acc = Some(next.clone());
                    next
                })
                .collect::<Vec<_>>()
        };
        let cumulative_context = cumulate(|c| &c.context);
        let cumulative_forecast = cumulate(|c| &c.forecast);
        Ok(ForecastTrace {
            forecast: tape.value(pass.forecast).transpose(),
            components,
            cumulative_context,
            cumulative_forecast,
        })
    }

    /// Router output at every node for one `T × C` window.
    pub fn importance(&self, store: &ParamStore, context: &Tensor) -> Result<Vec<ImportanceWeights>> {
        let rows = window_rows(context, self.config.context)?;
        Ok(self
            .importance_rows(store, &rows)?
            .into_iter()
            .map(|(node, s, w)| ImportanceWeights {
                node,
                scores: s.transpose(),
                weights: w.transpose(),
            })
            .collect())
    }
}

/// One `(segment, band)` component of a trace.
#[derive(Clone, Debug)]
pub struct TraceComponent {
    pub segment: usize,
    pub band: usize,
    /// Leaf importance weight per channel.
    pub weights: Vec<f64>,
    /// Weighted leaf band placed on the full context axis, `T_context × C`.
    pub context: Tensor,
    /// Head output, `T_forecast × C`.
    pub forecast: Tensor,
}

/// Components ordered segment-major (left to right), then by band.
#[derive(Clone, Debug)]
pub struct ForecastTrace {
    pub forecast: Tensor,
    pub components: Vec<TraceComponent>,
    pub cumulative_context: Vec<Tensor>,
    pub cumulative_forecast: Vec<Tensor>,
}

/// Transposes a `T × C` window into `C` rows, checking its length.
pub fn window_rows(context: &Tensor, expected_len: usize) -> Result<Tensor> {
    match context.shape() {
        [t, _] if *t == expected_len => Ok(context.transpose()),
        other => Err(PrismError::shape(format!(
            "expected a {expected_len} × C context, got {other:?}"
        ))),
    }
}

fn check_same(pred: &Tensor, target: &Tensor) -> Result<()> {
    if pred.shape() != target.shape() {
        return Err(PrismError::shape(format!(
            "prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if pred.is_empty() {
        return Err(PrismError::shape("empty prediction"));
    }
    Ok(())
}

/// Mean squared error over all entries.
pub fn loss(pred: &Tensor, target: &Tensor) -> Result<f64> {
    check_same(pred, target)?;
    let total: f64 = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(total / pred.len() as f64)
}

/// Mean absolute error over all entries.
pub fn mae(pred: &Tensor, target: &Tensor) -> Result<f64> {
    check_same(pred, target)?;
    let total: f64 = pred.data().iter().zip(target.data()).map(|(a, b)| (a - b).abs()).sum();
    Ok(total / pred.len() as f64)
}
