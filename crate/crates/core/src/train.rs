//! Training with early stopping, evaluation and importance export.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::WindowSet;
use crate::error::{PrismError, Result};
use crate::model::{Prism, PrismConfig};
use crate::optim::AdamState;
use crate::params::ParamStore;
use crate::tape::Tape;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    /// Epochs without an improvement larger than `min_delta` before stopping.
    pub patience: usize,
    pub min_delta: f64,
    pub max_epochs: usize,
    pub seeds: Vec<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 512,
            lr: 1e-4,
            patience: 15,
            min_delta: 2e-4,
            max_epochs: 100,
            seeds: vec![0, 1, 2, 3],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.patience == 0 || self.max_epochs == 0 {
            return Err(PrismError::config(
                "batch_size, patience and max_epochs must be positive",
            ));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(PrismError::config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.min_delta.is_finite() && self.min_delta >= 0.0) {
            return Err(PrismError::config(format!(
                "min_delta must be nonnegative, got {}",
                self.min_delta
            )));
        }
        if self.seeds.is_empty() {
            return Err(PrismError::config("seeds must not be empty"));
        }
        Ok(())
    }
}

/// Early-stopping bookkeeping over per-epoch validation MSE.
///
/// The best parameters follow the lowest validation MSE seen. Patience is
/// reset only when a new value beats that minimum by more than `min_delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub min_delta: f64,
    best: f64,
    best_epoch: Option<usize>,
    wait: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StopDecision {
    /// The epoch set a new minimum; its parameters should be kept.
    pub new_best: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        EarlyStopping {
            patience,
            min_delta,
            best: f64::INFINITY,
            best_epoch: None,
            wait: 0,
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn observe(&mut self, epoch: usize, val: f64) -> StopDecision {
        let significant = self.best - val > self.min_delta;
        let new_best = val < self.best;
        if new_best {
            self.best = val;
            self.best_epoch = Some(epoch);
        }
        if significant {
            self.wait = 0;
        } else {
            self.wait += 1;
        }
        StopDecision {
            new_best,
            stop: self.wait >= self.patience,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub stopped_early: bool,
}

impl History {
    /// `epoch,train_mse,val_mse,seconds`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_err)?;
        for r in &self.epochs {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> PrismError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => PrismError::Io(io),
        other => PrismError::Internal(format!("csv: {other:?}")),
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub params: ParamStore,
    pub history: History,
}

/// Shuffle stream, kept apart from the initialisation stream of the same seed.
fn shuffle_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Runs epochs of shuffled mini-batch Adam until early stopping or
/// `max_epochs`, and returns the parameters of the best validation epoch.
pub fn train(
    model: &Prism,
    init: ParamStore,
    train_set: &WindowSet,
    val_set: &WindowSet,
    cfg: &TrainConfig,
    seed: u64,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(PrismError::config(
            "training and validation need at least one window each",
        ));
    }
    let mut rng = shuffle_rng(seed);
    let mut params = init;
    let mut adam = AdamState::new(&params, cfg.lr);
    let mut stopper = EarlyStopping::new(cfg.patience, cfg.min_delta);
    let mut best = params.clone();
    let mut history = History::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let (x, y) = train_set.batch(chunk);
            let mut tape = Tape::new();
            let xv = tape.constant(x);
            let pass = model.forward_tape(&mut tape, &params, xv)?;
            let yv = tape.constant(y);
            let loss = tape.mse(pass.forecast, yv)?;
            let value = tape.value(loss).item();
            if !value.is_finite() {
                return Err(PrismError::Diverged {
                    epoch,
                    batch: batch_idx,
                    loss: value,
                });
            }
            let grads = tape.backward(loss).map_err(|e| match e {
                PrismError::Numeric { .. } => PrismError::Diverged {
                    epoch,
                    batch: batch_idx,
                    loss: f64::NAN,
                },
                other => other,
            })?;
            adam.step(&mut params, &grads)?;
            if !params.is_finite() {
                return Err(PrismError::Diverged {
                    epoch,
                    batch: batch_idx,
                    loss: value,
                });
            }
            weighted += value * chunk.len() as f64;
        }
        let train_mse = weighted / train_set.len() as f64;
        let val_mse = evaluate(model, &params, val_set, cfg.batch_size)?.mse;
        let record = EpochRecord {
            epoch,
            train_mse,
            val_mse,
            seconds: start.elapsed().as_secs_f64(),
        };
        log::info!("epoch {epoch}: train {train_mse:.6} val {val_mse:.6}");
        on_epoch(&record);
        history.epochs.push(record);
        let decision = stopper.observe(epoch, val_mse);
        if decision.new_best {
            best = params.clone();
        }
        if decision.stop {
            history.stopped_early = true;
            break;
        }
    }
    history.best_epoch = stopper.best_epoch().unwrap_or(0);
    history.best_val_mse = stopper.best();
    if !history.best_val_mse.is_finite() {
        return Err(PrismError::Diverged {
            epoch: history.epochs.len(),
            batch: 0,
            loss: history.best_val_mse,
        });
    }
    Ok(TrainOutcome { params: best, history })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
}

/// Mean of per-window MSE and MAE, summed in window order.
fn window_metrics(per_window: &[(f64, f64)]) -> Result<Metrics> {
    if per_window.is_empty() {
        return Err(PrismError::config("cannot evaluate on an empty window set"));
    }
    let n = per_window.len() as f64;
    Ok(Metrics {
        mse: per_window.iter().map(|m| m.0).sum::<f64>() / n,
        mae: per_window.iter().map(|m| m.1).sum::<f64>() / n,
    })
}

/// Per-window errors for `[n·C, H]` predictions against targets.
fn push_window_errors(pred: &Tensor, target: &Tensor, channels: usize, out: &mut Vec<(f64, f64)>) {
    let width = channels * target.last_dim();
    for (p, t) in pred.data().chunks(width).zip(target.data().chunks(width)) {
        let (mut se, mut ae) = (0.0, 0.0);
        for (a, b) in p.iter().zip(t) {
            se += (a - b) * (a - b);
            ae += (a - b).abs();
        }
        out.push((se / width as f64, ae / width as f64));
    }
}

/// Test MSE and MAE over every window of `set`.
pub fn evaluate(model: &Prism, params: &ParamStore, set: &WindowSet, batch_size: usize) -> Result<Metrics> {
    let mut per_window = Vec::with_capacity(set.len());
    let indices: Vec<usize> = (0..set.len()).collect();
    for chunk in indices.chunks(batch_size.max(1)) {
        let (x, y) = set.batch(chunk);
        let pred = model.predict_rows(params, &x)?;
        push_window_errors(&pred, &y, set.channels(), &mut per_window);
    }
    window_metrics(&per_window)
}

/// The naive forecast that repeats the last context value.
pub fn repeat_last_baseline(set: &WindowSet) -> Result<Metrics> {
    let mut per_window = Vec::with_capacity(set.len());
    let indices: Vec<usize> = (0..set.len()).collect();
    for chunk in indices.chunks(256) {
        let (x, y) = set.batch(chunk);
        let h = y.last_dim();
        let mut pred = Tensor::zeros(y.shape());
        for (r, row) in x.rows().enumerate() {
            let last = row[row.len() - 1];
            pred.row_mut(r).iter_mut().for_each(|v| *v = last);
        }
        debug_assert_eq!(pred.last_dim(), h);
        push_window_errors(&pred, &y, set.channels(), &mut per_window);
    }
    window_metrics(&per_window)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub test_mse: f64,
    pub test_mae: f64,
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_mse: f64,
    pub std_mse: f64,
    pub mean_mae: f64,
    pub std_mae: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PrismConfig,
    pub seeds: Vec<SeedReport>,
    pub aggregate: Aggregate,
    pub baseline: Option<Metrics>,
}

/// Sample mean and standard deviation; the deviation of one value is 0.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl RunReport {
    pub fn new(config: PrismConfig, seeds: Vec<SeedReport>, baseline: Option<Metrics>) -> Result<Self> {
        if seeds.is_empty() {
            return Err(PrismError::config("a run report needs at least one seed"));
        }
        let aggregate = Aggregate::of(&seeds);
        Ok(RunReport {
            config,
            seeds,
            aggregate,
            baseline,
        })
    }
}

impl Aggregate {
    pub fn of(seeds: &[SeedReport]) -> Self {
        let (mean_mse, std_mse) = mean_std(&seeds.iter().map(|s| s.test_mse).collect::<Vec<_>>());
        let (mean_mae, std_mae) = mean_std(&seeds.iter().map(|s| s.test_mae).collect::<Vec<_>>());
        Aggregate {
            mean_mse,
            std_mse,
            mean_mae,
            std_mae,
        }
    }
}

/// Everything produced by training one seed.
pub struct SeedRun {
    pub model: Prism,
    pub params: ParamStore,
    pub history: History,
    pub report: SeedReport,
}

/// Initialises from `seed`, trains, and evaluates on `test`.
pub fn run_seed(
    config: &PrismConfig,
    train_set: &WindowSet,
    val_set: &WindowSet,
    test_set: &WindowSet,
    cfg: &TrainConfig,
    seed: u64,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<SeedRun> {
    let start = Instant::now();
    let (model, init) = Prism::new(config, seed)?;
    let outcome = train(&model, init, train_set, val_set, cfg, seed, on_epoch)?;
    let test = evaluate(&model, &outcome.params, test_set, cfg.batch_size)?;
    let report = SeedReport {
        seed,
        test_mse: test.mse,
        test_mae: test.mae,
        epochs: outcome.history.epochs.len(),
        best_epoch: outcome.history.best_epoch,
        best_val_mse: outcome.history.best_val_mse,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(SeedRun {
        model,
        params: outcome.params,
        history: outcome.history,
        report,
    })
}

/// Mean importance weights at one tree node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeImportance {
    pub level: usize,
    pub node: usize,
    /// `C × K`, averaged over windows.
    pub per_channel: Vec<Vec<f64>>,
}

impl NodeImportance {
    /// Per-band weights averaged over channels.
    pub fn weights(&self) -> Vec<f64> {
        mean_rows(self.per_channel.iter().map(Vec::as_slice))
    }
}

fn mean_rows<'a>(rows: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut mean: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for row in rows {
        if mean.is_empty() {
            mean = vec![0.0; row.len()];
        }
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        n += 1;
    }
    mean.iter_mut().for_each(|m| *m /= n.max(1) as f64);
    mean
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub level: usize,
    /// Node index, or `"all"` for the average over a level's nodes.
    pub node: String,
    /// Channel index, or `"all"` for the average over channels.
    pub channel: String,
    pub band: usize,
    pub mean_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImportanceTable {
    pub nodes: Vec<NodeImportance>,
}

impl ImportanceTable {
    /// Router weights averaged over the given windows.
    pub fn collect(
        model: &Prism,
        params: &ParamStore,
        set: &WindowSet,
        windows: &[usize],
        batch_size: usize,
    ) -> Result<Self> {
        if windows.is_empty() {
            return Err(PrismError::config("importance export needs at least one window"));
        }
        let (k, c) = (model.config().bands(), set.channels());
        let mut sums: BTreeMap<(usize, usize), Vec<Vec<f64>>> = BTreeMap::new();
        for chunk in windows.chunks(batch_size.max(1)) {
            let (x, _) = set.batch(chunk);
            for (node, _, w) in model.importance_rows(params, &x)? {
                let acc = sums
                    .entry((node.level, node.index))
                    .or_insert_with(|| vec![vec![0.0; k]; c]);
                // Row b·C + ch of `w` belongs to channel ch.
                for (r, row) in w.rows().enumerate() {
                    acc[r % c].iter_mut().zip(row).for_each(|(a, v)| *a += v);
                }
            }
        }
        let n = windows.len() as f64;
        let nodes = sums
            .into_iter()
            .map(|((level, node), s)| NodeImportance {
                level,
                node,
                per_channel: s
                    .into_iter()
                    .map(|ch| ch.into_iter().map(|v| v / n).collect())
                    .collect(),
            })
            .collect();
        Ok(ImportanceTable { nodes })
    }

    /// Equal-weight average of tables over the same nodes (e.g. seeds).
    pub fn average(tables: &[ImportanceTable]) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| PrismError::config("no importance tables to average"))?;
        let shape = |n: &NodeImportance| {
            (
                n.level,
                n.node,
                n.per_channel.len(),
                n.per_channel.first().map_or(0, Vec::len),
            )
        };
        let mut nodes = first.nodes.clone();
        for t in &tables[1..] {
            if t.nodes.len() != nodes.len() || nodes.iter().zip(&t.nodes).any(|(a, b)| shape(a) != shape(b)) {
                return Err(PrismError::config("importance tables cover different nodes"));
            }
            for (a, b) in nodes.iter_mut().zip(&t.nodes) {
                for (ra, rb) in a.per_channel.iter_mut().zip(&b.per_channel) {
                    ra.iter_mut().zip(rb).for_each(|(x, y)| *x += y);
                }
            }
        }
        let n = tables.len() as f64;
        for node in &mut nodes {
            node.per_channel.iter_mut().flatten().for_each(|w| *w /= n);
        }
        Ok(ImportanceTable { nodes })
    }

    /// Per-band weights averaged over channels and every node of `level`.
    pub fn level_mean(&self, level: usize) -> Option<Vec<f64>> {
        let means: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .filter(|n| n.level == level)
            .map(NodeImportance::weights)
            .collect();
        if means.is_empty() {
            return None;
        }
        Some(mean_rows(means.iter().map(Vec::as_slice)))
    }

    /// Per node: one row per (channel, band), then channel-averaged rows.
    /// Levels with several nodes end with node- and channel-averaged rows.
    pub fn rows(&self) -> Vec<ImportanceRow> {
        let mut rows = Vec::new();
        let mut push = |level: usize, node: String, channel: String, weights: &[f64]| {
            for (band, &w) in weights.iter().enumerate() {
                rows.push(ImportanceRow {
                    level,
                    node: node.clone(),
                    channel: channel.clone(),
                    band,
                    mean_weight: w,
                });
            }
        };
        for n in &self.nodes {
            for (c, w) in n.per_channel.iter().enumerate() {
                push(n.level, n.node.to_string(), c.to_string(), w);
            }
            push(n.level, n.node.to_string(), "all".into(), &n.weights());
        }
        let mut levels: Vec<usize> = self.nodes.iter().map(|n| n.level).collect();
        levels.dedup();
        for level in levels {
            if self.nodes.iter().filter(|n| n.level == level).count() > 1 {
                push(
                    level,
                    "all".into(),
                    "all".into(),
                    &self.level_mean(level).unwrap_or_default(),
                );
            }
        }
        rows
    }

    /// `level,node,channel,band,mean_weight`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in self.rows() {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FilterSpec;
    use crate::router::{RouterConfig, RouterMode};

    #[test]
    fn stopping_rule_traces() {
        // Strictly increasing validation loss with patience 1.
        let mut s = EarlyStopping::new(1, 0.0);
        assert_eq!(
            s.observe(1, 1.0),
            StopDecision {
                new_best: true,
                stop: false
            }
        );
        assert_eq!(
            s.observe(2, 1.1),
            StopDecision {
                new_best: false,
                stop: true
            }
        );
        assert_eq!(s.best_epoch(), Some(1));

        // An improvement of exactly δ does not reset patience, but its
        // parameters are still the best seen.
        let mut s = EarlyStopping::new(2, 0.25);
        s.observe(1, 1.0);
        assert_eq!(
            s.observe(2, 0.75),
            StopDecision {
                new_best: true,
                stop: false
            }
        );
        assert_eq!(
            s.observe(3, 0.74),
            StopDecision {
                new_best: true,
                stop: true
            }
        );
        assert_eq!(s.best_epoch(), Some(3));

        let mut s = EarlyStopping::new(2, 0.25);
        s.observe(1, 1.0);
        s.observe(2, 0.8);
        assert!(!s.observe(3, 0.5).stop);
    }

    fn tiny_setup(mode: RouterMode) -> (PrismConfig, WindowSet) {
        let cfg = PrismConfig {
            context: 32,
            horizon: 4,
            overlap: 0,
            depth: 1,
            filter: FilterSpec::haar(3),
            router: RouterConfig {
                mode,
                hidden: 4,
                ..Default::default()
            },
            head_hidden: 8,
        };
        let values = Tensor::new(vec![80, 2], (0..160).map(|i| (i as f64 * 0.3).sin()).collect()).unwrap();
        let set = WindowSet::new(values, 0..80, 32, 4, 1).unwrap();
        (cfg, set)
    }

    #[test]
    fn training_is_deterministic_and_keeps_best() {
        let (cfg, set) = tiny_setup(RouterMode::PerLevel);
        let tc = TrainConfig {
            batch_size: 8,
            lr: 1e-3,
            max_epochs: 4,
            seeds: vec![3],
            ..Default::default()
        };
        let run = || {
            let (model, init) = Prism::new(&cfg, 3).unwrap();
            let out = train(&model, init, &set, &set, &tc, 3, |_| {}).unwrap();
            (model, out)
        };
        let (model, a) = run();
        let (_, b) = run();
        let curve = |h: &History| h.epochs.iter().map(|e| (e.train_mse, e.val_mse)).collect::<Vec<_>>();
        assert_eq!(curve(&a.history), curve(&b.history));
        assert_eq!(a.params, b.params);
        let min = a.history.epochs.iter().map(|e| e.val_mse).fold(f64::INFINITY, f64::min);
        assert_eq!(a.history.best_val_mse, min);
        let again = evaluate(&model, &a.params, &set, 5).unwrap().mse;
        assert!((again - min).abs() < 1e-12);
    }

    #[test]
    fn divergence_is_reported() {
        let (cfg, set) = tiny_setup(RouterMode::PerLevel);
        let (model, mut init) = Prism::new(&cfg, 0).unwrap();
        let id = init.id_of("head.seg0.band0.fc2.bias").unwrap();
        init.set(id, Tensor::full(&[4], f64::NAN)).unwrap();
        let tc = TrainConfig {
            batch_size: 8,
            ..Default::default()
        };
        let err = train(&model, init, &set, &set, &tc, 0, |_| {}).unwrap_err();
        assert!(matches!(err, PrismError::Diverged { epoch: 1, batch: 0, .. }), "{err}");
    }

    #[test]
    fn baseline_and_metrics() {
        let values = Tensor::new(vec![6, 1], vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let set = WindowSet::new(values, 0..6, 2, 2, 1).unwrap();
        // Windows predict last=1,2,3 for targets (2,3),(3,4),(4,5): errors 1 and 2.
        let m = repeat_last_baseline(&set).unwrap();
        assert!((m.mse - 2.5).abs() < 1e-12 && (m.mae - 1.5).abs() < 1e-12);
    }

    #[test]
    fn uniform_router_exports_one_over_k() {
        let (cfg, set) = tiny_setup(RouterMode::Uniform);
        let (model, params) = Prism::new(&cfg, 0).unwrap();
        let table = ImportanceTable::collect(&model, &params, &set, &[0, 1, 2], 2).unwrap();
        let rows = table.rows();
        // Two leaves × (two channels + their average) × three bands, plus
        // the level average.
        assert_eq!(rows.len(), 2 * 3 * 3 + 3);
        assert!(rows.iter().all(|r| (r.mean_weight - 1.0 / 3.0).abs() < 1e-12));
        let one = ImportanceTable::collect(&model, &params, &set, &[0], 1).unwrap();
        assert_eq!(one.nodes[0].weights().len(), 3);
        let averaged = ImportanceTable::average(&[one.clone(), one.clone()]).unwrap();
        assert_eq!(averaged, one);
    }

    #[test]
    fn aggregate_statistics() {
        let seed = |mse| SeedReport {
            seed: 0,
            test_mse: mse,
            test_mae: 1.0,
            epochs: 1,
            best_epoch: 1,
            best_val_mse: 0.0,
            seconds: 0.0,
        };
        let agg = Aggregate::of(&[seed(1.0), seed(3.0)]);
        assert_eq!((agg.mean_mse, agg.std_mse), (2.0, 2f64.sqrt()));
        assert_eq!(Aggregate::of(&[seed(1.0)]).std_mse, 0.0);
    }
}
