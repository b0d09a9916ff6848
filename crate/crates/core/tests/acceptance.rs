//! Acceptance checks, one line per criterion.
//!
//! Criteria 8-10 need the public ETT CSVs; point `PRISM_DATA_DIR` at a
//! directory holding `ETTh1.csv` and `ETTm1.csv` to run them.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{forecast_channel, random_signal, tiny_config};
use prism_core::checkpoint::Checkpoint;
use prism_core::data::{
    load_csv, synthetic_series, CsvSchema, PreparedData, Split, SplitSpec, SyntheticSpec, WindowSet,
};
use prism_core::filter::{decompose, FilterSpec};
use prism_core::gradcheck::{grad_check, DEFAULT_STEP};
use prism_core::params::ParamStore;
use prism_core::router::{band_stats, score_and_weight, BandStats, NodeId, RouterConfig, RouterMode, RouterParams};
use prism_core::train::{repeat_last_baseline, run_seed, Aggregate, ImportanceTable, SeedReport, TrainConfig};
use prism_core::tree::{plan, split_to_leaves, stitch_leaves};
use prism_core::{Prism, PrismConfig, Result, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn check(ok: bool, detail: String) -> Outcome {
    Outcome {
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn skip(detail: impl Into<String>) -> Outcome {
    Outcome {
        status: Status::Skip,
        detail: detail.into(),
    }
}

fn column_major(signals: &[Vec<f64>]) -> Tensor {
    let (len, channels) = (signals[0].len(), signals.len());
    let data = (0..len).flat_map(|t| signals.iter().map(move |s| s[t])).collect();
    Tensor::new(vec![len, channels], data).unwrap()
}

fn reconstruction() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut trials = 0;
    for family in ["haar", "fft", "ema", "dog", "binomial"] {
        let spec = FilterSpec::default_for(family)?;
        for _ in 0..1000 {
            let len = [16, 90, 172, 336][rng.random_range(0..4)];
            let channels = [1, 7][rng.random_range(0..2)];
            // six Haar scales need 32 samples; shorter segments get five
            let spec = if len < spec.min_len() {
                FilterSpec::haar(5)
            } else {
                spec.clone()
            };
            let x = column_major(&(0..channels).map(|_| random_signal(&mut rng, len)).collect::<Vec<_>>());
            worst = worst.max(decompose(&x, &spec)?.sum().max_abs_diff(&x));
            trials += 1;
        }
    }
    Ok(check(
        worst <= 1e-9,
        format!("{trials} segments, max |Σ bands − x| = {worst:.2e} (≤ 1e-9)"),
    ))
}

fn tree_round_trip() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut combos = 0;
    for depth in 1..=3 {
        for overlap in [0, 8, 24] {
            let p = plan(336, overlap, depth, 2)?;
            for _ in 0..50 {
                let x = random_signal(&mut rng, 336);
                let back = stitch_leaves(&split_to_leaves(&x, &p), &p);
                worst = back.iter().zip(&x).fold(worst, |m, (a, b)| m.max((a - b).abs()));
            }
            combos += 1;
        }
    }
    Ok(check(
        worst <= 1e-12,
        format!("{combos} (depth, overlap) pairs, max error {worst:.2e} (≤ 1e-12)"),
    ))
}

fn length_recurrence() -> Result<Outcome> {
    let lens = plan(336, 8, 2, 2)?.level_lengths;
    Ok(check(
        lens == [336, 172, 90],
        format!("plan(336, 8, 2) levels {lens:?}"),
    ))
}

/// Statistics of `K × C` random segments drawn by `draw(len)`.
fn random_stats(
    rng: &mut ChaCha8Rng,
    bands: usize,
    channels: usize,
    draw: impl Fn(&mut ChaCha8Rng, usize) -> Vec<f64>,
) -> Result<Vec<Vec<BandStats>>> {
    (0..bands)
        .map(|_| {
            (0..channels)
                .map(|_| {
                    let len = rng.random_range(3..60);
                    band_stats(&draw(rng, len))
                })
                .collect()
        })
        .collect()
}

fn wide_segment(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-2.0..1.0));
    random_signal(rng, len).iter().map(|v| v * scale).collect()
}

fn standard_segment(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn router_normalization() -> Result<Outcome> {
    let modes = [
        RouterMode::PerLevel,
        RouterMode::SharedAll,
        RouterMode::PerNode,
        RouterMode::Uniform,
    ];
    let p = plan(64, 4, 2, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut sum_err, mut hot_err, mut cold_err) = (0.0f64, 0.0f64, 0.0f64);
    let (mut cold_checked, mut cold_close) = (0, 0);
    for trial in 0..10_000 {
        let mode = modes[trial % modes.len()];
        let bands = rng.random_range(2..=6);
        let channels = rng.random_range(1..=7);
        let wide = random_stats(&mut rng, bands, channels, wide_segment)?;
        // the hot limit on the scale of standardized inputs
        let unit = random_stats(&mut rng, bands, channels, standard_segment)?;
        let node = NodeId {
            level: rng.random_range(1..=2),
            index: rng.random_range(0..2),
        };
        let seed = rng.random();
        let route = |stats: &[Vec<BandStats>], temperature: f64| -> Result<(Tensor, Tensor)> {
            let cfg = RouterConfig {
                mode,
                temperature,
                ..Default::default()
            };
            let mut store = ParamStore::new();
            let router = RouterParams::init(&cfg, &p, bands, &mut store, &mut ChaCha8Rng::seed_from_u64(seed))?;
            let w = score_and_weight(stats, &router, &store, node)?;
            Ok((w.scores, w.weights))
        };
        let (_, w) = route(&wide, 1.0)?;
        let (_, hot) = route(&unit, 1e6)?;
        let (scores, cold) = route(&wide, 0.01)?;
        for c in 0..channels {
            let col = |t: &Tensor| (0..bands).map(|k| t.at(k, c)).collect::<Vec<f64>>();
            sum_err = sum_err.max((col(&w).iter().sum::<f64>() - 1.0).abs());
            hot_err = col(&hot)
                .iter()
                .fold(hot_err, |m, v| m.max((v - 1.0 / bands as f64).abs()));
            if mode == RouterMode::Uniform {
                continue;
            }
            // the cold limit holds once the top two scores are distinct
            let s = col(&scores);
            let top = (0..bands).fold(0, |b, k| if s[k] > s[b] { k } else { b });
            let runner_up = (0..bands)
                .filter(|&k| k != top)
                .map(|k| s[k])
                .fold(f64::NEG_INFINITY, f64::max);
            if s[top] - runner_up < 0.2 {
                cold_close += 1;
                continue;
            }
            cold_checked += 1;
            let cw = col(&cold);
            cold_err = (0..bands).fold(cold_err, |m, k| m.max((cw[k] - if k == top { 1.0 } else { 0.0 }).abs()));
        }
    }
    Ok(check(
        sum_err <= 1e-9 && hot_err <= 1e-6 && cold_err <= 1e-6,
        format!(
            "10000 draws: max |Σw − 1| {sum_err:.1e}; τ=1e6 max |w − 1/K| {hot_err:.1e}; \
             τ=0.01 max one-hot error {cold_err:.1e} over {cold_checked} channels ({cold_close} with a top-two gap < 0.2 not scored)"
        ),
    ))
}

fn gradient_check() -> Result<Outcome> {
    let cfg = tiny_config();
    let (model, store) = Prism::new(&cfg, 5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // two windows of two channels
    let rows: Vec<f64> = (0..4).flat_map(|_| random_signal(&mut rng, cfg.context)).collect();
    let rows = Tensor::new(vec![4, cfg.context], rows)?;
    let target = Tensor::new(
        vec![4, cfg.horizon],
        (0..4 * cfg.horizon).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )?;
    let report = grad_check(
        |tape, s| {
            let x = tape.constant(rows.clone());
            let pass = model.forward_tape(tape, s, x)?;
            let y = tape.constant(target.clone());
            tape.mse(pass.forecast, y)
        },
        &store,
        DEFAULT_STEP,
        1e-4,
    )?;
    Ok(check(
        report.passes(1e-4) && report.checked + report.skipped.len() == store.scalar_count(),
        format!(
            "{} scalars, max rel err {:.2e} (< 1e-4), max raw difference {:.1e}, {} skipped at kinks",
            report.checked,
            report.max_rel_err,
            report.max_abs_diff,
            report.skipped.len()
        ),
    ))
}

fn oracle_equivalence() -> Result<Outcome> {
    let cfg = tiny_config();
    let (model, store) = Prism::new(&cfg, 6)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let ctx: Vec<Vec<f64>> = (0..2).map(|_| random_signal(&mut rng, cfg.context)).collect();
        let got = model.forward(&store, &column_major(&ctx))?;
        for (c, x) in ctx.iter().enumerate() {
            for (t, w) in forecast_channel(&cfg, &store, x).iter().enumerate() {
                worst = worst.max((got.at(t, c) - w).abs());
            }
        }
    }
    Ok(check(
        worst <= 1e-9,
        format!("100 inputs, max |forward − reference| = {worst:.2e} (≤ 1e-9)"),
    ))
}

fn splits(data: &PreparedData, cfg: &PrismConfig) -> Result<(WindowSet, WindowSet, WindowSet)> {
    Ok((
        data.windows(Split::Train, cfg.context, cfg.horizon)?,
        data.windows(Split::Val, cfg.context, cfg.horizon)?,
        data.windows(Split::Test, cfg.context, cfg.horizon)?,
    ))
}

fn synthetic_learning() -> Result<Outcome> {
    let series = synthetic_series(&SyntheticSpec::default())?;
    let data = PreparedData::new(series, &SplitSpec::default())?;
    let cfg = PrismConfig::default();
    let (train, val, test) = splits(&data, &cfg)?;
    let tc = TrainConfig {
        lr: 1e-3,
        ..Default::default()
    };
    let run = run_seed(&cfg, &train, &val, &test, &tc, 0, |_| {})?;
    let baseline = repeat_last_baseline(&test)?;
    let mse = run.report.test_mse;
    Ok(check(
        mse <= 0.05 && mse <= 0.5 * baseline.mse,
        format!(
            "test MSE {mse:.4} (≤ 0.05), repeat-last baseline {:.4} (ratio {:.3} ≤ 0.5), {} epochs",
            baseline.mse,
            mse / baseline.mse,
            run.report.epochs
        ),
    ))
}

fn dataset(name: &str) -> Option<Result<PreparedData>> {
    let dir = std::env::var_os("PRISM_DATA_DIR")?;
    let path = PathBuf::from(dir).join(name);
    Some(load_csv(path, &CsvSchema::default()).and_then(|s| PreparedData::new(s, &SplitSpec::default())))
}

/// Trains each seed and returns the reports with the mean epoch time.
fn train_seeds(data: &PreparedData, cfg: &PrismConfig, seeds: &[u64]) -> Result<(Vec<SeedReport>, f64)> {
    let (train, val, test) = splits(data, cfg)?;
    let tc = TrainConfig::default();
    let mut epoch_secs = Vec::new();
    let mut reports = Vec::new();
    for &seed in seeds {
        let run = run_seed(cfg, &train, &val, &test, &tc, seed, |e| epoch_secs.push(e.seconds))?;
        reports.push(run.report);
    }
    Ok((reports, epoch_secs.iter().sum::<f64>() / epoch_secs.len() as f64))
}

const NO_DATA: &str = "PRISM_DATA_DIR not set; needs the public ETT CSVs";

fn etth1_benchmark(cache: &mut Option<Vec<SeedReport>>) -> Result<Outcome> {
    let Some(data) = dataset("ETTh1.csv") else {
        return Ok(skip(NO_DATA));
    };
    let (reports, epoch) = train_seeds(&data?, &PrismConfig::default(), &[0, 1, 2, 3])?;
    let agg = Aggregate::of(&reports);
    let mse_rel = (agg.mean_mse - 0.355).abs() / 0.355;
    let mae_rel = (agg.mean_mae - 0.374).abs() / 0.374;
    *cache = Some(reports);
    Ok(check(
        mse_rel <= 0.15 && mae_rel <= 0.15 && epoch <= 65.0,
        format!(
            "MSE {:.4} ± {:.4} vs 0.355 ({:+.1}%), MAE {:.4} ± {:.4} vs 0.374 ({:+.1}%), {epoch:.1} s/epoch (≤ 65)",
            agg.mean_mse,
            agg.std_mse,
            100.0 * (agg.mean_mse / 0.355 - 1.0),
            agg.mean_mae,
            agg.std_mae,
            100.0 * (agg.mean_mae / 0.374 - 1.0)
        ),
    ))
}

fn uniform_ablation(cache: &Option<Vec<SeedReport>>) -> Result<Outcome> {
    let Some(data) = dataset("ETTh1.csv") else {
        return Ok(skip(NO_DATA));
    };
    let data = data?;
    let default = match cache {
        Some(reports) => reports.iter().filter(|r| r.seed < 2).cloned().collect(),
        None => train_seeds(&data, &PrismConfig::default(), &[0, 1])?.0,
    };
    let uniform_cfg = PrismConfig {
        router: RouterConfig {
            mode: RouterMode::Uniform,
            ..Default::default()
        },
        ..Default::default()
    };
    let uniform = train_seeds(&data, &uniform_cfg, &[0, 1])?.0;
    let (d, u) = (Aggregate::of(&default).mean_mse, Aggregate::of(&uniform).mean_mse);
    Ok(check(
        u - d >= -0.005,
        format!("uniform MSE {u:.4}, per-level MSE {d:.4}, gap {:+.4} (≥ −0.005)", u - d),
    ))
}

fn importance_trend() -> Result<Outcome> {
    let Some(data) = dataset("ETTm1.csv") else {
        return Ok(skip(NO_DATA));
    };
    let data = data?;
    let cfg = PrismConfig::default();
    let (train, val, test) = splits(&data, &cfg)?;
    let tc = TrainConfig::default();
    let sample: Vec<usize> = (0..256).map(|i| i * test.len() / 256).collect();
    let mut tables = Vec::new();
    for seed in [0, 1] {
        let run = run_seed(&cfg, &train, &val, &test, &tc, seed, |_| {})?;
        tables.push(ImportanceTable::collect(
            &run.model,
            &run.params,
            &test,
            &sample,
            tc.batch_size,
        )?);
    }
    let leaf = ImportanceTable::average(&tables)?
        .level_mean(cfg.depth)
        .expect("leaf level is routed");
    let inversions = leaf[..5].windows(2).filter(|w| w[1] < w[0]).count();
    let shown: Vec<String> = leaf.iter().map(|w| format!("{w:.3}")).collect();
    Ok(check(
        inversions <= 1,
        format!(
            "leaf weights [{}], {inversions} inversions across bands 0-4 (≤ 1)",
            shown.join(", ")
        ),
    ))
}

fn trace_additivity() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut counts = Vec::new();
    let configs = [
        PrismConfig {
            context: 64,
            horizon: 8,
            overlap: 4,
            filter: FilterSpec::haar(3),
            ..Default::default()
        },
        PrismConfig::default(),
    ];
    for cfg in &configs {
        let (_, params) = Prism::new(cfg, rng.random())?;
        // go through the checkpoint format so the check covers loaded models
        let ck = Checkpoint::from_bytes(&Checkpoint::new(cfg.clone(), params).to_bytes()?)?;
        let model = ck.model()?;
        for _ in 0..20 {
            let ctx = column_major(&(0..3).map(|_| random_signal(&mut rng, cfg.context)).collect::<Vec<_>>());
            let trace = model.decompose_trace(&ck.params, &ctx)?;
            let forward = model.forward(&ck.params, &ctx)?;
            let mut total = Tensor::zeros(forward.shape());
            for comp in &trace.components {
                total.add_assign(&comp.forecast);
            }
            worst = worst.max(total.max_abs_diff(&forward));
        }
        let expected = cfg.leaf_count() * cfg.bands();
        counts.push((
            model
                .decompose_trace(&ck.params, &Tensor::zeros(&[cfg.context, 1]))?
                .components
                .len(),
            expected,
        ));
    }
    let counts_ok = counts.iter().all(|(got, want)| got == want);
    let shown: Vec<String> = counts.iter().map(|(g, w)| format!("{g}/{w}")).collect();
    Ok(check(
        worst <= 1e-9 && counts_ok,
        format!(
            "max |Σ contributions − forward| = {worst:.2e} (≤ 1e-9), components {}",
            shown.join(", ")
        ),
    ))
}

fn main() -> ExitCode {
    let mut etth1 = None;
    let mut failed = 0;
    let mut run = |n: usize, name: &str, budget: Option<Duration>, f: &mut dyn FnMut() -> Result<Outcome>| {
        let start = Instant::now();
        let mut outcome = f().unwrap_or_else(|e| check(false, format!("error: {e}")));
        let took = start.elapsed();
        if let (Some(limit), Status::Pass) = (budget, &outcome.status) {
            if took > limit {
                outcome = check(false, format!("{} but took longer than {limit:?}", outcome.detail));
            }
        }
        let label = match outcome.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Skip => "SKIP",
        };
        println!(
            "criterion {n:>2} {name:<24} {label}  {} [{:.2} s]",
            outcome.detail,
            took.as_secs_f64()
        );
    };
    let secs = |s| Some(Duration::from_secs(s));
    run(1, "perfect reconstruction", secs(10), &mut reconstruction);
    run(2, "tree round trip", secs(1), &mut tree_round_trip);
    run(3, "length recurrence", None, &mut length_recurrence);
    run(4, "router normalization", secs(5), &mut router_normalization);
    run(5, "gradient check", secs(30), &mut gradient_check);
    run(6, "oracle equivalence", None, &mut oracle_equivalence);
    run(7, "synthetic learning", secs(300), &mut synthetic_learning);
    run(8, "ETTh1 benchmark", None, &mut || etth1_benchmark(&mut etth1));
    run(9, "uniform-router ablation", None, &mut || uniform_ablation(&etth1));
    run(10, "importance trend", None, &mut importance_trend);
    run(11, "trace additivity", None, &mut trace_additivity);
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
