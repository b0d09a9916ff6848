use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use prism_core::checkpoint::{check_compatible, Checkpoint};
use prism_core::data::{load_csv, PreparedData, Split, WindowSet};
use prism_core::filter::FilterBank;
use prism_core::runspec::RunSpec;
use prism_core::train::{evaluate, repeat_last_baseline, run_seed, ImportanceTable, RunReport};
use prism_core::{Prism, PrismError, Result};
use serde_json::json;

fn load_spec(path: &Path) -> Result<(RunSpec, PathBuf)> {
    let spec = RunSpec::load(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((spec, base))
}

fn prepare(spec: &RunSpec, base: &Path) -> Result<PreparedData> {
    let series = spec.data.load(base)?;
    PreparedData::new(series, &spec.data.split)
}

/// Creates a fresh `<parent>/<command>-<timestamp>` directory.
fn run_dir(out: Option<&Path>, spec: &RunSpec, command: &str) -> Result<PathBuf> {
    let parent = out.map_or_else(|| spec.output.dir.clone(), Path::to_path_buf);
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S");
    let mut dir = parent.join(format!("{command}-{stamp}"));
    let mut n = 1;
    while dir.exists() {
        dir = parent.join(format!("{command}-{stamp}-{n}"));
        n += 1;
    }
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| PrismError::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// `count` window indices spread evenly over `0..len`.
fn spread(count: usize, len: usize) -> Vec<usize> {
    let count = count.min(len);
    (0..count).map(|i| i * len / count).collect()
}

fn load_checkpoint(path: &Path, spec: &RunSpec) -> Result<(Checkpoint, Prism)> {
    let ck = Checkpoint::load(path)?;
    check_compatible(&ck.config, &spec.model)?;
    let model = ck.model()?;
    Ok((ck, model))
}

fn test_windows(spec: &RunSpec, data: &PreparedData) -> Result<WindowSet> {
    data.windows(Split::Test, spec.model.context, spec.model.horizon)
}

fn window_index(set: &WindowSet, window: usize) -> Result<usize> {
    if window >= set.len() {
        return Err(PrismError::Usage(format!(
            "window {window} out of range: the test split has {} windows",
            set.len()
        )));
    }
    Ok(window)
}

pub fn train(spec_path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<PathBuf> {
    let (mut spec, base) = load_spec(spec_path)?;
    if let Some(s) = seed {
        spec.train.seeds = vec![s];
    }
    let data = prepare(&spec, &base)?;
    let (ctx, h) = (spec.model.context, spec.model.horizon);
    let train_set = data.windows(Split::Train, ctx, h)?;
    let val_set = data.windows(Split::Val, ctx, h)?;
    let test_set = test_windows(&spec, &data)?;
    let dir = run_dir(out, &spec, "train")?;
    std::fs::write(dir.join("spec.toml"), spec.to_toml()?)?;
    log::info!(
        "{} train / {} val / {} test windows, run directory {}",
        train_set.len(),
        val_set.len(),
        test_set.len(),
        dir.display()
    );

    let baseline = repeat_last_baseline(&test_set)?;
    let sample = spread(spec.output.importance_windows, test_set.len());
    let mut seeds = Vec::new();
    let mut tables = Vec::new();
    for &s in &spec.train.seeds {
        let run = run_seed(&spec.model, &train_set, &val_set, &test_set, &spec.train, s, |_| {})?;
        let seed_dir = dir.join(format!("seed{s}"));
        std::fs::create_dir_all(&seed_dir)?;
        Checkpoint::new(spec.model.clone(), run.params.clone()).save(seed_dir.join("checkpoint.bin"))?;
        run.history.write_csv(seed_dir.join("history.csv"))?;
        let table = ImportanceTable::collect(&run.model, &run.params, &test_set, &sample, spec.train.batch_size)?;
        table.write_csv(create(&seed_dir.join("importance.csv"))?)?;
        log::info!(
            "seed {s}: test mse {:.4} mae {:.4} after {} epochs",
            run.report.test_mse,
            run.report.test_mae,
            run.report.epochs
        );
        tables.push(table);
        seeds.push(run.report);
    }
    ImportanceTable::average(&tables)?.write_csv(create(&dir.join("importance.csv"))?)?;
    let report = RunReport::new(spec.model.clone(), seeds, Some(baseline))?;
    write_json(&dir.join("report.json"), &report)?;
    Ok(dir)
}

pub fn eval(spec_path: &Path, out: Option<&Path>, checkpoint: &Path, window: Option<usize>) -> Result<PathBuf> {
    let (spec, base) = load_spec(spec_path)?;
    let (ck, model) = load_checkpoint(checkpoint, &spec)?;
    let data = prepare(&spec, &base)?;
    let test_set = test_windows(&spec, &data)?;
    let window = window.map(|w| window_index(&test_set, w)).transpose()?;
    let metrics = evaluate(&model, &ck.params, &test_set, spec.train.batch_size)?;
    let baseline = repeat_last_baseline(&test_set)?;
    let dir = run_dir(out, &spec, "eval")?;
    let summary = json!({
        "checkpoint": checkpoint.display().to_string(),
        "windows": test_set.len(),
        "test": metrics,
        "baseline": baseline,
    });
    write_json(&dir.join("metrics.json"), &summary)?;
    println!(
        "{}",
        serde_json::to_string(&summary).map_err(|e| PrismError::Internal(e.to_string()))?
    );

    if let Some(w) = window {
        let forecast = model.forward(&ck.params, &test_set.pair(w).context)?;
        let mut f = create(&dir.join("forecast.csv"))?;
        writeln!(f, "t,{}", data.series.channel_names().join(","))?;
        for (t, row) in forecast.rows().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{t},{}", cells.join(","))?;
        }
        f.flush()?;
    }
    Ok(dir)
}

pub fn decompose(spec_path: &Path, out: Option<&Path>, input: Option<&Path>) -> Result<PathBuf> {
    let (spec, base) = load_spec(spec_path)?;
    let series = match input {
        Some(p) => load_csv(p, &spec.data.schema())?,
        None => spec.data.load(&base)?,
    };
    let bank = FilterBank::new(&spec.model.filter, series.len())?;
    let (t_len, k) = (series.len(), bank.bands());
    let channels = series.channels();
    let mut bands = vec![vec![0.0; k * t_len]; channels];
    let values = series.values().transpose();
    for (c, out_c) in bands.iter_mut().enumerate() {
        bank.decompose_row(values.row(c), out_c);
    }
    let dir = run_dir(out, &spec, "decompose")?;
    let mut f = create(&dir.join("bands.csv"))?;
    let header: Vec<String> = (0..k).map(|b| format!("band_{b}")).collect();
    writeln!(f, "t,channel,{}", header.join(","))?;
    for (name, ch) in series.channel_names().iter().zip(&bands) {
        for t in 0..t_len {
            let cells: Vec<String> = (0..k).map(|b| ch[b * t_len + t].to_string()).collect();
            writeln!(f, "{t},{name},{}", cells.join(","))?;
        }
    }
    f.flush()?;
    Ok(dir)
}

pub fn trace(spec_path: &Path, out: Option<&Path>, checkpoint: &Path, window: usize) -> Result<PathBuf> {
    let (spec, base) = load_spec(spec_path)?;
    let (ck, model) = load_checkpoint(checkpoint, &spec)?;
    let data = prepare(&spec, &base)?;
    let test_set = test_windows(&spec, &data)?;
    let pair = test_set.pair(window_index(&test_set, window)?);
    let trace = model.decompose_trace(&ck.params, &pair.context)?;
    let dir = run_dir(out, &spec, "trace")?;
    let names = data.series.channel_names();

    let mut f = create(&dir.join("trace.csv"))?;
    writeln!(f, "side,segment,band,channel,t,weight,component,cumulative")?;
    for (i, comp) in trace.components.iter().enumerate() {
        let sides = [
            ("context", &comp.context, &trace.cumulative_context[i]),
            ("forecast", &comp.forecast, &trace.cumulative_forecast[i]),
        ];
        for (side, values, cumulative) in sides {
            for (c, name) in names.iter().enumerate() {
                for t in 0..values.shape()[0] {
                    writeln!(
                        f,
                        "{side},{},{},{name},{t},{},{},{}",
                        comp.segment,
                        comp.band,
                        comp.weights[c],
                        values.at(t, c),
                        cumulative.at(t, c)
                    )?;
                }
            }
        }
    }
    f.flush()?;

    let mut f = create(&dir.join("window.csv"))?;
    writeln!(f, "side,channel,t,value")?;
    for (side, values) in [
        ("context", &pair.context),
        ("target", &pair.target),
        ("forecast", &trace.forecast),
    ] {
        for (c, name) in names.iter().enumerate() {
            for t in 0..values.shape()[0] {
                writeln!(f, "{side},{name},{t},{}", values.at(t, c))?;
            }
        }
    }
    f.flush()?;
    Ok(dir)
}

pub fn importance(spec_path: &Path, out: Option<&Path>, checkpoint: &Path) -> Result<PathBuf> {
    let (spec, base) = load_spec(spec_path)?;
    let (ck, model) = load_checkpoint(checkpoint, &spec)?;
    let data = prepare(&spec, &base)?;
    let test_set = test_windows(&spec, &data)?;
    let sample = spread(spec.output.importance_windows, test_set.len());
    let table = ImportanceTable::collect(&model, &ck.params, &test_set, &sample, spec.train.batch_size)?;
    let dir = run_dir(out, &spec, "importance")?;
    table.write_csv(create(&dir.join("importance.csv"))?)?;
    Ok(dir)
}
