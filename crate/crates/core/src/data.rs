//! Loading, splitting, normalising and windowing multichannel series.

use std::ops::Range;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, TimeDelta};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{PrismError, Result};
use crate::tensor::Tensor;

/// Floor applied to per-channel standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    /// `T × C`.
    values: Tensor,
    timestamps: Option<Vec<NaiveDateTime>>,
    channel_names: Vec<String>,
    sampling_period: Option<TimeDelta>,
}

impl TimeSeries {
    pub fn new(values: Tensor, channel_names: Vec<String>, timestamps: Option<Vec<NaiveDateTime>>) -> Result<Self> {
        let [t, c] = values.shape() else {
            return Err(PrismError::shape(format!(
                "series must be T × C, got {:?}",
                values.shape()
            )));
        };
        let (t, c) = (*t, *c);
        if t == 0 || c == 0 {
            return Err(PrismError::shape("series needs at least one row and one channel"));
        }
        if channel_names.len() != c {
            return Err(PrismError::shape(format!(
                "{} channel names for {c} channels",
                channel_names.len()
            )));
        }
        if !values.is_finite() {
            return Err(PrismError::config("series contains non-finite values"));
        }
        let mut sampling_period = None;
        if let Some(ts) = &timestamps {
            if ts.len() != t {
                return Err(PrismError::shape(format!("{} timestamps for {t} rows", ts.len())));
            }
            if let Some(i) = ts.windows(2).position(|w| w[1] <= w[0]) {
                return Err(PrismError::config(format!(
                    "timestamps not strictly increasing at row {}",
                    i + 1
                )));
            }
            if t >= 2 {
                let step = ts[1] - ts[0];
                if ts.windows(2).all(|w| w[1] - w[0] == step) {
                    sampling_period = Some(step);
                }
            }
        }
        Ok(TimeSeries {
            values,
            timestamps,
            channel_names,
            sampling_period,
        })
    }

    /// A series with generated channel names `ch0, ch1, …` and no timestamps.
    pub fn from_values(values: Tensor) -> Result<Self> {
        let c = values.shape().get(1).copied().unwrap_or(0);
        TimeSeries::new(values, (0..c).map(|i| format!("ch{i}")).collect(), None)
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn timestamps(&self) -> Option<&[NaiveDateTime]> {
        self.timestamps.as_deref()
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    /// Uniform spacing between timestamps, when there is one.
    pub fn sampling_period(&self) -> Option<TimeDelta> {
        self.sampling_period
    }

    pub fn len(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> usize {
        self.values.shape()[1]
    }

    /// Rows `range` as a new series.
    pub fn slice(&self, range: Range<usize>) -> Result<TimeSeries> {
        if range.start >= range.end || range.end > self.len() {
            return Err(PrismError::config(format!(
                "row range {range:?} outside 0..{}",
                self.len()
            )));
        }
        let c = self.channels();
        let values = Tensor::new(
            vec![range.len(), c],
            self.values.data()[range.start * c..range.end * c].to_vec(),
        )?;
        let timestamps = self.timestamps.as_ref().map(|ts| ts[range].to_vec());
        TimeSeries::new(values, self.channel_names.clone(), timestamps)
    }

    fn with_values(&self, values: Tensor) -> Result<TimeSeries> {
        TimeSeries::new(values, self.channel_names.clone(), self.timestamps.clone())
    }
}

/// Column layout of a CSV file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSchema {
    /// Header of the leading timestamp column; `None` when every column is a channel.
    pub time_column: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            time_column: Some("date".into()),
        }
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
        "%Y-%m-%dT%H:%M:%S",
        "%Y/%m/%d %H:%M",
    ];
    let s = s.trim();
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })
}

/// Reads a headed CSV whose columns after the optional timestamp column are
/// numeric channels, in file order.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<TimeSeries> {
    let path = path.as_ref();
    let data_err = |message: String| PrismError::Data {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| data_err(format!("cannot open: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| data_err(format!("bad header: {e}")))?
        .clone();
    let skip = match &schema.time_column {
        Some(name) => {
            if headers.get(0).map(str::trim) != Some(name.as_str()) {
                return Err(data_err(format!(
                    "first column must be named {name:?}, found {:?}",
                    headers.get(0).unwrap_or("")
                )));
            }
            1
        }
        None => 0,
    };
    let channel_names: Vec<String> = headers.iter().skip(skip).map(|h| h.trim().to_string()).collect();
    if channel_names.is_empty() {
        return Err(data_err("no channel columns".into()));
    }

    let mut values = Vec::new();
    let mut stamps = Vec::new();
    for (row, record) in reader.records().enumerate() {
        // Row numbers are 1-based data rows, after the header.
        let row = row + 1;
        let record = record.map_err(|e| data_err(format!("row {row}: {e}")))?;
        if record.len() != headers.len() {
            return Err(data_err(format!(
                "row {row}: expected {} cells, found {}",
                headers.len(),
                record.len()
            )));
        }
        if skip == 1 {
            let cell = &record[0];
            let ts = parse_timestamp(cell).ok_or_else(|| {
                data_err(format!(
                    "row {row}, column {:?}: unparsable timestamp {cell:?}",
                    &headers[0]
                ))
            })?;
            stamps.push(ts);
        }
        for (col, cell) in record.iter().enumerate().skip(skip) {
            let v: f64 = cell.trim().parse().map_err(|_| {
                let what = if cell.trim().is_empty() {
                    "blank cell".to_string()
                } else {
                    format!("non-numeric cell {cell:?}")
                };
                data_err(format!("row {row}, column {:?}: {what}", &headers[col]))
            })?;
            if !v.is_finite() {
                return Err(data_err(format!(
                    "row {row}, column {:?}: non-finite value",
                    &headers[col]
                )));
            }
            values.push(v);
        }
    }
    let t = values.len() / channel_names.len();
    if t < 2 {
        return Err(data_err(format!("need at least 2 data rows, found {t}")));
    }
    let values = Tensor::new(vec![t, channel_names.len()], values)?;
    let timestamps = (skip == 1).then_some(stamps);
    TimeSeries::new(values, channel_names, timestamps).map_err(|e| data_err(e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let s = SplitSpec { train, val, test };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train, self.val, self.test];
        if fracs.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(PrismError::config(format!(
                "split fractions must be nonnegative, got {fracs:?}"
            )));
        }
        let total: f64 = fracs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(PrismError::config(format!("split fractions sum to {total}, not 1")));
        }
        Ok(())
    }

    /// Row boundaries `(train_end, val_end)` for a series of `len` rows.
    pub fn boundaries(&self, len: usize) -> Result<SplitBounds> {
        self.validate()?;
        if len < 10 {
            return Err(PrismError::config(format!("need at least 10 rows to split, got {len}")));
        }
        let train_end = (self.train * len as f64).floor() as usize;
        let val_end = train_end + (self.val * len as f64).floor() as usize;
        Ok(SplitBounds {
            train_end,
            val_end: val_end.min(len),
            len,
        })
    }
}

/// Row boundaries of a chronological split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitBounds {
    pub train_end: usize,
    pub val_end: usize,
    pub len: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl SplitBounds {
    pub fn range(&self, split: Split) -> Range<usize> {
        match split {
            Split::Train => 0..self.train_end,
            Split::Val => self.train_end..self.val_end,
            Split::Test => self.val_end..self.len,
        }
    }
}

/// Contiguous train/val/test slices with boundaries at `floor(frac·T)`.
pub fn chrono_split(ts: &TimeSeries, spec: &SplitSpec) -> Result<(TimeSeries, TimeSeries, TimeSeries)> {
    let b = spec.boundaries(ts.len())?;
    let part = |split| {
        let r = b.range(split);
        if r.is_empty() {
            return Err(PrismError::config(format!("{split:?} split is empty")));
        }
        ts.slice(r)
    };
    Ok((part(Split::Train)?, part(Split::Val)?, part(Split::Test)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Per-channel mean and population standard deviation.
pub fn fit_norm(train: &TimeSeries) -> NormStats {
    let (t, c) = (train.len(), train.channels());
    let mut mean = vec![0.0; c];
    for row in train.values.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t as f64);
    let mut var = vec![0.0; c];
    for row in train.values.rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var
        .iter()
        .enumerate()
        .map(|(ch, s)| {
            let sd = (s / t as f64).sqrt();
            if sd < STD_FLOOR {
                log::warn!(
                    "channel {:?} is constant on the training split; std floored at {STD_FLOOR}",
                    train.channel_names[ch]
                );
                STD_FLOOR
            } else {
                sd
            }
        })
        .collect();
    NormStats { mean, std }
}

fn map_channels(ts: &TimeSeries, stats: &NormStats, f: impl Fn(f64, f64, f64) -> f64) -> Result<TimeSeries> {
    if stats.mean.len() != ts.channels() || stats.std.len() != ts.channels() {
        return Err(PrismError::shape(format!(
            "normalisation has {} channels, series has {}",
            stats.mean.len(),
            ts.channels()
        )));
    }
    let mut values = ts.values.clone();
    for row in values.data_mut().chunks_mut(ts.channels()) {
        for ((v, m), s) in row.iter_mut().zip(&stats.mean).zip(&stats.std) {
            *v = f(*v, *m, *s);
        }
    }
    ts.with_values(values)
}

/// `(x − mean) / std` per channel.
pub fn apply_norm(ts: &TimeSeries, stats: &NormStats) -> Result<TimeSeries> {
    map_channels(ts, stats, |v, m, s| (v - m) / s)
}

/// `x·std + mean` per channel.
pub fn invert_norm(ts: &TimeSeries, stats: &NormStats) -> Result<TimeSeries> {
    map_channels(ts, stats, |v, m, s| v * s + m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowPair {
    /// `T_context × C`.
    pub context: Tensor,
    /// `T_forecast × C`, starting right after the context.
    pub target: Tensor,
    pub origin_index: usize,
}

fn too_short(len: usize, context: usize, horizon: usize) -> PrismError {
    PrismError::config(format!(
        "series of {len} rows is too short: windows need at least {} rows (context {context} + horizon {horizon})",
        context + horizon
    ))
}

/// Every window at origins `0, stride, 2·stride, …`.
pub fn make_windows(ts: &TimeSeries, context: usize, horizon: usize, stride: usize) -> Result<Vec<WindowPair>> {
    let set = WindowSet::new(ts.values.clone(), 0..ts.len(), context, horizon, stride)?;
    Ok((0..set.len()).map(|i| set.pair(i)).collect())
}

/// Windows over a shared `T × C` array without copying them out.
///
/// Targets lie inside `target_range`; contexts may reach back before it,
/// which lets validation and test windows draw on the preceding split.
#[derive(Clone, Debug)]
pub struct WindowSet {
    values: std::sync::Arc<Tensor>,
    origins: Vec<usize>,
    context: usize,
    horizon: usize,
}

impl WindowSet {
    pub fn new(
        values: Tensor,
        target_range: Range<usize>,
        context: usize,
        horizon: usize,
        stride: usize,
    ) -> Result<Self> {
        Self::shared(std::sync::Arc::new(values), target_range, context, horizon, stride)
    }

    pub fn shared(
        values: std::sync::Arc<Tensor>,
        target_range: Range<usize>,
        context: usize,
        horizon: usize,
        stride: usize,
    ) -> Result<Self> {
        if context == 0 || horizon == 0 || stride == 0 {
            return Err(PrismError::config("context, horizon and stride must be positive"));
        }
        if values.shape().len() != 2 || target_range.end > values.shape()[0] {
            return Err(PrismError::shape(format!(
                "target range {target_range:?} outside a {:?} array",
                values.shape()
            )));
        }
        // First origin whose target starts inside the range with a full context.
        let first = target_range.start.saturating_sub(context);
        if target_range.end < first + context + horizon {
            return Err(too_short(target_range.end - first, context, horizon));
        }
        let last = target_range.end - context - horizon;
        let origins = (first..=last).step_by(stride).collect();
        Ok(WindowSet {
            values,
            origins,
            context,
            horizon,
        })
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn context(&self) -> usize {
        self.context
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn origins(&self) -> &[usize] {
        &self.origins
    }

    fn block(&self, start: usize, len: usize) -> Tensor {
        let c = self.channels();
        Tensor::new(vec![len, c], self.values.data()[start * c..(start + len) * c].to_vec()).expect("in range")
    }

    pub fn pair(&self, i: usize) -> WindowPair {
        let o = self.origins[i];
        WindowPair {
            context: self.block(o, self.context),
            target: self.block(o + self.context, self.horizon),
            origin_index: o,
        }
    }

    /// Row-batched inputs `[n·C, T_context]` and targets `[n·C, T_forecast]`
    /// for windows `indices`; row `b·C + c` is channel `c` of window `b`.
    pub fn batch(&self, indices: &[usize]) -> (Tensor, Tensor) {
        let c = self.channels();
        let data = self.values.data();
        let mut x = Vec::with_capacity(indices.len() * c * self.context);
        let mut y = Vec::with_capacity(indices.len() * c * self.horizon);
        for &i in indices {
            let o = self.origins[i];
            for ch in 0..c {
                x.extend((o..o + self.context).map(|t| data[t * c + ch]));
                y.extend((o + self.context..o + self.context + self.horizon).map(|t| data[t * c + ch]));
            }
        }
        let rows = indices.len() * c;
        (
            Tensor::new(vec![rows, self.context], x).expect("sized"),
            Tensor::new(vec![rows, self.horizon], y).expect("sized"),
        )
    }
}

/// A split series, normalised with train statistics, ready for windowing.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub series: TimeSeries,
    pub bounds: SplitBounds,
    pub norm: NormStats,
    normalized: std::sync::Arc<Tensor>,
}

impl PreparedData {
    pub fn new(series: TimeSeries, split: &SplitSpec) -> Result<Self> {
        let bounds = split.boundaries(series.len())?;
        let train = series.slice(bounds.range(Split::Train))?;
        let norm = fit_norm(&train);
        let normalized = std::sync::Arc::new(apply_norm(&series, &norm)?.values);
        Ok(PreparedData {
            series,
            bounds,
            norm,
            normalized,
        })
    }

    pub fn normalized(&self) -> &Tensor {
        &self.normalized
    }

    /// Windows whose targets lie in `split`.
    pub fn windows(&self, split: Split, context: usize, horizon: usize) -> Result<WindowSet> {
        let range = self.bounds.range(split);
        // The training split never borrows context from outside itself.
        let range = match split {
            Split::Train => {
                let r = range.start..range.end;
                if r.len() < context + horizon {
                    return Err(too_short(r.len(), context, horizon));
                }
                r.start + context..r.end
            }
            _ => range,
        };
        WindowSet::shared(self.normalized.clone(), range, context, horizon, 1).map_err(|e| match e {
            PrismError::Config(m) => PrismError::config(format!("{split:?} split: {m}")),
            other => other,
        })
    }
}

/// Parameters of the synthetic benchmark series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub len: usize,
    pub channels: usize,
    pub periods: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Trend rise over the whole series.
    pub trend: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            len: 4000,
            channels: 1,
            periods: vec![24.0, 168.0],
            amplitudes: vec![1.0, 0.5],
            trend: 1.0,
            noise_std: 0.1,
            seed: 0,
        }
    }
}

/// Sinusoids plus a linear trend plus Gaussian noise. Channels differ in
/// phase.
pub fn synthetic_series(spec: &SyntheticSpec) -> Result<TimeSeries> {
    if spec.len < 2 || spec.channels == 0 {
        return Err(PrismError::config(
            "synthetic series needs len ≥ 2 and at least one channel",
        ));
    }
    if spec.periods.len() != spec.amplitudes.len() || spec.periods.iter().any(|p| *p <= 0.0) {
        return Err(PrismError::config(
            "synthetic periods must be positive and match amplitudes",
        ));
    }
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| PrismError::config(format!("noise_std: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tau = std::f64::consts::TAU;
    let mut values = Vec::with_capacity(spec.len * spec.channels);
    for t in 0..spec.len {
        for c in 0..spec.channels {
            let phase = c as f64 * 0.7;
            let periodic: f64 = spec
                .periods
                .iter()
                .zip(&spec.amplitudes)
                .map(|(p, a)| a * (tau * t as f64 / p + phase).sin())
                .sum();
            let trend = spec.trend * t as f64 / spec.len as f64;
            values.push(periodic + trend + noise.sample(&mut rng));
        }
    }
    TimeSeries::from_values(Tensor::new(vec![spec.len, spec.channels], values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn series(values: Vec<f64>, c: usize) -> TimeSeries {
        TimeSeries::from_values(Tensor::new(vec![values.len() / c, c], values).unwrap()).unwrap()
    }

    #[test]
    fn loads_small_csv() {
        let f = write_csv("date,a,b\n2016-07-01 00:00:00,1,2\n2016-07-01 01:00:00,3,4.5\n2016-07-01 02:00:00,-1,0\n");
        let ts = load_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!((ts.len(), ts.channels()), (3, 2));
        assert_eq!(ts.channel_names(), ["a", "b"]);
        assert_eq!(ts.values().at(1, 1), 4.5);
        assert_eq!(ts.sampling_period(), Some(TimeDelta::hours(1)));
    }

    #[test]
    fn rejects_bad_csv() {
        let blank = write_csv("date,a,b\n2016-07-01,1,2\n2016-07-02,,4\n");
        let msg = load_csv(blank.path(), &CsvSchema::default()).unwrap_err().to_string();
        assert!(
            msg.contains("row 2") && msg.contains("\"a\"") && msg.contains("blank"),
            "{msg}"
        );

        let text = write_csv("date,a\n2016-07-01,1\n2016-07-02,x\n");
        let msg = load_csv(text.path(), &CsvSchema::default()).unwrap_err().to_string();
        assert!(msg.contains("non-numeric"), "{msg}");

        let one_row = write_csv("date,a\n2016-07-01,1\n");
        assert!(load_csv(one_row.path(), &CsvSchema::default()).is_err());

        let no_date = write_csv("time,a\n1,1\n2,2\n");
        assert!(load_csv(no_date.path(), &CsvSchema::default()).is_err());
        let ts = load_csv(no_date.path(), &CsvSchema { time_column: None }).unwrap();
        assert_eq!(ts.channels(), 2);

        assert!(matches!(
            load_csv("/nonexistent/x.csv", &CsvSchema::default()),
            Err(PrismError::Data { .. })
        ));
    }

    #[test]
    fn split_lengths() {
        let lens = |t: usize, s: SplitSpec| {
            let b = s.boundaries(t).unwrap();
            (b.train_end, b.val_end - b.train_end, t - b.val_end)
        };
        assert_eq!(lens(10, SplitSpec::default()), (6, 2, 2));
        assert_eq!(lens(17420, SplitSpec::default()), (10452, 3484, 3484));
        assert_eq!(lens(100, SplitSpec::new(0.7, 0.1, 0.2).unwrap()), (70, 10, 20));
        assert!(SplitSpec::new(0.5, 0.2, 0.2).is_err());
        assert!(SplitSpec::default().boundaries(9).is_err());

        let ts = series((0..10).map(f64::from).collect(), 1);
        let (a, b, c) = chrono_split(&ts, &SplitSpec::default()).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (6, 2, 2));
        assert_eq!(b.values().data(), &[6.0, 7.0]);
    }

    #[test]
    fn normalisation() {
        let ts = series(vec![0.0, 5.0, 2.0, 5.0], 2);
        let stats = fit_norm(&ts);
        assert_eq!(stats.mean, vec![1.0, 5.0]);
        assert_eq!(stats.std, vec![1.0, STD_FLOOR]);
        let z = apply_norm(&ts, &stats).unwrap();
        assert_eq!(z.values().data(), &[-1.0, 0.0, 1.0, 0.0]);
        let back = invert_norm(&z, &stats).unwrap();
        assert!(back.values().max_abs_diff(ts.values()) < 1e-12);
    }

    #[test]
    fn window_counts() {
        let ts = series((0..10).map(f64::from).collect(), 1);
        let w = make_windows(&ts, 4, 2, 1).unwrap();
        assert_eq!(w.len(), 5);
        assert_eq!(w[2].origin_index, 2);
        assert_eq!(w[2].target.data()[0], 6.0);
        assert_eq!(make_windows(&ts, 4, 2, 2).unwrap().len(), 3);
        let msg = make_windows(&ts, 8, 4, 1).unwrap_err().to_string();
        assert!(msg.contains("12"), "{msg}");

        let ts = series(vec![0.0; 432], 1);
        assert_eq!(make_windows(&ts, 336, 96, 1).unwrap().len(), 1);
    }

    #[test]
    fn split_windows_borrow_context() {
        let ts = series((0..100).map(f64::from).collect(), 1);
        let data = PreparedData::new(ts, &SplitSpec::new(0.7, 0.1, 0.2).unwrap()).unwrap();
        let train = data.windows(Split::Train, 10, 5).unwrap();
        assert_eq!(train.len(), 70 - 15 + 1);
        let val = data.windows(Split::Val, 10, 5).unwrap();
        assert_eq!(val.len(), 10 - 5 + 1);
        assert_eq!(val.origins()[0] + 10, 70);
        let test = data.windows(Split::Test, 10, 5).unwrap();
        assert_eq!(*test.origins().last().unwrap() + 15, 100);
        assert!(data.windows(Split::Val, 10, 11).is_err());
    }

    #[test]
    fn batch_layout() {
        let ts = series((0..20).map(f64::from).collect(), 2);
        let set = WindowSet::new(ts.values().clone(), 0..10, 3, 2, 1).unwrap();
        let (x, y) = set.batch(&[1]);
        assert_eq!(x.shape(), &[2, 3]);
        assert_eq!(x.row(0), &[2.0, 4.0, 6.0]);
        assert_eq!(x.row(1), &[3.0, 5.0, 7.0]);
        assert_eq!(y.row(1), &[9.0, 11.0]);
    }

    #[test]
    fn synthetic_is_seeded() {
        let spec = SyntheticSpec {
            len: 50,
            channels: 2,
            ..Default::default()
        };
        let a = synthetic_series(&spec).unwrap();
        assert_eq!(a, synthetic_series(&spec).unwrap());
        let b = synthetic_series(&SyntheticSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a, b);
    }
}
