//! Same-length additive filter banks.
//!
//! Every family splits a segment into `K` bands of the segment's own length
//! whose sum is the segment. Smoothing families use the telescoping form
//!
//! ```text
//! b_0 = x - s_0,  b_k = s_{k-1} - s_k  (0 < k < K-1),  b_{K-1} = s_{K-2}
//! ```
//!
//! where `s_j` is progressively smoother. The FFT family instead partitions
//! the spectrum with rectangular masks. Band 0 is always the finest band.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{PrismError, Result};
use crate::tape::{Tape, Var};
use crate::tensor::{gemm, Tensor};

/// How FFT band edges are laid out on `[0, Nyquist]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FftEdges {
    /// Octaves: band 0 covers the top half of the spectrum, band 1 the
    /// quarter below it, and so on; the last band takes everything below.
    #[default]
    Dyadic,
    /// `K` equal-width ranges.
    Equal,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FilterFamily {
    /// Undecimated (à trous) Haar: flat moving averages of length 2^(j+1).
    Haar,
    Fft {
        edges: FftEdges,
    },
    /// Causal exponential smoothing with time constants `tau0 * grow^j`.
    Ema {
        tau0: f64,
        grow: f64,
    },
    /// Gaussian smoothing with `sigma0 * ratio^j`.
    Dog {
        sigma0: f64,
        ratio: f64,
    },
    /// Binomial kernels of order `k0 * k_grow^j`.
    Binomial {
        k0: usize,
        k_grow: usize,
    },
}

impl FilterFamily {
    pub fn name(&self) -> &'static str {
        match self {
            FilterFamily::Haar => "haar",
            FilterFamily::Fft { .. } => "fft",
            FilterFamily::Ema { .. } => "ema",
            FilterFamily::Dog { .. } => "dog",
            FilterFamily::Binomial { .. } => "binomial",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFilterSpec", into = "RawFilterSpec")]
pub struct FilterSpec {
    pub family: FilterFamily,
    pub bands: usize,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec::haar(6)
    }
}

impl FilterSpec {
    pub fn haar(bands: usize) -> Self {
        FilterSpec {
            family: FilterFamily::Haar,
            bands,
        }
    }

    pub fn fft(bands: usize) -> Self {
        FilterSpec {
            family: FilterFamily::Fft {
                edges: FftEdges::Dyadic,
            },
            bands,
        }
    }

    pub fn ema(bands: usize) -> Self {
        FilterSpec {
            family: FilterFamily::Ema { tau0: 8.0, grow: 3.0 },
            bands,
        }
    }

    pub fn dog(bands: usize) -> Self {
        FilterSpec {
            family: FilterFamily::Dog {
                sigma0: 1.0,
                ratio: 1.6,
            },
            bands,
        }
    }

    pub fn binomial(bands: usize) -> Self {
        FilterSpec {
            family: FilterFamily::Binomial { k0: 3, k_grow: 2 },
            bands,
        }
    }

    /// The family with its default band count and parameters.
    pub fn default_for(family: &str) -> Result<Self> {
        Ok(match family {
            "haar" => FilterSpec::haar(6),
            "fft" => FilterSpec::fft(4),
            "ema" => FilterSpec::ema(4),
            "dog" => FilterSpec::dog(6),
            "binomial" => FilterSpec::binomial(4),
            other => {
                return Err(PrismError::config(format!(
                    "unknown filter family {other:?} (expected haar, fft, ema, dog or binomial)"
                )))
            }
        })
    }

    /// Shortest segment this bank accepts.
    pub fn min_len(&self) -> usize {
        match self.family {
            FilterFamily::Haar => 1usize << (self.bands.saturating_sub(1)).min(62),
            _ => 2,
        }
        .max(if self.bands == 1 { 1 } else { 2 })
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands == 0 {
            return Err(PrismError::config("filter needs at least one band"));
        }
        if self.bands > 24 {
            return Err(PrismError::config(format!(
                "{} bands is more than supported (24)",
                self.bands
            )));
        }
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(PrismError::config(format!(
                    "filter parameter {name} must be positive, got {v}"
                )))
            }
        };
        match self.family {
            FilterFamily::Haar | FilterFamily::Fft { .. } => Ok(()),
            FilterFamily::Ema { tau0, grow } => {
                positive("tau0", tau0)?;
                positive("grow", grow)
            }
            FilterFamily::Dog { sigma0, ratio } => {
                positive("sigma0", sigma0)?;
                positive("ratio", ratio)
            }
            FilterFamily::Binomial { k0, k_grow } => {
                if k0 == 0 || k_grow == 0 {
                    return Err(PrismError::config("binomial k0 and k_grow must be at least 1"));
                }
                let top = (k0 as f64) * (k_grow as f64).powi(self.bands.saturating_sub(2) as i32);
                if top > 1e5 {
                    return Err(PrismError::config(format!("binomial order {top} too large")));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(K={})", self.family.name(), self.bands)
    }
}

/// Flat serialized form: `family = "ema"`, `bands = 4`, `tau0 = 8.0`, ...
/// Missing fields take the family defaults.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilterSpec {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    bands: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<FftEdges>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grow: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k0: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_grow: Option<usize>,
}

impl TryFrom<RawFilterSpec> for FilterSpec {
    type Error = PrismError;

    fn try_from(raw: RawFilterSpec) -> Result<Self> {
        let mut spec = FilterSpec::default_for(&raw.family)?;
        if let Some(k) = raw.bands {
            spec.bands = k;
        }
        let foreign = |name: &str, present: bool| {
            if present {
                Err(PrismError::config(format!(
                    "field {name} does not apply to family {}",
                    raw.family
                )))
            } else {
                Ok(())
            }
        };
        match &mut spec.family {
            FilterFamily::Haar => {}
            FilterFamily::Fft { edges } => {
                if let Some(e) = raw.edges {
                    *edges = e;
                }
            }
            FilterFamily::Ema { tau0, grow } => {
                *tau0 = raw.tau0.unwrap_or(*tau0);
                *grow = raw.grow.unwrap_or(*grow);
            }
            FilterFamily::Dog { sigma0, ratio } => {
                *sigma0 = raw.sigma0.unwrap_or(*sigma0);
                *ratio = raw.ratio.unwrap_or(*ratio);
            }
            FilterFamily::Binomial { k0, k_grow } => {
                *k0 = raw.k0.unwrap_or(*k0);
                *k_grow = raw.k_grow.unwrap_or(*k_grow);
            }
        }
        let fam = spec.family.name();
        foreign("edges", raw.edges.is_some() && fam != "fft")?;
        foreign("tau0/grow", (raw.tau0.is_some() || raw.grow.is_some()) && fam != "ema")?;
        foreign(
            "sigma0/ratio",
            (raw.sigma0.is_some() || raw.ratio.is_some()) && fam != "dog",
        )?;
        foreign(
            "k0/k_grow",
            (raw.k0.is_some() || raw.k_grow.is_some()) && fam != "binomial",
        )?;
        spec.validate()?;
        Ok(spec)
    }
}

impl From<FilterSpec> for RawFilterSpec {
    fn from(spec: FilterSpec) -> Self {
        let mut raw = RawFilterSpec {
            family: spec.family.name().to_string(),
            bands: Some(spec.bands),
            ..Default::default()
        };
        match spec.family {
            FilterFamily::Haar => {}
            FilterFamily::Fft { edges } => raw.edges = Some(edges),
            FilterFamily::Ema { tau0, grow } => {
                raw.tau0 = Some(tau0);
                raw.grow = Some(grow);
            }
            FilterFamily::Dog { sigma0, ratio } => {
                raw.sigma0 = Some(sigma0);
                raw.ratio = Some(ratio);
            }
            FilterFamily::Binomial { k0, k_grow } => {
                raw.k0 = Some(k0);
                raw.k_grow = Some(k_grow);
            }
        }
        raw
    }
}

/// Whole-sample symmetric extension: `x[-i] = x[i]`, `x[L-1+i] = x[L-1-i]`.
pub fn mirror_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let r = i.rem_euclid(period);
    if r < len as isize {
        r as usize
    } else {
        (period - r) as usize
    }
}

/// FIR kernel applied as `s[t] = Σ_i taps[i] · x[mirror(t + i - offset)]`.
#[derive(Clone, Debug)]
struct Kernel {
    taps: Vec<f64>,
    offset: usize,
}

impl Kernel {
    fn flat(n: usize) -> Self {
        Kernel {
            taps: vec![1.0 / n as f64; n],
            offset: n / 2,
        }
    }

    fn gaussian(sigma: f64) -> Self {
        let radius = (4.0 * sigma).ceil() as usize;
        let mut taps: Vec<f64> = (0..=2 * radius)
            .map(|i| {
                let d = i as f64 - radius as f64;
                (-d * d / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= total);
        Kernel { taps, offset: radius }
    }

    /// Coefficients `C(n, i) / 2^n`, built by repeated `[1/2, 1/2]` smoothing.
    fn binomial(order: usize) -> Self {
        let mut taps = vec![1.0];
        for _ in 0..order {
            let mut next = vec![0.0; taps.len() + 1];
            for (i, &t) in taps.iter().enumerate() {
                next[i] += 0.5 * t;
                next[i + 1] += 0.5 * t;
            }
            taps = next;
        }
        let offset = taps.len() / 2;
        Kernel { taps, offset }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let len = x.len();
        let reach_ok = |t: usize| t >= self.offset && t + self.taps.len() - self.offset <= len;
        for (t, o) in out.iter_mut().enumerate() {
            let start = t as isize - self.offset as isize;
            *o = if reach_ok(t) {
                let window = &x[start as usize..start as usize + self.taps.len()];
                window.iter().zip(&self.taps).map(|(a, b)| a * b).sum()
            } else {
                self.taps
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w * x[mirror_index(start + i as isize, len)])
                    .sum()
            };
        }
    }
}

enum Smoother {
    Identity,
    Conv(Vec<Kernel>),
    /// Smoothing factors per level.
    Ema(Vec<f64>),
    Fft {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
        band_of_bin: Vec<usize>,
    },
}

/// A filter bank bound to one segment length.
pub struct FilterBank {
    spec: FilterSpec,
    len: usize,
    smoother: Smoother,
    adjoint: OnceLock<Tensor>,
}

impl fmt::Debug for FilterBank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FilterBank")
            .field("spec", &self.spec)
            .field("len", &self.len)
            .finish()
    }
}

/// Band index (0 = finest) of FFT bin `bin` in a length-`len` transform.
pub fn fft_band_of_bin(bin: usize, len: usize, bands: usize, edges: FftEdges) -> usize {
    let folded = bin.min(len - bin) as f64 / len as f64; // in [0, 0.5]
    match edges {
        FftEdges::Dyadic => {
            let mut lower = 0.25;
            for k in 0..bands - 1 {
                if folded >= lower {
                    return k;
                }
                lower /= 2.0;
            }
            bands - 1
        }
        FftEdges::Equal => {
            let from_top = ((0.5 - folded) / 0.5 * bands as f64).floor() as usize;
            from_top.min(bands - 1)
        }
    }
}

impl FilterBank {
    pub fn new(spec: &FilterSpec, len: usize) -> Result<Self> {
        spec.validate()?;
        if len < spec.min_len() {
            return Err(PrismError::config(format!(
                "{spec} needs segments of at least {} samples, got {len}",
                spec.min_len()
            )));
        }
        let levels = spec.bands - 1;
        let smoother = if levels == 0 {
            Smoother::Identity
        } else {
            match spec.family {
                FilterFamily::Haar => Smoother::Conv((0..levels).map(|j| Kernel::flat(2 << j)).collect()),
                FilterFamily::Dog { sigma0, ratio } => Smoother::Conv(
                    (0..levels)
                        .map(|j| Kernel::gaussian(sigma0 * ratio.powi(j as i32)))
                        .collect(),
                ),
                FilterFamily::Binomial { k0, k_grow } => {
                    let mut order = k0;
                    let mut kernels = Vec::with_capacity(levels);
                    for _ in 0..levels {
                        kernels.push(Kernel::binomial(order));
                        order *= k_grow;
                    }
                    Smoother::Conv(kernels)
                }
                FilterFamily::Ema { tau0, grow } => Smoother::Ema(
                    (0..levels)
                        .map(|j| 1.0 - (-1.0 / (tau0 * grow.powi(j as i32))).exp())
                        .collect(),
                ),
                FilterFamily::Fft { edges } => {
                    let mut planner = FftPlanner::new();
                    Smoother::Fft {
                        forward: planner.plan_fft_forward(len),
                        inverse: planner.plan_fft_inverse(len),
                        band_of_bin: (0..len).map(|i| fft_band_of_bin(i, len, spec.bands, edges)).collect(),
                    }
                }
            }
        };
        Ok(FilterBank {
            spec: spec.clone(),
            len,
            smoother,
            adjoint: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &FilterSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bands(&self) -> usize {
        self.spec.bands
    }

    /// Decomposes one row into `out`, laid out band-major (`K × L`).
    pub fn decompose_row(&self, x: &[f64], out: &mut [f64]) {
        let (len, k) = (self.len, self.spec.bands);
        assert_eq!(x.len(), len, "segment length");
        assert_eq!(out.len(), k * len, "band buffer length");
        match &self.smoother {
            Smoother::Identity => out.copy_from_slice(x),
            Smoother::Conv(kernels) => {
                let mut prev = x.to_vec();
                let mut smooth = vec![0.0; len];
                for (j, kernel) in kernels.iter().enumerate() {
                    kernel.apply(x, &mut smooth);
                    telescope(&prev, &smooth, &mut out[j * len..(j + 1) * len]);
                    std::mem::swap(&mut prev, &mut smooth);
                }
                out[(k - 1) * len..].copy_from_slice(&prev);
            }
            Smoother::Ema(alphas) => {
                let mut prev = x.to_vec();
                let mut smooth = vec![0.0; len];
                for (j, &alpha) in alphas.iter().enumerate() {
                    smooth[0] = x[0];
                    for t in 1..len {
                        smooth[t] = smooth[t - 1] + alpha * (x[t] - smooth[t - 1]);
                    }
                    telescope(&prev, &smooth, &mut out[j * len..(j + 1) * len]);
                    std::mem::swap(&mut prev, &mut smooth);
                }
                out[(k - 1) * len..].copy_from_slice(&prev);
            }
            Smoother::Fft {
                forward,
                inverse,
                band_of_bin,
            } => {
                let mut spectrum: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
                forward.process(&mut spectrum);
                let mut buf = vec![Complex::new(0.0, 0.0); len];
                for band in 0..k {
                    for (i, b) in buf.iter_mut().enumerate() {
                        *b = if band_of_bin[i] == band {
                            spectrum[i]
                        } else {
                            Complex::new(0.0, 0.0)
                        };
                    }
                    inverse.process(&mut buf);
                    let scale = 1.0 / len as f64;
                    for (o, b) in out[band * len..(band + 1) * len].iter_mut().zip(&buf) {
                        *o = b.re * scale;
                    }
                }
            }
        }
    }

    /// Dense `(K·L) × L` matrix of the linear map, built from impulses.
    pub fn matrix(&self) -> &Tensor {
        self.adjoint.get_or_init(|| {
            let (len, k) = (self.len, self.spec.bands);
            let mut m = Tensor::zeros(&[k * len, len]);
            let mut impulse = vec![0.0; len];
            let mut column = vec![0.0; k * len];
            for i in 0..len {
                impulse[i] = 1.0;
                self.decompose_row(&impulse, &mut column);
                impulse[i] = 0.0;
                for (r, &v) in column.iter().enumerate() {
                    m.data_mut()[r * len + i] = v;
                }
            }
            m
        })
    }

    /// Decomposes every row of a `[.., L]` tensor into `[.., K, L]`.
    pub fn decompose_rows(&self, x: &Tensor) -> Result<Tensor> {
        if x.last_dim() != self.len {
            return Err(PrismError::shape(format!(
                "bank expects length {}, got {:?}",
                self.len,
                x.shape()
            )));
        }
        let k = self.spec.bands;
        let mut data = vec![0.0; x.len() * k];
        for (row, out) in x.rows().zip(data.chunks_exact_mut(k * self.len)) {
            self.decompose_row(row, out);
        }
        let mut shape = x.shape().to_vec();
        shape.insert(shape.len() - 1, k);
        Tensor::new(shape, data)
    }

    /// Tape op: `[.., L]` → `[.., K, L]`. The backward pass applies the
    /// transpose of the same linear map.
    pub fn decompose_var(self: &Arc<Self>, tape: &mut Tape, x: Var) -> Result<Var> {
        let value = self.decompose_rows(tape.value(x))?;
        let bank = Arc::clone(self);
        Ok(tape.custom(
            &[x],
            value,
            Box::new(move |ctx| {
                let m = bank.matrix();
                let (kl, len) = (m.shape()[0], m.shape()[1]);
                let rows = ctx.inputs[0].row_count();
                let mut g = Tensor::zeros(ctx.inputs[0].shape());
                gemm(
                    rows,
                    kl,
                    len,
                    1.0,
                    ctx.grad.data(),
                    false,
                    m.data(),
                    false,
                    0.0,
                    g.data_mut(),
                );
                vec![Some(g)]
            }),
        ))
    }
}

fn check_band_weights(bands: &Tensor, weights: &Tensor) -> Result<(usize, usize)> {
    let bs = bands.shape();
    if bs.len() < 2 || weights.shape() != &bs[..bs.len() - 1] {
        return Err(PrismError::shape(format!(
            "weights {:?} do not match bands {:?}",
            weights.shape(),
            bs
        )));
    }
    Ok((bs[bs.len() - 2], bs[bs.len() - 1]))
}

/// Tape op: `[.., K, L]` bands and `[.., K]` weights → `[.., L]` weighted sum.
pub fn recombine_var(tape: &mut Tape, bands: Var, weights: Var) -> Result<Var> {
    let (bv, wv) = (tape.value(bands), tape.value(weights));
    let (k, len) = check_band_weights(bv, wv)?;
    let rows = wv.len() / k;
    let mut out = vec![0.0; rows * len];
    for r in 0..rows {
        let dst = &mut out[r * len..(r + 1) * len];
        for band in 0..k {
            let w = wv.data()[r * k + band];
            let src = bv.row(r * k + band);
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    let mut shape = bv.shape().to_vec();
    shape.remove(shape.len() - 2);
    let value = Tensor::new(shape, out)?;
    Ok(tape.custom(
        &[bands, weights],
        value,
        Box::new(move |ctx| {
            let (b, w) = (ctx.inputs[0], ctx.inputs[1]);
            let gb = ctx.needs[0].then(|| {
                let mut gb = Tensor::zeros(b.shape());
                for r in 0..rows {
                    let g = ctx.grad.row(r);
                    for band in 0..k {
                        let wk = w.data()[r * k + band];
                        for (d, s) in gb.row_mut(r * k + band).iter_mut().zip(g) {
                            *d = wk * s;
                        }
                    }
                }
                gb
            });
            let gw = ctx.needs[1].then(|| {
                let mut gw = Tensor::zeros(w.shape());
                for r in 0..rows {
                    let g = ctx.grad.row(r);
                    for band in 0..k {
                        gw.data_mut()[r * k + band] = b.row(r * k + band).iter().zip(g).map(|(x, y)| x * y).sum();
                    }
                }
                gw
            });
            vec![gb, gw]
        }),
    ))
}

/// Tape op: scales band `k` of every row by its weight, keeping bands apart.
pub fn scale_bands_var(tape: &mut Tape, bands: Var, weights: Var) -> Result<Var> {
    let (bv, wv) = (tape.value(bands), tape.value(weights));
    check_band_weights(bv, wv)?;
    let mut value = bv.clone();
    for (row, &w) in value.data_mut().chunks_exact_mut(bv.last_dim()).zip(wv.data()) {
        row.iter_mut().for_each(|v| *v *= w);
    }
    Ok(tape.custom(
        &[bands, weights],
        value,
        Box::new(|ctx| {
            let (b, w) = (ctx.inputs[0], ctx.inputs[1]);
            let len = b.last_dim();
            let gb = ctx.needs[0].then(|| {
                let mut gb = ctx.grad.clone();
                for (row, &wk) in gb.data_mut().chunks_exact_mut(len).zip(w.data()) {
                    row.iter_mut().for_each(|v| *v *= wk);
                }
                gb
            });
            let gw = ctx.needs[1].then(|| {
                let data = b
                    .rows()
                    .zip(ctx.grad.rows())
                    .map(|(x, g)| x.iter().zip(g).map(|(a, c)| a * c).sum())
                    .collect();
                Tensor::new(w.shape().to_vec(), data).expect("shape")
            });
            vec![gb, gw]
        }),
    ))
}

/// Tape op: band `k` of a `[R, K, L]` tensor as `[R, L]`.
pub fn select_band_var(tape: &mut Tape, bands: Var, k: usize) -> Result<Var> {
    let bv = tape.value(bands);
    let shape = bv.shape().to_vec();
    if shape.len() != 3 || k >= shape[1] {
        return Err(PrismError::shape(format!("cannot select band {k} of {shape:?}")));
    }
    let (rows, kk, len) = (shape[0], shape[1], shape[2]);
    let mut data = Vec::with_capacity(rows * len);
    for r in 0..rows {
        data.extend_from_slice(bv.row(r * kk + k));
    }
    let value = Tensor::new(vec![rows, len], data)?;
    Ok(tape.custom(
        &[bands],
        value,
        Box::new(move |ctx| {
            let mut g = Tensor::zeros(&[rows, kk, len]);
            for r in 0..rows {
                g.row_mut(r * kk + k).copy_from_slice(ctx.grad.row(r));
            }
            vec![Some(g)]
        }),
    ))
}

fn telescope(prev: &[f64], smooth: &[f64], out: &mut [f64]) {
    for ((o, p), s) in out.iter_mut().zip(prev).zip(smooth) {
        *o = p - s;
    }
}

/// `K` bands of an `L × C` segment, each `L × C`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandSet {
    pub bands: Vec<Tensor>,
    pub spec: FilterSpec,
}

impl BandSet {
    pub fn len(&self) -> usize {
        self.bands.first().map_or(0, |b| b.shape()[0])
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> usize {
        self.bands.first().map_or(0, |b| b.shape()[1])
    }

    /// Σ_k bands[k]; equals the decomposed segment.
    pub fn sum(&self) -> Tensor {
        let mut total = Tensor::zeros(self.bands[0].shape());
        for b in &self.bands {
            total.add_assign(b);
        }
        total
    }
}

/// Decomposes an `L × C` segment channel by channel.
pub fn decompose(segment: &Tensor, spec: &FilterSpec) -> Result<BandSet> {
    if segment.shape().len() != 2 {
        return Err(PrismError::shape(format!(
            "segment must be L×C, got {:?}",
            segment.shape()
        )));
    }
    let (len, channels) = (segment.shape()[0], segment.shape()[1]);
    let bank = FilterBank::new(spec, len)?;
    let k = spec.bands;
    let mut bands = vec![Tensor::zeros(&[len, channels]); k];
    let mut column = vec![0.0; len];
    let mut out = vec![0.0; k * len];
    for c in 0..channels {
        for (t, v) in column.iter_mut().enumerate() {
            *v = segment.at(t, c);
        }
        bank.decompose_row(&column, &mut out);
        for (band, values) in bands.iter_mut().zip(out.chunks_exact(len)) {
            for (t, &v) in values.iter().enumerate() {
                band.set(t, c, v);
            }
        }
    }
    Ok(BandSet {
        bands,
        spec: spec.clone(),
    })
}

/// `out[t][c] = Σ_k weights[k][c] · bands[k][t][c]`.
pub fn recombine(bands: &BandSet, weights: &Tensor) -> Result<Tensor> {
    let k = bands.bands.len();
    let channels = bands.channels();
    if weights.shape() != [k, channels] {
        return Err(PrismError::shape(format!(
            "weights {:?} do not match {k} bands × {channels} channels",
            weights.shape()
        )));
    }
    let mut out = Tensor::zeros(bands.bands[0].shape());
    for (band_idx, band) in bands.bands.iter().enumerate() {
        for t in 0..bands.len() {
            for c in 0..channels {
                let v = out.at(t, c) + weights.at(band_idx, c) * band.at(t, c);
                out.set(t, c, v);
            }
        }
    }
    Ok(out)
}
