//! Reference implementations written from the definitions alone, with no
//! calls into the filter, tree, router or model code under test.

#![allow(dead_code)]

use prism_core::filter::{FftEdges, FilterFamily, FilterSpec};
use prism_core::params::ParamStore;
use prism_core::router::RouterMode;
use prism_core::PrismConfig;
use rand::Rng;

/// Reflect an index into `0..len` without repeating the edge sample.
pub fn reflect(i: isize, len: usize) -> usize {
    let n = len as isize;
    if n == 1 {
        return 0;
    }
    let mut i = i;
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i as usize;
        }
    }
}

/// `s[t] = Σ_i taps[i]·x[reflect(t + i − offset)]`.
pub fn fir(x: &[f64], taps: &[f64], offset: usize) -> Vec<f64> {
    (0..x.len())
        .map(|t| {
            taps.iter()
                .enumerate()
                .map(|(i, w)| w * x[reflect(t as isize + i as isize - offset as isize, x.len())])
                .sum()
        })
        .collect()
}

pub fn binomial_taps(n: usize) -> Vec<f64> {
    let mut c = 1.0f64;
    let mut taps = vec![c];
    for i in 1..=n {
        c = c * (n - i + 1) as f64 / i as f64;
        taps.push(c);
    }
    let scale = 2f64.powi(n as i32);
    taps.iter().map(|t| t / scale).collect()
}

pub fn gaussian_taps(sigma: f64) -> (Vec<f64>, usize) {
    let r = (4.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-r..=r)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    (raw.iter().map(|v| v / total).collect(), r as usize)
}

fn telescope(x: &[f64], smooths: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut bands = Vec::new();
    let mut prev = x.to_vec();
    for s in smooths {
        bands.push(prev.iter().zip(&s).map(|(a, b)| a - b).collect());
        prev = s;
    }
    bands.push(prev);
    bands
}

fn dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|f| {
            x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, v)| {
                let a = -std::f64::consts::TAU * (f * t) as f64 / n as f64;
                (re + v * a.cos(), im + v * a.sin())
            })
        })
        .collect()
}

/// Band of an FFT bin: octave `[0.5/2^(k+1), 0.5/2^k]` of the folded
/// frequency in cycles per sample, or `K` equal slices from the top.
pub fn fft_band(bin: usize, n: usize, k: usize, edges: FftEdges) -> usize {
    let f = bin.min(n - bin) as f64 / n as f64;
    match edges {
        FftEdges::Dyadic => {
            let mut band = 0;
            let mut edge = 0.25;
            while band < k - 1 && f < edge {
                band += 1;
                edge *= 0.5;
            }
            band
        }
        FftEdges::Equal => (((0.5 - f) * 2.0 * k as f64) as usize).min(k - 1),
    }
}

/// K bands of `x`, band 0 finest.
pub fn bands(x: &[f64], spec: &FilterSpec) -> Vec<Vec<f64>> {
    let k = spec.bands;
    let levels = k - 1;
    match spec.family {
        FilterFamily::Haar => telescope(
            x,
            (0..levels)
                .map(|j| {
                    let n = 1usize << (j + 1);
                    fir(x, &vec![1.0 / n as f64; n], n / 2)
                })
                .collect(),
        ),
        FilterFamily::Dog { sigma0, ratio } => telescope(
            x,
            (0..levels)
                .map(|j| {
                    let (taps, r) = gaussian_taps(sigma0 * ratio.powi(j as i32));
                    fir(x, &taps, r)
                })
                .collect(),
        ),
        FilterFamily::Binomial { k0, k_grow } => telescope(
            x,
            (0..levels)
                .map(|j| {
                    let taps = binomial_taps(k0 * k_grow.pow(j as u32));
                    let offset = taps.len() / 2;
                    fir(x, &taps, offset)
                })
                .collect(),
        ),
        FilterFamily::Ema { tau0, grow } => telescope(
            x,
            (0..levels)
                .map(|j| {
                    let alpha = 1.0 - (-1.0 / (tau0 * grow.powi(j as i32))).exp();
                    let mut s = vec![x[0]; x.len()];
                    for t in 1..x.len() {
                        s[t] = (1.0 - alpha) * s[t - 1] + alpha * x[t];
                    }
                    s
                })
                .collect(),
        ),
        FilterFamily::Fft { edges } => {
            let n = x.len();
            let spectrum = dft(x);
            (0..k)
                .map(|band| {
                    (0..n)
                        .map(|t| {
                            let mut acc = 0.0;
                            for (f, &(re, im)) in spectrum.iter().enumerate() {
                                if fft_band(f, n, k, edges) == band {
                                    let a = std::f64::consts::TAU * (f * t) as f64 / n as f64;
                                    acc += re * a.cos() - im * a.sin();
                                }
                            }
                            acc / n as f64
                        })
                        .collect()
                })
                .collect()
        }
    }
}

fn param<'a>(store: &'a ParamStore, name: &str) -> &'a [f64] {
    let id = store.id_of(name).unwrap_or_else(|| panic!("missing parameter {name}"));
    store.get(id).data()
}

/// `W2·relu(W1·x + b1) + b2` with weights read by name.
pub fn mlp(store: &ParamStore, prefix: &str, x: &[f64]) -> Vec<f64> {
    let dense = |layer: &str, input: &[f64]| -> Vec<f64> {
        let w = param(store, &format!("{prefix}.{layer}.weight"));
        let b = param(store, &format!("{prefix}.{layer}.bias"));
        b.iter()
            .enumerate()
            .map(|(o, bias)| bias + (0..input.len()).map(|i| w[o * input.len() + i] * input[i]).sum::<f64>())
            .collect()
    };
    let h: Vec<f64> = dense("fc1", x).into_iter().map(|v| v.max(0.0)).collect();
    dense("fc2", &h)
}

pub fn stats(x: &[f64]) -> [f64; 6] {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let max_abs = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d1 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (n - 1.0);
    let d2 = x.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).sum::<f64>() / (n - 2.0);
    [mean, std, max_abs, d1, d2, max_abs / (std + 1e-8)]
}

fn route(cfg: &PrismConfig, store: &ParamStore, level: usize, node: usize, bands: &[Vec<f64>]) -> Vec<f64> {
    let k = bands.len();
    let prefix = match cfg.router.mode {
        RouterMode::Uniform => return vec![1.0 / k as f64; k],
        RouterMode::Passthrough => return vec![1.0; k],
        RouterMode::PerLevel => format!("router.level{level}"),
        RouterMode::SharedAll => "router.shared".to_string(),
        RouterMode::PerNode => format!("router.level{level}.node{node}"),
    };
    let scores: Vec<f64> = bands
        .iter()
        .map(|b| {
            let mut s = stats(b);
            if let Some(c) = cfg.router.crest_clamp {
                s[5] = s[5].min(c);
            }
            mlp(store, &prefix, &s)[0] / cfg.router.temperature
        })
        .collect();
    let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

fn cross_fade(left: &[f64], right: &[f64], o: usize) -> Vec<f64> {
    let l = left.len();
    let mut out = left[..l - o].to_vec();
    for j in 0..o {
        let a = (j + 1) as f64 / (o + 1) as f64;
        out.push((1.0 - a) * left[l - o + j] + a * right[j]);
    }
    out.extend_from_slice(&right[o..]);
    out
}

/// Straight-line forecast for one channel.
pub fn forecast_channel(cfg: &PrismConfig, store: &ParamStore, x: &[f64]) -> Vec<f64> {
    let (o, d, k) = (cfg.overlap, cfg.depth, cfg.filter.bands);
    let mut lens = vec![cfg.context];
    for i in 0..d {
        lens.push((lens[i] + o) / 2);
    }
    // Weighted leaf bands, left to right: leaves[m][k][t].
    let mut leaves: Vec<Vec<Vec<f64>>> = Vec::new();
    if d == 0 {
        let b = bands(x, &cfg.filter);
        let w = route(cfg, store, 0, 0, &b);
        leaves.push(
            b.iter()
                .zip(&w)
                .map(|(band, wk)| band.iter().map(|v| v * wk).collect())
                .collect(),
        );
    } else {
        let mut nodes = vec![x.to_vec()];
        for i in 0..d {
            let child = lens[i + 1];
            let mut next = Vec::new();
            for (j, parent) in nodes.iter().enumerate() {
                let halves = [parent[..child].to_vec(), parent[parent.len() - child..].to_vec()];
                for (s, half) in halves.iter().enumerate() {
                    let b = bands(half, &cfg.filter);
                    let w = route(cfg, store, i + 1, 2 * j + s, &b);
                    if i + 1 < d {
                        next.push((0..child).map(|t| (0..k).map(|kk| w[kk] * b[kk][t]).sum()).collect());
                    } else {
                        leaves.push(
                            b.iter()
                                .zip(&w)
                                .map(|(band, wk)| band.iter().map(|v| v * wk).collect())
                                .collect(),
                        );
                    }
                }
            }
            nodes = next;
        }
    }
    let m_count = leaves.len();
    let chunk = cfg.context / m_count;
    let mut out = vec![0.0; cfg.horizon];
    for kk in 0..k {
        let mut level: Vec<Vec<f64>> = leaves.iter().map(|leaf| leaf[kk].clone()).collect();
        while level.len() > 1 {
            level = level.chunks(2).map(|p| cross_fade(&p[0], &p[1], o)).collect();
        }
        let full = &level[0];
        for m in 0..m_count {
            let y = mlp(
                store,
                &format!("head.seg{m}.band{kk}"),
                &full[m * chunk..(m + 1) * chunk],
            );
            out.iter_mut().zip(&y).for_each(|(a, b)| *a += b);
        }
    }
    out
}

pub fn random_signal(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let mut level = rng.random_range(-2.0..2.0);
    (0..len)
        .map(|_| {
            level += rng.random_range(-0.5..0.5);
            level + rng.random_range(-1.0..1.0)
        })
        .collect()
}

/// The small configuration used by the gradient and oracle checks.
pub fn tiny_config() -> PrismConfig {
    use prism_core::router::RouterConfig;
    PrismConfig {
        context: 32,
        horizon: 8,
        overlap: 0,
        depth: 1,
        filter: FilterSpec::haar(3),
        router: RouterConfig {
            hidden: 4,
            ..Default::default()
        },
        head_hidden: 8,
    }
}
