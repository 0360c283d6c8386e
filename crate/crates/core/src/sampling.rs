//! Event-level Monte Carlo for both experiments, and a fringe-visibility
//! estimator that works on the resulting counts.
//!
//! Events are drawn in fixed-size chunks. Chunk `i` uses stream `i` of a
//! ChaCha generator seeded with the master seed, so batches are identical
//! no matter how the chunks are scheduled across threads.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exchange::ExchangeSign;
use crate::hbt::WavepacketConfig;
use crate::hom::{bunching_probability, coincidence_probability_with};
use crate::internal::InternalState;

const CHUNK: usize = 1 << 16;
/// Stream reserved for bootstrap resampling.
const BOOTSTRAP_STREAM: u64 = u64::MAX;
pub const MIN_EVENTS_FOR_ESTIMATE: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HomOutcome {
    #[serde(rename = "coincidence")]
    Coincidence,
    #[serde(rename = "bunched-D1")]
    BunchedD1,
    #[serde(rename = "bunched-D2")]
    BunchedD2,
}

impl HomOutcome {
    pub fn label(self) -> &'static str {
        match self {
            HomOutcome::Coincidence => "coincidence",
            HomOutcome::BunchedD1 => "bunched-D1",
            HomOutcome::BunchedD2 => "bunched-D2",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "coincidence" => Some(HomOutcome::Coincidence),
            "bunched-D1" => Some(HomOutcome::BunchedD1),
            "bunched-D2" => Some(HomOutcome::BunchedD2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Events {
    Hom(Vec<HomOutcome>),
    /// Detector positions `(x1, x2)`.
    Hbt(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventBatch {
    pub seed: u64,
    pub events: Events,
    /// Fraction of proposals accepted (HBT only).
    pub acceptance_rate: Option<f64>,
}

impl EventBatch {
    pub fn count(&self) -> usize {
        match &self.events {
            Events::Hom(e) => e.len(),
            Events::Hbt(e) => e.len(),
        }
    }

    /// Fraction of HOM events that were coincidences.
    pub fn coincidence_fraction(&self) -> Option<f64> {
        match &self.events {
            Events::Hom(e) if !e.is_empty() => {
                let hits = e.iter().filter(|o| **o == HomOutcome::Coincidence).count();
                Some(hits as f64 / e.len() as f64)
            }
            _ => None,
        }
    }

    pub fn hbt_events(&self) -> Option<&[(f64, f64)]> {
        match &self.events {
            Events::Hbt(e) => Some(e),
            Events::Hom(_) => None,
        }
    }
}

fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn chunk_sizes(n: usize) -> Vec<usize> {
    (0..n.div_ceil(CHUNK)).map(|i| CHUNK.min(n - i * CHUNK)).collect()
}

/// Bernoulli-style HOM outcomes for bosons.
pub fn sample_hom(d_a: &InternalState, d_b: &InternalState, n: usize, seed: u64) -> Result<EventBatch> {
    sample_hom_with(d_a, d_b, ExchangeSign::Boson, n, seed)
}

pub fn sample_hom_with(
    d_a: &InternalState,
    d_b: &InternalState,
    sign: ExchangeSign,
    n: usize,
    seed: u64,
) -> Result<EventBatch> {
    if n == 0 {
        return Err(invalid("events", "need at least one event"));
    }
    let p_c = coincidence_probability_with(d_a, d_b, sign);
    let p_b = bunching_probability(d_a, d_b, sign);
    let chunks: Vec<Vec<HomOutcome>> = chunk_sizes(n)
        .into_par_iter()
        .enumerate()
        .map(|(i, size)| {
            let mut rng = chunk_rng(seed, i as u64);
            (0..size)
                .map(|_| {
                    let u: f64 = rng.random();
                    if u < p_c {
                        HomOutcome::Coincidence
                    } else if u < p_c + p_b {
                        HomOutcome::BunchedD1
                    } else {
                        HomOutcome::BunchedD2
                    }
                })
                .collect()
        })
        .collect();
    Ok(EventBatch {
        seed,
        events: Events::Hom(chunks.concat()),
        acceptance_rate: None,
    })
}

/// Draws `(x1, x2)` from the normalized joint coincidence density by
/// rejection against `(1 + s²)·envelope·cosh`, which is an equal mixture of
/// two Gaussian products (one per emission alternative).
pub fn sample_hbt(cfg: &WavepacketConfig, sign: ExchangeSign, s: f64, n: usize, seed: u64) -> Result<EventBatch> {
    if n == 0 {
        return Err(invalid("events", "need at least one event"));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid("overlap", format!("{s} outside [0, 1]")));
    }
    let eps2 = cfg.epsilon().powi(2);
    let denom = eps2 * eps2 + cfg.delta().powi(2);
    let spread = Normal::new(0.0, (denom / (4.0 * eps2)).sqrt()).map_err(|e| invalid("wavepacket", e.to_string()))?;
    let x0 = cfg.x0();
    let k = cfg.fringe_wavenumber();
    let kappa = cfg.cosh_rate();
    let coherence = sign.eta() * s * s;
    let bound = 1.0 + s * s;

    let chunks: Vec<Result<(Vec<(f64, f64)>, u64)>> = chunk_sizes(n)
        .into_par_iter()
        .enumerate()
        .map(|(i, size)| {
            let mut rng = chunk_rng(seed, i as u64);
            let mut out = Vec::with_capacity(size);
            let mut proposals = 0u64;
            let limit = 100 * size as u64 + 1000;
            while out.len() < size {
                if proposals >= limit {
                    return Err(Error::PoorAcceptance {
                        rate: out.len() as f64 / proposals as f64,
                    });
                }
                proposals += 1;
                let c = if rng.random::<bool>() { x0 } else { -x0 };
                let x1 = c + spread.sample(&mut rng);
                let x2 = -c + spread.sample(&mut rng);
                let u = x1 - x2;
                let ratio = (1.0 + coherence * (k * u).cos() / (kappa * u).cosh()) / bound;
                if rng.random::<f64>() < ratio {
                    out.push((x1, x2));
                }
            }
            Ok((out, proposals))
        })
        .collect();

    let mut events = Vec::with_capacity(n);
    let mut proposals = 0u64;
    for chunk in chunks {
        let (e, p) = chunk?;
        events.extend(e);
        proposals += p;
    }
    let rate = n as f64 / proposals as f64;
    if rate < 0.01 {
        return Err(Error::PoorAcceptance { rate });
    }
    Ok(EventBatch {
        seed,
        events: Events::Hbt(events),
        acceptance_rate: Some(rate),
    })
}

/// Histogram of `x1 − x2` with the fitted fringe visibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramEstimate {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub visibility: f64,
    pub std_error: f64,
    /// Fitted fringe phase `φ`.
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    pub bins_per_period: usize,
    pub periods: usize,
    pub bootstrap_resamples: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            bins_per_period: 50,
            periods: 3,
            bootstrap_resamples: 200,
        }
    }
}

/// Per-bin fit basis: each column is a bin average of `cos(ku)`, `sin(ku)`
/// weighted by the fringe-free profile and divided by that profile's bin
/// integral. The last field is the profile integral itself.
struct Basis {
    cos: Vec<f64>,
    sin: Vec<f64>,
    weight: Vec<f64>,
}

fn simpson(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    const N: usize = 16;
    let h = (b - a) / N as f64;
    let mut acc = f(a) + f(b);
    for i in 1..N {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

impl Basis {
    fn new(cfg: &WavepacketConfig, edges: &[f64]) -> Self {
        let eps2 = cfg.epsilon().powi(2);
        let denom = eps2 * eps2 + cfg.delta().powi(2);
        let k = cfg.fringe_wavenumber();
        let kappa = cfg.cosh_rate();
        // marginal over x1 + x2 leaves exp(−ε²u²/(ε⁴ + Δ²)) in u
        let profile = |u: f64| (-eps2 * u * u / denom).exp();
        let mut cos = Vec::with_capacity(edges.len() - 1);
        let mut sin = Vec::with_capacity(edges.len() - 1);
        let mut weight = Vec::with_capacity(edges.len() - 1);
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let base = simpson(a, b, |u| profile(u) * (kappa * u).cosh());
            cos.push(simpson(a, b, |u| profile(u) * (k * u).cos()) / base);
            sin.push(simpson(a, b, |u| profile(u) * (k * u).sin()) / base);
            weight.push(base);
        }
        Self { cos, sin, weight }
    }

    /// Least-squares fit of `y = A + B_c cos + B_s sin`; returns
    /// `(V, φ)` with `V = sqrt(B_c² + B_s²)/A`.
    fn fit(&self, counts: &[u64]) -> Result<(f64, f64)> {
        let mut m = [[0.0f64; 3]; 3];
        let mut r = [0.0f64; 3];
        for i in 0..counts.len() {
            let y = counts[i] as f64 / self.weight[i];
            let row = [1.0, self.cos[i], self.sin[i]];
            for p in 0..3 {
                r[p] += row[p] * y;
                for q in 0..3 {
                    m[p][q] += row[p] * row[q];
                }
            }
        }
        let [amp, bc, bs] = solve3(m, r).ok_or_else(|| Error::FitFailed("singular normal equations".into()))?;
        if !(amp > 0.0) || !bc.is_finite() || !bs.is_finite() {
            return Err(Error::FitFailed(format!("non-physical fit: A = {amp}")));
        }
        Ok((bc.hypot(bs) / amp, (-bs).atan2(bc)))
    }
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 * (1.0 + m[col][col].abs()) {
            return None;
        }
        m.swap(col, pivot);
        r.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for c in col..3 {
                m[row][c] -= f * m[col][c];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|c| m[row][c] * x[c]).sum();
        x[row] = (r[row] - tail) / m[row][row];
    }
    Some(x)
}

/// Bins `x1 − x2` over the given edges; the extra final slot counts events
/// outside the range.
fn histogram(events: &[(f64, f64)], edges: &[f64]) -> Vec<u64> {
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    let width = (hi - lo) / bins as f64;
    events
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut counts = vec![0u64; bins + 1];
            for &(x1, x2) in chunk {
                let u = x1 - x2;
                let slot = if u >= lo && u < hi {
                    (((u - lo) / width) as usize).min(bins - 1)
                } else {
                    bins
                };
                counts[slot] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; bins + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Visibility estimate with the default binning and bootstrap settings.
pub fn estimate_visibility(batch: &EventBatch, cfg: &WavepacketConfig) -> Result<HistogramEstimate> {
    estimate_visibility_with(batch, cfg, &EstimatorOptions::default())
}

/// Bins `x1 − x2` over the central fringe periods, removes the fringe-free
/// profile analytically and fits `A(1 + V cos(ku + φ))` with `k` fixed.
/// The standard error comes from multinomial bootstrap resampling of the
/// binned counts, which is equivalent to resampling events.
pub fn estimate_visibility_with(
    batch: &EventBatch,
    cfg: &WavepacketConfig,
    opts: &EstimatorOptions,
) -> Result<HistogramEstimate> {
    let events = batch
        .hbt_events()
        .ok_or_else(|| invalid("batch", "visibility estimation needs HBT events"))?;
    if events.len() < MIN_EVENTS_FOR_ESTIMATE {
        return Err(Error::TooFewEvents {
            needed: MIN_EVENTS_FOR_ESTIMATE,
            got: events.len(),
        });
    }
    if opts.bins_per_period < 4 || opts.periods == 0 || opts.bootstrap_resamples < 2 {
        return Err(invalid(
            "estimator",
            "need ≥ 4 bins per period, ≥ 1 period, ≥ 2 resamples",
        ));
    }
    let k = cfg.fringe_wavenumber();
    if !(k > 0.0) {
        return Err(invalid("delta", "no fringes at zero flight time"));
    }
    let period = TAU / k;
    let bins = opts.bins_per_period * opts.periods;
    let half = 0.5 * period * opts.periods as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| -half + i as f64 * (2.0 * half / bins as f64))
        .collect();

    let all = histogram(events, &edges);
    let counts = all[..bins].to_vec();
    let basis = Basis::new(cfg, &edges);
    let (visibility, phase) = basis.fit(&counts)?;

    // multinomial bootstrap over the bins plus the out-of-range slot
    let n = events.len() as u64;
    let mut rng = chunk_rng(batch.seed, BOOTSTRAP_STREAM);
    let mut replicas = Vec::with_capacity(opts.bootstrap_resamples);
    let mut resampled = vec![0u64; bins];
    for _ in 0..opts.bootstrap_resamples {
        let mut remaining = n;
        let mut mass_left = n;
        for (slot, &c) in all.iter().enumerate().take(bins) {
            let draw = if remaining == 0 || c == 0 {
                0
            } else {
                let p = (c as f64 / mass_left as f64).min(1.0);
                Binomial::new(remaining, p)
                    .map_err(|e| Error::FitFailed(e.to_string()))?
                    .sample(&mut rng)
            };
            resampled[slot] = draw;
            remaining -= draw;
            mass_left -= c;
        }
        if let Ok((v, _)) = basis.fit(&resampled) {
            replicas.push(v);
        }
    }
    if replicas.len() < 2 {
        return Err(Error::FitFailed("bootstrap replicas did not converge".into()));
    }
    let mean = replicas.iter().sum::<f64>() / replicas.len() as f64;
    let var = replicas.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (replicas.len() - 1) as f64;

    Ok(HistogramEstimate {
        bin_edges: edges,
        counts,
        visibility,
        std_error: var.sqrt(),
        phase,
    })
}
