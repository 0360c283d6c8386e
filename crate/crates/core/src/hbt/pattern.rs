use serde::{Deserialize, Serialize};

use super::{eraser_backgrounds, eraser_weights, hbt_eraser_density, joint_density_analytic, WavepacketConfig};
use crate::error::{invalid, Error, Result};
use crate::exchange::ExchangeSign;
use crate::internal::{overlap, InternalState};

/// Coincidence density sampled along the detector separation `x1 − x2`.
///
/// `corrected` isolates the interference term: the non-interfering
/// background (the two exchange alternatives added incoherently) is
/// subtracted and the remainder divided by twice the geometric mean of the
/// two alternatives, then offset by one. For the ideal pattern this is
/// exactly `1 + η s² cos(k(x1 − x2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringePattern {
    pub separations: Vec<f64>,
    pub densities: Vec<f64>,
    pub corrected: Vec<f64>,
    /// Expected fringe period, used to check the sampled range.
    pub period: f64,
}

impl FringePattern {
    /// Builds a pattern from densities and the two incoherent backgrounds.
    pub fn from_parts(
        separations: Vec<f64>,
        densities: Vec<f64>,
        background: &[(f64, f64)],
        period: f64,
    ) -> Result<Self> {
        if separations.len() != densities.len() || separations.len() != background.len() {
            return Err(invalid("pattern", "column lengths differ"));
        }
        let corrected = densities
            .iter()
            .zip(background)
            .map(|(&d, &(b1, b2))| {
                let scale = 2.0 * (b1 * b2).sqrt();
                if scale > 0.0 {
                    1.0 + (d - b1 - b2) / scale
                } else {
                    1.0
                }
            })
            .collect();
        Self::new(separations, densities, corrected, period)
    }

    pub fn new(separations: Vec<f64>, densities: Vec<f64>, corrected: Vec<f64>, period: f64) -> Result<Self> {
        if separations.len() != densities.len() || separations.len() != corrected.len() {
            return Err(invalid("pattern", "column lengths differ"));
        }
        if densities.iter().any(|d| !(*d >= 0.0)) {
            return Err(invalid("pattern", "densities must be non-negative"));
        }
        Ok(Self {
            separations,
            densities,
            corrected,
            period,
        })
    }

    pub fn len(&self) -> usize {
        self.separations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.separations.is_empty()
    }

    /// Separations aligned to the fringe period, centred on zero.
    fn grid(cfg: &WavepacketConfig, periods: usize, points_per_period: usize) -> Result<Vec<f64>> {
        if points_per_period < 4 || !points_per_period.is_multiple_of(2) {
            return Err(invalid("points_per_period", "need an even count of at least 4"));
        }
        if periods == 0 {
            return Err(invalid("periods", "need at least one period"));
        }
        let period = cfg.fringe_period();
        if !period.is_finite() {
            return Err(invalid("delta", "no fringes at zero flight time"));
        }
        let step = period / points_per_period as f64;
        let half = (periods * points_per_period / 2) as i64;
        Ok((-half..=half).map(|i| i as f64 * step).collect())
    }

    /// Ideal pattern along `x1 = (v + u)/2`, `x2 = (v − u)/2` at `v = 0`.
    pub fn analytic(
        cfg: &WavepacketConfig,
        sign: ExchangeSign,
        s: f64,
        periods: usize,
        points_per_period: usize,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(invalid("overlap", format!("{s} outside [0, 1]")));
        }
        let separations = Self::grid(cfg, periods, points_per_period)?;
        let norm = cfg.normalization(sign, s);
        let mut densities = Vec::with_capacity(separations.len());
        let mut background = Vec::with_capacity(separations.len());
        for &u in &separations {
            let (x1, x2) = (u / 2.0, -u / 2.0);
            densities.push(joint_density_analytic(x1, x2, cfg, sign, s));
            // both alternatives carry unit internal weight once summed over outcomes
            background.push(eraser_backgrounds(x1, x2, cfg, norm, 1.0.into(), 1.0.into()));
        }
        Self::from_parts(separations, densities, &background, cfg.fringe_period())
    }

    /// Pattern for [`analytic`](Self::analytic) taking the internal states.
    pub fn from_states(
        cfg: &WavepacketConfig,
        sign: ExchangeSign,
        d_a: &InternalState,
        d_b: &InternalState,
        periods: usize,
        points_per_period: usize,
    ) -> Result<Self> {
        Self::analytic(cfg, sign, overlap(d_a, d_b).modulus(), periods, points_per_period)
    }

    /// Post-selected pattern: coincidences with internal outcome `e1` at
    /// `x1` and `e2` at `x2`.
    #[allow(clippy::too_many_arguments)]
    pub fn eraser(
        cfg: &WavepacketConfig,
        sign: ExchangeSign,
        d_a: &InternalState,
        d_b: &InternalState,
        e1: &InternalState,
        e2: &InternalState,
        periods: usize,
        points_per_period: usize,
    ) -> Result<Self> {
        let separations = Self::grid(cfg, periods, points_per_period)?;
        let (a, b) = eraser_weights(d_a, d_b, e1, e2);
        let norm = cfg.normalization(sign, overlap(d_a, d_b).modulus());
        let mut densities = Vec::with_capacity(separations.len());
        let mut background = Vec::with_capacity(separations.len());
        for &u in &separations {
            let (x1, x2) = (u / 2.0, -u / 2.0);
            densities.push(hbt_eraser_density(x1, x2, cfg, sign, d_a, d_b, e1, e2));
            background.push(eraser_backgrounds(x1, x2, cfg, norm, a, b));
        }
        Self::from_parts(separations, densities, &background, cfg.fringe_period())
    }
}

/// Vertex of the parabola through three equally spaced samples.
fn refine(y0: f64, y1: f64, y2: f64) -> f64 {
    let curvature = y0 - 2.0 * y1 + y2;
    if curvature == 0.0 {
        return y1;
    }
    let offset = 0.5 * (y0 - y2) / curvature;
    if offset.abs() > 1.0 {
        return y1;
    }
    y1 - 0.25 * (y0 - y2) * offset
}

fn refined(values: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 == values.len() {
        values[i]
    } else {
        refine(values[i - 1], values[i], values[i + 1])
    }
}

/// Walks from `start` in direction `step` while values do not increase.
fn descend(values: &[f64], start: usize, forward: bool) -> Option<usize> {
    let mut i = start;
    loop {
        let next = if forward {
            (i + 1 < values.len()).then(|| i + 1)
        } else {
            i.checked_sub(1)
        };
        match next {
            Some(j) if values[j] <= values[i] => i = j,
            _ => break,
        }
    }
    (i != start).then_some(i)
}

/// Fringe visibility `(I_max − I_min)/(I_max + I_min)` of the corrected
/// channel, using the global maximum and the lower of its adjacent minima.
pub fn extract_visibility(pattern: &FringePattern) -> Result<f64> {
    if pattern.is_empty() {
        return Err(Error::EmptyPattern);
    }
    let first = pattern.separations[0];
    let last = pattern.separations[pattern.len() - 1];
    let span = (last - first).abs();
    if !(pattern.period.is_finite() && span >= pattern.period * (1.0 - 1e-12)) {
        return Err(Error::TooFewFringes {
            span,
            period: pattern.period,
        });
    }
    let c = &pattern.corrected;
    let peak = c
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > c[best] { i } else { best });
    let i_max = refined(c, peak);
    let i_min = [descend(c, peak, false), descend(c, peak, true)]
        .into_iter()
        .flatten()
        .map(|i| refined(c, i))
        .fold(i_max, f64::min);
    if i_max + i_min <= 0.0 {
        return Err(invalid("pattern", "non-positive corrected intensities"));
    }
    Ok(((i_max - i_min) / (i_max + i_min)).clamp(0.0, 1.0))
}
