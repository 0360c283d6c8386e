//! Distinguishability-visibility complementarity checks for both
//! experiments.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exchange::ExchangeSign;
use crate::hbt::{extract_visibility, FringePattern, WavepacketConfig};
use crate::hom::hom_visibility;
use crate::internal::{distinguishability, overlap, InternalState};
use crate::sampling::{estimate_visibility, sample_hbt};

/// Residual allowed for the closed-form pipelines.
pub const EXACT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "HOM")]
    Hom,
    #[serde(rename = "HBT-analytic")]
    HbtAnalytic,
    #[serde(rename = "HBT-sampled")]
    HbtSampled,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Hom => "HOM",
            Experiment::HbtAnalytic => "HBT-analytic",
            Experiment::HbtSampled => "HBT-sampled",
        })
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hom" => Ok(Experiment::Hom),
            "hbt" | "hbt-analytic" => Ok(Experiment::HbtAnalytic),
            "hbt-sampled" | "sampled" => Ok(Experiment::HbtSampled),
            other => Err(format!("unknown experiment `{other}` (hom, hbt-analytic, hbt-sampled)")),
        }
    }
}

/// Parameters used by the HBT pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualitySettings {
    pub wavepackets: WavepacketConfig,
    pub sign: ExchangeSign,
    /// Events per point for the sampled pipeline.
    pub events: usize,
    pub seed: u64,
    pub periods: usize,
    pub points_per_period: usize,
}

impl Default for DualitySettings {
    fn default() -> Self {
        Self {
            wavepackets: WavepacketConfig::far_field(),
            sign: ExchangeSign::Boson,
            events: 100_000,
            seed: 0,
            periods: 4,
            points_per_period: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityRecord {
    pub overlap_modulus: f64,
    pub distinguishability: f64,
    pub visibility: f64,
    pub sum: f64,
    pub residual: f64,
    pub experiment: Experiment,
    /// Bootstrap standard error of the visibility (sampled pipeline only).
    pub std_error: Option<f64>,
}

impl DualityRecord {
    fn new(s: f64, d: f64, v: f64, experiment: Experiment, std_error: Option<f64>) -> Self {
        Self {
            overlap_modulus: s,
            distinguishability: d,
            visibility: v,
            sum: d + v,
            residual: (d + v - 1.0).abs(),
            experiment,
            std_error,
        }
    }

    /// Residual within `1e-12` for closed-form pipelines, or within three
    /// standard errors for sampled ones.
    pub fn holds(&self) -> bool {
        match self.std_error {
            Some(se) => self.residual <= 3.0 * se,
            None => self.residual <= EXACT_TOLERANCE,
        }
    }
}

/// Computes `D` from the internal states and `V` from the chosen pipeline.
pub fn duality_check(
    d_a: &InternalState,
    d_b: &InternalState,
    experiment: Experiment,
    settings: &DualitySettings,
) -> Result<DualityRecord> {
    let s = overlap(d_a, d_b).modulus();
    let d = distinguishability(d_a, d_b);
    let record = match experiment {
        Experiment::Hom => DualityRecord::new(s, d, hom_visibility(d_a, d_b), experiment, None),
        Experiment::HbtAnalytic => {
            let pattern = FringePattern::from_states(
                &settings.wavepackets,
                settings.sign,
                d_a,
                d_b,
                settings.periods,
                settings.points_per_period,
            )?;
            DualityRecord::new(s, d, extract_visibility(&pattern)?, experiment, None)
        }
        Experiment::HbtSampled => {
            let batch = sample_hbt(&settings.wavepackets, settings.sign, s, settings.events, settings.seed)?;
            let est = estimate_visibility(&batch, &settings.wavepackets)?;
            DualityRecord::new(s, d, est.visibility, experiment, Some(est.std_error))
        }
    };
    Ok(record)
}

/// One record per overlap modulus on a uniform grid over `[0, 1]`, with
/// `d_A = (1, 0)` and a real `d_B`. Sampled points use seed `seed + i`.
pub fn duality_sweep(
    n_points: usize,
    experiment: Experiment,
    settings: &DualitySettings,
) -> Result<Vec<DualityRecord>> {
    if n_points < 2 {
        return Err(invalid("points", "need at least two sweep points"));
    }
    let d_a = InternalState::zero();
    let mut records = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let s = i as f64 / (n_points - 1) as f64;
            let d_b = InternalState::with_overlap(s)?;
            let point = DualitySettings {
                seed: settings.seed.wrapping_add(i as u64),
                ..*settings
            };
            duality_check(&d_a, &d_b, experiment, &point)
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.overlap_modulus.total_cmp(&b.overlap_modulus));
    Ok(records)
}
