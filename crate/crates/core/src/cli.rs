//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::duality::{duality_sweep, DualitySettings, Experiment};
use crate::error::{Error, Result};
use crate::exchange::ExchangeSign;
use crate::hbt::{extract_visibility, FringePattern, WavepacketConfig};
use crate::hom::{coincidence_probability_with, delay_scan, eraser_joint_probability, hom_visibility};
use crate::internal::{distinguishability, make_state, overlap, InternalState};
use crate::report::{emit_delay_scan, emit_duality, emit_events, emit_pattern, format15, OutputFormat};
use crate::sampling::{estimate_visibility, sample_hbt, sample_hom_with, MIN_EVENTS_FOR_ESTIMATE};

#[derive(Debug, Parser)]
#[command(
    name = "twofold",
    version,
    about = "Distinguishability and two-particle interference in HOM and HBT experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hong-Ou-Mandel coincidence probability, dip visibility and delay scan.
    Hom {
        #[command(flatten)]
        common: CommonArgs,
        /// Temporal width of each particle's mode.
        #[arg(long, default_value_t = 1.0)]
        sigma_t: f64,
        /// Largest delay in the scan (default 5·sigma_t).
        #[arg(long)]
        tau_max: Option<f64>,
        #[arg(long, default_value_t = 101)]
        tau_points: usize,
    },
    /// Hanbury Brown-Twiss coincidence fringes and visibility.
    Hbt {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        pattern: PatternArgs,
    },
    /// Post-selected (quantum eraser) fringes for both experiments.
    Eraser {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        pattern: PatternArgs,
        /// Bloch angles of the internal outcome selected at D1 / x1
        /// (default: equal superposition of the two tags).
        #[arg(long, requires = "e1_phi")]
        e1_theta: Option<f64>,
        #[arg(long, requires = "e1_theta")]
        e1_phi: Option<f64>,
        /// Bloch angles of the outcome selected at D2 / x2 (default: same as e1).
        #[arg(long, requires = "e2_phi")]
        e2_theta: Option<f64>,
        #[arg(long, requires = "e2_theta")]
        e2_phi: Option<f64>,
    },
    /// Sweep the overlap modulus and check D + V = 1.
    Duality {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// hom, hbt-analytic or hbt-sampled.
        #[arg(long, default_value = "hom")]
        experiment: Experiment,
    },
    /// Draw detection events and write them out.
    Sample {
        #[command(flatten)]
        common: CommonArgs,
        /// hom or hbt.
        #[arg(long, default_value = "hbt")]
        target: SampleTarget,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SampleTarget {
    Hom,
    Hbt,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Internal-state overlap modulus |⟨d_A|d_B⟩|.
    #[arg(long, conflicts_with_all = ["theta", "phi"])]
    pub overlap: Option<f64>,
    /// Bloch polar angle of d_B (d_A is the north pole).
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "theta")]
    pub phi: Option<f64>,
    /// Exchange sign: +1 for bosons, -1 for fermions.
    #[arg(long, default_value = "+1", allow_hyphen_values = true)]
    pub eta: ExchangeSign,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 10.0)]
    pub x0: f64,
    /// Spreading parameter Δ = 2t/m (default 200).
    #[arg(long, conflicts_with_all = ["time", "mass"])]
    pub delta: Option<f64>,
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long, requires = "time")]
    pub mass: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub events: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct PatternArgs {
    /// Fringe periods covered by the pattern.
    #[arg(long, default_value_t = 4)]
    pub periods: usize,
    #[arg(long, default_value_t = 64)]
    pub points_per_period: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExperimentKind {
    Hom,
    Hbt,
    Eraser,
    Duality,
    Sample,
}

/// Subcommand-specific settings after validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Extra {
    Hom {
        sigma_t: f64,
        taus: Vec<f64>,
    },
    Pattern {
        periods: usize,
        points_per_period: usize,
    },
    Eraser {
        periods: usize,
        points_per_period: usize,
        e1: InternalState,
        e2: InternalState,
    },
    Duality {
        points: usize,
        experiment: Experiment,
    },
    Sample {
        target: SampleTarget,
    },
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub d_a: InternalState,
    pub d_b: InternalState,
    pub wavepackets: WavepacketConfig,
    pub sign: ExchangeSign,
    pub events: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub extra: Extra,
}

fn config_error(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl CommonArgs {
    fn d_b(&self, required: bool) -> Result<InternalState> {
        match (self.overlap, self.theta) {
            (Some(s), None) => InternalState::with_overlap(s),
            (None, Some(theta)) => {
                if !theta.is_finite() || !self.phi.unwrap_or(0.0).is_finite() {
                    return Err(config_error("theta", "angles must be finite"));
                }
                Ok(make_state(theta, self.phi.unwrap_or(0.0)))
            }
            (None, None) if !required => Ok(InternalState::zero()),
            (None, None) => Err(config_error("overlap", "give either --overlap or --theta/--phi")),
            (Some(_), Some(_)) => Err(config_error("overlap", "--overlap conflicts with --theta/--phi")),
        }
    }

    fn wavepackets(&self) -> Result<WavepacketConfig> {
        match self.time {
            Some(t) => WavepacketConfig::new(self.x0, self.eps, self.mass.unwrap_or(1.0), t),
            None => WavepacketConfig::from_delta(self.x0, self.eps, self.delta.unwrap_or(200.0)),
        }
    }
}

impl TryFrom<Cli> for RunConfig {
    type Error = Error;

    fn try_from(cli: Cli) -> Result<Self> {
        let (experiment, common, extra) = match cli.command {
            Command::Hom {
                common,
                sigma_t,
                tau_max,
                tau_points,
            } => {
                if !(sigma_t > 0.0 && sigma_t.is_finite()) {
                    return Err(config_error("sigma-t", format!("{sigma_t} must be positive")));
                }
                if tau_points < 2 {
                    return Err(config_error("tau-points", "need at least two delays"));
                }
                let tau_max = tau_max.unwrap_or(5.0 * sigma_t);
                let taus = (0..tau_points)
                    .map(|i| tau_max * i as f64 / (tau_points - 1) as f64)
                    .collect();
                (ExperimentKind::Hom, common, Extra::Hom { sigma_t, taus })
            }
            Command::Hbt { common, pattern } => (
                ExperimentKind::Hbt,
                common,
                Extra::Pattern {
                    periods: pattern.periods,
                    points_per_period: pattern.points_per_period,
                },
            ),
            Command::Eraser {
                common,
                pattern,
                e1_theta,
                e1_phi,
                e2_theta,
                e2_phi,
            } => {
                let d_a = InternalState::zero();
                let d_b = common.d_b(true)?;
                let e1 = match (e1_theta, e1_phi) {
                    (Some(t), Some(p)) => make_state(t, p),
                    _ => InternalState::superposition(&d_a, &d_b, 1.0)?,
                };
                let e2 = match (e2_theta, e2_phi) {
                    (Some(t), Some(p)) => make_state(t, p),
                    _ => e1,
                };
                (
                    ExperimentKind::Eraser,
                    common,
                    Extra::Eraser {
                        periods: pattern.periods,
                        points_per_period: pattern.points_per_period,
                        e1,
                        e2,
                    },
                )
            }
            Command::Duality {
                common,
                points,
                experiment,
            } => {
                if points < 2 {
                    return Err(config_error("points", "need at least two sweep points"));
                }
                (ExperimentKind::Duality, common, Extra::Duality { points, experiment })
            }
            Command::Sample { common, target } => (ExperimentKind::Sample, common, Extra::Sample { target }),
        };
        let needs_state = experiment != ExperimentKind::Duality;
        if let Extra::Pattern {
            periods,
            points_per_period,
        }
        | Extra::Eraser {
            periods,
            points_per_period,
            ..
        } = extra
        {
            if periods == 0 || points_per_period < 4 || points_per_period % 2 != 0 {
                return Err(config_error(
                    "points-per-period",
                    "need ≥ 1 period and an even count ≥ 4",
                ));
            }
        }
        if common.events == 0 {
            return Err(config_error("events", "need at least one event"));
        }
        Ok(RunConfig {
            experiment,
            d_a: InternalState::zero(),
            d_b: common.d_b(needs_state)?,
            wavepackets: common.wavepackets()?,
            sign: common.eta,
            events: common.events,
            seed: common.seed,
            out: common.out.clone(),
            format: common.format,
            extra,
        })
    }
}

fn write_if(out: &Option<PathBuf>, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => write(path),
        None => Ok(()),
    }
}

/// Runs one configured experiment and returns the one-line summary.
pub fn run(config: &RunConfig) -> Result<String> {
    let (d_a, d_b) = (&config.d_a, &config.d_b);
    let s = overlap(d_a, d_b).modulus();
    let d = distinguishability(d_a, d_b);
    match &config.extra {
        Extra::Hom { sigma_t, taus } => {
            let p_c = coincidence_probability_with(d_a, d_b, config.sign);
            let v = hom_visibility(d_a, d_b);
            let scan = delay_scan(d_a, d_b, *sigma_t, taus)?;
            write_if(&config.out, |p| emit_delay_scan(&scan, p, config.format))?;
            Ok(format!(
                "P_C = {}  V = {}  D = {}  D+V = {}",
                format15(p_c),
                format15(v),
                format15(d),
                format15(d + v)
            ))
        }
        Extra::Pattern {
            periods,
            points_per_period,
        } => {
            let pattern =
                FringePattern::from_states(&config.wavepackets, config.sign, d_a, d_b, *periods, *points_per_period)?;
            let v = extract_visibility(&pattern)?;
            write_if(&config.out, |p| emit_pattern(&pattern, p, config.format))?;
            Ok(format!(
                "V = {}  D = {}  D+V = {}  period = {}",
                format15(v),
                format15(d),
                format15(d + v),
                format15(pattern.period)
            ))
        }
        Extra::Eraser {
            periods,
            points_per_period,
            e1,
            e2,
        } => {
            let joint = eraser_joint_probability(d_a, d_b, e1, e2);
            let raw =
                FringePattern::from_states(&config.wavepackets, config.sign, d_a, d_b, *periods, *points_per_period)?;
            let selected = FringePattern::eraser(
                &config.wavepackets,
                config.sign,
                d_a,
                d_b,
                e1,
                e2,
                *periods,
                *points_per_period,
            )?;
            let v_raw = extract_visibility(&raw)?;
            let v_sel = extract_visibility(&selected)?;
            write_if(&config.out, |p| emit_pattern(&selected, p, config.format))?;
            Ok(format!(
                "HOM P(e1@D1, e2@D2) = {}  HBT V raw = {}  HBT V post-selected = {}",
                format15(joint),
                format15(v_raw),
                format15(v_sel)
            ))
        }
        Extra::Duality { points, experiment } => {
            let settings = DualitySettings {
                wavepackets: config.wavepackets,
                sign: config.sign,
                events: config.events,
                seed: config.seed,
                ..DualitySettings::default()
            };
            let records = duality_sweep(*points, *experiment, &settings)?;
            write_if(&config.out, |p| emit_duality(&records, p, config.format))?;
            let worst = records.iter().map(|r| r.residual).fold(0.0, f64::max);
            let held = records.iter().filter(|r| r.holds()).count();
            Ok(format!(
                "{experiment}: {} points  max |D+V-1| = {}  within tolerance: {held}/{}",
                records.len(),
                format15(worst),
                records.len()
            ))
        }
        Extra::Sample { target } => match target {
            SampleTarget::Hom => {
                let batch = sample_hom_with(d_a, d_b, config.sign, config.events, config.seed)?;
                write_if(&config.out, |p| emit_events(&batch, p, config.format))?;
                let frac = batch.coincidence_fraction().unwrap_or(0.0);
                Ok(format!(
                    "events = {}  coincidence fraction = {}  P_C = {}",
                    batch.count(),
                    format15(frac),
                    format15(coincidence_probability_with(d_a, d_b, config.sign))
                ))
            }
            SampleTarget::Hbt => {
                let batch = sample_hbt(&config.wavepackets, config.sign, s, config.events, config.seed)?;
                write_if(&config.out, |p| emit_events(&batch, p, config.format))?;
                let mut line = format!(
                    "events = {}  acceptance = {}",
                    batch.count(),
                    format15(batch.acceptance_rate.unwrap_or(f64::NAN))
                );
                if batch.count() >= MIN_EVENTS_FOR_ESTIMATE {
                    let est = estimate_visibility(&batch, &config.wavepackets)?;
                    line.push_str(&format!(
                        "  V = {} ± {}  D = {}  D+V = {}",
                        format15(est.visibility),
                        format15(est.std_error),
                        format15(d),
                        format15(d + est.visibility)
                    ));
                }
                Ok(line)
            }
        },
    }
}

/// Exit status: 0 success, 1 runtime failure, 2 configuration error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = match RunConfig::try_from(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match run(&config) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
