//! Numerical free-particle propagation of the two wavepackets.
//!
//! The two-particle state is a sum of two product states, so only the two
//! one-particle packets are evolved; the joint density is assembled from
//! their products. Two exact spectral schemes are used:
//!
//! * `KSpace`: multiply by `exp(−i k² t / 2m)` in wavenumber space. Output
//!   lives on the input grid, which must still contain the spread packet.
//! * `Fresnel`: evaluate the free propagator kernel as a single chirped FFT,
//!   mapping the input grid (spacing `dx`) onto a scaled output grid with
//!   spacing `π Δ / (N dx)`. This reaches the far field without a grid wide
//!   enough to hold both the initial and the spread packet.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::WavepacketConfig;
use crate::error::{invalid, Error, Result};
use crate::exchange::ExchangeSign;
use crate::internal::{overlap, InternalState};

const NORM_TOLERANCE: f64 = 1e-8;
/// Relative density below which a packet tail counts as negligible.
const TAIL: f64 = 1e-12;

/// One-dimensional sampling grid for each particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    /// Input spacing; defaults to `ε/4`.
    pub spacing: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 2048,
            spacing: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Propagator {
    KSpace,
    Fresnel,
}

/// Joint density on the square grid `coords × coords`, row-major in `x1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDensityGrid {
    pub coords: Vec<f64>,
    pub density: Vec<f64>,
    pub spacing: f64,
    pub method: Propagator,
    /// `∫∫ density` on the output grid.
    pub norm: f64,
    /// `|∫∫ density − ∫∫ initial density|`.
    pub norm_drift: f64,
}

impl JointDensityGrid {
    pub fn points(&self) -> usize {
        self.coords.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.density[i * self.coords.len() + j]
    }
}

fn centered_grid(n: usize, h: f64) -> Vec<f64> {
    let half = (n / 2) as f64;
    (0..n).map(|j| (j as f64 - half) * h).collect()
}

fn fft(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    plan.process(data);
}

/// Relative density `exp(−2ε²d²/(ε⁴ + Δ²))` of a spread packet at
/// distance `d` from its centre.
fn tail(cfg: &WavepacketConfig, d: f64) -> f64 {
    (-2.0 * cfg.epsilon().powi(2) * d * d / cfg.denom()).exp()
}

fn evolve_kspace(initial: &[Complex64], dx: f64, delta: f64) -> Vec<Complex64> {
    let n = initial.len();
    let mut data = initial.to_vec();
    fft(&mut data, false);
    let dk = TAU / (n as f64 * dx);
    for (j, z) in data.iter_mut().enumerate() {
        let k = if j < n / 2 { j as f64 } else { j as f64 - n as f64 } * dk;
        // t/2m = Δ/4
        *z *= Complex64::from_polar(1.0, -k * k * delta / 4.0);
    }
    fft(&mut data, true);
    let scale = 1.0 / n as f64;
    data.iter_mut().for_each(|z| *z *= scale);
    data
}

/// `ψ(y) = sqrt(1/(iπΔ)) e^{i y²/Δ} ∫ e^{−2i x y/Δ} [e^{i x²/Δ} ψ₀(x)] dx`
/// with the integral done by the trapezoid rule as one DFT. Requires
/// `N % 4 == 0` so the centring phases reduce to `(−1)^{j + l}`.
fn evolve_fresnel(initial: &[Complex64], xs: &[f64], dx: f64, ys: &[f64], delta: f64) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = initial
        .iter()
        .zip(xs)
        .enumerate()
        .map(|(j, (&psi, &x))| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            psi * Complex64::from_polar(sign, x * x / delta)
        })
        .collect();
    fft(&mut data, false);
    let pref = Complex64::from_polar(1.0 / (PI * delta).sqrt(), -PI / 4.0) * dx;
    data.iter_mut().zip(ys).enumerate().for_each(|(l, (z, &y))| {
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        *z *= pref * Complex64::from_polar(sign, y * y / delta);
    });
    data
}

fn one_particle_norm(values: &[Complex64], h: f64) -> f64 {
    values.iter().map(|z| z.norm_sqr()).sum::<f64>() * h
}

/// Assembles `|ψ|²` with `ψ = p[A(x1)B(x2) d_A⊗d_B + η B(x1)A(x2) d_B⊗d_A]`.
fn assemble(a: &[Complex64], b: &[Complex64], pref2: f64, cross: f64) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let (a1, b1) = (a[i], b[i]);
        for (j, d) in row.iter_mut().enumerate() {
            let direct = a1 * b[j];
            let exchanged = b1 * a[j];
            *d = pref2 * (direct.norm_sqr() + exchanged.norm_sqr() + cross * (direct * exchanged.conj()).re);
        }
    });
    out
}

/// Evolves both wavepackets numerically and returns the tagged joint
/// density on the output grid.
pub fn propagate_numeric(
    cfg: &WavepacketConfig,
    sign: ExchangeSign,
    d_a: &InternalState,
    d_b: &InternalState,
    grid: &GridSpec,
) -> Result<JointDensityGrid> {
    let n = grid.points;
    if n < 16 || !n.is_multiple_of(4) {
        return Err(invalid(
            "grid",
            format!("{n} points; need a multiple of 4, at least 16"),
        ));
    }
    let eps = cfg.epsilon();
    let x0 = cfg.x0();
    let delta = cfg.delta();
    let dx = grid.spacing.unwrap_or(eps / 4.0);
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(invalid("grid", format!("spacing {dx} must be positive")));
    }

    // initial packets: spectrum exp(−k²ε²/4) must vanish at Nyquist, and the
    // packets must sit well inside the grid
    let nyquist = PI / dx;
    let leakage = (-nyquist * nyquist * eps * eps / 4.0).exp();
    if leakage > TAIL {
        return Err(Error::GridTooCoarse {
            drift: leakage,
            tolerance: TAIL,
        });
    }
    let xs = centered_grid(n, dx);
    let half_in = (n / 2 - 1) as f64 * dx;
    if (-2.0 * (half_in - x0).powi(2) / (eps * eps)).exp() > TAIL || half_in <= x0 {
        return Err(Error::GridTooSmall(format!(
            "input half-width {half_in} does not contain packets at ±{x0}"
        )));
    }

    let method = if half_in > x0 && tail(cfg, half_in - x0) <= TAIL {
        Propagator::KSpace
    } else {
        Propagator::Fresnel
    };

    let g0 = |c: f64| -> Vec<Complex64> {
        xs.iter()
            .map(|&x| Complex64::new((-(x - c).powi(2) / (eps * eps)).exp(), 0.0))
            .collect()
    };
    let (a0, b0) = (g0(x0), g0(-x0));

    let (coords, h, a, b) = match method {
        Propagator::KSpace => {
            let (a, b) = rayon::join(|| evolve_kspace(&a0, dx, delta), || evolve_kspace(&b0, dx, delta));
            (xs.clone(), dx, a, b)
        }
        Propagator::Fresnel => {
            // the chirp e^{i x²/Δ} and the packet spectrum must both be
            // resolved on the input grid
            let reach = x0 + 8.0 * eps;
            let bandwidth = 2.0 * reach / delta + 8.0 / eps;
            if bandwidth > nyquist {
                return Err(Error::GridTooSmall(format!(
                    "Δ = {delta}: spread packet exceeds the grid but the chirp is unresolved"
                )));
            }
            let dy = PI * delta / (n as f64 * dx);
            let ys = centered_grid(n, dy);
            let half_out = (n / 2 - 1) as f64 * dy;
            if tail(cfg, half_out - x0) > TAIL {
                return Err(Error::GridTooSmall(format!(
                    "output half-width {half_out} does not contain the spread packets"
                )));
            }
            let (a, b) = rayon::join(
                || evolve_fresnel(&a0, &xs, dx, &ys, delta),
                || evolve_fresnel(&b0, &xs, dx, &ys, delta),
            );
            (ys, dy, a, b)
        }
    };

    // fringes must be resolved wherever they are visible
    let fringe_contrast = (-4.0 * eps * eps * x0 * x0 / cfg.denom()).exp();
    if fringe_contrast > TAIL && cfg.fringe_period() / h < 8.0 {
        return Err(invalid(
            "grid",
            format!("fringe period {} spans fewer than 8 points of {h}", cfg.fringe_period()),
        ));
    }

    let pref2 = 1.0 / (PI * eps * eps);
    let s2 = overlap(d_a, d_b).modulus().powi(2);
    let cross = 2.0 * sign.eta() * s2;

    // ∫∫ of the product terms factorizes; the cross term is tiny but kept
    let norm_of = |a: &[Complex64], b: &[Complex64], h: f64| {
        let ab: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<Complex64>() * h;
        pref2 * (2.0 * one_particle_norm(a, h) * one_particle_norm(b, h) + cross * ab.norm_sqr())
    };
    let initial_norm = norm_of(&a0, &b0, dx);
    let density = assemble(&a, &b, pref2, cross);
    let norm = density.par_iter().sum::<f64>() * h * h;
    let drift = (norm - initial_norm)
        .abs()
        .max((norm_of(&a, &b, h) - initial_norm).abs());
    if drift > NORM_TOLERANCE {
        return Err(Error::GridTooCoarse {
            drift,
            tolerance: NORM_TOLERANCE,
        });
    }

    Ok(JointDensityGrid {
        coords,
        density,
        spacing: h,
        method,
        norm,
        norm_drift: drift,
    })
}
