//! Hanbury Brown-Twiss experiment: two Gaussian wavepackets emitted at
//! `±x0` spread freely and are detected in coincidence at `x1`, `x2`.
//!
//! Natural units throughout (`ħ = 1`). With `Δ = 2t/m` a packet that starts
//! as `exp(−x²/ε²)` evolves into `sqrt(ε²/(ε² + iΔ)) exp(−x²/(ε² + iΔ))`.

mod pattern;
mod propagate;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exchange::ExchangeSign;
use crate::hom::PairVector;
use crate::internal::{overlap, InternalState};

pub use pattern::{extract_visibility, FringePattern};
pub use propagate::{propagate_numeric, GridSpec, JointDensityGrid, Propagator};

/// Source and flight parameters for the two wavepackets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavepacketConfig {
    x0: f64,
    epsilon: f64,
    mass: f64,
    time: f64,
    /// `∫∫ envelope·cosh` over the detector plane.
    incoherent_integral: f64,
    /// `∫∫ envelope·cos` over the detector plane.
    coherent_integral: f64,
}

impl WavepacketConfig {
    /// Sources at `±x0`, initial amplitude width `epsilon`, flight time
    /// `time` for particles of mass `mass`.
    pub fn new(x0: f64, epsilon: f64, mass: f64, time: f64) -> Result<Self> {
        let finite = [x0, epsilon, mass, time].iter().all(|v| v.is_finite());
        if !finite {
            return Err(invalid("wavepacket", "parameters must be finite"));
        }
        if epsilon <= 0.0 {
            return Err(invalid("eps", format!("{epsilon} must be positive")));
        }
        if mass <= 0.0 {
            return Err(invalid("mass", format!("{mass} must be positive")));
        }
        if time < 0.0 {
            return Err(invalid("time", format!("{time} must be non-negative")));
        }
        if x0 <= 0.0 {
            return Err(invalid("x0", format!("{x0} must be positive")));
        }
        if x0 < 3.0 * epsilon {
            return Err(invalid(
                "x0",
                format!("sources at ±{x0} overlap; need x0 ≥ 3ε = {}", 3.0 * epsilon),
            ));
        }
        let mut cfg = Self {
            x0,
            epsilon,
            mass,
            time,
            incoherent_integral: 1.0,
            coherent_integral: 0.0,
        };
        debug_assert!(cfg.source_overlap() < 1e-12);
        let (inc, coh) = cfg.plane_integrals();
        cfg.incoherent_integral = inc;
        cfg.coherent_integral = coh;
        Ok(cfg)
    }

    /// Unit mass, with the flight time chosen to give the requested `Δ`.
    pub fn from_delta(x0: f64, epsilon: f64, delta: f64) -> Result<Self> {
        Self::new(x0, epsilon, 1.0, delta / 2.0)
    }

    /// `ε = 1`, `x0 = 10`, `Δ = 200`: the envelope is flat across many
    /// fringes.
    pub fn far_field() -> Self {
        Self::from_delta(10.0, 1.0, 200.0).expect("far-field defaults are valid")
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `Δ = 2ħt/m`.
    pub fn delta(&self) -> f64 {
        2.0 * self.time / self.mass
    }

    /// `σ² = ε² + Δ²/ε²`.
    pub fn sigma_sq(&self) -> f64 {
        let e2 = self.epsilon * self.epsilon;
        e2 + self.delta().powi(2) / e2
    }

    fn denom(&self) -> f64 {
        self.epsilon.powi(4) + self.delta().powi(2)
    }

    /// Wavenumber of the fringes in `x1 − x2`.
    pub fn fringe_wavenumber(&self) -> f64 {
        4.0 * self.delta() * self.x0 / self.denom()
    }

    /// Rate of the `cosh` factor in `x1 − x2`.
    pub fn cosh_rate(&self) -> f64 {
        4.0 * self.epsilon.powi(2) * self.x0 / self.denom()
    }

    /// Fringe period in `x1 − x2`; infinite at `t = 0`.
    pub fn fringe_period(&self) -> f64 {
        TAU / self.fringe_wavenumber()
    }

    /// `|⟨g(x − x0)|g(x + x0)⟩|²` for the two initial packets.
    pub fn source_overlap(&self) -> f64 {
        (-4.0 * self.x0 * self.x0 / (self.epsilon * self.epsilon)).exp()
    }

    /// `exp(−2ε²(x1² + x2² + 2x0²)/(ε⁴ + Δ²))`, as a log.
    fn log_envelope(&self, x1: f64, x2: f64) -> f64 {
        -2.0 * self.epsilon.powi(2) * (x1 * x1 + x2 * x2 + 2.0 * self.x0 * self.x0) / self.denom()
    }

    /// `envelope · cosh(κ(x1 − x2))`, evaluated without overflow.
    fn envelope_cosh(&self, x1: f64, x2: f64) -> f64 {
        let a = self.log_envelope(x1, x2);
        let k = self.cosh_rate() * (x1 - x2);
        0.5 * ((a + k).exp() + (a - k).exp())
    }

    fn envelope(&self, x1: f64, x2: f64) -> f64 {
        self.log_envelope(x1, x2).exp()
    }

    /// Normalization constant `N` of the joint density, from quadrature.
    pub fn normalization(&self, sign: ExchangeSign, s: f64) -> f64 {
        1.0 / (self.incoherent_integral + sign.eta() * s * s * self.coherent_integral)
    }

    /// Trapezoid quadrature of `envelope·cosh` and `envelope·cos` over the
    /// plane, in rotated coordinates `u = x1 − x2`, `v = x1 + x2`.
    fn plane_integrals(&self) -> (f64, f64) {
        let denom = self.denom();
        let a = self.epsilon.powi(2) / denom;
        let sd = (1.0 / (2.0 * a)).sqrt();
        let k = self.fringe_wavenumber();
        let kappa = self.cosh_rate();
        let mut h = sd / 4.0;
        if k > 0.0 {
            h = h.min(TAU / k / 16.0);
        }
        // e^{−a u²} cosh(κu) peaks at |u| = κ/2a = 2x0
        let half_width = 2.0 * self.x0 + 14.0 * sd;
        let n = (half_width / h).ceil() as i64;
        let offset = -4.0 * self.epsilon.powi(2) * self.x0.powi(2) / denom;

        let mut v_sum = 0.0;
        let mut u_cosh = 0.0;
        let mut u_cos = 0.0;
        for i in -n..=n {
            let u = i as f64 * h;
            let g = -a * u * u;
            v_sum += g.exp();
            u_cosh += 0.5 * ((g + kappa * u + offset).exp() + (g - kappa * u + offset).exp());
            u_cos += (g + offset).exp() * (k * u).cos();
        }
        // dx1 dx2 = du dv / 2
        let jac = 0.5 * h * h;
        (jac * v_sum * u_cosh, jac * v_sum * u_cos)
    }
}

/// Initial packet `exp(−(x − center)²/ε²)` after free flight.
pub fn evolved_gaussian(x: f64, center: f64, cfg: &WavepacketConfig) -> Complex64 {
    let w = Complex64::new(cfg.epsilon * cfg.epsilon, cfg.delta());
    let d = x - center;
    (Complex64::new(cfg.epsilon * cfg.epsilon, 0.0) / w).sqrt() * (-(d * d) / w).exp()
}

fn tagged_pair(
    a1: Complex64,
    b2: Complex64,
    b1: Complex64,
    a2: Complex64,
    sign: ExchangeSign,
    d_a: &InternalState,
    d_b: &InternalState,
    prefactor: f64,
) -> PairVector {
    let [a0, a1_] = d_a.amplitudes();
    let [b0, b1_] = d_b.amplitudes();
    let ab = [a0 * b0, a0 * b1_, a1_ * b0, a1_ * b1_];
    let ba = [b0 * a0, b0 * a1_, b1_ * a0, b1_ * a1_];
    let first = a1 * b2 * prefactor;
    let second = b1 * a2 * prefactor * sign.eta();
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for i in 0..4 {
        out[i] = first * ab[i] + second * ba[i];
    }
    out
}

/// Tagged two-particle amplitude at emission: particle 1 from the source
/// at `+x0` carrying `d_A`, particle 2 from `−x0` carrying `d_B`, plus the
/// exchanged term weighted by `η`.
pub fn initial_wavefunction(
    x1: f64,
    x2: f64,
    cfg: &WavepacketConfig,
    sign: ExchangeSign,
    d_a: &InternalState,
    d_b: &InternalState,
) -> PairVector {
    let g = |x: f64, c: f64| Complex64::new((-(x - c).powi(2) / cfg.epsilon.powi(2)).exp(), 0.0);
    let pref = 1.0 / (PI.sqrt() * cfg.epsilon);
    tagged_pair(
        g(x1, cfg.x0),
        g(x2, -cfg.x0),
        g(x1, -cfg.x0),
        g(x2, cfg.x0),
        sign,
        d_a,
        d_b,
        pref,
    )
}

/// Tagged amplitude at the detectors after free flight.
pub fn evolved_wavefunction(
    x1: f64,
    x2: f64,
    cfg: &WavepacketConfig,
    sign: ExchangeSign,
    d_a: &InternalState,
    d_b: &InternalState,
) -> PairVector {
    let g = |x: f64, c: f64| evolved_gaussian(x, c, cfg);
    let pref = 1.0 / (PI.sqrt() * cfg.epsilon);
    tagged_pair(
        g(x1, cfg.x0),
        g(x2, -cfg.x0),
        g(x1, -cfg.x0),
        g(x2, cfg.x0),
        sign,
        d_a,
        d_b,
        pref,
    )
}

/// Joint coincidence density
/// `N · envelope · [cosh(κ(x1 − x2)) + η s² cos(k(x1 − x2))]`.
pub fn joint_density_analytic(x1: f64, x2: f64, cfg: &WavepacketConfig, sign: ExchangeSign, s: f64) -> f64 {
    let u = x1 - x2;
    let fringe = sign.eta() * s * s * cfg.envelope(x1, x2) * (cfg.fringe_wavenumber() * u).cos();
    (cfg.normalization(sign, s) * (cfg.envelope_cosh(x1, x2) + fringe)).max(0.0)
}

/// Like [`joint_density_analytic`] but taking the internal states.
pub fn joint_density(
    x1: f64,
    x2: f64,
    cfg: &WavepacketConfig,
    sign: ExchangeSign,
    d_a: &InternalState,
    d_b: &InternalState,
) -> f64 {
    joint_density_analytic(x1, x2, cfg, sign, overlap(d_a, d_b).modulus())
}

/// The two exchange amplitudes `a = ⟨e1|d_A⟩⟨e2|d_B⟩`, `b = ⟨e1|d_B⟩⟨e2|d_A⟩`
/// selected by post-selecting internal outcomes `e1` at `x1` and `e2` at `x2`.
pub(crate) fn eraser_weights(
    d_a: &InternalState,
    d_b: &InternalState,
    e1: &InternalState,
    e2: &InternalState,
) -> (Complex64, Complex64) {
    (e1.inner(d_a) * e2.inner(d_b), e1.inner(d_b) * e2.inner(d_a))
}

/// The two direct/exchange spatial terms `exp(−c[(x1 ∓ x0)² + (x2 ± x0)²])`
/// with `c = 1/(ε² + iΔ)`.
fn spatial_terms(x1: f64, x2: f64, cfg: &WavepacketConfig) -> (Complex64, Complex64) {
    let c = Complex64::new(cfg.epsilon * cfg.epsilon, cfg.delta()).inv();
    let x0 = cfg.x0;
    let t1 = (-c * ((x1 - x0).powi(2) + (x2 + x0).powi(2))).exp();
    let t2 = (-c * ((x1 + x0).powi(2) + (x2 - x0).powi(2))).exp();
    (t1, t2)
}

/// Joint density of a coincidence with internal outcome `e1` at `x1` and
/// `e2` at `x2`. Summed over an orthonormal basis for `e1`, `e2` this gives
/// [`joint_density`].
#[allow(clippy::too_many_arguments)]
pub fn hbt_eraser_density(
    x1: f64,
    x2: f64,
    cfg: &WavepacketConfig,
    sign: ExchangeSign,
    d_a: &InternalState,
    d_b: &InternalState,
    e1: &InternalState,
    e2: &InternalState,
) -> f64 {
    let (a, b) = eraser_weights(d_a, d_b, e1, e2);
    let (t1, t2) = spatial_terms(x1, x2, cfg);
    let s = overlap(d_a, d_b).modulus();
    0.5 * cfg.normalization(sign, s) * (a * t1 + sign.eta() * b * t2).norm_sqr()
}

/// Non-interfering parts `(N/2)|a|²|T1|²` and `(N/2)|b|²|T2|²` of the
/// eraser density.
pub(crate) fn eraser_backgrounds(
    x1: f64,
    x2: f64,
    cfg: &WavepacketConfig,
    norm: f64,
    a: Complex64,
    b: Complex64,
) -> (f64, f64) {
    let a_env = cfg.log_envelope(x1, x2);
    let k = cfg.cosh_rate() * (x1 - x2);
    (
        0.5 * norm * a.norm_sqr() * (a_env + k).exp(),
        0.5 * norm * b.norm_sqr() * (a_env - k).exp(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::internal::make_state;

    fn states(s: f64) -> (InternalState, InternalState) {
        (InternalState::zero(), InternalState::with_overlap(s).unwrap())
    }

    fn pair_norm(v: &PairVector) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum()
    }

    #[test]
    fn config_validation() {
        assert!(WavepacketConfig::new(10.0, 0.0, 1.0, 1.0).is_err());
        assert!(WavepacketConfig::new(10.0, 1.0, 0.0, 1.0).is_err());
        assert!(WavepacketConfig::new(10.0, 1.0, 1.0, -1.0).is_err());
        assert!(WavepacketConfig::new(-1.0, 1.0, 1.0, 1.0).is_err());
        assert!(WavepacketConfig::new(2.0, 1.0, 1.0, 1.0).is_err());
        assert!(WavepacketConfig::new(f64::NAN, 1.0, 1.0, 1.0).is_err());
        let cfg = WavepacketConfig::far_field();
        assert_eq!(cfg.delta(), 200.0);
        assert!((cfg.sigma_sq() - 40001.0).abs() < 1e-9);
        assert!(cfg.source_overlap() < 1e-12);
    }

    #[test]
    fn fringe_period_far_field() {
        let cfg = WavepacketConfig::far_field();
        let expected = TAU * 40001.0 / (4.0 * 200.0 * 10.0);
        assert!((cfg.fringe_period() - expected).abs() < 1e-12);
        assert!((cfg.fringe_period() - 31.42).abs() < 0.01);
    }

    #[test]
    fn quadrature_normalization_matches_closed_form() {
        // The incoherent part integrates to πσ²/2, so N = 2/(πσ²).
        for cfg in [
            WavepacketConfig::far_field(),
            WavepacketConfig::from_delta(10.0, 1.0, 0.0).unwrap(),
            WavepacketConfig::from_delta(4.0, 0.7, 3.0).unwrap(),
        ] {
            let n = cfg.normalization(ExchangeSign::Boson, 1.0);
            let closed = 2.0 / (PI * cfg.sigma_sq());
            assert!((n / closed - 1.0).abs() < 1e-10, "{n} vs {closed}");
        }
    }

    #[test]
    fn fermion_pauli_zero() {
        let cfg = WavepacketConfig::far_field();
        let peak = joint_density_analytic(0.0, 0.0, &cfg, ExchangeSign::Boson, 1.0);
        for x in [-30.0, 0.0, 7.5, 100.0] {
            let d = joint_density_analytic(x, x, &cfg, ExchangeSign::Fermion, 1.0);
            assert!(d <= 1e-12 * peak, "{d}");
        }
    }

    #[test]
    fn distinguishable_particles_have_no_fringes() {
        let cfg = WavepacketConfig::far_field();
        for (x1, x2) in [(3.0, -4.0), (10.0, 40.0), (-25.0, 1.0)] {
            let d = joint_density_analytic(x1, x2, &cfg, ExchangeSign::Boson, 0.0);
            let bare = cfg.normalization(ExchangeSign::Boson, 0.0) * cfg.envelope_cosh(x1, x2);
            assert!((d - bare).abs() <= 1e-15 * bare);
            let f = joint_density_analytic(x1, x2, &cfg, ExchangeSign::Fermion, 0.0);
            assert_eq!(d, f);
        }
    }

    #[test]
    fn exchange_symmetry() {
        let cfg = WavepacketConfig::far_field();
        for sign in [ExchangeSign::Boson, ExchangeSign::Fermion] {
            for (x1, x2) in [(3.0, -4.0), (10.0, 40.0), (-25.0, 1.0)] {
                let d12 = joint_density_analytic(x1, x2, &cfg, sign, 0.6);
                let d21 = joint_density_analytic(x2, x1, &cfg, sign, 0.6);
                assert!((d12 - d21).abs() <= 1e-14 * d12.max(1e-300));
            }
        }
    }

    #[test]
    fn initial_wavefunction_shape() {
        let cfg = WavepacketConfig::far_field();
        let da = InternalState::zero();
        let db = da.orthogonal();
        let center = initial_wavefunction(10.0, -10.0, &cfg, ExchangeSign::Boson, &da, &db);
        // only the direct term: d_A ⊗ d_B = |01⟩
        assert!((center[1].re - 1.0 / PI.sqrt()).abs() < 1e-12);
        assert!(center[0].norm() + center[2].norm() + center[3].norm() < 1e-12);

        let (a, _) = states(1.0);
        for (x1, x2) in [(9.5, -10.2), (0.3, 1.1)] {
            let p = initial_wavefunction(x1, x2, &cfg, ExchangeSign::Boson, &a, &a);
            let q = initial_wavefunction(x2, x1, &cfg, ExchangeSign::Boson, &a, &a);
            for (u, v) in p.iter().zip(q) {
                assert!((u - v).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn initial_wavefunction_is_normalized() {
        // 2-D trapezoid over ±(x0 + 8ε)
        let cfg = WavepacketConfig::far_field();
        let (a, b) = states(0.6);
        let lim = cfg.x0() + 8.0 * cfg.epsilon();
        let h = cfg.epsilon() / 20.0;
        let n = (lim / h).round() as i64;
        let mut total = 0.0;
        for i in -n..=n {
            for j in -n..=n {
                let v = initial_wavefunction(i as f64 * h, j as f64 * h, &cfg, ExchangeSign::Boson, &a, &b);
                total += pair_norm(&v);
            }
        }
        total *= h * h;
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn evolved_amplitude_reproduces_joint_density() {
        let cfg = WavepacketConfig::from_delta(5.0, 1.3, 17.0).unwrap();
        let da = make_state(0.4, 0.3);
        let db = make_state(2.1, -1.0);
        for sign in [ExchangeSign::Boson, ExchangeSign::Fermion] {
            for (x1, x2) in [(0.0, 0.0), (3.0, -4.0), (7.0, 1.5), (-2.0, 9.0)] {
                let v = evolved_wavefunction(x1, x2, &cfg, sign, &da, &db);
                let d = joint_density(x1, x2, &cfg, sign, &da, &db);
                assert!((pair_norm(&v) - d).abs() <= 1e-10 * d, "{} vs {d}", pair_norm(&v));
            }
        }
    }

    #[test]
    fn eraser_basis_sum_recovers_joint_density() {
        let cfg = WavepacketConfig::far_field();
        let da = make_state(0.4, 0.3);
        let db = make_state(2.1, -1.0);
        let e = make_state(1.2, 0.8);
        let basis = [e, e.orthogonal()];
        for sign in [ExchangeSign::Boson, ExchangeSign::Fermion] {
            for (x1, x2) in [(0.0, 0.0), (3.0, -4.0), (17.0, 1.5)] {
                let mut total = 0.0;
                for e1 in &basis {
                    for e2 in &basis {
                        total += hbt_eraser_density(x1, x2, &cfg, sign, &da, &db, e1, e2);
                    }
                }
                let d = joint_density(x1, x2, &cfg, sign, &da, &db);
                assert!((total - d).abs() <= 1e-12 * d);
            }
        }
    }
}
