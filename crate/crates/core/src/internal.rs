//! Two-level internal degree of freedom (polarization, spin) carried by each
//! particle, and the overlap-based distinguishability measures built on it.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-6;

/// Normalized vector in a two-dimensional complex Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InternalState {
    amplitudes: [Complex64; 2],
}

impl InternalState {
    /// Builds a state from raw amplitudes. Inputs within 1e-6 of unit norm
    /// are renormalized; anything further off is rejected.
    pub fn new(a0: Complex64, a1: Complex64) -> Result<Self> {
        let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amplitudes: [a0 / norm, a1 / norm],
        })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(a0: Complex64, a1: Complex64) -> Result<Self> {
        let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amplitudes: [a0 / norm, a1 / norm],
        })
    }

    /// Bloch-sphere parametrization `(cos(θ/2), e^{iφ} sin(θ/2))`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        let theta = theta.rem_euclid(TAU);
        let phi = phi.rem_euclid(TAU);
        let (s, c) = (theta / 2.0).sin_cos();
        Self {
            amplitudes: [Complex64::new(c, 0.0), Complex64::from_polar(s, phi)],
        }
    }

    /// The state `(1, 0)`.
    pub fn zero() -> Self {
        Self::from_bloch(0.0, 0.0)
    }

    /// A real state whose overlap modulus with `(1, 0)` is `s`.
    pub fn with_overlap(s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(crate::error::invalid("overlap", format!("{s} outside [0, 1]")));
        }
        Ok(Self::from_bloch(2.0 * s.acos(), 0.0))
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        self.amplitudes
    }

    /// The state orthogonal to `self` (unique up to phase).
    pub fn orthogonal(&self) -> Self {
        let [a0, a1] = self.amplitudes;
        Self {
            amplitudes: [-a1.conj(), a0.conj()],
        }
    }

    /// `(a ± b)/|a ± b|`. For orthogonal `a`, `b` these are the two eraser
    /// states with equal overlap on both tags.
    pub fn superposition(a: &Self, b: &Self, relative_sign: f64) -> Result<Self> {
        let [a0, a1] = a.amplitudes;
        let [b0, b1] = b.amplitudes;
        Self::normalized(a0 + relative_sign * b0, a1 + relative_sign * b1)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes[0].conj() * other.amplitudes[0] + self.amplitudes[1].conj() * other.amplitudes[1]
    }

    pub fn with_global_phase(&self, phase: f64) -> Self {
        let p = Complex64::from_polar(1.0, phase);
        Self {
            amplitudes: [self.amplitudes[0] * p, self.amplitudes[1] * p],
        }
    }
}

/// Complex inner product of two internal states, with its modulus cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    value: Complex64,
    modulus: f64,
}

impl Overlap {
    pub fn value(&self) -> Complex64 {
        self.value
    }

    /// `|⟨a|b⟩|`, clamped into `[0, 1]`.
    pub fn modulus(&self) -> f64 {
        self.modulus
    }
}

/// Same as [`InternalState::from_bloch`].
pub fn make_state(theta: f64, phi: f64) -> InternalState {
    InternalState::from_bloch(theta, phi)
}

pub fn overlap(a: &InternalState, b: &InternalState) -> Overlap {
    let value = a.inner(b);
    Overlap {
        value,
        modulus: value.norm().min(1.0),
    }
}

/// Optimal unambiguous-discrimination success probability, `1 − |⟨a|b⟩|`.
pub fn distinguishability_uqsd(a: &InternalState, b: &InternalState) -> f64 {
    1.0 - overlap(a, b).modulus()
}

/// Particle distinguishability `1 − |⟨a|b⟩|²`, equivalently `D_Q(2 − D_Q)`.
pub fn distinguishability(a: &InternalState, b: &InternalState) -> f64 {
    1.0 - overlap(a, b).modulus().powi(2)
}
