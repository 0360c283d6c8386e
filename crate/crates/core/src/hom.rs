//! Hong-Ou-Mandel experiment: two tagged particles meet on a balanced beam
//! splitter and are counted in coincidence at detectors D1 and D2.
//!
//! States are kept in first-quantized form as a list of terms, each carrying
//! a spatial mode and an internal state for particle 1 and particle 2.
//! Probabilities are obtained by projecting onto detector modes and taking
//! the norm of the remaining internal-space vector, so nothing here relies on
//! the closed-form coincidence law except [`coincidence_probability`].

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exchange::ExchangeSign;
use crate::internal::{overlap, InternalState};

/// Spatial mode of one particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
    D1,
    D2,
}

impl Mode {
    fn is_input(self) -> bool {
        matches!(self, Mode::A | Mode::B)
    }

    fn index(self) -> usize {
        self as usize
    }

    const ALL: [Mode; 4] = [Mode::A, Mode::B, Mode::D1, Mode::D2];
}

/// Beam-splitter action on the input modes:
/// `A → (D1 − D2)/√2`, `B → (D1 + D2)/√2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitterConvention {
    /// Rows indexed by input (A, B), columns by output (D1, D2).
    pub matrix: [[f64; 2]; 2],
}

impl Default for BeamSplitterConvention {
    fn default() -> Self {
        Self {
            matrix: [[FRAC_1_SQRT_2, -FRAC_1_SQRT_2], [FRAC_1_SQRT_2, FRAC_1_SQRT_2]],
        }
    }
}

impl BeamSplitterConvention {
    /// Largest entry of `|M Mᵀ − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let dot = m[i][0] * m[j][0] + m[i][1] * m[j][1];
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    fn outputs(&self, mode: Mode) -> Result<[(Mode, f64); 2]> {
        let row = match mode {
            Mode::A => self.matrix[0],
            Mode::B => self.matrix[1],
            Mode::D1 | Mode::D2 => return Err(Error::AlreadyInDetectorBasis),
        };
        Ok([(Mode::D1, row[0]), (Mode::D2, row[1])])
    }
}

/// One product term `c |m₁⟩₁|m₂⟩₂ |d₁⟩₁|d₂⟩₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coefficient: Complex64,
    pub modes: [Mode; 2],
    pub internal: [InternalState; 2],
}

/// Two-particle state as a sum of product terms.
#[derive(Debug, Clone, PartialEq)]
pub struct HomState {
    terms: Vec<Term>,
}

/// Internal-space vector of particle 1 ⊗ particle 2, in the basis
/// `|00⟩, |01⟩, |10⟩, |11⟩`.
pub type PairVector = [Complex64; 4];

fn tensor(a: &InternalState, b: &InternalState) -> PairVector {
    let [a0, a1] = a.amplitudes();
    let [b0, b1] = b.amplitudes();
    [a0 * b0, a0 * b1, a1 * b0, a1 * b1]
}

fn norm_sqr(v: &PairVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

impl HomState {
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Internal-space amplitude left after projecting particle 1 onto `m1`
    /// and particle 2 onto `m2`. Spatial modes are orthonormal.
    pub fn project_modes(&self, m1: Mode, m2: Mode) -> PairVector {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for t in self.terms.iter().filter(|t| t.modes == [m1, m2]) {
            let v = tensor(&t.internal[0], &t.internal[1]);
            for (o, x) in out.iter_mut().zip(v) {
                *o += t.coefficient * x;
            }
        }
        out
    }

    /// Amplitude for particle 1 in `m1` with internal state `e1` and
    /// particle 2 in `m2` with internal state `e2`.
    pub fn project(&self, m1: Mode, e1: &InternalState, m2: Mode, e2: &InternalState) -> Complex64 {
        let v = self.project_modes(m1, m2);
        let e = tensor(e1, e2);
        e.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
    }

    /// `⟨Ψ|Ψ⟩`, including the inner products between internal factors of
    /// terms that share spatial modes.
    pub fn norm_sqr(&self) -> f64 {
        let mut total = 0.0;
        for m1 in Mode::ALL {
            for m2 in Mode::ALL {
                total += norm_sqr(&self.project_modes(m1, m2));
            }
        }
        total
    }

    /// Relabeling particles 1 ↔ 2 reproduces `eta` times the state.
    pub fn has_exchange_symmetry(&self, sign: ExchangeSign, tol: f64) -> bool {
        let eta = sign.eta();
        Mode::ALL.iter().all(|&m1| {
            Mode::ALL.iter().all(|&m2| {
                let direct = self.project_modes(m1, m2);
                let swapped = self.project_modes(m2, m1);
                // swapping particles transposes the internal tensor
                let swapped = [swapped[0], swapped[2], swapped[1], swapped[3]];
                direct.iter().zip(swapped).all(|(a, b)| (a - eta * b).norm() <= tol)
            })
        })
    }
}

/// `(1/√2)(|A⟩₁|B⟩₂|d_A⟩₁|d_B⟩₂ + |A⟩₂|B⟩₁|d_A⟩₂|d_B⟩₁)` for bosons.
pub fn build_input_state(d_a: &InternalState, d_b: &InternalState) -> Result<HomState> {
    build_input_state_with(d_a, d_b, ExchangeSign::Boson)
}

pub fn build_input_state_with(d_a: &InternalState, d_b: &InternalState, sign: ExchangeSign) -> Result<HomState> {
    for d in [d_a, d_b] {
        let [a0, a1] = d.amplitudes();
        let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm });
        }
    }
    let c = Complex64::new(FRAC_1_SQRT_2, 0.0);
    Ok(HomState {
        terms: vec![
            Term {
                coefficient: c,
                modes: [Mode::A, Mode::B],
                internal: [*d_a, *d_b],
            },
            Term {
                coefficient: c * sign.eta(),
                modes: [Mode::B, Mode::A],
                internal: [*d_b, *d_a],
            },
        ],
    })
}

/// Sends every input mode through the beam splitter and collects like terms.
pub fn apply_beamsplitter(state: &HomState) -> Result<HomState> {
    apply_beamsplitter_with(state, &BeamSplitterConvention::default())
}

pub fn apply_beamsplitter_with(state: &HomState, bs: &BeamSplitterConvention) -> Result<HomState> {
    let mut terms = Vec::with_capacity(state.terms.len() * 4);
    for t in &state.terms {
        if !t.modes.iter().all(|m| m.is_input()) {
            return Err(Error::AlreadyInDetectorBasis);
        }
        for (o1, c1) in bs.outputs(t.modes[0])? {
            for (o2, c2) in bs.outputs(t.modes[1])? {
                terms.push(Term {
                    coefficient: t.coefficient * c1 * c2,
                    modes: [o1, o2],
                    internal: t.internal,
                });
            }
        }
    }
    // order by spatial modes so that expansions compare term by term
    terms.sort_by_key(|t| (t.modes[0].index(), t.modes[1].index()));
    Ok(HomState { terms })
}

/// Closed form `½(1 − |⟨d_A|d_B⟩|²)` for bosons.
pub fn coincidence_probability(d_a: &InternalState, d_b: &InternalState) -> f64 {
    coincidence_probability_with(d_a, d_b, ExchangeSign::Boson)
}

/// `½(1 − η|⟨d_A|d_B⟩|²)`.
pub fn coincidence_probability_with(d_a: &InternalState, d_b: &InternalState, sign: ExchangeSign) -> f64 {
    let s2 = overlap(d_a, d_b).modulus().powi(2);
    0.5 * (1.0 - sign.eta() * s2)
}

/// Coincidence probability from the propagated state: squared norms of the
/// (D1, D2) and (D2, D1) projections.
pub fn brute_force_coincidence(d_a: &InternalState, d_b: &InternalState) -> Result<f64> {
    brute_force_coincidence_with(d_a, d_b, ExchangeSign::Boson)
}

pub fn brute_force_coincidence_with(d_a: &InternalState, d_b: &InternalState, sign: ExchangeSign) -> Result<f64> {
    let out = apply_beamsplitter(&build_input_state_with(d_a, d_b, sign)?)?;
    Ok(norm_sqr(&out.project_modes(Mode::D1, Mode::D2)) + norm_sqr(&out.project_modes(Mode::D2, Mode::D1)))
}

/// Probability of detecting both particles at D1 (or both at D2).
pub fn bunching_probability(d_a: &InternalState, d_b: &InternalState, sign: ExchangeSign) -> f64 {
    0.25 * (1.0 + sign.eta() * overlap(d_a, d_b).modulus().powi(2))
}

/// Dip visibility `(C_max − C_min)/C_max`, where `C_max = ½` is the
/// coincidence rate for particles that miss each other in time.
pub fn hom_visibility(d_a: &InternalState, d_b: &InternalState) -> f64 {
    let c_max = 0.5;
    let c_min = coincidence_probability(d_a, d_b);
    (c_max - c_min) / c_max
}

/// Coincidence probability versus arrival delay for Gaussian temporal modes
/// of width `sigma_t`. The temporal mode overlap is `exp(−τ²/4σ_t²)`.
pub fn delay_scan(d_a: &InternalState, d_b: &InternalState, sigma_t: f64, taus: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !(sigma_t > 0.0 && sigma_t.is_finite()) {
        return Err(invalid("sigma_t", format!("{sigma_t} must be positive")));
    }
    let s2 = overlap(d_a, d_b).modulus().powi(2);
    Ok(taus
        .iter()
        .map(|&tau| {
            let m = (-tau * tau / (4.0 * sigma_t * sigma_t)).exp();
            (tau, 0.5 * (1.0 - s2 * m * m))
        })
        .collect())
}

/// Probability of a coincidence with internal outcome `e1` at D1 and `e2`
/// at D2: `¼|⟨e1|d_A⟩⟨e2|d_B⟩ − ⟨e1|d_B⟩⟨e2|d_A⟩|²`.
pub fn eraser_joint_probability(
    d_a: &InternalState,
    d_b: &InternalState,
    e1: &InternalState,
    e2: &InternalState,
) -> f64 {
    let amp = e1.inner(d_a) * e2.inner(d_b) - e1.inner(d_b) * e2.inner(d_a);
    0.25 * amp.norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::internal::make_state;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn beam_splitter_is_unitary() {
        assert!(BeamSplitterConvention::default().unitarity_defect() < 1e-12);
    }

    #[test]
    fn single_mode_images() {
        let bs = BeamSplitterConvention::default();
        let a = bs.outputs(Mode::A).unwrap();
        assert_eq!(a[0], (Mode::D1, FRAC_1_SQRT_2));
        assert_eq!(a[1], (Mode::D2, -FRAC_1_SQRT_2));
        let b = bs.outputs(Mode::B).unwrap();
        assert_eq!(b[1], (Mode::D2, FRAC_1_SQRT_2));
        assert!(matches!(bs.outputs(Mode::D1), Err(Error::AlreadyInDetectorBasis)));
    }

    #[test]
    fn input_state_norm() {
        let a = InternalState::zero();
        for b in [a, a.orthogonal(), InternalState::with_overlap(0.6).unwrap()] {
            let st = build_input_state(&a, &b).unwrap();
            assert!((st.norm_sqr() - 1.0).abs() < 1e-12);
            assert!(st.has_exchange_symmetry(ExchangeSign::Boson, 1e-15));
        }
        let f = build_input_state_with(&a, &a.orthogonal(), ExchangeSign::Fermion).unwrap();
        assert!(f.has_exchange_symmetry(ExchangeSign::Fermion, 1e-15));
        assert!(!f.has_exchange_symmetry(ExchangeSign::Boson, 1e-6));
    }

    #[test]
    fn orthogonal_tags_give_orthogonal_terms() {
        let a = InternalState::zero();
        let st = build_input_state(&a, &a.orthogonal()).unwrap();
        for t in st.terms() {
            assert!((t.coefficient.norm_sqr() - 0.5).abs() < 1e-15);
        }
        let [t1, t2] = [st.terms()[0], st.terms()[1]];
        assert!(t1.internal[0].inner(&t2.internal[0]).norm() < 1e-15);
    }

    #[test]
    fn expansion_matches_eight_terms() {
        // U|Ψ⟩ = 1/(2√2)[(D1−D2)₁(D1+D2)₂ d_A d_B + (D1−D2)₂(D1+D2)₁ d_B d_A]
        let a = make_state(0.3, 0.2);
        let b = make_state(1.1, -0.7);
        let out = apply_beamsplitter(&build_input_state(&a, &b).unwrap()).unwrap();
        assert_eq!(out.terms().len(), 8);
        let k = 1.0 / (2.0 * 2f64.sqrt());
        let expected = [
            (Mode::D1, Mode::D1, k, [a, b]),
            (Mode::D1, Mode::D2, k, [a, b]),
            (Mode::D2, Mode::D1, -k, [a, b]),
            (Mode::D2, Mode::D2, -k, [a, b]),
            (Mode::D1, Mode::D1, k, [b, a]),
            (Mode::D1, Mode::D2, -k, [b, a]),
            (Mode::D2, Mode::D1, k, [b, a]),
            (Mode::D2, Mode::D2, -k, [b, a]),
        ];
        for (m1, m2, coef, internal) in expected {
            let hit = out
                .terms()
                .iter()
                .any(|t| t.modes == [m1, m2] && (t.coefficient - c(coef)).norm() < 1e-15 && t.internal == internal);
            assert!(hit, "missing term {m1:?} {m2:?} {coef}");
        }
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beamsplitter_rejects_detector_modes() {
        let a = InternalState::zero();
        let out = apply_beamsplitter(&build_input_state(&a, &a).unwrap()).unwrap();
        assert!(matches!(apply_beamsplitter(&out), Err(Error::AlreadyInDetectorBasis)));
    }

    #[test]
    fn coincidence_examples() {
        let a = InternalState::zero();
        let s06 = InternalState::with_overlap(0.6).unwrap();
        assert!(coincidence_probability(&a, &a).abs() < 1e-15);
        assert!((coincidence_probability(&a, &a.orthogonal()) - 0.5).abs() < 1e-15);
        assert!((coincidence_probability(&a, &s06) - 0.32).abs() < 1e-12);
        assert!(brute_force_coincidence(&a, &a).unwrap().abs() < 1e-15);
        assert!((brute_force_coincidence(&a, &a.orthogonal()).unwrap() - 0.5).abs() < 1e-15);
        assert!((brute_force_coincidence(&a, &s06).unwrap() - 0.32).abs() < 1e-12);
    }

    #[test]
    fn fermions_antibunch() {
        let a = InternalState::zero();
        let p = brute_force_coincidence_with(&a, &a, ExchangeSign::Fermion).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!((coincidence_probability_with(&a, &a, ExchangeSign::Fermion) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bunching_completes_probability() {
        let a = InternalState::zero();
        let b = InternalState::with_overlap(0.6).unwrap();
        let out = apply_beamsplitter(&build_input_state(&a, &b).unwrap()).unwrap();
        let p11 = norm_sqr(&out.project_modes(Mode::D1, Mode::D1));
        assert!((p11 - bunching_probability(&a, &b, ExchangeSign::Boson)).abs() < 1e-12);
        let total = coincidence_probability(&a, &b) + 2.0 * p11;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn visibility_examples() {
        let a = InternalState::zero();
        assert!((hom_visibility(&a, &a) - 1.0).abs() < 1e-15);
        assert!(hom_visibility(&a, &a.orthogonal()).abs() < 1e-15);
        let b = InternalState::with_overlap(0.6).unwrap();
        assert!((hom_visibility(&a, &b) - 0.36).abs() < 1e-12);
    }

    #[test]
    fn delay_limits() {
        let a = InternalState::zero();
        let sigma = 1.7;
        let half = sigma * (2.0 * 2f64.ln()).sqrt();
        let quarter = 2.0 * sigma * 2f64.ln().sqrt();
        let scan = delay_scan(&a, &a, sigma, &[0.0, half, quarter, 1e3]).unwrap();
        assert!(scan[0].1.abs() < 1e-15);
        // m(τ)² = 1/2
        assert!((scan[1].1 - 0.25).abs() < 1e-12);
        // m(τ)² = 1/4
        assert!((scan[2].1 - 0.375).abs() < 1e-12);
        assert!((scan[3].1 - 0.5).abs() < 1e-15);
        assert!(delay_scan(&a, &a, 0.0, &[0.0]).is_err());
        assert!(delay_scan(&a, &a, -1.0, &[0.0]).is_err());
    }

    #[test]
    fn eraser_examples() {
        let da = InternalState::zero();
        let db = da.orthogonal();
        let e = InternalState::superposition(&da, &db, 1.0).unwrap();
        let e_perp = InternalState::superposition(&da, &db, -1.0).unwrap();
        assert!(eraser_joint_probability(&da, &db, &e, &e) < 1e-15);
        assert!((eraser_joint_probability(&da, &db, &e, &e_perp) - 0.25).abs() < 1e-15);
        let f = make_state(0.4, 2.0);
        assert!(eraser_joint_probability(&da, &da, &f, &e_perp) < 1e-15);
    }

    fn state() -> impl Strategy<Value = InternalState> {
        (0.0..TAU, 0.0..TAU).prop_map(|(t, p)| make_state(t, p))
    }

    proptest! {
        #[test]
        fn closed_form_matches_propagated_state(a in state(), b in state()) {
            let brute = brute_force_coincidence(&a, &b).unwrap();
            prop_assert!((brute - coincidence_probability(&a, &b)).abs() < 1e-12);
            let f = brute_force_coincidence_with(&a, &b, ExchangeSign::Fermion).unwrap();
            prop_assert!((f - coincidence_probability_with(&a, &b, ExchangeSign::Fermion)).abs() < 1e-12);
        }

        #[test]
        fn eraser_basis_sum_recovers_coincidence(a in state(), b in state(), t in 0.0..PI, p in 0.0..TAU) {
            let e = make_state(t, p);
            let basis = [e, e.orthogonal()];
            let mut total = 0.0;
            for e1 in &basis {
                for e2 in &basis {
                    total += eraser_joint_probability(&a, &b, e1, e2);
                }
            }
            prop_assert!((total - coincidence_probability(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn eraser_matches_state_projection(a in state(), b in state(), e1 in state(), e2 in state()) {
            let out = apply_beamsplitter(&build_input_state(&a, &b).unwrap()).unwrap();
            // e1 at D1 and e2 at D2, with either particle at D1
            let p = out.project(Mode::D1, &e1, Mode::D2, &e2).norm_sqr()
                + out.project(Mode::D2, &e2, Mode::D1, &e1).norm_sqr();
            prop_assert!((p - eraser_joint_probability(&a, &b, &e1, &e2)).abs() < 1e-12);
        }

        #[test]
        fn beamsplitter_preserves_norm(a in state(), b in state()) {
            let input = build_input_state(&a, &b).unwrap();
            let out = apply_beamsplitter(&input).unwrap();
            prop_assert!((out.norm_sqr() - input.norm_sqr()).abs() < 1e-12);
        }

        #[test]
        fn delay_scan_monotone(a in state(), b in state(), sigma in 0.1f64..10.0) {
            let taus: Vec<f64> = (0..200).map(|i| i as f64 * sigma * 0.05).collect();
            let scan = delay_scan(&a, &b, sigma, &taus).unwrap();
            for w in scan.windows(2) {
                prop_assert!(w[1].1 >= w[0].1 - 1e-15);
            }
            let neg: Vec<f64> = taus.iter().map(|t| -t).collect();
            let mirrored = delay_scan(&a, &b, sigma, &neg).unwrap();
            for (x, y) in scan.iter().zip(&mirrored) {
                prop_assert_eq!(x.1, y.1);
            }
        }
    }
}
