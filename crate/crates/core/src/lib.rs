//! Particle distinguishability versus two-particle interference visibility in
//! Hong-Ou-Mandel and Hanbury Brown-Twiss experiments.
//!
//! Both experiments obey `D + V = 1`, with `D = 1 − |⟨d_A|d_B⟩|²` the
//! distinguishability carried by the internal tags and `V` the visibility
//! of the two-particle interference.

pub mod cli;
pub mod duality;
pub mod error;
pub mod exchange;
pub mod hbt;
pub mod hom;
pub mod internal;
pub mod report;
pub mod sampling;

pub use error::{Error, Result};
pub use exchange::ExchangeSign;
pub use internal::{InternalState, Overlap};
