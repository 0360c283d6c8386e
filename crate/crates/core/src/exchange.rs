use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Sign picked up by the two-particle wavefunction under particle exchange.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExchangeSign {
    /// Symmetric, `η = +1`.
    #[default]
    Boson,
    /// Antisymmetric, `η = −1`.
    Fermion,
}

impl ExchangeSign {
    pub fn eta(self) -> f64 {
        match self {
            ExchangeSign::Boson => 1.0,
            ExchangeSign::Fermion => -1.0,
        }
    }
}

impl fmt::Display for ExchangeSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExchangeSign::Boson => f.write_str("+1"),
            ExchangeSign::Fermion => f.write_str("-1"),
        }
    }
}

impl FromStr for ExchangeSign {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+1" | "1" | "boson" => Ok(ExchangeSign::Boson),
            "-1" | "fermion" => Ok(ExchangeSign::Fermion),
            other => Err(format!("expected +1 or -1, got `{other}`")),
        }
    }
}
