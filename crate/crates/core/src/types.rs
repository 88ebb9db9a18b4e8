use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Qutrit,
    Qubit,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Qutrit => "qutrit",
            Protocol::Qubit => "qubit",
        })
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qutrit" => Ok(Protocol::Qutrit),
            "qubit" => Ok(Protocol::Qubit),
            other => Err(Error::InvalidConfig(format!("unknown protocol `{other}`"))),
        }
    }
}

/// A party's strategy bit: 0 selects the +1 cyclic shift, 1 the -1 shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    G0,
    G1,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::G0, Strategy::G1];

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Strategy::G0
        } else {
            Strategy::G1
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Strategy::G0 => 0,
            Strategy::G1 => 1,
        }
    }

    /// Signed door shift mod 3.
    pub fn shift(self) -> usize {
        match self {
            Strategy::G0 => 1,
            Strategy::G1 => 2,
        }
    }
}

/// Bob's public door-switching bit `k_s`: 0 means switch, 1 means stay.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Switch {
    Switch,
    Stay,
}

impl Switch {
    pub const ALL: [Switch; 2] = [Switch::Switch, Switch::Stay];

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Switch::Switch
        } else {
            Switch::Stay
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Switch::Switch => 0,
            Switch::Stay => 1,
        }
    }
}

/// Which of the three entangled states remains after the victory (qutrit) or
/// O-pair (qubit) measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResidualId {
    #[serde(rename = "phi0")]
    Phi0,
    #[serde(rename = "phi1")]
    Phi1,
    #[serde(rename = "phi2")]
    Phi2,
}

impl ResidualId {
    pub const ALL: [ResidualId; 3] = [ResidualId::Phi0, ResidualId::Phi1, ResidualId::Phi2];

    pub fn index(self) -> usize {
        match self {
            ResidualId::Phi0 => 0,
            ResidualId::Phi1 => 1,
            ResidualId::Phi2 => 2,
        }
    }

    pub fn from_index(j: usize) -> Result<Self> {
        Self::ALL
            .get(j)
            .copied()
            .ok_or_else(|| Error::InvalidConfig(format!("residual index {j} not in 0..3")))
    }
}

impl fmt::Display for ResidualId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phi{}", self.index())
    }
}
