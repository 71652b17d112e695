//! Chemical elements known to the featurizer.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Element {
    H,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown element symbol `{0}`")]
pub struct UnknownElement(pub String);

impl Element {
    pub const ALL: [Element; 8] =
        [Element::H, Element::C, Element::N, Element::O, Element::F, Element::P, Element::S, Element::Cl];

    /// The organic set used by default: C, H, N and O.
    pub const ORGANIC: [Element; 4] = [Element::C, Element::H, Element::N, Element::O];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
        }
    }

    /// Nuclear charge Z.
    pub fn atomic_number(self) -> u32 {
        match self {
            Element::H => 1,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
        }
    }

    /// Standard atomic mass in u.
    pub fn mass(self) -> f64 {
        match self {
            Element::H => 1.008,
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
            Element::P => 30.974,
            Element::S => 32.06,
            Element::Cl => 35.45,
        }
    }

    /// Single-bond covalent radius in Å.
    /// Valence-shell electron count.
    pub fn valence_electrons(self) -> u32 {
        match self {
            Element::H => 1,
            Element::C => 4,
            Element::N | Element::P => 5,
            Element::O | Element::S => 6,
            Element::F | Element::Cl => 7,
        }
    }

    pub fn covalent_radius(self) -> f64 {
        match self {
            Element::H => 0.31,
            Element::C => 0.76,
            Element::N => 0.71,
            Element::O => 0.66,
            Element::F => 0.57,
            Element::P => 1.07,
            Element::S => 1.05,
            Element::Cl => 1.02,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Element {
    type Err = UnknownElement;

    /// Case-insensitive symbol lookup ("cl", "CL" and "Cl" all match chlorine).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Element::ALL
            .iter()
            .copied()
            .find(|e| e.symbol().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownElement(s.to_string()))
    }
}
