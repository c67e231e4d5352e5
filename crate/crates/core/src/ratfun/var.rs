//! The fixed, ordered list of symbolic variables.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Number of declared variables.
pub const NVARS: usize = 15;

/// A symbolic variable. The declaration order is the monomial order.
///
/// The first group covers the boundary chart and its inverted radial
/// coordinate, the second group the projective coordinates of the three
/// blow-up stages, and the last group the deformation parameter `t`, the
/// auxiliary algebraic quantity `c`, and the base point of a blow-up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    X,
    R,
    Y1,
    Y2,
    Theta,
    S,
    SPrime,
    BigS,
    BigY1,
    BigY2,
    T,
    C,
    XTilde,
    Y1Tilde,
    Y2Tilde,
}

impl Var {
    /// All variables in declared order.
    pub const ALL: [Var; NVARS] = [
        Var::X,
        Var::R,
        Var::Y1,
        Var::Y2,
        Var::Theta,
        Var::S,
        Var::SPrime,
        Var::BigS,
        Var::BigY1,
        Var::BigY2,
        Var::T,
        Var::C,
        Var::XTilde,
        Var::Y1Tilde,
        Var::Y2Tilde,
    ];

    /// Position in the declared order.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Printable name, also accepted by the parser.
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::R => "r",
            Var::Y1 => "y1",
            Var::Y2 => "y2",
            Var::Theta => "theta",
            Var::S => "s",
            Var::SPrime => "s_prime",
            Var::BigS => "S",
            Var::BigY1 => "Y1",
            Var::BigY2 => "Y2",
            Var::T => "t",
            Var::C => "c",
            Var::XTilde => "x_tilde",
            Var::Y1Tilde => "y1_tilde",
            Var::Y2Tilde => "y2_tilde",
        }
    }

    /// Look a variable up by its printable name.
    pub fn from_name(name: &str) -> Option<Var> {
        Var::ALL.iter().copied().find(|v| v.name() == name)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
