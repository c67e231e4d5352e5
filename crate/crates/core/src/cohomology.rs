//! Dimension tables for L2 harmonic forms and the hyperKaehler moduli.
//!
//! For an ALH* space `M` whose circle bundle at infinity has degree
//! `1 <= b <= 9`, the compactification `X` is a weak del Pezzo surface of
//! degree `b` with a smooth anticanonical elliptic divisor `B`. Weighted
//! cohomology of `M` is identified with intersection cohomology of `(X, B)`
//! for a perversity read off from the weight, and the L2 harmonic forms
//! are
//!
//! ```text
//! k = 0, 1 : H^k(X, B)                        (zero)
//! k = 2    : Im(IH^2(X, B) -> IH_0^2(X, B))   (dimension 11 - b)
//! k = 3    : IH_0^3(X, B)                     (zero)
//! k = 4    : Im(IH_0^4(X, B) -> H^4(X - B))   (zero)
//! ```
//!
//! The moduli space of hyperKaehler structures has dimension `3(10 - b)`:
//! `3(9 - b)` from anti-self-dual L2 harmonic forms and `3` from the
//! variations of the model at infinity.
//!
//! Everything here is table-driven; nothing is computed from a
//! triangulation. The bracket in the weight shift `[a + 2 - k/2]` is read
//! as the floor function.

use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// Errors from table lookups.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CohomologyError {
    #[error("circle bundle degree b = {0} is outside 1..=9")]
    DegreeOutOfRange(i64),
    #[error("form degree k = {0} is outside 0..=4")]
    FormDegreeOutOfRange(i64),
}

/// Result alias for this module.
pub type CohomologyResult<T> = Result<T, CohomologyError>;

/// How the bracket in the weight shift is read.
pub const BRACKET_CONVENTION: &str = "floor";

/// The top stratum codimension index `l` of the stratification `(X, B)`.
pub const STRATUM_LENGTH: i64 = 2;

fn check_b(b: i64) -> CohomologyResult<()> {
    if (1..=9).contains(&b) {
        Ok(())
    } else {
        Err(CohomologyError::DegreeOutOfRange(b))
    }
}

fn check_k(k: i64) -> CohomologyResult<()> {
    if (0..=4).contains(&k) {
        Ok(())
    } else {
        Err(CohomologyError::FormDegreeOutOfRange(k))
    }
}

/// Dimension of the space of L2 harmonic `k`-forms: `11 - b` for `k = 2`
/// and zero otherwise.
pub fn l2_hodge_dim(b: i64, k: i64) -> CohomologyResult<i64> {
    check_b(b)?;
    check_k(k)?;
    Ok(if k == 2 { 11 - b } else { 0 })
}

/// Dimension of the moduli space with its split into the contribution of
/// anti-self-dual L2 harmonic forms and the variations at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ModuliDim {
    /// Total `3(10 - b)`.
    pub total: i64,
    /// `3(9 - b)`, three copies of the anti-self-dual L2 harmonic forms.
    pub from_l2: i64,
    /// `3`, the variations of the model at infinity up to rotation.
    pub from_infinity: i64,
}

/// Dimension `3(10 - b)` of the moduli space near a given structure.
pub fn moduli_dim(b: i64) -> CohomologyResult<ModuliDim> {
    check_b(b)?;
    // The anti-self-dual L2 harmonic 2-forms form a (9 - b)-dimensional
    // space; the remaining two of the 11 - b dimensions are self-dual.
    let from_l2 = 3 * (9 - b);
    let from_infinity = 3;
    Ok(ModuliDim {
        total: from_l2 + from_infinity,
        from_l2,
        from_infinity,
    })
}

/// Weighted cohomology of the half-line with the metric `dx^2/x^4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IntervalValue {
    /// Zero.
    Zero,
    /// One-dimensional.
    One,
    /// Not defined: the range of `d` is not closed.
    Undefined,
}

impl IntervalValue {
    /// Dimension, if defined.
    pub fn dim(self) -> Option<i64> {
        match self {
            IntervalValue::Zero => Some(0),
            IntervalValue::One => Some(1),
            IntervalValue::Undefined => None,
        }
    }
}

/// Degree of a form on the half-line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntervalDegree {
    /// Functions.
    Zero,
    /// 1-forms.
    One,
}

/// Weighted cohomology `WH^d((0, eps), dx^2/x^4, gamma)`: in degree 0 it
/// is one-dimensional exactly when `gamma < -1/2`; in degree 1 it vanishes
/// for `gamma != 0` and is undefined at `gamma = 0`.
pub fn wh_interval(degree: IntervalDegree, gamma: f64) -> IntervalValue {
    match degree {
        IntervalDegree::Zero => {
            if gamma < -0.5 {
                IntervalValue::One
            } else {
                IntervalValue::Zero
            }
        }
        IntervalDegree::One => {
            if gamma == 0.0 {
                IntervalValue::Undefined
            } else {
                IntervalValue::Zero
            }
        }
    }
}

/// The cohomology theory selected by the perversity index `j`.
pub fn ih_selector(j: i64) -> &'static str {
    if j <= -1 {
        "H*(X\u{2212}B)"
    } else if j <= STRATUM_LENGTH - 2 {
        "IH_p(X)"
    } else {
        "H*(X,B)"
    }
}

/// The perversity index `[a + 2 - k/2]` for weight `a` and degree `k`,
/// with the bracket read as floor (see [`BRACKET_CONVENTION`]).
pub fn weight_shift(a: f64, k: i64) -> i64 {
    (a + 2.0 - k as f64 / 2.0).floor() as i64
}

/// One row of the L2 Hodge table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HodgeEntry {
    /// Form degree.
    pub k: i64,
    /// Cohomological identification.
    pub label: &'static str,
    /// Dimension.
    pub dim: i64,
}

/// The L2 Hodge table for `k = 0..=4`.
pub fn l2_hodge_table(b: i64) -> CohomologyResult<Vec<HodgeEntry>> {
    check_b(b)?;
    const LABELS: [&str; 5] = [
        "H\u{2070}(X,B)",
        "H\u{b9}(X,B)",
        "Im(IH\u{b2}(X,B) \u{2192} IH\u{2080}\u{b2}(X,B))",
        "IH\u{2080}\u{b3}(X,B)",
        "Im(IH\u{2080}\u{2074}(X,B) \u{2192} H\u{2074}(X\u{2212}B))",
    ];
    (0..5)
        .map(|k| {
            Ok(HodgeEntry {
                k,
                label: LABELS[k as usize],
                dim: l2_hodge_dim(b, k)?,
            })
        })
        .collect()
}

impl fmt::Display for HodgeEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={} {} dim {}", self.k, self.label, self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listed_dimensions() {
        assert_eq!(l2_hodge_dim(1, 2).unwrap(), 10);
        assert_eq!(l2_hodge_dim(9, 2).unwrap(), 2);
        assert_eq!(l2_hodge_dim(3, 1).unwrap(), 0);
        assert!(l2_hodge_dim(0, 2).is_err());
        assert!(l2_hodge_dim(10, 2).is_err());
        let m = moduli_dim(1).unwrap();
        assert_eq!((m.total, m.from_l2, m.from_infinity), (27, 24, 3));
        assert_eq!(moduli_dim(9).unwrap().total, 3);
        assert_eq!(moduli_dim(5).unwrap().total, 15);
    }

    #[test]
    fn interval_and_selectors() {
        assert_eq!(wh_interval(IntervalDegree::Zero, -1.0), IntervalValue::One);
        assert_eq!(wh_interval(IntervalDegree::Zero, 0.0), IntervalValue::Zero);
        assert_eq!(
            wh_interval(IntervalDegree::One, 0.0),
            IntervalValue::Undefined
        );
        assert_eq!(ih_selector(-1), "H*(X\u{2212}B)");
        assert_eq!(ih_selector(0), "IH_p(X)");
        assert_eq!(ih_selector(1), "H*(X,B)");
        assert_eq!(weight_shift(0.0, 2), 1);
        assert_eq!(weight_shift(0.0, 0), 2);
    }

    #[test]
    fn table_labels() {
        let t = l2_hodge_table(4).unwrap();
        assert_eq!(t[3].label, "IH\u{2080}\u{b3}(X,B)");
        assert_eq!(t[0].label, "H\u{2070}(X,B)");
        assert_eq!(t[2].dim, 7);
    }
}
