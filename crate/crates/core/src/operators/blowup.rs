//! Lifts of vector fields to the blown-up double space.
//!
//! The double space carries left coordinates `(x, y1, y2, theta)` and right
//! coordinates `(x_tilde, y1_tilde, y2_tilde)`; the right factor enters as
//! parameters. Three successive blow-ups resolve the `b`, `c` and `a`
//! diagonals, each with projective coordinates near its front face:
//!
//! * `b`: `s = x / x_tilde`.
//! * `c`: `s' = (s - 1) / x_tilde`.
//! * `a`: `S = s' / x_tilde`, `Yj = (yj - yj_tilde) / x_tilde`.
//!
//! A left vector field `sum a_i d_{u_i}` lifts to
//! `sum_k (sum_i a_i d_{u_i} w_k) d_{w_k}`, where the new coordinates `w_k`
//! are written as functions of the old ones and the result is re-expressed
//! through the inverse map.

use super::{OpResult, OperatorError, VectorFieldExpr};
use crate::geometry::Chart;
use crate::ratfun::{RatFun, Var};

/// One of the three blow-ups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlowupStage {
    /// Blow-up of the corner; front face coordinate `s = x / x_tilde`.
    B,
    /// Blow-up of `{s = 1, x_tilde = 0}`; coordinate `s'`.
    C,
    /// Blow-up of `{s' = 0, y = y_tilde, x_tilde = 0}`; coordinates `S, Y`.
    A,
}

impl BlowupStage {
    /// Parse from a one-letter name.
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "b" | "B" => Some(BlowupStage::B),
            "c" | "C" => Some(BlowupStage::C),
            "a" | "A" => Some(BlowupStage::A),
            _ => None,
        }
    }
}

/// Projective chart near the front face of a stage; `x_tilde` is the
/// boundary defining function of the face and is carried as a parameter.
pub fn lift_chart(stage: BlowupStage) -> Chart {
    match stage {
        BlowupStage::B => Chart {
            name: "b-face chart",
            coords: [Var::S, Var::Y1, Var::Y2, Var::Theta],
        },
        BlowupStage::C => Chart {
            name: "c-face chart",
            coords: [Var::SPrime, Var::Y1, Var::Y2, Var::Theta],
        },
        BlowupStage::A => Chart {
            name: "a-face chart",
            coords: [Var::BigS, Var::BigY1, Var::BigY2, Var::Theta],
        },
    }
}

fn rf(s: &str) -> RatFun {
    RatFun::parse(s).expect("literal")
}

/// New coordinates as functions of the old left coordinates and the right
/// parameters, composed through all earlier stages.
pub fn stage_forward(stage: BlowupStage) -> [RatFun; 4] {
    match stage {
        BlowupStage::B => [rf("x/x_tilde"), rf("y1"), rf("y2"), rf("theta")],
        BlowupStage::C => [
            rf("(x - x_tilde)/x_tilde^2"),
            rf("y1"),
            rf("y2"),
            rf("theta"),
        ],
        BlowupStage::A => [
            rf("(x - x_tilde)/x_tilde^3"),
            rf("(y1 - y1_tilde)/x_tilde"),
            rf("(y2 - y2_tilde)/x_tilde"),
            rf("theta"),
        ],
    }
}

/// Old left coordinates in terms of the new ones (inverse of
/// [`stage_forward`]).
pub fn stage_substitution(stage: BlowupStage) -> Vec<(Var, RatFun)> {
    match stage {
        BlowupStage::B => vec![(Var::X, rf("x_tilde*s"))],
        BlowupStage::C => vec![(Var::X, rf("x_tilde*(1 + x_tilde*s_prime)"))],
        BlowupStage::A => vec![
            (Var::X, rf("x_tilde*(1 + x_tilde^2*S)")),
            (Var::Y1, rf("y1_tilde + x_tilde*Y1")),
            (Var::Y2, rf("y2_tilde + x_tilde*Y2")),
        ],
    }
}

/// Lift a vector field on the boundary chart to the projective chart of a
/// stage.
pub fn blowup_lift(field: &VectorFieldExpr, stage: BlowupStage) -> OpResult<VectorFieldExpr> {
    if field.chart != Chart::boundary() {
        return Err(OperatorError::ChartMismatch(
            field.chart.name,
            Chart::boundary().name,
        ));
    }
    let fwd = stage_forward(stage);
    let subs = stage_substitution(stage);
    let mut c: [RatFun; 4] = Default::default();
    for (k, ck) in c.iter_mut().enumerate() {
        *ck = field.apply(&fwd[k])?.substitute(&subs)?;
    }
    Ok(VectorFieldExpr::new(lift_chart(stage), c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{structure_fields, Structure};

    #[test]
    fn lifts_of_structure_fields() {
        let a = structure_fields(Structure::A, false);
        let cases = [
            (BlowupStage::B, "x_tilde^2*s^3", "x_tilde*s"),
            (
                BlowupStage::C,
                "x_tilde*(1 + x_tilde*s_prime)^3",
                "x_tilde*(1 + x_tilde*s_prime)",
            ),
            (BlowupStage::A, "(1 + x_tilde^2*S)^3", "1 + x_tilde^2*S"),
        ];
        for (stage, e0, e1) in cases {
            let l0 = blowup_lift(&a[0], stage).unwrap();
            assert_eq!(l0.coeffs[0], rf(e0), "{stage:?}");
            let l1 = blowup_lift(&a[1], stage).unwrap();
            assert_eq!(l1.coeffs[1], rf(e1), "{stage:?}");
        }
    }

    #[test]
    fn twisted_lift_at_a_face() {
        let a = structure_fields(Structure::A, true);
        let l = blowup_lift(&a[2], BlowupStage::A).unwrap();
        assert_eq!(l.coeffs[2], rf("1 + x_tilde^2*S"));
        assert_eq!(
            l.coeffs[3],
            rf("-x_tilde*(1 + x_tilde^2*S)*(y1_tilde + x_tilde*Y1)")
        );
    }

    #[test]
    fn substitution_inverts_forward_map() {
        for stage in [BlowupStage::B, BlowupStage::C, BlowupStage::A] {
            let fwd = stage_forward(stage);
            let subs = stage_substitution(stage);
            let ch = lift_chart(stage);
            for k in 0..4 {
                assert_eq!(fwd[k].substitute(&subs).unwrap(), RatFun::var(ch.coords[k]));
            }
        }
    }
}
