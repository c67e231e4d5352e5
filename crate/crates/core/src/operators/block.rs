//! The block form of `d + delta` near the boundary.
//!
//! A `k`-form splits as `alpha_1 + (dx / x^{5/2}) ^ alpha_2` with each part
//! further split into its `Theta`-free and `Theta`-containing pieces,
//! giving four components. In this splitting `d + delta` is a 4x4 matrix of
//! operators built from the base Dirac operator `D_B`, the fibre
//! operators `d_F`, `delta_F`, the curvature coupling `R` (with adjoint
//! `R*`), and the radial derivative. Each entry is a sum of terms
//! `coeff * x^p * op`.

use super::modes::ModeReducedOp;
use crate::ratfun::{fmt_q, q, RatFun, Var};
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::fmt;

/// Elementary operators appearing in the block matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockOp {
    /// Multiplication (identity).
    Identity,
    /// The radial derivative `d/dx`.
    Dx,
    /// The twisted base Dirac operator `D_B`.
    DiracBase,
    /// Fibre exterior derivative `d_F`.
    DFibre,
    /// Fibre codifferential `delta_F`.
    DeltaFibre,
    /// Curvature coupling `R`.
    Curv,
    /// Its adjoint `R*`.
    CurvAdj,
}

impl BlockOp {
    fn symbol(self) -> &'static str {
        match self {
            BlockOp::Identity => "",
            BlockOp::Dx => "d_x",
            BlockOp::DiracBase => "D_B",
            BlockOp::DFibre => "d_F",
            BlockOp::DeltaFibre => "delta_F",
            BlockOp::Curv => "R",
            BlockOp::CurvAdj => "R*",
        }
    }

    /// True for operators that act only through the base or fibre
    /// directions and therefore vanish on functions of `x` alone.
    pub fn is_tangential(self) -> bool {
        matches!(
            self,
            BlockOp::DiracBase | BlockOp::DFibre | BlockOp::DeltaFibre
        )
    }
}

/// One term `coeff * x^x_power * op`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTerm {
    /// Rational coefficient.
    pub coeff: BigRational,
    /// Power of `x` (half-integer).
    pub x_power: BigRational,
    /// Elementary operator.
    pub op: BlockOp,
}

/// A block entry: a sum of terms.
pub type BlockEntry = Vec<BlockTerm>;

/// The 4x4 block form of `d + delta` on `k`-forms.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockOperator {
    /// Form degree.
    pub degree: u32,
    /// Entries, row-major, 0-based.
    pub entries: [[BlockEntry; 4]; 4],
}

fn t(coeff: BigRational, x_power: BigRational, op: BlockOp) -> BlockTerm {
    BlockTerm { coeff, x_power, op }
}

impl BlockOperator {
    /// Entry with 1-based indices, as in the usual matrix notation.
    pub fn entry(&self, row: usize, col: usize) -> &BlockEntry {
        &self.entries[row - 1][col - 1]
    }

    /// Coefficient of `x^p * op` in an entry (1-based), zero if absent.
    pub fn coefficient(
        &self,
        row: usize,
        col: usize,
        op: BlockOp,
        x_power: &BigRational,
    ) -> BigRational {
        self.entry(row, col)
            .iter()
            .filter(|t| t.op == op && &t.x_power == x_power)
            .fold(BigRational::zero(), |a, t| a + &t.coeff)
    }

    /// Restriction to functions of `x` alone with the curvature coupling
    /// dropped, multiplied by `x^{-3/2}`: a 4x4 first-order system in `x`
    /// whose diagonal blocks read `-(k-2)/2 + x d_x` and so on.
    pub fn radial_reduction(&self) -> ModeReducedOp {
        let shift = q(-3, 2);
        let mut op = ModeReducedOp::zero(
            Var::X,
            4,
            1,
            &format!("x^(-3/2) (d+delta) radial, k={}", self.degree),
        );
        for r in 0..4 {
            for c in 0..4 {
                for term in &self.entries[r][c] {
                    let j = match term.op {
                        BlockOp::Identity => 0,
                        BlockOp::Dx => 1,
                        _ => continue,
                    };
                    let p = &term.x_power + &shift;
                    let f = RatFun::constant(term.coeff.clone())
                        .mul(&x_pow(&p))
                        .expect("monomial");
                    let prev = op.coeffs[j][r][c].clone();
                    op.coeffs[j][r][c] = prev.add(&f).expect("monomial");
                }
            }
        }
        op
    }
}

fn x_pow(p: &BigRational) -> RatFun {
    assert!(p.is_integer(), "radial reduction produces integer powers");
    let e: i32 = p.to_integer().try_into().expect("small power");
    RatFun::var_pow(Var::X, e)
}

/// The block matrix of `d + delta` on `k`-forms.
///
/// Rows and columns follow the splitting
/// `(alpha_1 no Theta, alpha_1 with Theta, dx-part no Theta, dx-part with Theta)`.
/// The entries are
///
/// ```text
/// [ x^{1/2} D_B                    x^{-1/2} d_F + x^{3/2} R*      -(k-2)/2 x^{3/2} + x^{5/2} d_x   0                              ]
/// [ x^{-1/2} delta_F + x^{3/2} R   x^{1/2} D_B                    0                                -k/2 x^{3/2} + x^{5/2} d_x      ]
/// [ -(4-k)/2 x^{3/2} + x^{5/2} d_x 0                              x^{1/2} D_B                      x^{-1/2} d_F + x^{3/2} R*      ]
/// [ 0                              -(2-k)/2 x^{3/2} + x^{5/2} d_x x^{-1/2} delta_F + x^{3/2} R     x^{1/2} D_B                    ]
/// ```
pub fn hodge_derham_matrix(k: u32) -> Result<BlockOperator, super::OperatorError> {
    if k > 4 {
        return Err(super::OperatorError::Invalid(format!(
            "form degree {k} exceeds 4"
        )));
    }
    let kq = BigRational::from_integer(k.into());
    let one = BigRational::one();
    let half = q(1, 2);
    let mhalf = q(-1, 2);
    let three_half = q(3, 2);
    let five_half = q(5, 2);
    let two = BigRational::from_integer(2.into());
    let four = BigRational::from_integer(4.into());
    let base = || vec![t(one.clone(), half.clone(), BlockOp::DiracBase)];
    let fib_d = || {
        vec![
            t(one.clone(), mhalf.clone(), BlockOp::DFibre),
            t(one.clone(), three_half.clone(), BlockOp::CurvAdj),
        ]
    };
    let fib_delta = || {
        vec![
            t(one.clone(), mhalf.clone(), BlockOp::DeltaFibre),
            t(one.clone(), three_half.clone(), BlockOp::Curv),
        ]
    };
    let radial = |c: BigRational| {
        vec![
            t(-c / &two, three_half.clone(), BlockOp::Identity),
            t(one.clone(), five_half.clone(), BlockOp::Dx),
        ]
    };
    let z = Vec::new;
    let entries = [
        [base(), fib_d(), radial(&kq - &two), z()],
        [fib_delta(), base(), z(), radial(kq.clone())],
        [radial(&four - &kq), z(), base(), fib_d()],
        [z(), radial(&two - &kq), fib_delta(), base()],
    ];
    Ok(BlockOperator { degree: k, entries })
}

impl fmt::Display for BlockOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, row) in self.entries.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .map(|e| {
                    if e.is_empty() {
                        return "0".to_string();
                    }
                    e.iter()
                        .map(|t| {
                            let mut s = format!("{} x^{}", fmt_q(&t.coeff), fmt_q(&t.x_power));
                            if t.op != BlockOp::Identity {
                                s.push(' ');
                                s.push_str(t.op.symbol());
                            }
                            s
                        })
                        .collect::<Vec<_>>()
                        .join(" + ")
                })
                .collect();
            writeln!(f, "row {}: [{}]", r + 1, cells.join(" | "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_dependent_diagonal() {
        let m = hodge_derham_matrix(2).unwrap();
        assert!(m.coefficient(1, 3, BlockOp::Identity, &q(3, 2)).is_zero());
        assert_eq!(
            m.coefficient(1, 3, BlockOp::Dx, &q(5, 2)),
            BigRational::one()
        );
        let m0 = hodge_derham_matrix(0).unwrap();
        assert!(m0.coefficient(2, 4, BlockOp::Identity, &q(3, 2)).is_zero());
        assert_eq!(m0.coefficient(3, 1, BlockOp::Identity, &q(3, 2)), q(-2, 1));
        assert!(hodge_derham_matrix(5).is_err());
    }

    #[test]
    fn radial_reduction_entries() {
        let m = hodge_derham_matrix(1).unwrap();
        let r = m.radial_reduction();
        assert_eq!(r.coeffs[0][0][2], RatFun::frac(1, 2));
        assert_eq!(r.coeffs[1][0][2], RatFun::var(Var::X));
        assert_eq!(r.coeffs[0][1][3], RatFun::frac(-1, 2));
        assert!(r.coeffs[0][0][1].is_zero());
    }
}
