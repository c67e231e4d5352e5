//! Multivariate polynomial gcd over Q.
//!
//! Monomial and constant factors are split off first because they are by
//! far the most common case for the metrics handled here. The general case
//! recurses on the smallest variable: the gcd of the contents (polynomials
//! in fewer variables) times the gcd of the primitive parts, which is
//! computed with a primitive pseudo-remainder sequence.

use super::poly::Poly;
use super::var::Var;

/// Gcd of two polynomials, normalized to leading coefficient one.
/// `gcd(0, 0) = 0`.
pub fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let m = ma.gcd(&mb);
    let a1 = a.div_monomial(&ma).expect("monomial content divides");
    let b1 = b.div_monomial(&mb).expect("monomial content divides");
    let mono = Poly::term(num_traits::One::one(), m);
    if a1.is_constant() || b1.is_constant() {
        return mono;
    }
    if a1 == b1 || a1.monic() == b1.monic() {
        return mono.mul(&a1).monic();
    }
    mono.mul(&gcd_rec(&a1.monic(), &b1.monic())).monic()
}

fn lowest_var(mask: u32) -> Option<Var> {
    if mask == 0 {
        None
    } else {
        Some(Var::ALL[mask.trailing_zeros() as usize])
    }
}

fn gcd_rec(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    let (maska, maskb) = (a.var_mask(), b.var_mask());
    // A common divisor cannot involve a variable that only one side uses, so
    // it divides every coefficient with respect to that variable. Folding
    // over those coefficients keeps the remainder sequences below small.
    if let Some(v) = lowest_var(maska & !maskb) {
        return fold_coeffs(b, a, v);
    }
    if let Some(v) = lowest_var(maskb & !maska) {
        return fold_coeffs(a, b, v);
    }
    let v = lowest_var(maska | maskb).expect("non-constant polynomial has a variable");
    let bit = 1u32 << v.index();
    if maska & bit == 0 {
        return poly_gcd(a, &content_in(b, v));
    }
    if maskb & bit == 0 {
        return poly_gcd(&content_in(a, v), b);
    }
    let ca = content_in(a, v);
    let cb = content_in(b, v);
    let pa = a.div_exact(&ca).expect("content divides");
    let pb = b.div_exact(&cb).expect("content divides");
    let cg = poly_gcd(&ca, &cb);
    let pg = primitive_prs(pa, pb, v);
    cg.mul(&pg).monic()
}

/// `gcd(g, p)` where `g` does not involve `v`: the gcd of `g` with every
/// coefficient of `p` in `v`.
fn fold_coeffs(g: &Poly, p: &Poly, v: Var) -> Poly {
    let mut acc = g.monic();
    for c in p.coeffs_in(v).iter().filter(|c| !c.is_zero()) {
        acc = poly_gcd(&acc, c);
        if acc.is_one() {
            break;
        }
    }
    acc
}

/// Gcd of the coefficients of `p` viewed as a polynomial in `v`.
pub fn content_in(p: &Poly, v: Var) -> Poly {
    let coeffs = p.coeffs_in(v);
    let mut g = Poly::zero();
    for c in coeffs.iter().filter(|c| !c.is_zero()) {
        g = poly_gcd(&g, c);
        if g.is_one() {
            break;
        }
    }
    g
}

/// Primitive part with respect to `v`, normalized to leading coefficient one.
pub fn primitive_part_in(p: &Poly, v: Var) -> Poly {
    if p.is_zero() {
        return Poly::zero();
    }
    let c = content_in(p, v);
    p.div_exact(&c).expect("content divides").monic()
}

/// Sparse pseudo-remainder of `a` by `b` with respect to `v`.
pub fn pseudo_rem(a: &Poly, b: &Poly, v: Var) -> Poly {
    let db = b.degree_in(v);
    let bc = b.coeffs_in(v);
    let lb = bc.last().cloned().unwrap_or_else(Poly::zero);
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(v) >= db {
        let dr = r.degree_in(v);
        let lr = r.coeffs_in(v).pop().unwrap();
        let shift = super::poly::Monomial::var_pow(v, dr - db);
        r = lb.mul(&r).sub(&lr.mul(b).mul_monomial(&shift));
    }
    r
}

fn primitive_prs(a: Poly, b: Poly, v: Var) -> Poly {
    let (mut a, mut b) = if a.degree_in(v) >= b.degree_in(v) {
        (a, b)
    } else {
        (b, a)
    };
    loop {
        if b.is_zero() {
            return primitive_part_in(&a, v);
        }
        if b.degree_in(v) == 0 {
            return Poly::one();
        }
        let r = pseudo_rem(&a, &b, v);
        a = b;
        b = if r.is_zero() {
            r
        } else {
            primitive_part_in(&r, v)
        };
    }
}
