//! Sparse multivariate polynomials over Q in graded-lexicographic order.

use super::var::{Var, NVARS};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// Exponent vector over the fixed variable list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub [u16; NVARS]);

impl Monomial {
    /// The monomial `1`.
    pub fn one() -> Self {
        Monomial([0; NVARS])
    }

    /// The monomial `v^e`.
    pub fn var_pow(v: Var, e: u16) -> Self {
        let mut m = [0; NVARS];
        m[v.index()] = e;
        Monomial(m)
    }

    /// Total degree.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    /// Exponent of a single variable.
    pub fn exp(&self, v: Var) -> u16 {
        self.0[v.index()]
    }

    /// Product of two monomials.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut m = self.0;
        for (a, b) in m.iter_mut().zip(other.0.iter()) {
            *a += *b;
        }
        Monomial(m)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut m = self.0;
        for (a, b) in m.iter_mut().zip(other.0.iter()) {
            if *a < *b {
                return None;
            }
            *a -= *b;
        }
        Some(Monomial(m))
    }

    /// Componentwise minimum (the monomial gcd).
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut m = self.0;
        for (a, b) in m.iter_mut().zip(other.0.iter()) {
            *a = (*a).min(*b);
        }
        Monomial(m)
    }

    /// True for the monomial `1`.
    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial stored as terms sorted by decreasing graded-lex monomial,
/// with no zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: Vec<(Monomial, BigRational)>,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Poly {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    /// The constant `1`.
    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    /// A constant polynomial.
    pub fn constant(c: BigRational) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![(Monomial::one(), c)],
            }
        }
    }

    /// A single term `c * m`.
    pub fn term(c: BigRational, m: Monomial) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![(m, c)],
            }
        }
    }

    /// The variable `v`.
    pub fn var(v: Var) -> Self {
        Poly::term(BigRational::one(), Monomial::var_pow(v, 1))
    }

    /// Build from unsorted terms, merging duplicates and dropping zeros.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, BigRational)>>(it: I) -> Self {
        let mut map: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (m, c) in it {
            let e = map.entry(m).or_insert_with(BigRational::zero);
            *e += c;
        }
        let mut terms: Vec<_> = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.reverse();
        Poly { terms }
    }

    /// Terms in decreasing monomial order.
    pub fn terms(&self) -> &[(Monomial, BigRational)] {
        &self.terms
    }

    /// True for the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True for a nonzero constant or zero.
    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    /// The constant value when [`Poly::is_constant`] holds.
    pub fn constant_value(&self) -> Option<BigRational> {
        if self.terms.is_empty() {
            Some(BigRational::zero())
        } else if self.is_constant() {
            Some(self.terms[0].1.clone())
        } else {
            None
        }
    }

    /// True for the constant `1`.
    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    /// Number of terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// True when there are no terms.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Leading term in graded-lex order.
    pub fn leading(&self) -> Option<&(Monomial, BigRational)> {
        self.terms.first()
    }

    /// Leading coefficient (zero for the zero polynomial).
    pub fn leading_coeff(&self) -> BigRational {
        self.terms
            .first()
            .map(|t| t.1.clone())
            .unwrap_or_else(BigRational::zero)
    }

    /// Total degree (zero for constants and for the zero polynomial).
    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.0.degree()).max().unwrap_or(0)
    }

    /// Degree in a single variable.
    pub fn degree_in(&self, v: Var) -> u16 {
        self.terms.iter().map(|t| t.0.exp(v)).max().unwrap_or(0)
    }

    /// Bitmask of variables that occur.
    pub fn var_mask(&self) -> u32 {
        let mut mask = 0u32;
        for (m, _) in &self.terms {
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    mask |= 1 << i;
                }
            }
        }
        mask
    }

    /// Variables that occur, in declared order.
    pub fn variables(&self) -> Vec<Var> {
        let mask = self.var_mask();
        Var::ALL
            .iter()
            .copied()
            .filter(|v| mask & (1 << v.index()) != 0)
            .collect()
    }

    /// Sum.
    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (ma, ca) = &self.terms[i];
            let (mb, cb) = &other.terms[j];
            match ma.cmp(mb) {
                Ordering::Greater => {
                    out.push((*ma, ca.clone()));
                    i += 1;
                }
                Ordering::Less => {
                    out.push((*mb, cb.clone()));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = ca + cb;
                    if !c.is_zero() {
                        out.push((*ma, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&other.terms[j..]);
        Poly { terms: out }
    }

    /// Negation.
    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }

    /// Difference.
    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    /// Product.
    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = other.constant_value() {
            return self.scale(&c);
        }
        if let Some(c) = self.constant_value() {
            return other.scale(&c);
        }
        let mut map: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let e = map.entry(ma.mul(mb)).or_insert_with(BigRational::zero);
                *e += ca * cb;
            }
        }
        let mut terms: Vec<_> = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.reverse();
        Poly { terms }
    }

    /// Multiply by a rational scalar.
    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, a)| (*m, a * c)).collect(),
        }
    }

    /// Multiply by a monomial.
    pub fn mul_monomial(&self, m: &Monomial) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(a, c)| (a.mul(m), c.clone()))
                .collect(),
        }
    }

    /// Non-negative integer power.
    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Divide every coefficient by the leading coefficient.
    pub fn monic(&self) -> Poly {
        match self.terms.first() {
            None => Poly::zero(),
            Some((_, lc)) if lc.is_one() => self.clone(),
            Some((_, lc)) => {
                let inv = lc.recip();
                self.scale(&inv)
            }
        }
    }

    /// Gcd of all monomials that occur.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.iter();
        let first = match it.next() {
            None => return Monomial::one(),
            Some(t) => t.0,
        };
        it.fold(first, |acc, t| acc.gcd(&t.0))
    }

    /// Divide by a monomial that divides every term.
    pub fn div_monomial(&self, m: &Monomial) -> Option<Poly> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (a, c) in &self.terms {
            terms.push((a.div(m)?, c.clone()));
        }
        Some(Poly { terms })
    }

    /// Exact division: `Some(q)` with `self = q * d`, or `None` when `d` does not divide.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.constant_value() {
            return Some(self.scale(&c.recip()));
        }
        if d.terms.len() == 1 {
            let (m, c) = &d.terms[0];
            return self.div_monomial(m).map(|p| p.scale(&c.recip()));
        }
        let (ld, lc) = d.terms[0].clone();
        let lc_inv = lc.recip();
        let mut r = self.clone();
        let mut q = Vec::new();
        while let Some((lm, c)) = r.terms.first().cloned() {
            let qm = lm.div(&ld)?;
            let qc = &c * &lc_inv;
            let t = Poly::term(qc.clone(), qm);
            r = r.sub(&t.mul(d));
            q.push((qm, qc));
        }
        Some(Poly::from_terms(q))
    }

    /// Partial derivative.
    pub fn derive(&self, v: Var) -> Poly {
        let k = v.index();
        Poly::from_terms(self.terms.iter().filter_map(|(m, c)| {
            let e = m.0[k];
            if e == 0 {
                None
            } else {
                let mut mm = *m;
                mm.0[k] -= 1;
                Some((mm, c * rat(e as i64)))
            }
        }))
    }

    /// Coefficients as a polynomial in `v`: entry `i` multiplies `v^i`.
    pub fn coeffs_in(&self, v: Var) -> Vec<Poly> {
        let k = v.index();
        let deg = self.degree_in(v) as usize;
        let mut buckets: Vec<Vec<(Monomial, BigRational)>> = vec![Vec::new(); deg + 1];
        for (m, c) in &self.terms {
            let e = m.0[k] as usize;
            let mut mm = *m;
            mm.0[k] = 0;
            buckets[e].push((mm, c.clone()));
        }
        buckets.into_iter().map(Poly::from_terms).collect()
    }

    /// Reassemble from coefficients in `v`.
    pub fn from_coeffs_in(v: Var, coeffs: &[Poly]) -> Poly {
        let mut terms = Vec::new();
        for (i, c) in coeffs.iter().enumerate() {
            let vm = Monomial::var_pow(v, i as u16);
            for (m, a) in &c.terms {
                terms.push((m.mul(&vm), a.clone()));
            }
        }
        Poly::from_terms(terms)
    }

    /// Evaluate at an exact rational point (indexed by variable).
    pub fn eval_exact(&self, point: &[Option<BigRational>; NVARS]) -> Result<BigRational, Var> {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    let val = point[i].as_ref().ok_or(Var::ALL[i])?;
                    t *= num_traits::pow::pow(val.clone(), e as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Evaluate in floating point.
    pub fn eval_f64(&self, point: &[Option<f64>; NVARS]) -> Result<f64, Var> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = rat_to_f64(c);
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    let val = point[i].ok_or(Var::ALL[i])?;
                    t *= val.powi(e as i32);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Substitute polynomial values for some variables.
    pub fn substitute(&self, subs: &[(Var, Poly)]) -> Poly {
        let mut cache: Vec<Vec<Poly>> = subs
            .iter()
            .map(|(_, p)| vec![Poly::one(), p.clone()])
            .collect();
        let mut acc = Poly::zero();
        for (m, c) in &self.terms {
            let mut mm = *m;
            let mut t = Poly::one();
            for (si, (v, p)) in subs.iter().enumerate() {
                let e = mm.0[v.index()] as usize;
                if e == 0 {
                    continue;
                }
                mm.0[v.index()] = 0;
                while cache[si].len() <= e {
                    let next = cache[si].last().unwrap().mul(p);
                    cache[si].push(next);
                }
                t = t.mul(&cache[si][e]);
            }
            acc = acc.add(&t.mul_monomial(&mm).scale(c));
        }
        acc
    }

    /// Least common multiple of the coefficient denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        let mut l = BigInt::one();
        for (_, c) in &self.terms {
            l = num_integer::Integer::lcm(&l, c.denom());
        }
        l
    }
}

/// Lossy conversion of a big rational to `f64`, robust to huge numerators.
pub fn rat_to_f64(c: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    match (c.numer().to_f64(), c.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let nb = c.numer().bits() as i64;
            let db = c.denom().bits() as i64;
            let shift = (nb - db).clamp(-1000, 1000);
            let scaled = if shift > 0 {
                BigRational::new(c.numer().clone(), c.denom() << (shift as usize))
            } else {
                BigRational::new(c.numer() << ((-shift) as usize), c.denom().clone())
            };
            let n = scaled.numer().to_f64().unwrap_or(f64::NAN);
            let d = scaled.denom().to_f64().unwrap_or(f64::NAN);
            (n / d) * 2f64.powi(shift as i32)
        }
    }
}

pub(crate) fn fmt_rational(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mut factors: Vec<String> = Vec::new();
            if !a.is_one() || m.is_one() {
                factors.push(fmt_rational(&a));
            }
            for (k, &e) in m.0.iter().enumerate() {
                if e == 1 {
                    factors.push(Var::ALL[k].name().to_string());
                } else if e > 1 {
                    factors.push(format!("{}^{}", Var::ALL[k].name(), e));
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}
