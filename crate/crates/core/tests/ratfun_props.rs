//! Field axioms and calculus rules for exact rational functions, checked on
//! randomly generated inputs.

use alh_lab::ratfun::{q, Point, RatFun, Var};
use proptest::prelude::*;
use std::time::{Duration, Instant};

const VARS: [Var; 4] = [Var::X, Var::Y1, Var::Y2, Var::Theta];

/// A random polynomial with up to three terms of degree at most two per
/// variable.
fn poly() -> impl Strategy<Value = RatFun> {
    prop::collection::vec((-5i64..6, prop::array::uniform4(0i32..3)), 1..4).prop_map(|terms| {
        let mut f = RatFun::zero();
        for (c, exps) in terms {
            let mut t = RatFun::int(c);
            for (v, e) in VARS.iter().zip(exps) {
                t = t.mul(&RatFun::var_pow(*v, e)).unwrap();
            }
            f = f.add(&t).unwrap();
        }
        f
    })
}

/// A random quotient whose denominator is a positive polynomial.
fn ratfun() -> impl Strategy<Value = RatFun> {
    (poly(), 1i64..4, 0usize..2).prop_map(|(n, c, v)| {
        let y = RatFun::var(VARS[v]);
        let den = y.mul(&y).unwrap().add(&RatFun::int(c)).unwrap();
        n.div(&den).unwrap()
    })
}

fn sample_point() -> Point {
    Point::new()
        .with(Var::X, q(3, 7))
        .with(Var::Y1, q(-2, 5))
        .with(Var::Y2, q(5, 3))
        .with(Var::Theta, q(1, 4))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn field_axioms(a in ratfun(), b in ratfun(), c in ratfun()) {
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(a.add(&b).unwrap().add(&c).unwrap(), a.add(&b.add(&c).unwrap()).unwrap());
        prop_assert_eq!(
            a.mul(&b.add(&c).unwrap()).unwrap(),
            a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
        );
        prop_assert!(a.sub(&a).unwrap().is_zero());
        if !a.is_zero() {
            prop_assert!(a.div(&a).unwrap().is_one());
        }
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in ratfun(), b in ratfun()) {
        let p = sample_point();
        let (va, vb) = (a.eval(&p).unwrap(), b.eval(&p).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap().eval(&p).unwrap(), &va * &vb);
        prop_assert_eq!(a.sub(&b).unwrap().eval(&p).unwrap(), &va - &vb);
    }

    #[test]
    fn leibniz_rule(a in ratfun(), b in ratfun(), vi in 0usize..4) {
        let v = VARS[vi];
        let lhs = a.mul(&b).unwrap().derive(v).unwrap();
        let rhs = a.derive(v).unwrap().mul(&b).unwrap().add(&a.mul(&b.derive(v).unwrap()).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn mixed_partials_commute(a in ratfun(), i in 0usize..4, j in 0usize..4) {
        let ab = a.derive(VARS[i]).unwrap().derive(VARS[j]).unwrap();
        let ba = a.derive(VARS[j]).unwrap().derive(VARS[i]).unwrap();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn substitution_commutes_with_evaluation(a in ratfun(), s in poly()) {
        // Substitute y2 -> s and compare with evaluating s first.
        let p = sample_point();
        let sv = s.eval(&p).unwrap();
        let lhs = a.substitute(&[(Var::Y2, s.clone())]);
        let p2 = sample_point().with(Var::Y2, sv);
        match (lhs, a.eval(&p2)) {
            (Ok(f), Ok(v)) => prop_assert_eq!(f.eval(&p).unwrap(), v),
            (Err(_), _) | (_, Err(_)) => {}
        }
    }

    #[test]
    fn display_parse_round_trip(a in ratfun()) {
        let s = a.to_string();
        prop_assert_eq!(RatFun::parse(&s).unwrap(), a);
    }
}

#[test]
fn quotient_with_distinct_denominators_is_fast() {
    // Two coprime denominators in x against numerators in all four
    // coordinates; the gcd must not fall back to a long remainder sequence.
    let start = Instant::now();
    let a = RatFun::parse("(3*x^2*y1*theta^2 - 2*y2^2*theta + x*y1^2*y2)/(x^2 + 2)").unwrap();
    let b = RatFun::parse("(x*y1^2*theta^2 - 4*y2*theta + x^2*y1*y2^2)/(x^2 + 3)").unwrap();
    let s = a
        .derive(Var::Y2)
        .unwrap()
        .sub(&b.derive(Var::Y1).unwrap())
        .unwrap();
    let d = s.derive(Var::X).unwrap();
    assert_eq!(d.denom().to_string(), "x^8 + 10*x^6 + 37*x^4 + 60*x^2 + 36");
    assert!(
        start.elapsed() < Duration::from_secs(10),
        "took {:?}",
        start.elapsed()
    );
}

#[test]
fn cancellation_and_normal_form() {
    let f = RatFun::parse("(x^2 - 1)/(x - 1)").unwrap();
    assert_eq!(f, RatFun::parse("x + 1").unwrap());
    let g = RatFun::parse("(x*y1 - x*y2)/(2*y1 - 2*y2)").unwrap();
    assert_eq!(g, RatFun::parse("x/2").unwrap());
    assert!(RatFun::parse("1/0").is_err());
}
