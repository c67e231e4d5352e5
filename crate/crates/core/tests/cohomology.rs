//! Dimension tables for L2 harmonic forms and the moduli space.

use alh_lab::cohomology::{
    ih_selector, l2_hodge_dim, l2_hodge_table, moduli_dim, weight_shift, wh_interval,
    CohomologyError, IntervalDegree, IntervalValue, BRACKET_CONVENTION,
};

#[test]
fn hodge_dimensions_for_every_degree() {
    for b in 1..=9 {
        let dims: Vec<i64> = (0..=4).map(|k| l2_hodge_dim(b, k).unwrap()).collect();
        assert_eq!(dims, vec![0, 0, 11 - b, 0, 0], "b={b}");
        for k in 0..=4 {
            assert_eq!(
                dims[k as usize],
                dims[(4 - k) as usize],
                "Poincare symmetry b={b} k={k}"
            );
        }
        let table = l2_hodge_table(b).unwrap();
        assert_eq!(table.iter().map(|e| e.dim).collect::<Vec<_>>(), dims);
    }
    assert_eq!(
        l2_hodge_dim(10, 2),
        Err(CohomologyError::DegreeOutOfRange(10))
    );
    assert_eq!(
        l2_hodge_dim(3, 5),
        Err(CohomologyError::FormDegreeOutOfRange(5))
    );
}

#[test]
fn moduli_dimension_split() {
    for b in 1..=9 {
        let m = moduli_dim(b).unwrap();
        assert_eq!(m.total, 3 * (10 - b));
        assert_eq!(m.from_l2, 3 * (9 - b));
        assert_eq!(m.from_infinity, 3);
        assert_eq!(m.from_l2 + m.from_infinity, m.total);
        // The anti-self-dual part of the L2 harmonic 2-forms has dimension
        // 9 - b, two less than the full space.
        assert_eq!(m.from_l2 / 3, l2_hodge_dim(b, 2).unwrap() - 2);
    }
    assert!(moduli_dim(0).is_err());
}

#[test]
fn half_line_cohomology() {
    // The three listed cases.
    assert_eq!(wh_interval(IntervalDegree::Zero, -1.0), IntervalValue::One);
    assert_eq!(wh_interval(IntervalDegree::Zero, -0.5), IntervalValue::Zero);
    assert_eq!(wh_interval(IntervalDegree::One, 0.7), IntervalValue::Zero);
    assert_eq!(
        wh_interval(IntervalDegree::One, 0.0),
        IntervalValue::Undefined
    );
    assert_eq!(IntervalValue::Undefined.dim(), None);
    // Degree 0 is nonincreasing in the weight.
    let mut prev = i64::MAX;
    for i in -40..40 {
        let d = wh_interval(IntervalDegree::Zero, i as f64 / 10.0)
            .dim()
            .unwrap();
        assert!(d <= prev);
        prev = d;
    }
}

#[test]
fn perversity_selection() {
    assert_eq!(BRACKET_CONVENTION, "floor");
    assert_eq!(weight_shift(-0.25, 2), 0);
    assert_eq!(weight_shift(0.25, 2), 1);
    assert_eq!(weight_shift(-3.0, 0), -1);
    assert_eq!(ih_selector(weight_shift(-3.0, 0)), "H*(X\u{2212}B)");
    assert_eq!(ih_selector(weight_shift(-0.25, 2)), "IH_p(X)");
    assert_eq!(ih_selector(weight_shift(0.25, 2)), "H*(X,B)");
}
