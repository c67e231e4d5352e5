//! Independent oracles shared by the integration tests and the acceptance
//! harness. Nothing here calls into the symbolic machinery under test:
//! metrics are written out as closed-form `f64` closures, derivatives come
//! from central differences with one Richardson step, and blow-up maps are
//! typed in by hand.

#![allow(dead_code)]

use alh_lab::ratfun::{RatFun, Var};
use nalgebra::Matrix4;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// A metric given pointwise in closed form.
pub type MetricFn = dyn Fn([f64; 4]) -> [[f64; 4]; 4];

/// The Gibbons-Hawking metric `x^-5 dx^2 + x^-1 dy^2 + x Theta^2` written
/// out by hand.
pub fn gh_closed_form(p: [f64; 4]) -> [[f64; 4]; 4] {
    let (x, y1) = (p[0], p[1]);
    let mut g = [[0.0; 4]; 4];
    g[0][0] = x.powi(-5);
    g[1][1] = 1.0 / x;
    g[2][2] = 1.0 / x + x * y1 * y1;
    g[2][3] = x * y1;
    g[3][2] = x * y1;
    g[3][3] = x;
    g
}

/// `x^-1` times the Gibbons-Hawking metric.
pub fn metric_a_closed_form(p: [f64; 4]) -> [[f64; 4]; 4] {
    let mut g = gh_closed_form(p);
    for row in g.iter_mut() {
        for v in row.iter_mut() {
            *v /= p[0];
        }
    }
    g
}

/// Round sphere of radius one in stereographic coordinates `(x, y1)` times
/// a flat torus in `(y2, theta)`; scalar curvature is exactly 2.
pub fn sphere_torus(p: [f64; 4]) -> [[f64; 4]; 4] {
    let f = 4.0 / (1.0 + p[0] * p[0] + p[1] * p[1]).powi(2);
    let mut g = [[0.0; 4]; 4];
    g[0][0] = f;
    g[1][1] = f;
    g[2][2] = 1.0;
    g[3][3] = 1.0;
    g
}

/// Central difference of `f` along coordinate `m`, improved by one
/// Richardson step: `(4 D(h/2) - D(h)) / 3`, which is fourth-order.
fn richardson_partial<const N: usize>(
    f: &dyn Fn([f64; 4]) -> [f64; N],
    p: [f64; 4],
    m: usize,
    h: f64,
) -> [f64; N] {
    let central = |h: f64| {
        let mut a = p;
        let mut b = p;
        a[m] += h;
        b[m] -= h;
        let (fa, fb) = (f(a), f(b));
        let mut out = [0.0; N];
        for k in 0..N {
            out[k] = (fa[k] - fb[k]) / (2.0 * h);
        }
        out
    };
    let d1 = central(h);
    let d2 = central(h / 2.0);
    let mut out = [0.0; N];
    for k in 0..N {
        out[k] = (4.0 * d2[k] - d1[k]) / 3.0;
    }
    out
}

fn flatten(g: [[f64; 4]; 4]) -> [f64; 16] {
    let mut out = [0.0; 16];
    for i in 0..4 {
        for j in 0..4 {
            out[i * 4 + j] = g[i][j];
        }
    }
    out
}

/// Christoffel symbols `Gamma^l_{ij}`, flattened as `(l * 4 + i) * 4 + j`,
/// from finite differences of the metric with step `h`.
pub fn fd_christoffel(g: &MetricFn, p: [f64; 4], h: f64) -> [f64; 64] {
    let flat = |q: [f64; 4]| flatten(g(q));
    let dg: Vec<[f64; 16]> = (0..4).map(|m| richardson_partial(&flat, p, m, h)).collect();
    let gm = g(p);
    let inv = Matrix4::from_fn(|i, j| gm[i][j])
        .try_inverse()
        .expect("nondegenerate metric");
    let mut out = [0.0; 64];
    for l in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = 0.0;
                for m in 0..4 {
                    acc += inv[(l, m)] * (dg[i][m * 4 + j] + dg[j][m * 4 + i] - dg[m][i * 4 + j]);
                }
                out[(l * 4 + i) * 4 + j] = 0.5 * acc;
            }
        }
    }
    out
}

/// `R^l_{kij}` flattened as `((l * 4 + k) * 4 + i) * 4 + j`, with
/// `R^l_{kij} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik} + Gamma^l_{im} Gamma^m_{jk} - Gamma^l_{jm} Gamma^m_{ik}`.
///
/// The outer derivative uses step `h_outer`, the inner one `h_inner`.
pub fn fd_riemann(g: &MetricFn, p: [f64; 4], h_outer: f64, h_inner: f64) -> Vec<f64> {
    let gam_at = |q: [f64; 4]| fd_christoffel(g, q, h_inner);
    let dgam: Vec<[f64; 64]> = (0..4)
        .map(|m| richardson_partial(&gam_at, p, m, h_outer))
        .collect();
    let gam = gam_at(p);
    let gi = |l: usize, i: usize, j: usize| gam[(l * 4 + i) * 4 + j];
    let mut out = vec![0.0; 256];
    for l in 0..4 {
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let mut acc = dgam[i][(l * 4 + j) * 4 + k] - dgam[j][(l * 4 + i) * 4 + k];
                    for m in 0..4 {
                        acc += gi(l, i, m) * gi(m, j, k) - gi(l, j, m) * gi(m, i, k);
                    }
                    out[((l * 4 + k) * 4 + i) * 4 + j] = acc;
                }
            }
        }
    }
    out
}

/// `Ric_{jk} = R^i_{jik}` from a flattened Riemann tensor.
pub fn ricci_from(riem: &[f64]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for j in 0..4 {
        for k in 0..4 {
            out[j][k] = (0..4).map(|i| riem[((i * 4 + j) * 4 + i) * 4 + k]).sum();
        }
    }
    out
}

/// Scalar curvature `g^{jk} Ric_{jk}`.
pub fn scalar_from(g: &MetricFn, p: [f64; 4], ric: &[[f64; 4]; 4]) -> f64 {
    let gm = g(p);
    let inv = Matrix4::from_fn(|i, j| gm[i][j])
        .try_inverse()
        .expect("nondegenerate metric");
    let mut s = 0.0;
    for j in 0..4 {
        for k in 0..4 {
            s += inv[(j, k)] * ric[j][k];
        }
    }
    s
}

/// Finite-difference steps scaled to the radial coordinate so that the
/// relative truncation error is uniform across the sampled range.
pub fn steps_for(x: f64) -> (f64, f64) {
    (2e-3 * x, 1e-3 * x)
}

/// Exact rational from a small fraction.
pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// The old left coordinates `(x, y1, y2, theta)` as functions of the new
/// projective coordinates `w` and the right base point, for each blow-up
/// stage, written out by hand. Also returns the exact Jacobian
/// `d(old)/d(new)` of this inverse map.
pub fn inverse_blowup(
    stage: char,
    w: &[BigRational; 4],
    base: &[BigRational; 3],
) -> ([BigRational; 4], [[BigRational; 4]; 4]) {
    let (xt, y1t, y2t) = (&base[0], &base[1], &base[2]);
    let one = BigRational::one();
    let zero = BigRational::zero();
    let mut jac: [[BigRational; 4]; 4] = std::array::from_fn(|i| {
        std::array::from_fn(|j| if i == j { one.clone() } else { zero.clone() })
    });
    let old = match stage {
        'b' => {
            jac[0][0] = xt.clone();
            [xt * &w[0], w[1].clone(), w[2].clone(), w[3].clone()]
        }
        'c' => {
            jac[0][0] = xt * xt;
            [
                xt * (&one + xt * &w[0]),
                w[1].clone(),
                w[2].clone(),
                w[3].clone(),
            ]
        }
        'a' => {
            jac[0][0] = xt * xt * xt;
            jac[1][1] = xt.clone();
            jac[2][2] = xt.clone();
            [
                xt * (&one + xt * xt * &w[0]),
                y1t + xt * &w[1],
                y2t + xt * &w[2],
                w[3].clone(),
            ]
        }
        _ => panic!("unknown stage {stage}"),
    };
    (old, jac)
}

/// Exact inverse of a 4x4 rational matrix by Gauss-Jordan elimination.
pub fn invert4(m: &[[BigRational; 4]; 4]) -> [[BigRational; 4]; 4] {
    let mut a: Vec<Vec<BigRational>> = m.iter().map(|r| r.to_vec()).collect();
    let mut inv: Vec<Vec<BigRational>> = (0..4)
        .map(|i| {
            (0..4)
                .map(|j| {
                    if i == j {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..4 {
        let piv = (col..4)
            .find(|&r| !a[r][col].is_zero())
            .expect("invertible");
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].clone();
        for j in 0..4 {
            a[col][j] = &a[col][j] / &p;
            inv[col][j] = &inv[col][j] / &p;
        }
        for r in 0..4 {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..4 {
                    let (ac, ic) = (a[col][j].clone(), inv[col][j].clone());
                    a[r][j] = &a[r][j] - &f * ac;
                    inv[r][j] = &inv[r][j] - &f * ic;
                }
            }
        }
    }
    std::array::from_fn(|i| std::array::from_fn(|j| inv[i][j].clone()))
}

/// Evaluate a rational function exactly at the given variable values.
pub fn eval_exact(f: &RatFun, vals: &[(Var, BigRational)]) -> BigRational {
    let mut pt = alh_lab::ratfun::Point::new();
    for (v, c) in vals {
        pt.set(*v, c.clone());
    }
    f.eval(&pt).expect("exact evaluation")
}

/// Brute-force real roots of a polynomial given by an evaluator: sample on
/// a fine grid over `[lo, hi]`, bracket sign changes and exact zeros, then
/// bisect. Double roots without a sign change are caught through the grid
/// points where the value vanishes exactly.
pub fn brute_force_roots(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut roots: Vec<f64> = Vec::new();
    let step = (hi - lo) / n as f64;
    let push = |r: f64, roots: &mut Vec<f64>| {
        if roots.iter().all(|s| (s - r).abs() > 1e-6) {
            roots.push(r);
        }
    };
    for i in 0..n {
        let a = lo + i as f64 * step;
        let b = a + step;
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            push(a, &mut roots);
        } else if fa * fb < 0.0 {
            let (mut l, mut r) = (a, b);
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                if f(l) * f(m) <= 0.0 {
                    r = m;
                } else {
                    l = m;
                }
            }
            push(0.5 * (l + r), &mut roots);
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}
