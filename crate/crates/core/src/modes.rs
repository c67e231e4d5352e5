//! Radial boundary value problems on a graded mesh, expansion fits and
//! discrete weighted norms.
//!
//! All discretizations use the logarithmic variable `tau = log x`, in which
//! the geometric grid is uniform and `x d/dx = d/dtau`:
//!
//! * scalar second-order operators use central differences in `tau`;
//! * first-order systems use the box (midpoint) scheme;
//! * the resulting banded systems are solved by [`BandMatrix`].
//!
//! Boundary behaviour at the inner end `x_0` is either prescribed or chosen
//! by "decay selection". For operators of `b`-type this keeps exactly the
//! indicial directions allowed by the weight (roots above `c + 1`); for
//! operators that are not of `b`-type (non-zero Fourier modes) the local
//! WKB exponent of the solution that decays toward `x = 0` is imposed as a
//! Robin condition.

use crate::indicial::{
    exponents_above, indicial_poly, indicial_roots, weight_window, IndicialError, L2_CUTOFF,
};
use crate::linalg::{BandError, BandMatrix};
use crate::operators::{ModeReducedOp, OperatorError};
use crate::ratfun::RatFunError;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from the radial solver and the fits.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModesError {
    #[error(
        "weight {0} is an indicial weight; the discrete problem is not uniquely solvable there"
    )]
    IndicialWeight(f64),
    #[error("discrete system is singular: {0}")]
    Singular(#[from] BandError),
    #[error("solution did not converge under grid refinement (estimated error {0:e})")]
    NonConvergence(f64),
    #[error("boundary conditions supply {given} conditions, the system needs {needed}")]
    BoundaryCount { given: usize, needed: usize },
    #[error("unsupported problem: {0}")]
    Unsupported(String),
    #[error("no candidate exponents above the cutoff for weight {0}")]
    EmptyCandidates(f64),
    #[error("fit window is empty: {0}")]
    EmptyWindow(String),
    #[error("decay selection failed: {0}")]
    Decay(String),
    #[error(transparent)]
    Indicial(#[from] IndicialError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    RatFun(#[from] RatFunError),
}

/// Result alias.
pub type ModesResult<T> = Result<T, ModesError>;

/// Tunable numerical parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModesConfig {
    /// Number of grid intervals.
    pub n: usize,
    /// Innermost node.
    pub x0: f64,
    /// Outermost node.
    pub x_max: f64,
    /// Maximum accepted relative residual of the discrete system.
    pub residual_tol: f64,
    /// Relative tolerance for exponential rate fits.
    pub rate_tol: f64,
    /// Maximum accepted relative residual of an expansion fit.
    pub expansion_tol: f64,
    /// Tolerance between the log-log slope and the nearest candidate.
    pub slope_tol: f64,
    /// Nodes next to each end excluded from fits.
    pub bc_nodes: usize,
    /// Smallest `|u|` used in exponential fits.
    pub exp_floor: f64,
    /// Largest change of `log |u|` per grid step used in exponential fits.
    pub exp_max_step: f64,
    /// Relative change tolerated between a grid and its refinement.
    pub refine_tol: f64,
}

impl Default for ModesConfig {
    fn default() -> Self {
        ModesConfig {
            n: 2000,
            x0: 1e-3,
            x_max: 0.5,
            residual_tol: 1e-8,
            rate_tol: 0.05,
            expansion_tol: 1e-4,
            slope_tol: 0.05,
            bc_nodes: 20,
            exp_floor: 1e-250,
            exp_max_step: 0.2,
            refine_tol: 1e-3,
        }
    }
}

impl ModesConfig {
    /// Override one field from a `key=value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let f = || value.parse::<f64>().map_err(|e| format!("{key}: {e}"));
        match key {
            "n" => self.n = value.parse().map_err(|e| format!("{key}: {e}"))?,
            "bc_nodes" => self.bc_nodes = value.parse().map_err(|e| format!("{key}: {e}"))?,
            "x0" => self.x0 = f()?,
            "x_max" => self.x_max = f()?,
            "residual_tol" => self.residual_tol = f()?,
            "rate_tol" => self.rate_tol = f()?,
            "expansion_tol" => self.expansion_tol = f()?,
            "slope_tol" => self.slope_tol = f()?,
            "exp_floor" => self.exp_floor = f()?,
            "exp_max_step" => self.exp_max_step = f()?,
            "refine_tol" => self.refine_tol = f()?,
            _ => return Err(format!("unknown configuration key '{key}'")),
        }
        Ok(())
    }

    /// The grid described by this configuration.
    pub fn grid(&self) -> RadialGrid {
        RadialGrid::geometric(self.x0, self.x_max, self.n)
    }
}

/// A geometric grid `x_i = x_max rho^{N-i}`, uniform in `tau = log x`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    /// Nodes, increasing.
    pub nodes: Vec<f64>,
    /// Step in `tau`.
    pub h: f64,
}

impl RadialGrid {
    /// `n` intervals between `x0` and `x_max`.
    pub fn geometric(x0: f64, x_max: f64, n: usize) -> Self {
        assert!(x0 > 0.0 && x_max > x0 && n >= 4, "invalid grid");
        let t0 = x0.ln();
        let h = (x_max.ln() - t0) / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| (t0 + h * i as f64).exp()).collect();
        nodes[0] = x0;
        nodes[n] = x_max;
        RadialGrid { nodes, h }
    }

    /// Grading ratio `rho = x_i / x_{i+1}`.
    pub fn ratio(&self) -> f64 {
        (-self.h).exp()
    }

    /// Number of intervals.
    pub fn n(&self) -> usize {
        self.nodes.len() - 1
    }

    /// The grid with every interval halved.
    pub fn refined(&self) -> Self {
        RadialGrid::geometric(
            self.nodes[0],
            *self.nodes.last().expect("nonempty"),
            2 * self.n(),
        )
    }
}

/// A boundary condition at one end of the interval.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    /// Prescribed values of every component.
    Dirichlet(Vec<f64>),
    /// `a u + b x u' = value` (scalar problems).
    Robin { a: f64, b: f64, value: f64 },
    /// Linear conditions `row . u = value` (systems).
    Linear(Vec<(Vec<f64>, f64)>),
    /// Select solutions allowed in `x^weight L^2` near `x = 0` (inner end only).
    Decay { weight: f64 },
    /// No condition at this end (systems whose other end carries them all).
    Free,
}

/// A two-point boundary value problem for a reduced operator.
#[derive(Clone, Debug)]
pub struct BVProblem {
    /// Operator.
    pub op: ModeReducedOp,
    /// Grid.
    pub grid: RadialGrid,
    /// Right-hand side, `rhs[component][node]`; `None` for zero.
    pub rhs: Option<Vec<Vec<f64>>>,
    /// Condition at `x_0`.
    pub left: BoundaryCondition,
    /// Condition at `x_N`.
    pub right: BoundaryCondition,
}

/// A sampled solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// Grid.
    pub grid: RadialGrid,
    /// Values, `values[component][node]`.
    pub values: Vec<Vec<f64>>,
    /// Relative residual of the discrete equations.
    pub residual: f64,
}

impl Solution {
    /// Nodes.
    pub fn x(&self) -> &[f64] {
        &self.grid.nodes
    }

    /// One component.
    pub fn component(&self, c: usize) -> &[f64] {
        &self.values[c]
    }

    /// Euclidean norm over components at each node.
    pub fn pointwise_norm(&self) -> Vec<f64> {
        (0..self.grid.nodes.len())
            .map(|i| self.values.iter().map(|v| v[i] * v[i]).sum::<f64>().sqrt())
            .collect()
    }
}

fn coeff_mats(op: &ModeReducedOp, x: f64) -> ModesResult<Vec<DMatrix<f64>>> {
    Ok(op.eval_f64(x)?)
}

/// Local WKB exponent `lambda` with `u'/u ~ lambda` for the solution that
/// decays toward `x = 0`: the root of `C2 l^2 + C1 l + C0 = 0` with the
/// larger real part.
pub fn wkb_exponent(op: &ModeReducedOp, x: f64) -> ModesResult<f64> {
    let c = coeff_mats(op, x)?;
    if op.size != 1 || c.len() < 3 {
        return Err(ModesError::Unsupported(
            "WKB selection needs a scalar second-order operator".into(),
        ));
    }
    let (a, b, c0) = (c[2][(0, 0)], c[1][(0, 0)], c[0][(0, 0)]);
    let disc = b * b - 4.0 * a * c0;
    if disc < 0.0 {
        return Err(ModesError::Decay(format!(
            "oscillatory local behaviour at x = {x}"
        )));
    }
    Ok((-b + disc.sqrt()) / (2.0 * a))
}

/// Indicial decay data for a `b`-type operator at weight `c`: the allowed
/// and excluded root directions.
fn indicial_split(
    op: &ModeReducedOp,
    weight: f64,
) -> ModesResult<(Vec<(f64, Vec<f64>)>, Vec<(f64, Vec<f64>)>)> {
    let m = indicial_poly(op)?;
    let roots = indicial_roots(&m)?;
    let w = weight_window(&roots);
    if !crate::indicial::is_fredholm_weight(&w, weight) {
        return Err(ModesError::IndicialWeight(weight));
    }
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for r in &roots {
        if r.value.im() != 0.0 {
            return Err(ModesError::Decay(
                "complex indicial roots are not supported".into(),
            ));
        }
        let g = r.value.re();
        for v in &r.nullvectors {
            if g > weight + L2_CUTOFF as f64 {
                kept.push((g, v.clone()));
            } else {
                dropped.push((g, v.clone()));
            }
        }
    }
    Ok((kept, dropped))
}

/// Linear conditions at `x_0` keeping only the allowed indicial directions
/// of a first-order system.
fn decay_rows(op: &ModeReducedOp, weight: f64) -> ModesResult<Vec<(Vec<f64>, f64)>> {
    let n = op.size;
    let (kept, dropped) = indicial_split(op, weight)?;
    let all: Vec<&Vec<f64>> = kept.iter().chain(dropped.iter()).map(|(_, v)| v).collect();
    if all.len() == n {
        let v = DMatrix::from_fn(n, n, |r, c| all[c][r]);
        if let Some(inv) = v.clone().try_inverse() {
            // Coefficients along the excluded directions must vanish.
            return Ok((kept.len()..n)
                .map(|j| ((0..n).map(|c| inv[(j, c)]).collect(), 0.0))
                .collect());
        }
    }
    // Fall back to the orthogonal complement of the allowed directions.
    let p = kept.len();
    if p == 0 {
        return Ok((0..n)
            .map(|j| {
                (
                    (0..n).map(|c| if c == j { 1.0 } else { 0.0 }).collect(),
                    0.0,
                )
            })
            .collect());
    }
    let k = DMatrix::from_fn(n, p, |r, c| kept[c].1[r]);
    let svd = k.svd(true, false);
    let u = svd.u.expect("requested U");
    let full = if u.ncols() < n {
        // Complete the basis with a QR of [U | I].
        let mut aug = DMatrix::zeros(n, u.ncols() + n);
        aug.view_mut((0, 0), (n, u.ncols())).copy_from(&u);
        aug.view_mut((0, u.ncols()), (n, n))
            .copy_from(&DMatrix::identity(n, n));
        aug.qr().q()
    } else {
        u
    };
    Ok((p..n)
        .map(|j| ((0..n).map(|r| full[(r, j)]).collect(), 0.0))
        .collect())
}

/// Solve a two-point boundary value problem.
pub fn solve_bvp(p: &BVProblem) -> ModesResult<Solution> {
    let order = p.op.order();
    match (order, p.op.size) {
        (2, 1) => solve_scalar2(p),
        (1, _) => solve_system1(p),
        (o, s) => Err(ModesError::Unsupported(format!(
            "operators of order {o} with block size {s}"
        ))),
    }
}

fn rhs_at(p: &BVProblem, c: usize, i: usize) -> f64 {
    p.rhs.as_ref().map_or(0.0, |r| r[c][i])
}

fn finish(
    mut a: BandMatrix,
    b: Vec<f64>,
    grid: &RadialGrid,
    size: usize,
    interleaved: bool,
) -> ModesResult<Solution> {
    let amax = a.max_abs();
    let a0 = a.clone();
    let u = std::mem::replace(&mut a, BandMatrix::new(1, 0, 0)).solve(&b)?;
    let r = a0.mul_vec(&u);
    let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = r
        .iter()
        .zip(&b)
        .fold(0.0f64, |m, (ri, bi)| m.max((ri - bi).abs()));
    let scale = amax * umax + bmax;
    let residual = if scale > 0.0 { err / scale } else { 0.0 };
    let n1 = grid.nodes.len();
    let values = (0..size)
        .map(|c| {
            (0..n1)
                .map(|i| if interleaved { u[i * size + c] } else { u[i] })
                .collect()
        })
        .collect();
    Ok(Solution {
        grid: grid.clone(),
        values,
        residual,
    })
}

fn solve_scalar2(p: &BVProblem) -> ModesResult<Solution> {
    let g = &p.grid;
    let n = g.n();
    let h = g.h;
    let mut a = BandMatrix::new(n + 1, 2, 2);
    let mut b = vec![0.0; n + 1];
    for i in 1..n {
        let x = g.nodes[i];
        let c = coeff_mats(&p.op, x)?;
        let c2 = c[2][(0, 0)] / (x * x);
        let c1 = c[1][(0, 0)] / x;
        let c0 = c[0][(0, 0)];
        // c2 (u_tt - u_t) + c1 u_t + c0 u
        let pp = c2;
        let qq = c1 - c2;
        let lo = pp / (h * h) - qq / (2.0 * h);
        let mid = -2.0 * pp / (h * h) + c0;
        let hi = pp / (h * h) + qq / (2.0 * h);
        let s = 1.0 / lo.abs().max(mid.abs()).max(hi.abs()).max(f64::MIN_POSITIVE);
        a.add(i, i - 1, lo * s)?;
        a.add(i, i, mid * s)?;
        a.add(i, i + 1, hi * s)?;
        b[i] = rhs_at(p, 0, i) * s;
    }
    // Boundary rows: a u + b u_tau = value with one-sided second-order u_tau.
    let robin = |a: &mut BandMatrix,
                 b: &mut Vec<f64>,
                 left: bool,
                 ca: f64,
                 cb: f64,
                 v: f64|
     -> ModesResult<()> {
        let (row, s, i1, i2) = if left {
            (0, -1.0, 1, 2)
        } else {
            (n, 1.0, n - 1, n - 2)
        };
        a.add(row, row, ca - s * 3.0 * cb / (2.0 * h))?;
        a.add(row, i1, s * 4.0 * cb / (2.0 * h))?;
        a.add(row, i2, -s * cb / (2.0 * h))?;
        b[row] = v;
        Ok(())
    };
    for (left, bc) in [(true, &p.left), (false, &p.right)] {
        let row = if left { 0 } else { n };
        let x = g.nodes[row];
        match bc {
            BoundaryCondition::Dirichlet(v) => {
                a.add(row, row, 1.0)?;
                b[row] = *v.first().ok_or(ModesError::BoundaryCount {
                    given: 0,
                    needed: 1,
                })?;
            }
            BoundaryCondition::Robin {
                a: ca,
                b: cb,
                value,
            } => robin(&mut a, &mut b, left, *ca, *cb, *value)?,
            BoundaryCondition::Decay { weight } => {
                if !left {
                    return Err(ModesError::Unsupported(
                        "decay selection at the outer end".into(),
                    ));
                }
                match indicial_split(&p.op, *weight) {
                    Ok((kept, _)) => match kept.len() {
                        1 => robin(&mut a, &mut b, true, -kept[0].0, 1.0, 0.0)?,
                        0 => {
                            a.add(0, 0, 1.0)?;
                            b[0] = 0.0;
                        }
                        _ => {
                            return Err(ModesError::Decay(format!(
                                "weight {weight} admits both indicial solutions; prescribe a value instead"
                            )))
                        }
                    },
                    Err(ModesError::Indicial(IndicialError::NotBType { .. })) => {
                        let lam = wkb_exponent(&p.op, x)?;
                        // u_tau = x u' = x lambda u
                        let s = 1.0 / (x * lam).abs().max(1.0);
                        robin(&mut a, &mut b, true, -x * lam * s, s, 0.0)?;
                    }
                    Err(e) => return Err(e),
                }
            }
            BoundaryCondition::Linear(_) | BoundaryCondition::Free => {
                return Err(ModesError::Unsupported(
                    "linear or free conditions for scalar second-order problems".into(),
                ))
            }
        }
    }
    finish(a, b, g, 1, false)
}

fn bc_rows(p: &BVProblem, bc: &BoundaryCondition, left: bool) -> ModesResult<Vec<(Vec<f64>, f64)>> {
    let n = p.op.size;
    Ok(match bc {
        BoundaryCondition::Dirichlet(v) => {
            if v.len() != n {
                return Err(ModesError::BoundaryCount {
                    given: v.len(),
                    needed: n,
                });
            }
            (0..n)
                .map(|j| {
                    (
                        (0..n).map(|c| if c == j { 1.0 } else { 0.0 }).collect(),
                        v[j],
                    )
                })
                .collect()
        }
        BoundaryCondition::Linear(rows) => rows.clone(),
        BoundaryCondition::Free => Vec::new(),
        BoundaryCondition::Decay { weight } => {
            if !left {
                return Err(ModesError::Unsupported(
                    "decay selection at the outer end".into(),
                ));
            }
            decay_rows(&p.op, *weight)?
        }
        BoundaryCondition::Robin { .. } => {
            return Err(ModesError::Unsupported(
                "Robin conditions for first-order systems".into(),
            ))
        }
    })
}

fn solve_system1(p: &BVProblem) -> ModesResult<Solution> {
    let g = &p.grid;
    let n = p.op.size;
    let nn = g.n();
    let h = g.h;
    let left = bc_rows(p, &p.left, true)?;
    let right = bc_rows(p, &p.right, false)?;
    if left.len() + right.len() != n {
        return Err(ModesError::BoundaryCount {
            given: left.len() + right.len(),
            needed: n,
        });
    }
    let dim = (nn + 1) * n;
    let mut a = BandMatrix::new(dim, 2 * n, 2 * n);
    let mut b = vec![0.0; dim];
    let pl = left.len();
    for (j, (row, v)) in left.iter().enumerate() {
        for c in 0..n {
            a.add(j, c, row[c])?;
        }
        b[j] = *v;
    }
    for i in 0..nn {
        let xm = (g.nodes[i] * g.nodes[i + 1]).sqrt();
        let c = coeff_mats(&p.op, xm)?;
        let c1 = &c[1] / xm;
        let c0 = &c[0];
        for r in 0..n {
            let row = pl + i * n + r;
            let mut scale = 0.0f64;
            for col in 0..n {
                scale = scale.max((c1[(r, col)] / h).abs()).max(c0[(r, col)].abs());
            }
            let s = 1.0 / scale.max(f64::MIN_POSITIVE);
            for col in 0..n {
                let d = c1[(r, col)] / h;
                let m = c0[(r, col)] / 2.0;
                a.add(row, i * n + col, (-d + m) * s)?;
                a.add(row, (i + 1) * n + col, (d + m) * s)?;
            }
            b[row] = 0.5 * (rhs_at(p, r, i) + rhs_at(p, r, i + 1)) * s;
        }
    }
    for (j, (row, v)) in right.iter().enumerate() {
        let r = pl + nn * n + j;
        for c in 0..n {
            a.add(r, nn * n + c, row[c])?;
        }
        b[r] = *v;
    }
    finish(a, b, g, n, true)
}

/// Solve on the grid and on its refinement; fails if the two disagree by
/// more than `cfg.refine_tol` (relative, at the common nodes). Returns the
/// refined solution and the observed difference.
pub fn solve_with_refinement(p: &BVProblem, cfg: &ModesConfig) -> ModesResult<(Solution, f64)> {
    let coarse = solve_bvp(p)?;
    let mut q = p.clone();
    q.grid = p.grid.refined();
    if let Some(r) = &p.rhs {
        // Linear interpolation in tau of the right-hand side.
        q.rhs = Some(
            r.iter()
                .map(|v| {
                    (0..q.grid.nodes.len())
                        .map(|i| {
                            if i % 2 == 0 {
                                v[i / 2]
                            } else {
                                0.5 * (v[i / 2] + v[i / 2 + 1])
                            }
                        })
                        .collect()
                })
                .collect(),
        );
    }
    let fine = solve_bvp(&q)?;
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for c in 0..coarse.values.len() {
        for i in 0..coarse.grid.nodes.len() {
            diff = diff.max((coarse.values[c][i] - fine.values[c][2 * i]).abs());
            scale = scale.max(fine.values[c][2 * i].abs());
        }
    }
    let rel = if scale > 0.0 { diff / scale } else { diff };
    if rel > cfg.refine_tol {
        return Err(ModesError::NonConvergence(rel));
    }
    Ok((fine, rel))
}

fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> ModesResult<(Vec<f64>, f64)> {
    let m = y.len();
    let k = cols.len();
    if m < k {
        return Err(ModesError::EmptyWindow(format!(
            "{m} samples for {k} unknowns"
        )));
    }
    // Column scaling for conditioning.
    let norms: Vec<f64> = cols
        .iter()
        .map(|c| {
            c.iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
                .max(f64::MIN_POSITIVE)
        })
        .collect();
    let a = DMatrix::from_fn(m, k, |r, c| cols[c][r] / norms[c]);
    let yv = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let sol = svd
        .solve(&yv, 1e-14)
        .map_err(|e| ModesError::EmptyWindow(e.to_string()))?;
    let coef: Vec<f64> = (0..k).map(|c| sol[c] / norms[c]).collect();
    let res = (&a * &sol - &yv).norm();
    Ok((coef, res))
}

/// Least-squares expansion `u ~ sum_j a_j x^{gamma_j}` on a tail window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionFit {
    /// Candidate exponents used.
    pub exponents: Vec<f64>,
    /// Coefficients `coefficients[j][component]`.
    pub coefficients: Vec<Vec<f64>>,
    /// Relative residual `|u - fit| / |u|` on the window.
    pub residual: f64,
    /// Best single-term exponent (log-log slope of `|u|`).
    pub slope: f64,
    /// True when the slope is not within tolerance of any candidate.
    pub flagged: bool,
    /// Fit window `(x_a, x_b)`.
    pub window: (f64, f64),
}

impl ExpansionFit {
    /// Candidate exponent with the largest coefficient norm on the window
    /// scale, i.e. the dominant term.
    pub fn leading_exponent(&self) -> f64 {
        let xa = self.window.0;
        let mut best = (f64::NEG_INFINITY, f64::NAN);
        for (j, g) in self.exponents.iter().enumerate() {
            let n = self.coefficients[j]
                .iter()
                .map(|c| c * c)
                .sum::<f64>()
                .sqrt()
                * xa.powf(*g);
            if n > best.0 {
                best = (n, *g);
            }
        }
        best.1
    }
}

/// Indices of the innermost decade of the grid, excluding the boundary
/// nodes.
pub fn tail_window(grid: &RadialGrid, cfg: &ModesConfig) -> Vec<usize> {
    let start = cfg.bc_nodes.min(grid.n());
    let xa = grid.nodes[start];
    let xb = 10.0 * grid.nodes[0];
    (start..=grid.n() - cfg.bc_nodes)
        .filter(|&i| grid.nodes[i] >= xa && grid.nodes[i] <= xb.max(xa))
        .collect()
}

/// Fit a solution's tail by the indicial exponents allowed at weight `c`
/// (roots `gamma > c + 1`).
pub fn fit_expansion(
    u: &Solution,
    roots: &[crate::indicial::IndicialRoot],
    c: f64,
    cfg: &ModesConfig,
) -> ModesResult<ExpansionFit> {
    let cands = exponents_above(roots, c);
    if cands.is_empty() {
        return Err(ModesError::EmptyCandidates(c));
    }
    fit_exponents(u, &cands, cfg)
}

/// Fit a solution's tail by explicitly given exponents.
pub fn fit_exponents(
    u: &Solution,
    exponents: &[f64],
    cfg: &ModesConfig,
) -> ModesResult<ExpansionFit> {
    let idx = tail_window(&u.grid, cfg);
    if idx.len() < exponents.len() + 2 {
        return Err(ModesError::EmptyWindow("tail window too short".into()));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| u.grid.nodes[i]).collect();
    let cols: Vec<Vec<f64>> = exponents
        .iter()
        .map(|g| xs.iter().map(|x| x.powf(*g)).collect())
        .collect();
    let mut coefficients = vec![vec![0.0; u.values.len()]; exponents.len()];
    let mut res2 = 0.0;
    let mut norm2 = 0.0;
    for (c, v) in u.values.iter().enumerate() {
        let y: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
        let (coef, _) = least_squares(&cols, &y)?;
        for (j, a) in coef.iter().enumerate() {
            coefficients[j][c] = *a;
        }
        // Residual in the unscaled problem.
        let r: f64 = y
            .iter()
            .enumerate()
            .map(|(k, yk)| {
                let f: f64 = (0..exponents.len()).map(|j| coef[j] * cols[j][k]).sum();
                (yk - f).powi(2)
            })
            .sum();
        res2 += r;
        norm2 += y.iter().map(|v| v * v).sum::<f64>();
    }
    let residual = if norm2 > 0.0 {
        (res2 / norm2).sqrt()
    } else {
        0.0
    };
    // Log-log slope of the pointwise norm.
    let pn = u.pointwise_norm();
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = idx
        .iter()
        .map(|&i| pn[i].max(f64::MIN_POSITIVE).ln())
        .collect();
    let (coef, _) = least_squares(&[lx.clone(), vec![1.0; lx.len()]], &ly)?;
    let slope = coef[0];
    let flagged = !exponents.iter().any(|g| (g - slope).abs() <= cfg.slope_tol);
    Ok(ExpansionFit {
        exponents: exponents.to_vec(),
        coefficients,
        residual,
        slope,
        flagged,
        window: (xs[0], *xs.last().expect("nonempty")),
    })
}

/// Fit of `log |u| ~ a x^{-p} + b log x + c` for exponentially decaying
/// solutions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    /// Power `p`.
    pub power: f64,
    /// Coefficient `a` of `x^{-p}`.
    pub rate: f64,
    /// Coefficient of `log x`.
    pub log_coeff: f64,
    /// RMS residual of the log fit.
    pub residual: f64,
    /// Window used.
    pub window: (f64, f64),
    /// Number of nodes used.
    pub samples: usize,
}

/// Fit the exponential rate of a decaying scalar solution. The window
/// keeps nodes where `|u|` exceeds `cfg.exp_floor` and `log |u|` changes by
/// less than `cfg.exp_max_step` per grid step, so that the discrete
/// solution resolves the exponential.
pub fn fit_log_rate(u: &Solution, power: f64, cfg: &ModesConfig) -> ModesResult<RateFit> {
    let v = &u.values[0];
    let n = u.grid.n();
    let lo = cfg.bc_nodes;
    let hi = n - cfg.bc_nodes;
    let mut idx = Vec::new();
    for i in lo..hi {
        let (a, b) = (v[i].abs(), v[i + 1].abs());
        if a > cfg.exp_floor && b > cfg.exp_floor && (b.ln() - a.ln()).abs() < cfg.exp_max_step {
            idx.push(i);
        }
    }
    if idx.len() < 10 {
        return Err(ModesError::EmptyWindow(
            "no resolved nodes for the exponential fit".into(),
        ));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| u.grid.nodes[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| v[i].abs().ln()).collect();
    let cols = vec![
        xs.iter().map(|x| x.powf(-power)).collect::<Vec<_>>(),
        xs.iter().map(|x| x.ln()).collect(),
        vec![1.0; xs.len()],
    ];
    let (coef, _) = least_squares(&cols, &y)?;
    let rms = (y
        .iter()
        .enumerate()
        .map(|(k, yk)| (yk - (0..3).map(|j| coef[j] * cols[j][k]).sum::<f64>()).powi(2))
        .sum::<f64>()
        / y.len() as f64)
        .sqrt();
    Ok(RateFit {
        power,
        rate: coef[0],
        log_coeff: coef[1],
        residual: rms,
        window: (xs[0], *xs.last().expect("nonempty")),
        samples: xs.len(),
    })
}

/// Regime of a Fourier mode `(k, m)`: `k` is the circle frequency and
/// `m` the torus frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ModeRegime {
    /// `k = 0`, `m = 0`: a `b`-operator with polyhomogeneous solutions.
    B,
    /// `k = 0`, `m != 0`: decay like `exp(-|m|/x)`.
    C,
    /// `k != 0`: decay like `exp(-|k|/(2 x^2))` in the product model.
    A,
}

impl ModeRegime {
    /// Regime of a mode.
    pub fn of(k: i64, m: [i64; 2]) -> Self {
        if k != 0 {
            ModeRegime::A
        } else if m != [0, 0] {
            ModeRegime::C
        } else {
            ModeRegime::B
        }
    }
}

/// Fit attached to a mode solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ModeFit {
    /// Power expansion (the `b` regime).
    Expansion(ExpansionFit),
    /// Exponential rate (the `c` and `a` regimes).
    Rate(RateFit),
}

/// Result of [`solve_mode`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModeReport {
    /// Circle frequency.
    pub k: i64,
    /// Torus frequency.
    pub m: [i64; 2],
    /// Regime.
    pub regime: ModeRegime,
    /// Discrete solution.
    pub solution: Solution,
    /// Fit of the tail.
    pub fit: ModeFit,
    /// Expected rate for the exponential regimes.
    pub expected_rate: Option<f64>,
    /// Relative error: against the closed form `a + b/x` in the `b`
    /// regime (maximum over nodes), against the expected rate otherwise.
    pub relative_error: f64,
}

/// Solve for the homogeneous solution of the Laplacian in the mode
/// `(k, m)` that decays toward `x = 0` and equals 1 at the outer end, and
/// fit its behaviour.
///
/// * `b` regime: the reduced operator `x^2 d^2 + 2x d` with data 2 and 1
///   at the two ends; the solution lies in the span of `1` and `1/x`.
/// * `c` regime: the Gibbons-Hawking Laplacian projected to the mode,
///   `x^5 u'' + 2x^4 u' - |m|^2 x u`, with decay selection; the fitted
///   coefficient of `1/x` in `log |u|` should be `-|m|`.
/// * `a` regime: the product-model Laplacian `x^6 u'' + 3x^5 u' - k^2 u`;
///   the fitted coefficient of `x^-2` should be `-|k|/2`.
pub fn solve_mode(k: i64, m: [i64; 2], cfg: &ModesConfig) -> ModesResult<ModeReport> {
    use crate::operators::{
        laplacian, product_model_laplacian, project_modes, reduced_scalar_b, LaplacianSign,
    };
    let grid = cfg.grid();
    let regime = ModeRegime::of(k, m);
    let (op, left, right) = match regime {
        ModeRegime::B => (
            reduced_scalar_b(),
            BoundaryCondition::Dirichlet(vec![2.0]),
            BoundaryCondition::Dirichlet(vec![1.0]),
        ),
        ModeRegime::C => {
            let lap = laplacian(&crate::geometry::metric_gh(), LaplacianSign::Analyst)?;
            (
                project_modes(&lap, 0, m, false)?,
                BoundaryCondition::Decay { weight: 0.0 },
                BoundaryCondition::Dirichlet(vec![1.0]),
            )
        }
        ModeRegime::A => (
            project_modes(&product_model_laplacian()?, k, m, true)?,
            BoundaryCondition::Decay { weight: 0.0 },
            BoundaryCondition::Dirichlet(vec![1.0]),
        ),
    };
    let p = BVProblem {
        op,
        grid: grid.clone(),
        rhs: None,
        left,
        right,
    };
    let s = solve_bvp(&p)?;
    if s.residual > cfg.residual_tol {
        return Err(ModesError::NonConvergence(s.residual));
    }
    let (fit, expected_rate, relative_error) = match regime {
        ModeRegime::B => {
            let (x0, x1) = (grid.nodes[0], *grid.nodes.last().expect("nonempty grid"));
            let b = (2.0 - 1.0) / (1.0 / x0 - 1.0 / x1);
            let a = 1.0 - b / x1;
            let err = grid
                .nodes
                .iter()
                .zip(&s.values[0])
                .map(|(x, v)| ((v - (a + b / x)) / (a + b / x)).abs())
                .fold(0.0, f64::max);
            (
                ModeFit::Expansion(fit_exponents(&s, &[-1.0, 0.0], cfg)?),
                None,
                err,
            )
        }
        ModeRegime::C => {
            let mm = ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt();
            let f = fit_log_rate(&s, 1.0, cfg)?;
            let e = ((f.rate + mm) / mm).abs();
            (ModeFit::Rate(f), Some(-mm), e)
        }
        ModeRegime::A => {
            let want = -(k.abs() as f64) / 2.0;
            let f = fit_log_rate(&s, 2.0, cfg)?;
            let e = ((f.rate - want) / want).abs();
            (ModeFit::Rate(f), Some(want), e)
        }
    };
    Ok(ModeReport {
        k,
        m,
        regime,
        solution: s,
        fit,
        expected_rate,
        relative_error,
    })
}

/// Volume density used by the weighted norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormDensity {
    /// `x^{-3} dx dy dtheta`.
    Gh,
    /// `x^{-5} dx dy dtheta`.
    A,
}

impl NormDensity {
    fn power(self) -> f64 {
        match self {
            NormDensity::Gh => -3.0,
            NormDensity::A => -5.0,
        }
    }
}

/// A discrete weighted norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormValue {
    /// The norm.
    pub value: f64,
    /// True when the integrand is not negligible at the inner end, so the
    /// quadrature is likely truncating a divergent integral.
    pub divergent: bool,
}

/// `tau`-derivative by central differences (one-sided at the ends).
fn d_tau(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Simpson's rule on a uniform grid (trapezoid on a final odd interval).
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    let even = n - n % 2;
    let mut s = 0.0;
    let mut i = 0;
    while i + 2 <= even {
        s += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
        i += 2;
    }
    if n % 2 == 1 {
        s += 0.5 * h * (f[n - 1] + f[n]);
    }
    s
}

/// Discrete `x^mu H^s_a` norm of a mode `u(x) e^{i(k theta + m.y)}`:
/// the square root of `sum over words V_{i1}..V_{il}, l <= s` of
/// `int |V u|^2 x^{-2 mu} dV`, with the structure fields `x^3 d_x`,
/// `x d_yj`, `d_theta` acting through the mode frequencies.
pub fn discrete_a_norm(
    grid: &RadialGrid,
    u: &[f64],
    mu: f64,
    s: usize,
    density: NormDensity,
    k: i64,
    m: [i64; 2],
) -> ModesResult<NormValue> {
    if s > 2 {
        return Err(ModesError::Unsupported(format!("Sobolev order {s} > 2")));
    }
    let xs = &grid.nodes;
    let h = grid.h;
    // Each structure field as a real linear map on sampled functions
    // (moduli are unaffected by the factors of i).
    let apply = |which: usize, v: &[f64]| -> Vec<f64> {
        match which {
            0 => d_tau(v, h).iter().zip(xs).map(|(d, x)| x * x * d).collect(),
            1 => v.iter().zip(xs).map(|(a, x)| a * x * m[0] as f64).collect(),
            2 => v.iter().zip(xs).map(|(a, x)| a * x * m[1] as f64).collect(),
            _ => v.iter().map(|a| a * k as f64).collect(),
        }
    };
    let mut words: Vec<Vec<f64>> = vec![u.to_vec()];
    let mut layer = vec![u.to_vec()];
    for _ in 0..s {
        let mut next = Vec::new();
        for w in &layer {
            for f in 0..4 {
                next.push(apply(f, w));
            }
        }
        words.extend(next.iter().cloned());
        layer = next;
    }
    let p = density.power();
    let integrand: Vec<f64> = (0..xs.len())
        .map(|i| {
            let x = xs[i];
            let sq: f64 = words.iter().map(|w| w[i] * w[i]).sum();
            // dx = x dtau
            sq * x.powf(-2.0 * mu + p + 1.0)
        })
        .collect();
    let total = simpson(&integrand, h);
    let peak = integrand.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let divergent = peak > 0.0 && integrand[0].abs() > 1e-6 * peak;
    Ok(NormValue {
        value: total.max(0.0).sqrt(),
        divergent,
    })
}

/// Singular-value diagnostics of a scalar `b`-operator between weighted
/// spaces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedSingularValues {
    /// Weight `c`.
    pub weight: f64,
    /// The few smallest singular values, increasing.
    pub smallest: Vec<f64>,
    /// Number of singular values forced to zero by the index of the
    /// half-line problem (they vanish exponentially as `x0 -> 0` at any
    /// weight and say nothing about closed range).
    pub index_count: usize,
    /// The first singular value past those: bounded below exactly when the
    /// weight is not indicial.
    pub essential: f64,
}

/// Singular values of the discretized scalar `b`-operator acting between
/// `x^c L^2(x^{-3} dx)` spaces, on a `tau` grid of step `h` from `x0` to
/// `x_max` with Dirichlet ends.
///
/// Writing `u = x^{c+1} w` turns the weighted space into `L^2(dtau)` and
/// the leading part of the operator into a constant-coefficient operator
/// in `tau` whose exponents are `gamma_j - (c + 1)`. Finite sections of
/// such an operator have `|#(Re > 0) - #(Re < 0)| / 2` singular values that
/// decay exponentially with the length of the interval; the next one
/// (`essential`) tends to zero only when some exponent is purely imaginary,
/// i.e. at an indicial weight.
pub fn weighted_singular_values(
    op: &ModeReducedOp,
    c: f64,
    x0: f64,
    x_max: f64,
    h: f64,
) -> ModesResult<WeightedSingularValues> {
    if op.size != 1 || op.order() != 2 {
        return Err(ModesError::Unsupported(
            "weighted singular values need a scalar second-order operator".into(),
        ));
    }
    let roots = indicial_roots(&indicial_poly(op)?)?;
    let e = c + 1.0;
    let mut pos = 0i64;
    let mut neg = 0i64;
    for r in &roots {
        let a = r.value.re() - e;
        let m = r.multiplicity as i64;
        if a > 1e-12 {
            pos += m;
        } else if a < -1e-12 {
            neg += m;
        }
    }
    let index_count = ((pos - neg).abs() / 2) as usize;
    let n = ((x_max / x0).ln() / h).round().max(4.0) as usize;
    let grid = RadialGrid::geometric(x0, x_max, n);
    let h = grid.h;
    // Interior unknowns w_i with Dirichlet ends.
    let m = n - 1;
    let mut a = DMatrix::<f64>::zeros(m, m);
    for r in 0..m {
        let i = r + 1;
        let x = grid.nodes[i];
        let cs = coeff_mats(op, x)?;
        // Normalize each row by the principal coefficient.
        let c2 = cs[2][(0, 0)] / (x * x);
        let norm = c2.abs();
        let pp = c2 / norm;
        let qq = (cs[1][(0, 0)] / x - c2) / norm;
        let c0 = cs[0][(0, 0)] / norm;
        let w = |j: usize| (grid.nodes[j] / x).powf(e);
        let coeffs = [
            (i - 1, pp / (h * h) - qq / (2.0 * h)),
            (i, -2.0 * pp / (h * h) + c0),
            (i + 1, pp / (h * h) + qq / (2.0 * h)),
        ];
        for (j, v) in coeffs {
            if (1..=m).contains(&j) {
                a[(r, j - 1)] += v * w(j);
            }
        }
    }
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    sv.truncate(index_count + 3);
    Ok(WeightedSingularValues {
        weight: c,
        essential: sv[index_count],
        smallest: sv,
        index_count,
    })
}
