//! Small linear-algebra kernels: exact elimination over rational functions
//! and a banded LU factorization with partial pivoting.

use crate::ratfun::{RatFun, RfResult};

/// Row-reduce `a` (rows x cols) in place to reduced row-echelon form over
/// the field of rational functions. Returns the pivot columns.
pub fn rref(a: &mut [Vec<RatFun>]) -> RfResult<Vec<usize>> {
    let rows = a.len();
    if rows == 0 {
        return Ok(Vec::new());
    }
    let cols = a[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip()?;
        for j in c..cols {
            a[r][j] = a[r][j].mul(&inv)?;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in c..cols {
                    let t = f.mul(&a[r][j])?;
                    a[i][j] = a[i][j].sub(&t)?;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    Ok(pivots)
}

/// Solve `m x = b` exactly. Returns `None` when the system is inconsistent.
/// Free variables (if any) are set to zero.
pub fn solve_exact(m: &[Vec<RatFun>], b: &[RatFun]) -> RfResult<Option<Vec<RatFun>>> {
    let n = m.first().map_or(0, Vec::len);
    let mut aug: Vec<Vec<RatFun>> = m
        .iter()
        .zip(b.iter())
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug)?;
    if pivots.contains(&n) {
        return Ok(None);
    }
    let mut x = vec![RatFun::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = aug[i][n].clone();
    }
    Ok(Some(x))
}

/// Basis of the right nullspace of `m`, exact.
pub fn nullspace_exact(m: &[Vec<RatFun>]) -> RfResult<Vec<Vec<RatFun>>> {
    let n = m.first().map_or(0, Vec::len);
    let mut a = m.to_vec();
    let pivots = rref(&mut a)?;
    let mut basis = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut v = vec![RatFun::zero(); n];
        v[free] = RatFun::one();
        for (i, &c) in pivots.iter().enumerate() {
            v[c] = a[i][free].neg();
        }
        basis.push(v);
    }
    Ok(basis)
}

/// A square banded matrix with `kl` sub- and `ku` super-diagonals, stored
/// with extra room for the fill-in created by partial pivoting.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    // Row-major band storage: row i holds columns i-kl ..= i+kl+ku.
    width: usize,
    data: Vec<f64>,
}

/// Errors from the banded solver.
#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum BandError {
    #[error("matrix is numerically singular at pivot {0}")]
    Singular(usize),
    #[error("entry ({0}, {1}) lies outside the band")]
    OutsideBand(usize, usize),
}

impl BandMatrix {
    /// Zero matrix of size `n` with the given bandwidths.
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    /// Dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        // Column offset relative to i - kl.
        let lo = i as isize - self.kl as isize;
        let off = j as isize - lo;
        if off < 0 || off as usize >= self.width {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    /// Add to entry `(i, j)`; must lie within the original band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<(), BandError> {
        if j + self.kl < i || j > i + self.ku {
            return Err(BandError::OutsideBand(i, j));
        }
        let s = self.slot(i, j).ok_or(BandError::OutsideBand(i, j))?;
        self.data[s] += v;
        Ok(())
    }

    /// Entry `(i, j)` (zero outside the stored band).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Matrix-vector product using the original band.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + self.kl).min(self.n - 1);
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                *yi += self.get(i, j) * xj;
            }
        }
        y
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Solve `A x = b` by Gaussian elimination with partial pivoting,
    /// consuming the matrix.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>, BandError> {
        let n = self.n;
        let mut rhs = b.to_vec();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in (k + 1)..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= scale * 1e-300 || !best.is_finite() {
                return Err(BandError::Singular(k));
            }
            let last_col = (k + self.kl + self.ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.get(k, j);
                    let c = self.get(p, j);
                    let sk = self.slot(k, j).expect("in band");
                    let sp = self.slot(p, j).expect("in band");
                    self.data[sk] = c;
                    self.data[sp] = a;
                }
                rhs.swap(k, p);
            }
            let piv = self.get(k, k);
            for i in (k + 1)..=last_row {
                let f = self.get(i, k) / piv;
                if f == 0.0 {
                    continue;
                }
                for j in k..=last_col {
                    let v = self.get(k, j);
                    if v != 0.0 {
                        let s = self.slot(i, j).expect("in band");
                        self.data[s] -= f * v;
                    }
                }
                rhs[i] -= f * rhs[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let last_col = (i + self.kl + self.ku).min(n - 1);
            let mut s = rhs[i];
            for (j, xj) in x.iter().enumerate().take(last_col + 1).skip(i + 1) {
                s -= self.get(i, j) * xj;
            }
            x[i] = s / self.get(i, i);
        }
        Ok(x)
    }
}
