//! Small dense square-matrix helpers: inversion, condition estimate,
//! Cholesky factorization. Sized for the k+1 <= 5 head matrices used by the
//! weight estimators and the oracle testbed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "matrix row has {} entries, expected {}",
                    row.len(),
                    n
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] = v;
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for r in 0..self.n {
            for c in (r + 1)..self.n {
                if (self.get(r, c) - self.get(c, r)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        for r in 0..self.n {
            for c in 0..self.n {
                if r != c && self.get(r, c).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        for r in 0..self.n {
            let row = &self.data[r * self.n..(r + 1) * self.n];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            out[r] = acc;
        }
        out
    }

    /// Quadratic form xᵀ A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let ax = self.matvec(x);
        x.iter().zip(ax.iter()).map(|(a, b)| a * b).sum()
    }

    /// Max column sum of absolute values (induced 1-norm).
    pub fn norm_one(&self) -> f64 {
        let mut best = 0.0_f64;
        for c in 0..self.n {
            let mut sum = 0.0;
            for r in 0..self.n {
                sum += self.get(r, c).abs();
            }
            best = best.max(sum);
        }
        best
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<SquareMatrix> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = SquareMatrix::identity(n);
        for col in 0..n {
            let mut pivot = col;
            for r in (col + 1)..n {
                if a[r * n + col].abs() > a[pivot * n + col].abs() {
                    pivot = r;
                }
            }
            let pval = a[pivot * n + col];
            if pval.abs() < 1e-300 {
                return Err(Error::IllConditioned { cond: f64::INFINITY });
            }
            if pivot != col {
                for c in 0..n {
                    a.swap(col * n + c, pivot * n + c);
                    inv.data.swap(col * n + c, pivot * n + c);
                }
            }
            let scale = 1.0 / a[col * n + col];
            for c in 0..n {
                a[col * n + c] *= scale;
                inv.data[col * n + c] *= scale;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[r * n + col];
                if factor == 0.0 {
                    continue;
                }
                for c in 0..n {
                    a[r * n + c] -= factor * a[col * n + c];
                    inv.data[r * n + c] -= factor * inv.data[col * n + c];
                }
            }
        }
        Ok(inv)
    }

    /// 1-norm condition number estimate ‖A‖₁‖A⁻¹‖₁.
    pub fn condition_one(&self) -> Result<f64> {
        let inv = self.inverse()?;
        Ok(self.norm_one() * inv.norm_one())
    }

    /// Lower-triangular Cholesky factor of a symmetric positive-definite
    /// matrix: returns L with L·Lᵀ = A.
    pub fn cholesky(&self) -> Result<SquareMatrix> {
        if !self.is_symmetric(1e-12 * (1.0 + self.norm_one())) {
            return Err(Error::InvalidArgument("cholesky: matrix not symmetric".into()));
        }
        let n = self.n;
        let mut l = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::Numeric(format!(
                            "cholesky: non-positive pivot {} at {}",
                            sum, i
                        )));
                    }
                    l.set(i, j, sum.sqrt());
                } else {
                    l.set(i, j, sum / l.get(j, j));
                }
            }
        }
        Ok(l)
    }
}
