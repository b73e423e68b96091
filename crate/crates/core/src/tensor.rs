//! Dense row-major `f64` tensors, the sole value carrier through networks.
//!
//! Shapes are explicit and validated at construction; `product(shape)` always
//! equals the data length and entries are finite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    /// Builds a tensor, checking that the shape matches the data length and
    /// that every entry is finite.
    pub fn from_vec(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape {
                context: "Tensor::from_vec",
                detail: format!(
                    "shape {:?} wants {} scalars, data has {}",
                    shape,
                    expected,
                    data.len()
                ),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("Tensor::from_vec".into()));
        }
        Ok(Tensor { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rows of a 2-D tensor.
    pub fn rows(&self) -> usize {
        debug_assert_eq!(self.shape.len(), 2);
        self.shape[0]
    }

    /// Columns of a 2-D tensor.
    pub fn cols(&self) -> usize {
        debug_assert_eq!(self.shape.len(), 2);
        self.shape[1]
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols() + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        let cols = self.cols();
        self.data[r * cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let cols = self.cols();
        &self.data[r * cols..(r + 1) * cols]
    }

    fn check_2d(&self, context: &'static str) -> Result<()> {
        if self.shape.len() != 2 {
            return Err(Error::Shape {
                context,
                detail: format!("expected 2-D tensor, got shape {:?}", self.shape),
            });
        }
        Ok(())
    }

    /// `self [m×k] · rhs [k×n] -> [m×n]`.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor> {
        self.check_2d("matmul")?;
        rhs.check_2d("matmul")?;
        if self.cols() != rhs.rows() {
            return Err(Error::Shape {
                context: "matmul",
                detail: format!("{:?} x {:?}", self.shape, rhs.shape),
            });
        }
        let (m, k, n) = (self.rows(), self.cols(), rhs.cols());
        let mut out = Tensor::zeros(&[m, n]);
        for i in 0..m {
            for kk in 0..k {
                let a = self.data[i * k + kk];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[kk * n..(kk + 1) * n];
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    out_row[j] += a * rhs_row[j];
                }
            }
        }
        Ok(out)
    }

    /// `self [m×k] · rhsᵀ` where `rhs` is `[n×k]` -> `[m×n]`.
    pub fn matmul_transpose(&self, rhs: &Tensor) -> Result<Tensor> {
        self.check_2d("matmul_transpose")?;
        rhs.check_2d("matmul_transpose")?;
        if self.cols() != rhs.cols() {
            return Err(Error::Shape {
                context: "matmul_transpose",
                detail: format!("{:?} x {:?}^T", self.shape, rhs.shape),
            });
        }
        let (m, k, n) = (self.rows(), self.cols(), rhs.rows());
        let mut out = Tensor::zeros(&[m, n]);
        for i in 0..m {
            let lhs_row = &self.data[i * k..(i + 1) * k];
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for j in 0..n {
                let rhs_row = &rhs.data[j * k..(j + 1) * k];
                let mut acc = 0.0;
                for kk in 0..k {
                    acc += lhs_row[kk] * rhs_row[kk];
                }
                out_row[j] = acc;
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` where `self` is `[k×m]`, `rhs` is `[k×n]` -> `[m×n]`.
    pub fn transpose_matmul(&self, rhs: &Tensor) -> Result<Tensor> {
        self.check_2d("transpose_matmul")?;
        rhs.check_2d("transpose_matmul")?;
        if self.rows() != rhs.rows() {
            return Err(Error::Shape {
                context: "transpose_matmul",
                detail: format!("{:?}^T x {:?}", self.shape, rhs.shape),
            });
        }
        let (k, m, n) = (self.rows(), self.cols(), rhs.cols());
        let mut out = Tensor::zeros(&[m, n]);
        for kk in 0..k {
            let lhs_row = &self.data[kk * m..(kk + 1) * m];
            let rhs_row = &rhs.data[kk * n..(kk + 1) * n];
            for i in 0..m {
                let a = lhs_row[i];
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    out_row[j] += a * rhs_row[j];
                }
            }
        }
        Ok(out)
    }

    /// Adds a bias row vector to every row of a 2-D tensor in place.
    pub fn add_row_inplace(&mut self, bias: &Tensor) -> Result<()> {
        self.check_2d("add_row_inplace")?;
        if bias.len() != self.cols() {
            return Err(Error::Shape {
                context: "add_row_inplace",
                detail: format!("bias len {} vs cols {}", bias.len(), self.cols()),
            });
        }
        let cols = self.cols();
        for row in self.data.chunks_mut(cols) {
            for (v, b) in row.iter_mut().zip(bias.data.iter()) {
                *v += b;
            }
        }
        Ok(())
    }

    pub fn add_scaled(&mut self, other: &Tensor, scale: f64) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// Gathers rows of a 2-D tensor by index into a new tensor.
    pub fn gather_rows(&self, indices: &[u32]) -> Result<Tensor> {
        self.check_2d("gather_rows")?;
        let cols = self.cols();
        let mut data = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            let i = i as usize;
            if i >= self.rows() {
                return Err(Error::Shape {
                    context: "gather_rows",
                    detail: format!("row {} out of {}", i, self.rows()),
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Tensor::from_vec(vec![indices.len(), cols], data)
    }

    /// Concatenates 2-D tensors along columns. All inputs must share a row count.
    pub fn concat_cols(parts: &[&Tensor]) -> Result<Tensor> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("concat_cols: no inputs".into()));
        }
        let rows = parts[0].rows();
        for p in parts {
            p.check_2d("concat_cols")?;
            if p.rows() != rows {
                return Err(Error::Shape {
                    context: "concat_cols",
                    detail: format!("row counts differ: {} vs {}", rows, p.rows()),
                });
            }
        }
        let total: usize = parts.iter().map(|p| p.cols()).sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(p.row(r));
            }
        }
        Tensor::from_vec(vec![rows, total], data)
    }

    /// Splits a 2-D tensor column-wise into blocks of the given widths.
    pub fn split_cols(&self, widths: &[usize]) -> Result<Vec<Tensor>> {
        self.check_2d("split_cols")?;
        let total: usize = widths.iter().sum();
        if total != self.cols() {
            return Err(Error::Shape {
                context: "split_cols",
                detail: format!("widths sum {} vs cols {}", total, self.cols()),
            });
        }
        let rows = self.rows();
        let mut out = Vec::with_capacity(widths.len());
        let mut offset = 0;
        for &w in widths {
            let mut data = Vec::with_capacity(rows * w);
            for r in 0..rows {
                let row = self.row(r);
                data.extend_from_slice(&row[offset..offset + w]);
            }
            out.push(Tensor::from_vec(vec![rows, w], data)?);
            offset += w;
        }
        Ok(out)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
