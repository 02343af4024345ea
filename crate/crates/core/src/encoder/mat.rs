//! Dense row-major `f64` matrices sized for a desk-scale encoder.
//!
//! Everything in the model — weights, activations, even bias vectors (as
//! single-row matrices) — is a [`Mat`]. Keeping one tensor type makes the
//! optimizer and checkpoint code a uniform walk over `(name, Mat)` pairs
//! instead of a zoo of shapes.

use serde::{Deserialize, Serialize};

/// A dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// An all-zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds a matrix by evaluating `f(row, col)` at every position.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Wraps an existing buffer; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer does not match {rows}x{cols}");
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Borrows row `i` as a slice of length `cols`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// The flat row-major buffer.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `self * other` — shapes `(n,m) x (m,p) -> (n,p)`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = Mat::zeros(n, p);
        // i-k-j order keeps the inner loop streaming over contiguous rows.
        for i in 0..n {
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * p..(k + 1) * p];
                let orow = &mut out.data[i * p..(i + 1) * p];
                for j in 0..p {
                    orow[j] += a * brow[j];
                }
            }
        }
        out
    }

    /// `self * other^T` — shapes `(n,m) x (p,m) -> (n,p)`.
    pub fn matmul_nt(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols, "matmul_nt shape mismatch");
        let (n, m, p) = (self.rows, self.cols, other.rows);
        let mut out = Mat::zeros(n, p);
        for i in 0..n {
            let arow = &self.data[i * m..(i + 1) * m];
            for j in 0..p {
                let brow = &other.data[j * m..(j + 1) * m];
                let mut acc = 0.0;
                for k in 0..m {
                    acc += arow[k] * brow[k];
                }
                out.data[i * p + j] = acc;
            }
        }
        out
    }

    /// `self^T * other` — shapes `(m,n) x (m,p) -> (n,p)`.
    pub fn matmul_tn(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows, "matmul_tn shape mismatch");
        let (m, n, p) = (self.rows, self.cols, other.cols);
        let mut out = Mat::zeros(n, p);
        for k in 0..m {
            let arow = &self.data[k * n..(k + 1) * n];
            let brow = &other.data[k * p..(k + 1) * p];
            for i in 0..n {
                let a = arow[i];
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out.data[i * p..(i + 1) * p];
                for j in 0..p {
                    orow[j] += a * brow[j];
                }
            }
        }
        out
    }

    /// Element-wise `self += other`.
    pub fn add_assign(&mut self, other: &Mat) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Element-wise `self += factor * other`.
    pub fn add_scaled(&mut self, other: &Mat, factor: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    /// Multiplies every entry in place.
    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.data {
            *a *= factor;
        }
    }

    /// Copies columns `[start, start + width)` into a new `rows x width` matrix.
    pub fn col_slice(&self, start: usize, width: usize) -> Mat {
        assert!(start + width <= self.cols, "column slice out of range");
        Mat::from_fn(self.rows, width, |i, j| self.get(i, start + j))
    }

    /// Adds `block` into columns `[start, start + block.cols)` of `self`.
    pub fn add_into_cols(&mut self, start: usize, block: &Mat) {
        assert_eq!(self.rows, block.rows, "column block row mismatch");
        assert!(start + block.cols <= self.cols, "column block out of range");
        for i in 0..self.rows {
            for j in 0..block.cols {
                self.data[i * self.cols + start + j] += block.get(i, j);
            }
        }
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Sum of squared entries (for global-norm clipping).
    pub fn sq_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}
