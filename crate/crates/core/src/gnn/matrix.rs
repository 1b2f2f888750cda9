//! Row-major dense matrix with the handful of operations the training
//! engine needs. No BLAS, no sparsity: graphs at this scale fit densely.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Row-major dense `f64` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must be rows*cols");
        Self { rows, cols, data }
    }

    /// Glorot-uniform initialization: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
    pub fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let a = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.gen_range(-a..a)).collect();
        Self { rows, cols, data }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `self * other`, (n×k)·(k×m) -> n×m.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let lhs = self.row(i);
            let dst = out.row_mut(i);
            for (k, &l) in lhs.iter().enumerate() {
                if l == 0.0 {
                    continue;
                }
                let rhs = other.row(k);
                for (d, &r) in dst.iter_mut().zip(rhs.iter()) {
                    *d += l * r;
                }
            }
        }
        out
    }

    /// `selfᵀ * other`, (k×n)ᵀ·(k×m) -> n×m. Used for weight gradients.
    pub fn transpose_matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "transpose_matmul shape mismatch");
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let lhs = self.row(k);
            let rhs = other.row(k);
            for (i, &l) in lhs.iter().enumerate() {
                if l == 0.0 {
                    continue;
                }
                let dst = out.row_mut(i);
                for (d, &r) in dst.iter_mut().zip(rhs.iter()) {
                    *d += l * r;
                }
            }
        }
        out
    }

    /// `self * otherᵀ`, (n×k)·(m×k)ᵀ -> n×m. Used for input gradients.
    pub fn matmul_transpose(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.cols, "matmul_transpose shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let lhs = self.row(i);
            let dst = out.row_mut(i);
            for (j, d) in dst.iter_mut().enumerate() {
                let rhs = other.row(j);
                let mut acc = 0.0;
                for (&l, &r) in lhs.iter().zip(rhs.iter()) {
                    acc += l * r;
                }
                *d = acc;
            }
        }
        out
    }

    /// Adds `bias` (1×cols) to every row.
    pub fn add_row_bias(&mut self, bias: &DenseMatrix) {
        assert_eq!(bias.rows, 1);
        assert_eq!(bias.cols, self.cols);
        for i in 0..self.rows {
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (v, &b) in row.iter_mut().zip(bias.data.iter()) {
                *v += b;
            }
        }
    }

    /// Column sums as a 1×cols matrix. Gradient counterpart of `add_row_bias`.
    pub fn column_sums(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(1, self.cols);
        for i in 0..self.rows {
            let row = self.row(i);
            for (d, &v) in out.data.iter_mut().zip(row.iter()) {
                *d += v;
            }
        }
        out
    }

    pub fn relu(&self) -> DenseMatrix {
        let data = self.data.iter().map(|&v| v.max(0.0)).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Elementwise product with the ReLU mask of `pre` (1 where pre > 0).
    pub fn mask_relu(&self, pre: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, pre.rows);
        assert_eq!(self.cols, pre.cols);
        let data = self
            .data
            .iter()
            .zip(pre.data.iter())
            .map(|(&g, &p)| if p > 0.0 { g } else { 0.0 })
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Cosine similarity between two vectors; `None` when either has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "cosine on mismatched lengths");
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b.iter()) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(dot / (na.sqrt() * nb.sqrt()))
}

/// Cosine distance 1 - cos(a, b); `None` when either vector has zero norm.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    cosine_similarity(a, b).map(|s| 1.0 - s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small() {
        let a = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = DenseMatrix::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = a.matmul(&b);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn transpose_matmul_matches_explicit_transpose() {
        let a = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = DenseMatrix::from_vec(2, 2, vec![1.0, 0.5, -1.0, 2.0]);
        let at_b = a.transpose_matmul(&b);
        // explicit aᵀ
        let at = DenseMatrix::from_vec(3, 2, vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(at_b, at.matmul(&b));
    }

    #[test]
    fn matmul_transpose_matches_explicit_transpose() {
        let a = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = DenseMatrix::from_vec(4, 3, vec![1.0; 12]);
        let bt = DenseMatrix::from_vec(3, 4, vec![1.0; 12]);
        assert_eq!(a.matmul_transpose(&b), a.matmul(&bt));
    }

    #[test]
    fn cosine_identical_and_orthogonal() {
        assert_eq!(cosine_distance(&[1.0, 0.0], &[1.0, 0.0]), Some(0.0));
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]), Some(1.0));
        assert_eq!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]), None);
    }
}
