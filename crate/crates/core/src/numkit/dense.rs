use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Owned `f64` vector. Derefs to `[f64]`, so slice methods and indexing
/// work directly; the wrapper exists to hang numeric helpers off a name.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVec(Vec<f64>);

impl DenseVec {
    pub fn zeros(n: usize) -> Self {
        DenseVec(vec![0.0; n])
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        DenseVec(data)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::DimMismatch {
                context: "dot",
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(self.iter().zip(other.iter()).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// self += alpha * other.
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimMismatch {
                context: "axpy",
                expected: self.len(),
                got: other.len(),
            });
        }
        for (a, b) in self.0.iter_mut().zip(other.iter()) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in &mut self.0 {
            *a *= alpha;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

impl Deref for DenseVec {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DenseVec {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for DenseVec {
    fn from(v: Vec<f64>) -> Self {
        DenseVec(v)
    }
}

impl FromIterator<f64> for DenseVec {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        DenseVec(iter.into_iter().collect())
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMat { rows, cols, data }
    }

    /// Identity-like matrix: ones on the main diagonal, zero elsewhere.
    pub fn eye(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// y = A x.
    pub fn matvec(&self, x: &DenseVec) -> Result<DenseVec> {
        if x.len() != self.cols {
            return Err(Error::DimMismatch {
                context: "matvec",
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut y = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            y.push(row.iter().zip(x.iter()).map(|(a, b)| a * b).sum());
        }
        Ok(DenseVec(y))
    }

    /// y = A^T x.
    pub fn matvec_t(&self, x: &DenseVec) -> Result<DenseVec> {
        if x.len() != self.rows {
            return Err(Error::DimMismatch {
                context: "matvec_t",
                expected: self.rows,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let xi = x[i];
            for (yj, aij) in y.iter_mut().zip(row.iter()) {
                *yj += aij * xi;
            }
        }
        Ok(DenseVec(y))
    }

    /// C = A B.
    pub fn matmul(&self, other: &DenseMat) -> Result<DenseMat> {
        if self.cols != other.rows {
            return Err(Error::DimMismatch {
                context: "matmul",
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = DenseMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let orow = out.row_mut(i);
                for (o, b) in orow.iter_mut().zip(brow.iter()) {
                    *o += aik * b;
                }
            }
        }
        Ok(out)
    }

    /// Solves A x = b by Gaussian elimination with partial pivoting.
    /// Meant for small reference solves in tests and analyses, not for
    /// anything performance-sensitive.
    pub fn solve(&self, b: &DenseVec) -> Result<DenseVec> {
        if self.rows != self.cols {
            return Err(Error::DimMismatch {
                context: "solve (square)",
                expected: self.rows,
                got: self.cols,
            });
        }
        if b.len() != self.rows {
            return Err(Error::DimMismatch {
                context: "solve (rhs)",
                expected: self.rows,
                got: b.len(),
            });
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut x: Vec<f64> = b.to_vec();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .abs()
                        .total_cmp(&a[j * n + col].abs())
                })
                .unwrap();
            if a[pivot * n + col].abs() < 1e-300 {
                return Err(Error::NonFinite {
                    context: format!("solve: singular pivot at column {col}"),
                });
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                x.swap(col, pivot);
            }
            let diag = a[col * n + col];
            for i in col + 1..n {
                let factor = a[i * n + col] / diag;
                if factor == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[i * n + j] -= factor * a[col * n + j];
                }
                x[i] -= factor * x[col];
            }
        }
        for col in (0..n).rev() {
            let mut s = x[col];
            for j in col + 1..n {
                s -= a[col * n + j] * x[j];
            }
            x[col] = s / a[col * n + col];
        }
        Ok(DenseVec(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    use crate::rngs::substream;

    fn random_mat(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMat {
        DenseMat::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_vec(n: usize, rng: &mut impl Rng) -> DenseVec {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Reference product written as the textbook triple loop.
    fn matmul_oracle(a: &DenseMat, b: &DenseMat) -> DenseMat {
        let mut c = DenseMat::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                c.set(i, j, s);
            }
        }
        c
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut rng = substream(11, "test-dense", &[0]);
        for _ in 0..20 {
            let (m, k, n) = (
                rng.gen_range(1..8),
                rng.gen_range(1..8),
                rng.gen_range(1..8),
            );
            let a = random_mat(m, k, &mut rng);
            let b = random_mat(k, n, &mut rng);
            let ab = a.matmul(&b).unwrap();
            let oracle = matmul_oracle(&a, &b);
            for (x, y) in ab.as_slice().iter().zip(oracle.as_slice()) {
                assert_relative_eq!(x, y, max_relative = 1e-12, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn matvec_matches_matmul_column() {
        let mut rng = substream(11, "test-dense", &[1]);
        let a = random_mat(5, 3, &mut rng);
        let x = random_vec(3, &mut rng);
        let xm = DenseMat::from_fn(3, 1, |i, _| x[i]);
        let y = a.matvec(&x).unwrap();
        let ym = a.matmul(&xm).unwrap();
        for i in 0..5 {
            assert_relative_eq!(y[i], ym.get(i, 0), epsilon = 1e-14);
        }
    }

    #[test]
    fn matvec_t_agrees_with_explicit_transpose() {
        let mut rng = substream(11, "test-dense", &[2]);
        let a = random_mat(4, 6, &mut rng);
        let x = random_vec(4, &mut rng);
        let at = DenseMat::from_fn(6, 4, |i, j| a.get(j, i));
        let y1 = a.matvec_t(&x).unwrap();
        let y2 = at.matvec(&x).unwrap();
        for i in 0..6 {
            assert_relative_eq!(y1[i], y2[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn dimension_mismatches_are_errors() {
        let a = DenseMat::zeros(3, 4);
        let v = DenseVec::zeros(3);
        assert!(a.matvec(&v).is_err());
        assert!(a.matvec_t(&DenseVec::zeros(4)).is_err());
        assert!(a.matmul(&DenseMat::zeros(3, 2)).is_err());
        assert!(DenseVec::zeros(2).dot(&DenseVec::zeros(3)).is_err());
    }

    #[test]
    fn solve_recovers_known_solution() {
        let mut rng = substream(11, "test-dense", &[3]);
        for trial in 0..10 {
            let n = 2 + trial % 5;
            // A = M M^T + n I is comfortably positive definite.
            let m = random_mat(n, n, &mut rng);
            let mt = DenseMat::from_fn(n, n, |i, j| m.get(j, i));
            let mut a = m.matmul(&mt).unwrap();
            for i in 0..n {
                a.set(i, i, a.get(i, i) + n as f64);
            }
            let x_true = random_vec(n, &mut rng);
            let b = a.matvec(&x_true).unwrap();
            let x = a.solve(&b).unwrap();
            for i in 0..n {
                assert_relative_eq!(x[i], x_true[i], max_relative = 1e-9, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn eye_is_matvec_identity() {
        let v = DenseVec::from_vec(vec![1.5, -2.0, 0.25]);
        let out = DenseMat::eye(3).matvec(&v).unwrap();
        assert_eq!(&*out, &*v);
    }
}
