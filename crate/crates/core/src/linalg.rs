//! Small dense linear-algebra helpers on slices and row-major matrices.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn max_abs<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ x`
    pub fn t_matvec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate().take(self.rows) {
            axpy(xi, self.row(i), &mut out);
        }
        out
    }

    /// Adds `alpha * u vᵀ` into the block starting at `(r0, c0)`.
    pub fn add_outer_block(&mut self, r0: usize, c0: usize, alpha: T, u: &[T], v: &[T]) {
        for (i, &ui) in u.iter().enumerate() {
            let a = alpha * ui;
            if a == T::zero() {
                continue;
            }
            let row =
                &mut self.data[(r0 + i) * self.cols + c0..(r0 + i) * self.cols + c0 + v.len()];
            axpy(a, v, row);
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors `a`; returns `None` when a non-positive pivot appears.
    pub fn new(a: &Matrix<T>) -> Option<Self> {
        let n = a.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(Self { l })
    }

    /// Factors `a`, retrying once with `jitter` added to the diagonal.
    pub fn with_jitter(a: &Matrix<T>, jitter: T) -> Result<Self> {
        if let Some(c) = Self::new(a) {
            return Ok(c);
        }
        let mut b = a.clone();
        for i in 0..b.rows {
            b[(i, i)] += jitter;
        }
        Self::new(&b).ok_or_else(|| {
            Error::IllConditioned(format!(
                "{}x{} Hessian not positive definite after jitter {}",
                a.rows, a.cols, jitter
            ))
        })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Solves a symmetric positive-definite system, adding `1e-10` jitter if the
/// first factorization fails.
pub fn solve_spd<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    Ok(Cholesky::with_jitter(a, T::lit(1e-10))?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Matrix {
            rows: 3,
            cols: 3,
            data: vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0],
        };
        let x: Vec<f64> = solve_spd(&a, &[1.0, 2.0, 3.0]).unwrap();
        let back: Vec<f64> = a.matvec(&x);
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_ill_conditioned() {
        let a = Matrix {
            rows: 2,
            cols: 2,
            data: vec![1.0, 2.0, 2.0, 1.0],
        };
        assert!(matches!(
            solve_spd(&a, &[1.0, 1.0]),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix {
            rows: 2,
            cols: 2,
            data: vec![2.0f32, 0.0, 0.0, 8.0],
        };
        assert_eq!(solve_spd(&a, &[2.0f32, 4.0]).unwrap(), vec![1.0, 0.5]);
    }
}
