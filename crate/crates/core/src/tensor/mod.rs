//! Dense and sparse arrays, datasets, generators, loaders and metrics.

mod csv_io;
mod dataset;
mod generators;
mod metrics;

pub use csv_io::load_csv;
pub use dataset::{train_test_split, Dataset};
pub use generators::{make_blobs, make_moons, make_plates, plate_mask, PLATE_COLS, PLATE_ROWS, PLATE_SIDE};
pub use metrics::accuracy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Vector norm order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

/// Compressed-row storage. Column indices within a row are sorted and no
/// explicit zeros are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Csr<T> {
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "storage", rename_all = "lowercase")]
pub enum Storage<T> {
    Dense { values: Vec<T> },
    Sparse(Csr<T>),
}

/// One- or two-dimensional numeric array with dense or compressed-row storage.
///
/// One-dimensional sparse tensors are stored as a single CSR row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    storage: Storage<T>,
}

fn check_finite<T: Scalar>(values: &[T]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidValue(format!(
            "non-finite entry at flat index {i}"
        ))),
        None => Ok(()),
    }
}

impl<T: Scalar> Tensor<T> {
    pub fn vector(values: Vec<T>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Self {
            shape: vec![values.len()],
            storage: Storage::Dense { values },
        })
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        if rows * cols != values.len() {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        check_finite(&values)?;
        Ok(Self {
            shape: vec![rows, cols],
            storage: Storage::Dense { values },
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Shape(format!(
                "row {i} has {} entries, expected {cols}",
                rows[i].len()
            )));
        }
        Self::matrix(rows.len(), cols, rows.concat())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn storage(&self) -> &Storage<T> {
        &self.storage
    }

    pub fn nrows(&self) -> usize {
        if self.shape.len() == 2 {
            self.shape[0]
        } else {
            1
        }
    }

    pub fn ncols(&self) -> usize {
        *self.shape.last().unwrap_or(&0)
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense { values } => values.len(),
            Storage::Sparse(csr) => csr.values.len(),
        }
    }

    pub fn to_sparse(&self) -> Self {
        match &self.storage {
            Storage::Sparse(_) => self.clone(),
            Storage::Dense { values } => {
                let (rows, cols) = (self.nrows(), self.ncols());
                let mut indptr = Vec::with_capacity(rows + 1);
                let mut indices = Vec::new();
                let mut vals = Vec::new();
                indptr.push(0);
                for r in 0..rows {
                    for (c, &v) in values[r * cols..(r + 1) * cols].iter().enumerate() {
                        if v != T::zero() {
                            indices.push(c);
                            vals.push(v);
                        }
                    }
                    indptr.push(indices.len());
                }
                Self {
                    shape: self.shape.clone(),
                    storage: Storage::Sparse(Csr {
                        indptr,
                        indices,
                        values: vals,
                    }),
                }
            }
        }
    }

    pub fn to_dense(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            storage: Storage::Dense {
                values: self.to_dense_vec(),
            },
        }
    }

    /// Flat row-major copy of all logical entries.
    pub fn to_dense_vec(&self) -> Vec<T> {
        match &self.storage {
            Storage::Dense { values } => values.clone(),
            Storage::Sparse(csr) => {
                let cols = self.ncols();
                let mut out = vec![T::zero(); self.len()];
                for r in 0..self.nrows() {
                    for k in csr.indptr[r]..csr.indptr[r + 1] {
                        out[r * cols + csr.indices[k]] = csr.values[k];
                    }
                }
                out
            }
        }
    }

    /// Dense copy of row `i` (the whole vector for one-dimensional tensors).
    pub fn row(&self, i: usize) -> Vec<T> {
        let cols = self.ncols();
        match &self.storage {
            Storage::Dense { values } => values[i * cols..(i + 1) * cols].to_vec(),
            Storage::Sparse(csr) => {
                let mut out = vec![T::zero(); cols];
                for k in csr.indptr[i]..csr.indptr[i + 1] {
                    out[csr.indices[k]] = csr.values[k];
                }
                out
            }
        }
    }

    /// Non-zero `(column, value)` pairs of row `i`, in column order.
    pub fn row_entries(&self, i: usize) -> Vec<(usize, T)> {
        let cols = self.ncols();
        match &self.storage {
            Storage::Dense { values } => values[i * cols..(i + 1) * cols]
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != T::zero())
                .map(|(c, &v)| (c, v))
                .collect(),
            Storage::Sparse(csr) => (csr.indptr[i]..csr.indptr[i + 1])
                .map(|k| (csr.indices[k], csr.values[k]))
                .collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match &self.storage {
            Storage::Dense { values } => values[i * self.ncols() + j],
            Storage::Sparse(csr) => {
                let idx = &csr.indices[csr.indptr[i]..csr.indptr[i + 1]];
                match idx.binary_search(&j) {
                    Ok(k) => csr.values[csr.indptr[i] + k],
                    Err(_) => T::zero(),
                }
            }
        }
    }

    /// Matrix-vector product; sparse storage only touches stored entries.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.ncols() {
            return Err(Error::Shape(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.ncols()
            )));
        }
        Ok((0..self.nrows())
            .map(|r| {
                self.row_entries_iter(r)
                    .fold(T::zero(), |acc, (c, v)| acc + v * x[c])
            })
            .collect())
    }

    fn row_entries_iter(&self, r: usize) -> Box<dyn Iterator<Item = (usize, T)> + '_> {
        let cols = self.ncols();
        match &self.storage {
            Storage::Dense { values } => {
                Box::new(values[r * cols..(r + 1) * cols].iter().copied().enumerate())
            }
            Storage::Sparse(csr) => Box::new(
                (csr.indptr[r]..csr.indptr[r + 1]).map(move |k| (csr.indices[k], csr.values[k])),
            ),
        }
    }

    /// New tensor with the given rows, preserving the storage kind.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let cols = self.ncols();
        match &self.storage {
            Storage::Dense { values } => {
                let mut out = Vec::with_capacity(rows.len() * cols);
                for &r in rows {
                    out.extend_from_slice(&values[r * cols..(r + 1) * cols]);
                }
                Self {
                    shape: vec![rows.len(), cols],
                    storage: Storage::Dense { values: out },
                }
            }
            Storage::Sparse(csr) => {
                let mut indptr = vec![0];
                let mut indices = Vec::new();
                let mut vals = Vec::new();
                for &r in rows {
                    indices.extend_from_slice(&csr.indices[csr.indptr[r]..csr.indptr[r + 1]]);
                    vals.extend_from_slice(&csr.values[csr.indptr[r]..csr.indptr[r + 1]]);
                    indptr.push(indices.len());
                }
                Self {
                    shape: vec![rows.len(), cols],
                    storage: Storage::Sparse(Csr {
                        indptr,
                        indices,
                        values: vals,
                    }),
                }
            }
        }
    }

    /// Appends rows given densely; keeps the storage kind.
    pub fn append_rows(&self, rows: &[Vec<T>]) -> Result<Self> {
        let cols = self.ncols();
        for r in rows {
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "appended row has {} entries, expected {cols}",
                    r.len()
                )));
            }
            check_finite(r)?;
        }
        let mut dense = self.to_dense_vec();
        for r in rows {
            dense.extend_from_slice(r);
        }
        let out = Self {
            shape: vec![self.nrows() + rows.len(), cols],
            storage: Storage::Dense { values: dense },
        };
        Ok(if self.is_sparse() {
            out.to_sparse()
        } else {
            out
        })
    }

    /// ℓp norm of a one-dimensional tensor. Zero entries contribute nothing,
    /// so sparse storage only visits stored values.
    pub fn norm(&self, p: Norm) -> Result<T> {
        if self.ndim() != 1 {
            return Err(Error::Shape(format!(
                "norm expects a vector, got shape {:?}",
                self.shape
            )));
        }
        let stored = match &self.storage {
            Storage::Dense { values } => values.as_slice(),
            Storage::Sparse(csr) => csr.values.as_slice(),
        };
        norm(stored, p)
    }
}

/// ℓp norm of a dense vector.
pub fn norm<T: Scalar>(x: &[T], p: Norm) -> Result<T> {
    check_finite(x)?;
    Ok(match p {
        Norm::L1 => x.iter().map(|v| v.abs()).sum(),
        Norm::L2 => {
            // scaled to avoid overflow on large entries
            let scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            if scale == T::zero() {
                T::zero()
            } else {
                scale
                    * x.iter()
                        .map(|&v| (v / scale) * (v / scale))
                        .sum::<T>()
                        .sqrt()
            }
        }
        Norm::Linf => x.iter().fold(T::zero(), |m, v| m.max(v.abs())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn norm_examples() {
        assert_eq!(norm(&[3.0, 4.0], Norm::L2).unwrap(), 5.0);
        assert_eq!(norm(&[0.0, 0.0, 0.0], Norm::Linf).unwrap(), 0.0);
        assert_eq!(norm(&[1.0, -2.0, 3.0], Norm::L1).unwrap(), 6.0);
        assert_eq!(norm(&[3.0f32, 4.0], Norm::L2).unwrap(), 5.0f32);
    }

    #[test]
    fn non_finite_is_rejected() {
        assert!(matches!(
            norm(&[1.0, f64::NAN], Norm::L2),
            Err(Error::InvalidValue(_))
        ));
        assert!(Tensor::vector(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn norm_requires_vector() {
        let m = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(m.norm(Norm::L2), Err(Error::Shape(_))));
    }

    #[test]
    fn sparse_layout_has_sorted_columns_and_no_zeros() {
        let m = Tensor::matrix(2, 3, vec![0.0, 2.0, 1.0, 0.0, 0.0, -3.0]).unwrap();
        let s = m.to_sparse();
        match s.storage() {
            Storage::Sparse(csr) => {
                assert_eq!(csr.indptr, vec![0, 2, 3]);
                assert_eq!(csr.indices, vec![1, 2, 2]);
                assert_eq!(csr.values, vec![2.0, 1.0, -3.0]);
            }
            _ => unreachable!(),
        }
        assert_eq!(s.nnz(), 3);
        assert_eq!(s.get(1, 2), -3.0);
        assert_eq!(s.get(1, 0), 0.0);
        assert_eq!(s.to_dense(), m);
    }

    proptest! {
        #[test]
        fn dense_and_sparse_agree(vals in prop::collection::vec(prop_oneof![Just(0.0), -5.0..5.0f64], 12),
                                  x in prop::collection::vec(-3.0..3.0f64, 4),
                                  rows in prop::collection::vec(0usize..3, 0..5)) {
            let d = Tensor::matrix(3, 4, vals.clone()).unwrap();
            let s = d.to_sparse();
            let (md, ms) = (d.matvec(&x).unwrap(), s.matvec(&x).unwrap());
            for (a, b) in md.iter().zip(&ms) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            prop_assert_eq!(d.select_rows(&rows).to_dense_vec(), s.select_rows(&rows).to_dense_vec());
            for r in 0..3 {
                prop_assert_eq!(d.row(r), s.row(r));
            }
            let v = Tensor::vector(vals).unwrap();
            for p in [Norm::L1, Norm::L2, Norm::Linf] {
                let (a, b) = (v.norm(p).unwrap(), v.to_sparse().norm(p).unwrap());
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn norm_is_a_norm(x in prop::collection::vec(-100.0..100.0f64, 1..8),
                          y in prop::collection::vec(-100.0..100.0f64, 8),
                          a in -10.0..10.0f64) {
            let y = &y[..x.len()];
            let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
            let scaled: Vec<f64> = x.iter().map(|v| a * v).collect();
            for p in [Norm::L1, Norm::L2, Norm::Linf] {
                let (nx, ny) = (norm(&x, p).unwrap(), norm(y, p).unwrap());
                prop_assert!(norm(&sum, p).unwrap() <= nx + ny + 1e-9);
                prop_assert!((norm(&scaled, p).unwrap() - a.abs() * nx).abs() <= 1e-9 * (1.0 + nx * a.abs()));
                prop_assert_eq!(nx == 0.0, x.iter().all(|&v| v == 0.0));
            }
        }
    }
}
