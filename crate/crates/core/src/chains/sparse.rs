//! Compressed-row matrices over a generic weight type.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::numeric::rational_f64;

/// Matrix entry type: `f64` for numerics, [`BigRational`] for exact identities.
pub trait Weight:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + 'static
{
    fn from_ratio(num: &BigUint, den: &BigUint) -> Self;
    fn from_u64_ratio(num: u64, den: u64) -> Self {
        Self::from_ratio(&BigUint::from(num), &BigUint::from(den))
    }
    fn to_f64(&self) -> f64;
    /// Text form used by coordinate exports.
    fn format(&self) -> String;
}

impl Weight for f64 {
    fn from_ratio(num: &BigUint, den: &BigUint) -> Self {
        crate::numeric::ratio_f64(num, den)
    }

    fn from_u64_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn format(&self) -> String {
        format!("{self:e}")
    }
}

impl Weight for BigRational {
    fn from_ratio(num: &BigUint, den: &BigUint) -> Self {
        BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
    }

    fn to_f64(&self) -> f64 {
        rational_f64(self)
    }

    fn format(&self) -> String {
        crate::numeric::format_rational(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<T>,
}

impl<T: Weight> Csr<T> {
    /// Builds from rows of `(column, value)`; duplicate columns are summed and
    /// explicit zeros dropped.
    pub fn from_rows<I, R>(ncols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = (usize, T)>,
    {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values: Vec<T> = Vec::new();
        let mut buf: Vec<(usize, T)> = Vec::new();
        for row in rows {
            buf.clear();
            buf.extend(row);
            buf.sort_by_key(|e| e.0);
            let start = indices.len();
            for (c, v) in buf.drain(..) {
                debug_assert!(c < ncols);
                if indices.len() > start && *indices.last().unwrap() as usize == c {
                    let last = values.last_mut().unwrap();
                    *last = last.clone() + v;
                } else {
                    indices.push(c as u32);
                    values.push(v);
                }
            }
            // drop entries that cancelled to zero
            let mut w = start;
            for r in start..indices.len() {
                if !values[r].is_zero() {
                    indices.swap(w, r);
                    values.swap(w, r);
                    w += 1;
                }
            }
            indices.truncate(w);
            values.truncate(w);
            indptr.push(indices.len());
        }
        Self {
            nrows: indptr.len() - 1,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows(n, (0..n).map(|i| [(i, T::one())]))
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &T)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .map(|&c| c as usize)
            .zip(&self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i)
            .find(|(c, _)| *c == j)
            .map_or_else(T::zero, |(_, v)| v.clone())
    }

    /// `A x`, parallel over rows; each output is summed in column order, so
    /// the result does not depend on the thread count.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .into_par_iter()
            .with_min_len(256)
            .map(|i| {
                self.row(i)
                    .fold(T::zero(), |acc, (c, v)| acc + v.clone() * x[c].clone())
            })
            .collect()
    }

    /// `xᵀ A`.
    pub fn vec_mul(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (c, v) in self.row(i) {
                y[c] = y[c].clone() + xi.clone() * v.clone();
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); self.ncols];
        for i in 0..self.nrows {
            for (c, v) in self.row(i) {
                rows[c].push((i, v.clone()));
            }
        }
        Self::from_rows(self.nrows, rows)
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Csr<T>) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let rows: Vec<Vec<(usize, T)>> = (0..self.nrows)
            .into_par_iter()
            .map(|i| {
                let mut acc: std::collections::BTreeMap<usize, T> = Default::default();
                for (k, a) in self.row(i) {
                    for (j, b) in other.row(k) {
                        let e = acc.entry(j).or_insert_with(T::zero);
                        *e = e.clone() + a.clone() * b.clone();
                    }
                }
                acc.into_iter().collect()
            })
            .collect();
        Self::from_rows(other.ncols, rows)
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.nrows)
            .map(|i| self.row(i).fold(T::zero(), |a, (_, v)| a + v.clone()))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.ncols];
        for i in 0..self.nrows {
            for (c, v) in self.row(i) {
                out[c] = out[c].clone() + v.clone();
            }
        }
        out
    }

    pub fn map<U: Weight>(&self, f: impl Fn(&T) -> U) -> Csr<U> {
        Csr {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> Csr<f64> {
        self.map(|v| v.to_f64())
    }

    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && *self == self.transpose()
    }

    pub fn to_dense_f64(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (c, v) in self.row(i) {
                m[(i, c)] = v.to_f64();
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_and_multiply() {
        let a = Csr::<f64>::from_rows(3, vec![vec![(0, 1.0), (2, 2.0), (0, 1.0)], vec![], vec![(1, 3.0), (1, -3.0)]]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![4.0, 0.0, 0.0]);
        assert_eq!(a.vec_mul(&[1.0, 0.0, 0.0]), vec![2.0, 0.0, 2.0]);
        let t = a.transpose();
        assert_eq!(t.get(2, 0), 2.0);
        let p = a.matmul(&t);
        assert_eq!(p.get(0, 0), 8.0);
    }
}
