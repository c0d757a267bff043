//! Minimal dense matrix storage shared by assembly, the eigensolver and the
//! verification layer. Problem sizes stay at desk scale so dense storage is
//! the simplest thing that works.

use std::io::Write;
use std::ops::{Index, IndexMut};

/// Dense rectangular matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Copy> Mat<S> {
    pub fn filled(rows: usize, cols: usize, value: S) -> Self {
        Mat {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<T: Copy>(&self, f: impl Fn(S) -> T) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Borrow row `k` immutably and row `i` mutably; requires k < i.
    pub fn row_pair_mut(&mut self, k: usize, i: usize) -> (&[S], &mut [S]) {
        assert!(k < i && i < self.rows);
        let cols = self.cols;
        let (head, tail) = self.data.split_at_mut(i * cols);
        (&head[k * cols..(k + 1) * cols], &mut tail[..cols])
    }
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric matrix stored as a packed lower triangle, row major.
///
/// Entry (i, j) and (j, i) are the same storage slot, so symmetry holds by
/// construction; assembly writes each unordered index pair exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat<S> {
    n: usize,
    data: Vec<S>,
}

#[inline]
pub(crate) fn tri_index(i: usize, j: usize) -> usize {
    // caller guarantees i >= j
    i * (i + 1) / 2 + j
}

impl<S: Copy> SymMat<S> {
    pub fn filled(n: usize, value: S) -> Self {
        SymMat {
            n,
            data: vec![value; n * (n + 1) / 2],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        SymMat { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[tri_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: S) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[tri_index(i, j)] = value;
    }

    pub fn packed(&self) -> &[S] {
        &self.data
    }

    pub fn map<T: Copy>(&self, f: impl Fn(S) -> T) -> SymMat<T> {
        SymMat {
            n: self.n,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Expand into full dense storage (the eigensolver works on full rows).
    pub fn to_full(&self) -> Mat<S> {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

impl SymMat<f64> {
    /// Quadratic form x^T A y.
    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += x[i] * self.get(i, j) * y[j];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += self.get(i, j) * self.get(i, j);
            }
        }
        acc.sqrt()
    }

    /// Plain-text dump: header line `n scalar_kind`, then one row per line.
    pub fn write_plain(&self, w: &mut impl Write, scalar_kind: &str) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.n, scalar_kind)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format!("{:.16e}", self.get(i, j))).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// y = A x for symmetric packed A.
pub fn sym_matvec(a: &SymMat<f64>, x: &[f64]) -> Vec<f64> {
    let n = a.dim();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += a.get(i, j) * x[j];
        }
        y[i] = acc;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_indexing_is_symmetric() {
        let mut a = SymMat::filled(3, 0.0);
        a.set(0, 2, 5.0);
        assert_eq!(a.get(2, 0), 5.0);
        a.set(2, 1, -1.5);
        assert_eq!(a.get(1, 2), -1.5);
        let full = a.to_full();
        assert_eq!(full[(0, 2)], full[(2, 0)]);
    }

    #[test]
    fn quad_form_matches_dense() {
        let a = SymMat::from_fn(3, |i, j| (i + j) as f64 + if i == j { 2.0 } else { 0.0 });
        let x = [1.0, -2.0, 0.5];
        let y = [0.25, 1.0, -1.0];
        let mut expect = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                expect += x[i] * a.get(i, j) * y[j];
            }
        }
        assert_eq!(a.quad_form(&x, &y), expect);
    }
}
