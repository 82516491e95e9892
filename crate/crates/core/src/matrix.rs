//! Dense matrices used throughout the crate.
//!
//! [`Matrix`] is a plain row-major rectangular matrix. [`SymMatrix`] stores
//! only the lower triangle, so symmetry holds by construction: every read of
//! `(i, j)` with `i < j` mirrors `(j, i)`.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{dim_check, Error, Result};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            dim_check(&format!("length of row {i}"), cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
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

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(i);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "mul_vec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// Selects the given columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, cols.len(), |i, k| self[(i, cols[k])])
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Symmetric part `(A + A^T) / 2`.
    pub fn symmetrize(&self) -> Result<SymMatrix> {
        dim_check("symmetrize needs a square matrix", self.rows, self.cols)?;
        Ok(SymMatrix::from_fn(self.rows, |i, j| 0.5 * (self[(i, j)] + self[(j, i)])))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Dense real symmetric matrix with packed lower-triangular storage.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    packed: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, packed: vec![0.0; n * (n + 1) / 2] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut s = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            s.set(i, i, v);
        }
        s
    }

    /// Builds from a function evaluated on the lower triangle (`i >= j`).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut packed = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                packed.push(f(i, j));
            }
        }
        Self { n, packed }
    }

    /// `x x^T`.
    pub fn outer(x: &[f64]) -> Self {
        Self::from_fn(x.len(), |i, j| x[i] * x[j])
    }

    /// `(u v^T + v u^T)`.
    pub fn sym_outer(u: &[f64], v: &[f64]) -> Self {
        assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |i, j| u[i] * v[j] + v[i] * u[j])
    }

    /// Reads a full square matrix, checking symmetry to `rel_tol` relative to
    /// the largest entry.
    pub fn from_full(m: &Matrix, rel_tol: f64) -> Result<Self> {
        dim_check("symmetric matrix must be square", m.rows(), m.cols())?;
        let scale = m.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..m.rows() {
            for j in 0..i {
                let gap = (m[(i, j)] - m[(j, i)]).abs();
                if gap > rel_tol * scale {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({}, {}): |a_ij - a_ji| = {gap:.3e}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self::from_fn(m.rows(), |i, j| m[(i, j)]))
    }

    pub fn from_rows(rows: &[Vec<f64>], rel_tol: f64) -> Result<Self> {
        Self::from_full(&Matrix::from_rows(rows)?, rel_tol)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j < self.n);
        self.packed[packed_index(i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.packed[packed_index(i, j)] = v;
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_full(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.to_full().to_rows()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_dot(self).sqrt()
    }

    /// Frobenius inner product `tr(A B)`.
    pub fn frobenius_dot(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..=i {
                let p = self.get(i, j) * other.get(i, j);
                s += if i == j { p } else { 2.0 * p };
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.packed.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Row sums, accumulated as (off-diagonal sum, ascending) + diagonal.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let off: f64 = (0..self.n).filter(|&j| j != i).map(|j| self.get(i, j)).sum();
                off + self.get(i, i)
            })
            .collect()
    }

    pub fn scale(&self, a: f64) -> SymMatrix {
        SymMatrix { n: self.n, packed: self.packed.iter().map(|v| a * v).collect() }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.axpy(-1.0, other)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n, "symmetric matrix size mismatch");
        SymMatrix {
            n: self.n,
            packed: self.packed.iter().zip(&other.packed).map(|(x, y)| x + a * y).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, x.len());
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    pub fn matmul(&self, other: &SymMatrix) -> Matrix {
        self.to_full().matmul(&other.to_full())
    }

    /// `A B + B A`, which is symmetric whenever both factors are.
    pub fn anticommutator(&self, other: &SymMatrix) -> SymMatrix {
        let ab = self.matmul(other);
        SymMatrix::from_fn(self.n, |i, j| ab[(i, j)] + ab[(j, i)])
    }

    /// `U^T A U` for a square `U`.
    pub fn congruence_t(&self, u: &Matrix) -> SymMatrix {
        let au = self.to_full().matmul(u);
        let utau = u.transpose().matmul(&au);
        SymMatrix::from_fn(u.cols(), |i, j| 0.5 * (utau[(i, j)] + utau[(j, i)]))
    }

    /// `U A U^T` for a square `U`.
    pub fn congruence(&self, u: &Matrix) -> SymMatrix {
        self.congruence_t(&u.transpose())
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix {} [", self.n)?;
        for r in self.to_rows() {
            writeln!(f, "  {r:?}")?;
        }
        write!(f, "]")
    }
}

/// Wire form of a symmetric matrix: `{"n": int, "rows": [[...], ...]}` with
/// full (redundant) storage.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    rows: Vec<Vec<f64>>,
}

/// Relative symmetry tolerance applied when reading matrix JSON.
pub const JSON_SYMMETRY_TOL: f64 = 1e-12;

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson { n: self.n, rows: self.to_rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        if raw.rows.len() != raw.n {
            return Err(serde::de::Error::custom(format!(
                "declared n = {} but {} rows given",
                raw.n,
                raw.rows.len()
            )));
        }
        SymMatrix::from_rows(&raw.rows, JSON_SYMMETRY_TOL).map_err(serde::de::Error::custom)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Householder QR with column pivoting, `A P = Q R`.
pub struct PivotedQr {
    /// Householder vectors stored below the diagonal; `R` on and above.
    qr: Matrix,
    tau: Vec<f64>,
    perm: Vec<usize>,
}

impl PivotedQr {
    pub fn new(a: &Matrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut qr = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut tau = Vec::with_capacity(m.min(n));
        let mut col_norms: Vec<f64> = (0..n).map(|j| norm2(&qr.column(j))).collect();

        for k in 0..m.min(n) {
            // Pivot: remaining column of largest norm (first on ties).
            let mut p = k;
            for j in k + 1..n {
                if col_norms[j] > col_norms[p] {
                    p = j;
                }
            }
            if p != k {
                for i in 0..m {
                    let t = qr[(i, k)];
                    qr[(i, k)] = qr[(i, p)];
                    qr[(i, p)] = t;
                }
                perm.swap(k, p);
                col_norms.swap(k, p);
            }

            let alpha = norm2(&(k..m).map(|i| qr[(i, k)]).collect::<Vec<_>>());
            if alpha == 0.0 {
                tau.push(0.0);
                continue;
            }
            let beta = if qr[(k, k)] > 0.0 { -alpha } else { alpha };
            let v0 = qr[(k, k)] - beta;
            for i in k + 1..m {
                qr[(i, k)] /= v0;
            }
            let t = (beta - qr[(k, k)]) / beta;
            qr[(k, k)] = beta;
            tau.push(t);

            for j in k + 1..n {
                let mut s = qr[(k, j)];
                for i in k + 1..m {
                    s += qr[(i, k)] * qr[(i, j)];
                }
                s *= t;
                qr[(k, j)] -= s;
                for i in k + 1..m {
                    let vik = qr[(i, k)];
                    qr[(i, j)] -= s * vik;
                }
                // Recompute rather than downdate; sizes here are small.
                col_norms[j] = norm2(&(k + 1..m).map(|i| qr[(i, j)]).collect::<Vec<_>>());
            }
        }
        Self { qr, tau, perm }
    }

    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.tau.len()).map(|k| self.qr[(k, k)]).collect()
    }

    /// Number of `|R_kk| > rel_tol * |R_00|`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let d = self.r_diag();
        let Some(&first) = d.first() else { return 0 };
        let thresh = rel_tol * first.abs();
        if first == 0.0 {
            return 0;
        }
        d.iter().take_while(|v| v.abs() > thresh).count()
    }

    /// Applies `Q^T` to a vector of length `rows`.
    fn apply_qt(&self, b: &mut [f64]) {
        let m = self.qr.rows();
        for (k, &t) in self.tau.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let mut s = b[k];
            for i in k + 1..m {
                s += self.qr[(i, k)] * b[i];
            }
            s *= t;
            b[k] -= s;
            for i in k + 1..m {
                b[i] -= s * self.qr[(i, k)];
            }
        }
    }

    /// Least-squares solution using the leading `rank` pivoted columns; the
    /// remaining coordinates are set to zero (basic solution).
    pub fn solve_least_squares(&self, b: &[f64], rank: usize) -> Vec<f64> {
        let n = self.qr.cols();
        let mut y = b.to_vec();
        self.apply_qt(&mut y);
        let mut z = vec![0.0; n];
        for k in (0..rank).rev() {
            let mut s = y[k];
            for j in k + 1..rank {
                s -= self.qr[(k, j)] * z[j];
            }
            z[k] = s / self.qr[(k, k)];
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }
}

/// Least-squares solve of a full-column-rank system.
pub fn least_squares(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let qr = PivotedQr::new(a);
    qr.solve_least_squares(b, a.cols().min(a.rows()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_storage_mirrors() {
        let mut s = SymMatrix::zeros(3);
        s.set(0, 2, 5.0);
        assert_eq!(s.get(2, 0), 5.0);
        assert_eq!(s.get(0, 2), 5.0);
        assert_eq!(s.to_full()[(2, 0)], 5.0);
    }

    #[test]
    fn from_full_rejects_asymmetry() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]).unwrap();
        assert!(SymMatrix::from_full(&m, 1e-12).is_err());
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(SymMatrix::from_full(&m, 1e-12).is_ok());
    }

    #[test]
    fn frobenius_dot_counts_off_diagonal_twice() {
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 3.0]], 0.0).unwrap();
        assert_eq!(a.frobenius_dot(&a), 1.0 + 4.0 + 4.0 + 9.0);
    }

    #[test]
    fn json_roundtrip() {
        let a = SymMatrix::from_rows(&[vec![1.0, -0.5], vec![-0.5, 3.25]], 0.0).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"n":2,"rows":[[1.0,-0.5],[-0.5,3.25]]}"#);
        let b: SymMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<SymMatrix>(r#"{"n":2,"rows":[[1,2],[3,4]]}"#).is_err());
        assert!(serde_json::from_str::<SymMatrix>(r#"{"n":3,"rows":[[1,2],[2,4]]}"#).is_err());
    }

    #[test]
    fn pivoted_qr_rank_and_lstsq() {
        // Third column = first + second.
        let a = Matrix::from_rows(&[
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 1.0, 2.0],
            vec![2.0, -1.0, 1.0],
        ])
        .unwrap();
        let qr = PivotedQr::new(&a);
        assert_eq!(qr.rank(1e-12), 2);

        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        // Consistent system with solution (2, -1).
        let x = least_squares(&a, &[2.0, -1.0, 1.0]);
        assert!((x[0] - 2.0).abs() < 1e-14 && (x[1] + 1.0).abs() < 1e-14);
        // Inconsistent: normal equations give (1/3, 1/3)... check via A^T r = 0.
        let b = [1.0, 0.0, 0.0];
        let x = least_squares(&a, &b);
        let r: Vec<f64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        let atr = a.transpose().mul_vec(&r);
        assert!(norm_inf(&atr) < 1e-14);
    }
}
