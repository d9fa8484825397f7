//! Dense complex linear algebra.
//!
//! Everything here is row-major and immutable once built. Projectors are
//! stored as index sets over the computational basis, so they are idempotent
//! and Hermitian by construction.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{QdesError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Default tolerance for unitarity and normalization checks.
pub const VALIDATION_TOL: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CVector(pub Vec<C64>);

impl CVector {
    pub fn zeros(dim: usize) -> Self {
        CVector(vec![ZERO; dim])
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[i] = ONE;
        v
    }

    pub fn from_real(xs: &[f64]) -> Self {
        CVector(xs.iter().map(|&x| r(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Bilinear product `sum a_i b_i` (no conjugation): a row functional
    /// applied to a column vector.
    pub fn dot(&self, other: &CVector) -> C64 {
        dot(&self.0, &other.0)
    }

    pub fn scale(&self, s: C64) -> CVector {
        CVector(self.0.iter().map(|z| z * s).collect())
    }

    pub fn tensor(&self, other: &CVector) -> CVector {
        CVector(kron_vec(&self.0, &other.0))
    }

    pub fn direct_sum(&self, other: &CVector) -> CVector {
        let mut out = self.0.clone();
        out.extend_from_slice(&other.0);
        CVector(out)
    }

    pub fn conj(&self) -> CVector {
        CVector(self.0.iter().map(|z| z.conj()).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Hermitian inner product, conjugate-linear in the first argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{:.4}{:+.4}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(QdesError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n * m);
        for row in rows {
            if row.len() != m {
                return Err(QdesError::DimensionMismatch {
                    expected: m,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(CMatrix {
            rows: n,
            cols: m,
            data,
        })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| r(x)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Result<Self> {
        let n = cols.first().map_or(0, |c| c.len());
        let mut m = Self::zeros(n, cols.len());
        for (j, col) in cols.iter().enumerate() {
            if col.len() != n {
                return Err(QdesError::DimensionMismatch {
                    expected: n,
                    found: col.len(),
                });
            }
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> CMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(QdesError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Column action `M v`.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(QdesError::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok(self.apply_unchecked(v))
    }

    pub(crate) fn apply_unchecked(&self, v: &[C64]) -> Vec<C64> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Row action `v M`.
    pub fn apply_left(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.rows {
            return Err(QdesError::DimensionMismatch {
                expected: self.rows,
                found: v.len(),
            });
        }
        let mut out = vec![ZERO; self.cols];
        for (i, &a) in v.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for (o, m) in out.iter_mut().zip(self.row(i)) {
                *o += a * m;
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &CVector) -> Result<CVector> {
        self.apply(&v.0).map(CVector)
    }

    /// Kronecker product; block `(i, j)` of the result is `self[i, j] * other`.
    pub fn tensor(&self, other: &CMatrix) -> CMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Block-diagonal `self ⊕ other`.
    pub fn direct_sum(&self, other: &CMatrix) -> CMatrix {
        let mut out = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out[(self.rows + i, self.cols + j)] = other[(i, j)];
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `true` iff every entry of `M M†` deviates from the identity by at most
    /// `tol`. Rejects non-square input.
    pub fn is_unitary(&self, tol: f64) -> Result<bool> {
        if !self.is_square() {
            return Err(QdesError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if !self.is_finite() {
            return Ok(false);
        }
        let prod = self.matmul(&self.adjoint())?;
        Ok(prod.max_abs_diff(&Self::identity(self.rows)) <= tol)
    }

    pub fn pow(&self, mut e: u64) -> Result<CMatrix> {
        if !self.is_square() {
            return Err(QdesError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut base = self.clone();
        let mut acc = Self::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.matmul(&base)?;
            }
            base = base.matmul(&base)?;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Spectral norm upper bound via the Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.tensor(b)
}

pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.direct_sum(b)
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> Result<bool> {
    m.is_unitary(tol)
}

/// Orthogonal projector onto the span of a subset of basis vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projector {
    dim: usize,
    subset: BTreeSet<usize>,
}

impl Projector {
    pub fn new(dim: usize, subset: impl IntoIterator<Item = usize>) -> Result<Self> {
        let subset: BTreeSet<usize> = subset.into_iter().collect();
        if let Some(&bad) = subset.iter().find(|&&i| i >= dim) {
            return Err(QdesError::InvalidParameter(format!(
                "projector index {bad} out of range for dimension {dim}"
            )));
        }
        Ok(Projector { dim, subset })
    }

    pub fn full(dim: usize) -> Self {
        Projector {
            dim,
            subset: (0..dim).collect(),
        }
    }

    pub fn empty(dim: usize) -> Self {
        Projector {
            dim,
            subset: BTreeSet::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &BTreeSet<usize> {
        &self.subset
    }

    pub fn contains(&self, i: usize) -> bool {
        self.subset.contains(&i)
    }

    pub fn complement(&self) -> Projector {
        Projector {
            dim: self.dim,
            subset: (0..self.dim).filter(|i| !self.subset.contains(i)).collect(),
        }
    }

    pub fn tensor(&self, other: &Projector) -> Projector {
        let mut subset = BTreeSet::new();
        for &i in &self.subset {
            for &j in &other.subset {
                subset.insert(i * other.dim + j);
            }
        }
        Projector {
            dim: self.dim * other.dim,
            subset,
        }
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.check_dim(v.len())?;
        Ok(v.iter()
            .enumerate()
            .map(|(i, &z)| if self.subset.contains(&i) { z } else { ZERO })
            .collect())
    }

    pub fn apply_in_place(&self, v: &mut [C64]) {
        for (i, z) in v.iter_mut().enumerate() {
            if !self.subset.contains(&i) {
                *z = ZERO;
            }
        }
    }

    /// `‖P v‖²`.
    pub fn projected_norm_sq(&self, v: &[C64]) -> Result<f64> {
        self.check_dim(v.len())?;
        Ok(self.subset.iter().map(|&i| v[i].norm_sqr()).sum())
    }

    pub fn to_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for &i in &self.subset {
            m[(i, i)] = ONE;
        }
        m
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return Err(QdesError::DimensionMismatch {
                expected: self.dim,
                found: n,
            });
        }
        Ok(())
    }
}

pub fn projected_norm_sq(p: &Projector, v: &CVector) -> Result<f64> {
    p.projected_norm_sq(&v.0)
}

/// Do the given index sets partition `{0..dim-1}`? Returns the first index
/// that is either uncovered or covered twice.
pub fn partition_defect(dim: usize, parts: &[&Projector]) -> Option<usize> {
    let mut count = vec![0usize; dim];
    for p in parts {
        for &i in p.indices() {
            if i < dim {
                count[i] += 1;
            }
        }
    }
    count.iter().position(|&c| c != 1)
}

/// Incrementally built orthonormal basis (modified Gram–Schmidt with one
/// re-orthogonalization pass).
#[derive(Clone, Debug, Default)]
pub struct OrthoBasis {
    dim: usize,
    vectors: Vec<Vec<C64>>,
}

impl OrthoBasis {
    pub fn new(dim: usize) -> Self {
        OrthoBasis {
            dim,
            vectors: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    fn residual(&self, v: &[C64]) -> Vec<C64> {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for q in &self.vectors {
                let coef = inner(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= coef * qi;
                }
            }
        }
        w
    }

    /// Adds `v` if its component outside the current span exceeds
    /// `tol * max(1, ‖v‖)`. Returns whether the span grew.
    pub fn try_insert(&mut self, v: &[C64], tol: f64) -> bool {
        debug_assert_eq!(v.len(), self.dim);
        if self.vectors.len() >= self.dim {
            return false;
        }
        let w = self.residual(v);
        let rn = norm(&w);
        if rn <= tol * norm(v).max(1.0) {
            return false;
        }
        self.vectors.push(w.into_iter().map(|z| z / rn).collect());
        true
    }

    /// Coordinates of `v` in the basis, `q_i† v`.
    pub fn coordinates(&self, v: &[C64]) -> Vec<C64> {
        self.vectors.iter().map(|q| inner(q, v)).collect()
    }
}
