//! Dense linear algebra for small dimensions (d ≤ 8, Liouville dimension ≤ 64).
//!
//! [`CMatrix`] is a row-major complex matrix used for operators, Kraus
//! operators and states. [`RMatrix`] is its real counterpart, used for
//! Liouville matrices in a Hermitian basis and for the small normal-equation
//! systems of the curve fits.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::fmath;
use crate::tol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("dimension mismatch: {left_rows}x{left_cols} against {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },
    #[error("closed-form unitary eigensystem only covers 2x2 matrices, got {dim}x{dim}")]
    UnsupportedDimension { dim: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("data length {len} does not match shape {rows}x{cols}")]
    BadShape {
        rows: usize,
        cols: usize,
        len: usize,
    },
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, KernelError> {
        if data.len() != rows * cols {
            return Err(KernelError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices of real entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let cols = if r == 0 { 0 } else { rows[0].len() };
        Self::from_fn(r, cols, |i, j| c(rows[i][j], 0.0))
    }

    /// Builds a matrix from row slices of `(re, im)` pairs.
    pub fn from_complex_rows(rows: &[&[(f64, f64)]]) -> Self {
        let r = rows.len();
        let cols = if r == 0 { 0 } else { rows[0].len() };
        Self::from_fn(r, cols, |i, j| c(rows[i][j].0, rows[i][j].1))
    }

    /// Outer product |a⟩⟨b|.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix, KernelError> {
        if self.cols != other.rows {
            return Err(self.mismatch(other));
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product; entry `(i·p + k, j·q + l)` is `a[i,j]·b[k,l]`.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (p, q) = (other.rows, other.cols);
        CMatrix::from_fn(self.rows * p, self.cols * q, |r, s| {
            self[(r / p, s / q)] * other[(r % p, s % q)]
        })
    }

    pub fn try_add(&self, other: &CMatrix) -> Result<CMatrix, KernelError> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn try_sub(&self, other: &CMatrix) -> Result<CMatrix, KernelError> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Hilbert–Schmidt inner product ⟨A,B⟩ = Tr(A†B).
    pub fn frobenius_inner(&self, other: &CMatrix) -> Result<Complex64, KernelError> {
        self.same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        fmath::sqrt(self.frobenius_norm_sqr())
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// ‖A − A†‖_F, or infinity for non-square input.
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        fmath::sqrt(acc)
    }

    /// ‖A†A − 𝟙‖_F, or infinity for non-square input.
    pub fn unitary_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = self.adjoint().matmul(self).expect("square");
        prod.try_sub(&CMatrix::identity(self.rows))
            .expect("same shape")
            .frobenius_norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() < tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_residual() < tol
    }

    /// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
    ///
    /// Eigenvalues are returned ascending; column `k` of the eigenvector
    /// matrix belongs to eigenvalue `k`.
    pub fn hermitian_eigensystem(&self) -> Result<HermitianEigen, KernelError> {
        if !self.is_square() {
            return Err(KernelError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let residual = self.hermitian_residual();
        let scale = self.frobenius_norm().max(1.0);
        if residual > tol::STRUCTURAL * scale {
            return Err(KernelError::NotHermitian { residual });
        }
        Ok(jacobi_hermitian(self))
    }

    /// Closed-form eigen-decomposition of a 2×2 unitary, `u = Σ e^{iθ_k} v_k v_k†`.
    ///
    /// Phases lie in (−π, π] and are returned ascending.
    pub fn unitary_eigensystem(&self) -> Result<UnitaryEigen, KernelError> {
        if !self.is_square() {
            return Err(KernelError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if self.rows != 2 {
            return Err(KernelError::UnsupportedDimension { dim: self.rows });
        }
        let residual = self.unitary_residual();
        if residual > tol::STRUCTURAL {
            return Err(KernelError::NotUnitary { residual });
        }
        Ok(unitary_eigen_2x2(self))
    }

    /// Applies `f` to the spectrum of a Hermitian matrix: `V f(Λ) V†`.
    pub fn hermitian_function(&self, f: impl Fn(f64) -> Complex64) -> Result<CMatrix, KernelError> {
        let eig = self.hermitian_eigensystem()?;
        let n = self.rows;
        let v = &eig.vectors;
        Ok(CMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * f(eig.values[k]) * v[(j, k)].conj())
                .sum()
        }))
    }

    fn same_shape(&self, other: &CMatrix) -> Result<(), KernelError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(self.mismatch(other));
        }
        Ok(())
    }

    fn mismatch(&self, other: &CMatrix) -> KernelError {
        KernelError::DimensionMismatch {
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: other.rows,
            right_cols: other.cols,
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Panics on a shape mismatch; use [`CMatrix::matmul`] for the checked form.
impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        self.try_add(rhs).expect("matrix sum shape mismatch")
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        self.try_sub(rhs).expect("matrix difference shape mismatch")
    }
}

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

#[derive(Debug, Clone)]
pub struct UnitaryEigen {
    pub phases: Vec<f64>,
    pub vectors: CMatrix,
}

fn jacobi_hermitian(input: &CMatrix) -> HermitianEigen {
    let n = input.rows;
    let mut a = input.clone();
    // Symmetrize away the sub-tolerance anti-Hermitian part.
    for i in 0..n {
        a[(i, i)] = c(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n);
    let total: f64 = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)].norm_sqr();
            }
        }
        if fmath::sqrt(off) <= 1e-17 * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r; // e^{iφ}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + fmath::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + fmath::sqrt(1.0 + tau * tau))
                };
                let cs = 1.0 / fmath::sqrt(1.0 + t * t);
                let sn = t * cs;
                // G acts on the (p, q) plane:
                // G_pp = c, G_pq = s, G_qp = -s e^{-iφ}, G_qq = c e^{-iφ}.
                let ph = phase.conj();
                let g_pp = c(cs, 0.0);
                let g_pq = c(sn, 0.0);
                let g_qp = ph * (-sn);
                let g_qq = ph * cs;
                // A <- A G
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                // A <- G† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = c(0.0, 0.0);
                a[(q, p)] = c(0.0, 0.0);
                a[(p, p)] = c(a[(p, p)].re, 0.0);
                a[(q, q)] = c(a[(q, q)].re, 0.0);
                // V <- V G
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    HermitianEigen { values, vectors }
}

fn unitary_eigen_2x2(u: &CMatrix) -> UnitaryEigen {
    let (a, b, cc, d) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * cc;
    let disc = (half_tr * half_tr - det).sqrt();
    let l1 = half_tr + disc;
    let offdiag = b.norm().max(cc.norm());
    let first: [Complex64; 2] = if offdiag <= 1e-15 {
        [c(1.0, 0.0), c(0.0, 0.0)]
    } else if b.norm() >= cc.norm() {
        [b, l1 - a]
    } else {
        [l1 - d, cc]
    };
    let norm = fmath::sqrt(first[0].norm_sqr() + first[1].norm_sqr());
    let v1 = [first[0] / norm, first[1] / norm];
    let v2 = [-v1[1].conj(), v1[0].conj()];
    // Eigenvalue for each vector from the Rayleigh quotient keeps pairing exact
    // in the diagonal (degenerate-offdiagonal) branch.
    let rq = |v: &[Complex64; 2]| {
        let uv0 = a * v[0] + b * v[1];
        let uv1 = cc * v[0] + d * v[1];
        v[0].conj() * uv0 + v[1].conj() * uv1
    };
    let mut pairs = [(rq(&v1).arg(), v1), (rq(&v2).arg(), v2)];
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let phases = vec![pairs[0].0, pairs[1].0];
    let vectors = CMatrix::from_fn(2, 2, |i, j| pairs[j].1[i]);
    UnitaryEigen { phases, vectors }
}

/// Dense real matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for RMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:+.6} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
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

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, KernelError> {
        if data.len() != rows * cols {
            return Err(KernelError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let cols = if r == 0 { 0 } else { rows[0].len() };
        Self::from_fn(r, cols, |i, j| rows[i][j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        fmath::sqrt(self.frobenius_norm_sqr())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn matmul(&self, other: &RMatrix) -> Result<RMatrix, KernelError> {
        if self.cols != other.rows {
            return Err(KernelError::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = RMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>, KernelError> {
        if self.cols != v.len() {
            return Err(KernelError::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: v.len(),
                right_cols: 1,
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Row vector times matrix, `vᵀ M`.
    pub fn vec_mul(&self, v: &[f64]) -> Result<Vec<f64>, KernelError> {
        if self.rows != v.len() {
            return Err(KernelError::DimensionMismatch {
                left_rows: 1,
                left_cols: v.len(),
                right_rows: self.rows,
                right_cols: self.cols,
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        Ok(out)
    }

    pub fn kron(&self, other: &RMatrix) -> RMatrix {
        let (p, q) = (other.rows, other.cols);
        RMatrix::from_fn(self.rows * p, self.cols * q, |r, s| {
            self[(r / p, s / q)] * other[(r % p, s % q)]
        })
    }

    pub fn try_add(&self, other: &RMatrix) -> Result<RMatrix, KernelError> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn try_sub(&self, other: &RMatrix) -> Result<RMatrix, KernelError> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Solves `self · x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, KernelError> {
        let n = self.rows;
        if self.cols != n {
            return Err(KernelError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if b.len() != n {
            return Err(KernelError::DimensionMismatch {
                left_rows: n,
                left_cols: n,
                right_rows: b.len(),
                right_cols: 1,
            });
        }
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        let scale = self
            .data
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
                .expect("non-empty");
            if a[pivot * n + col].abs() <= 1e-300_f64.max(scale * 1e-16) {
                return Err(KernelError::Singular);
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                x.swap(col, pivot);
            }
            let diag = a[col * n + col];
            for row in (col + 1)..n {
                let factor = a[row * n + col] / diag;
                if factor == 0.0 {
                    continue;
                }
                for k in col..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
                x[row] -= factor * x[col];
            }
        }
        for col in (0..n).rev() {
            let mut acc = x[col];
            for k in (col + 1)..n {
                acc -= a[col * n + k] * x[k];
            }
            x[col] = acc / a[col * n + col];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<RMatrix, KernelError> {
        let n = self.rows;
        let mut out = RMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }

    /// Eigen-decomposition of a real symmetric matrix (via the Hermitian solver).
    pub fn symmetric_eigensystem(&self) -> Result<(Vec<f64>, RMatrix), KernelError> {
        let cm = CMatrix::from_fn(self.rows, self.cols, |i, j| c(self[(i, j)], 0.0));
        let eig = cm.hermitian_eigensystem()?;
        // Real symmetric input: Jacobi rotations stay real up to round-off.
        let vecs = RMatrix::from_fn(self.rows, self.cols, |i, j| eig.vectors[(i, j)].re);
        Ok((eig.values, vecs))
    }

    fn same_shape(&self, other: &RMatrix) -> Result<(), KernelError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(KernelError::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for RMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &RMatrix {
    type Output = RMatrix;
    fn mul(self, rhs: &RMatrix) -> RMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

/// Single-qubit gates and Paulis used throughout.
pub mod gates {
    use super::*;

    pub fn pauli_i() -> CMatrix {
        CMatrix::identity(2)
    }

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn pauli_y() -> CMatrix {
        CMatrix::from_complex_rows(&[&[(0.0, 0.0), (0.0, -1.0)], &[(0.0, 1.0), (0.0, 0.0)]])
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    pub fn hadamard() -> CMatrix {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_real_rows(&[&[h, h], &[h, -h]])
    }

    /// Phase gate diag(1, i).
    pub fn phase_s() -> CMatrix {
        CMatrix::from_complex_rows(&[&[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (0.0, 1.0)]])
    }

    /// Projector |0⟩⟨0|.
    pub fn ket0_bra0() -> CMatrix {
        CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]])
    }

    /// |0⟩⟨1|.
    pub fn ket0_bra1() -> CMatrix {
        CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])
    }

    /// exp(−i θ/2 · n̂·σ⃗) for a unit axis.
    pub fn rotation(axis: [f64; 3], theta: f64) -> CMatrix {
        let (s, co) = (fmath::sin(theta / 2.0), fmath::cos(theta / 2.0));
        let [nx, ny, nz] = axis;
        CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(co, -s * nz),
            (0, 1) => c(-s * ny, -s * nx),
            (1, 0) => c(s * ny, -s * nx),
            _ => c(co, s * nz),
        })
    }

    /// Two-qudit SWAP on ℂ^d ⊗ ℂ^d.
    pub fn swap(d: usize) -> CMatrix {
        CMatrix::from_fn(d * d, d * d, |r, s| {
            let (i, j) = (r / d, r % d);
            if s == j * d + i {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::gates::*;
    use super::*;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).frobenius_norm() < tol
    }

    #[test]
    fn identity_times_x() {
        let x = pauli_x();
        assert_eq!(&CMatrix::identity(2) * &x, x);
    }

    #[test]
    fn pauli_involution() {
        let x = pauli_x();
        assert!(close(&(&x * &x), &CMatrix::identity(2), 1e-15));
    }

    #[test]
    fn composed_cliffords_are_unitary() {
        let hs = &hadamard() * &phase_s();
        let prod = &hs * &hs.adjoint();
        assert!(close(&prod, &CMatrix::identity(2), 1e-12));
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let a = CMatrix::zeros(2, 3);
        let b = CMatrix::zeros(2, 3);
        assert!(matches!(
            a.matmul(&b),
            Err(KernelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kron_identity_and_sign_pattern() {
        let i4 = CMatrix::identity(2).kron(&CMatrix::identity(2));
        assert_eq!(i4, CMatrix::identity(4));
        let zz = pauli_z().kron(&pauli_z());
        let diag: Vec<f64> = (0..4).map(|i| zz[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn kron_block_convention() {
        let a = CMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = CMatrix::from_real_rows(&[&[0.0, 5.0], &[6.0, 7.0]]);
        let k = a.kron(&b);
        // entry ((i·p+k),(j·q+l)) = a_ij b_kl
        let at = |i: usize, kk: usize, j: usize, l: usize| k[(i * 2 + kk, j * 2 + l)].re;
        assert_eq!(at(1, 1, 0, 1), 3.0 * 7.0);
        assert_eq!(at(0, 1, 1, 0), 2.0 * 6.0);
    }

    #[test]
    fn eigen_of_z_and_x() {
        let ez = pauli_z().hermitian_eigensystem().unwrap();
        assert!((ez.values[0] + 1.0).abs() < 1e-14 && (ez.values[1] - 1.0).abs() < 1e-14);
        let ex = pauli_x().hermitian_eigensystem().unwrap();
        assert!((ex.values[0] + 1.0).abs() < 1e-14 && (ex.values[1] - 1.0).abs() < 1e-14);
        // (|0⟩ − |1⟩)/√2 up to phase for eigenvalue −1
        let v = ex.vectors.column(0);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let overlap = (v[0] * h - v[1] * h).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let m = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(
            m.hermitian_eigensystem(),
            Err(KernelError::NotHermitian { .. })
        ));
    }

    #[test]
    fn unitary_eigen_identity_and_rotation() {
        let e = CMatrix::identity(2).unitary_eigensystem().unwrap();
        assert!(e.phases.iter().all(|p| p.abs() < 1e-15));
        // exp(-i 0.05 X) = rotation about x by 0.1
        let u = rotation([1.0, 0.0, 0.0], 0.1);
        let e = u.unitary_eigensystem().unwrap();
        assert!((e.phases[0] + 0.05).abs() < 1e-14);
        assert!((e.phases[1] - 0.05).abs() < 1e-14);
    }

    #[test]
    fn unitary_eigen_rejects_non_unitary() {
        let m = CMatrix::identity(2).scale_real(1.1);
        assert!(matches!(
            m.unitary_eigensystem(),
            Err(KernelError::NotUnitary { .. })
        ));
        let big = CMatrix::identity(3);
        assert!(matches!(
            big.unitary_eigensystem(),
            Err(KernelError::UnsupportedDimension { dim: 3 })
        ));
    }

    #[test]
    fn real_solve_and_inverse() {
        let a = RMatrix::from_rows(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]]);
        let x = a.solve(&[1.0, 2.0, 3.0]).unwrap();
        let back = a.mul_vec(&x).unwrap();
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-13);
        }
        let inv = a.inverse().unwrap();
        let id = &a * &inv;
        assert!(id.try_sub(&RMatrix::identity(3)).unwrap().frobenius_norm() < 1e-13);
        let sing = RMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(sing.solve(&[1.0, 1.0]), Err(KernelError::Singular));
    }

    #[test]
    fn swap_squares_to_identity() {
        let s = swap(3);
        assert_eq!(&s * &s, CMatrix::identity(9));
    }
}
