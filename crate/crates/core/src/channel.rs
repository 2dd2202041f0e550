//! Channel representations: Kraus, Liouville (Pauli transfer) and Choi.
//!
//! Liouville matrices are stored real in a Hermitian operator basis whose
//! first element is 𝟙/√d, so the block structure
//!
//! ```text
//! ┌ S     sdl ┐
//! └ n     E_u ┘
//! ```
//!
//! can be read off directly (survival rate, state-dependent leakage,
//! nonunital vector, unital block).

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

use crate::fmath;
use crate::kernel::{gates, CMatrix, KernelError, RMatrix};
use crate::tol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("number of qubits must be between 1 and 3, got {0}")]
    QubitsOutOfRange(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("a Kraus channel needs at least one operator")]
    EmptyKraus,
    #[error("Liouville entry ({row}, {col}) has imaginary residue {residue:e}")]
    ImaginaryResidue {
        row: usize,
        col: usize,
        residue: f64,
    },
    #[error("basis element {index} violates orthonormality/tracelessness (residual {residual:e})")]
    InvalidBasis { index: usize, residual: f64 },
    #[error("map is not completely positive (Choi eigenvalue {0:e})")]
    NotCompletelyPositive(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Orthonormal Hermitian operator basis with `A_1 = 𝟙/√d`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBasis {
    dim: usize,
    elements: Vec<CMatrix>,
}

impl OperatorBasis {
    /// Normalized n-qubit Pauli products, identity first then lexicographic in
    /// (I, X, Y, Z)ⁿ.
    pub fn pauli(n_qubits: usize) -> Result<Self, ChannelError> {
        if !(1..=3).contains(&n_qubits) {
            return Err(ChannelError::QubitsOutOfRange(n_qubits));
        }
        let singles = [
            gates::pauli_i(),
            gates::pauli_x(),
            gates::pauli_y(),
            gates::pauli_z(),
        ];
        let dim = 1usize << n_qubits;
        let norm = 1.0 / fmath::sqrt(dim as f64);
        let mut elements = Vec::with_capacity(dim * dim);
        for index in 0..dim * dim {
            let mut op = CMatrix::identity(1);
            for q in (0..n_qubits).rev() {
                let digit = (index >> (2 * q)) & 3;
                op = op.kron(&singles[digit]);
            }
            elements.push(op.scale_real(norm));
        }
        Ok(Self { dim, elements })
    }

    /// Accepts a caller-supplied basis after checking orthonormality,
    /// hermiticity and `A_1 = 𝟙/√d`.
    pub fn from_elements(elements: Vec<CMatrix>) -> Result<Self, ChannelError> {
        let dim = elements.first().map(|a| a.rows()).unwrap_or(0);
        if elements.len() != dim * dim || dim == 0 {
            return Err(ChannelError::DimensionMismatch {
                expected: dim * dim,
                found: elements.len(),
            });
        }
        let first = CMatrix::identity(dim).scale_real(1.0 / fmath::sqrt(dim as f64));
        let r = (&elements[0] - &first).frobenius_norm();
        if r > tol::EQUALITY {
            return Err(ChannelError::InvalidBasis {
                index: 0,
                residual: r,
            });
        }
        for (j, a) in elements.iter().enumerate() {
            if a.rows() != dim || a.cols() != dim {
                return Err(ChannelError::DimensionMismatch {
                    expected: dim,
                    found: a.rows(),
                });
            }
            let h = a.hermitian_residual();
            if h > tol::STRUCTURAL {
                return Err(ChannelError::InvalidBasis {
                    index: j,
                    residual: h,
                });
            }
            for (k, b) in elements.iter().enumerate() {
                let ip = a.frobenius_inner(b)?;
                let target = if j == k { 1.0 } else { 0.0 };
                let r = (ip - Complex64::new(target, 0.0)).norm();
                if r > tol::STRUCTURAL {
                    return Err(ChannelError::InvalidBasis {
                        index: j,
                        residual: r,
                    });
                }
            }
        }
        Ok(Self { dim, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of elements, d².
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// Coefficients `(A_k|X) = Tr(A_k† X)`.
    pub fn coefficients(&self, x: &CMatrix) -> Vec<Complex64> {
        self.elements
            .iter()
            .map(|a| a.frobenius_inner(x).expect("operator dimension"))
            .collect()
    }

    /// Real coefficients of a Hermitian operator.
    pub fn real_coefficients(&self, x: &CMatrix) -> Vec<f64> {
        self.coefficients(x).into_iter().map(|z| z.re).collect()
    }

    pub fn operator_from(&self, coeffs: &[Complex64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (a, z) in self.elements.iter().zip(coeffs) {
            if z.norm_sqr() == 0.0 {
                continue;
            }
            out = &out + &a.scale(*z);
        }
        out
    }

    pub fn operator_from_real(&self, coeffs: &[f64]) -> CMatrix {
        let cz: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.operator_from(&cz)
    }
}

/// Completely positive map given by Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    ops: Vec<CMatrix>,
}

/// Outcome of [`KrausChannel::is_cptp`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptpReport {
    pub cp: bool,
    pub tp: bool,
    /// Trace non-increasing.
    pub tni: bool,
    pub choi_min_eigenvalue: f64,
    pub tp_residual: f64,
    pub kraus_sum_max_eigenvalue: f64,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self, ChannelError> {
        let first = ops.first().ok_or(ChannelError::EmptyKraus)?;
        let dim = first.rows();
        for op in &ops {
            if op.rows() != dim || op.cols() != dim {
                return Err(ChannelError::DimensionMismatch {
                    expected: dim,
                    found: if op.rows() != dim {
                        op.rows()
                    } else {
                        op.cols()
                    },
                });
            }
        }
        Ok(Self { dim, ops })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            ops: vec![CMatrix::identity(dim)],
        }
    }

    pub fn unitary(u: CMatrix) -> Result<Self, ChannelError> {
        Self::new(vec![u])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            out = &out + &(&(k * rho) * &k.adjoint());
        }
        out
    }

    /// Σ K†K.
    pub fn kraus_sum(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            out = &out + &(&k.adjoint() * k);
        }
        out
    }

    /// `later ∘ self` as a Kraus set `{L_i K_j}`.
    pub fn then(&self, later: &KrausChannel) -> Result<KrausChannel, ChannelError> {
        if later.dim != self.dim {
            return Err(ChannelError::DimensionMismatch {
                expected: self.dim,
                found: later.dim,
            });
        }
        let mut ops = Vec::with_capacity(self.ops.len() * later.ops.len());
        for l in &later.ops {
            for k in &self.ops {
                ops.push(l * k);
            }
        }
        Ok(KrausChannel { dim: self.dim, ops })
    }

    /// The map `factor · ℰ` (factor ≥ 0).
    pub fn scaled(&self, factor: f64) -> KrausChannel {
        let s = fmath::sqrt(factor.max(0.0));
        KrausChannel {
            dim: self.dim,
            ops: self.ops.iter().map(|k| k.scale_real(s)).collect(),
        }
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.tp_residual() < tol::STRUCTURAL
    }

    fn tp_residual(&self) -> f64 {
        (&self.kraus_sum() - &CMatrix::identity(self.dim)).frobenius_norm()
    }

    pub fn is_cptp(&self) -> CptpReport {
        let choi = jamiolkowski(self);
        let choi_min = choi.min_eigenvalue();
        let tp_residual = self.tp_residual();
        let ks_max = self
            .kraus_sum()
            .hermitian_eigensystem()
            .map(|e| *e.values.last().expect("non-empty"))
            .unwrap_or(f64::INFINITY);
        CptpReport {
            cp: choi_min > -tol::STRUCTURAL,
            tp: tp_residual < tol::STRUCTURAL,
            tni: ks_max <= 1.0 + tol::STRUCTURAL,
            choi_min_eigenvalue: choi_min,
            tp_residual,
            kraus_sum_max_eigenvalue: ks_max,
        }
    }

    /// Liouville matrix in `basis`.
    pub fn to_liouville(&self, basis: &Arc<OperatorBasis>) -> Result<Superoperator, ChannelError> {
        kraus_to_liouville(self, basis)
    }
}

/// Liouville matrix of a Hermiticity-preserving map, stored real.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    basis: Arc<OperatorBasis>,
    matrix: RMatrix,
}

impl Superoperator {
    pub fn from_matrix(basis: Arc<OperatorBasis>, matrix: RMatrix) -> Result<Self, ChannelError> {
        let n = basis.len();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(ChannelError::DimensionMismatch {
                expected: n,
                found: matrix.rows(),
            });
        }
        Ok(Self { basis, matrix })
    }

    pub fn identity(basis: Arc<OperatorBasis>) -> Self {
        let n = basis.len();
        Self {
            basis,
            matrix: RMatrix::identity(n),
        }
    }

    /// Conjugation by a unitary (or any single Kraus operator).
    pub fn from_unitary(basis: &Arc<OperatorBasis>, u: &CMatrix) -> Result<Self, ChannelError> {
        kraus_to_liouville(&KrausChannel::unitary(u.clone())?, basis)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &Arc<OperatorBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> RMatrix {
        self.matrix
    }

    /// Image of a real coefficient vector.
    pub fn apply_coefficients(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(v).expect("coefficient length")
    }

    /// Image of an arbitrary operator under the channel.
    pub fn apply_operator(&self, x: &CMatrix) -> CMatrix {
        let coeffs = self.basis.coefficients(x);
        let n = self.basis.len();
        let out: Vec<Complex64> = (0..n)
            .map(|k| {
                self.matrix
                    .row(k)
                    .iter()
                    .zip(&coeffs)
                    .map(|(m, z)| z * *m)
                    .sum()
            })
            .collect();
        self.basis.operator_from(&out)
    }

    pub fn compose(later: &Superoperator, earlier: &Superoperator) -> Result<Self, ChannelError> {
        if later.basis != earlier.basis {
            return Err(ChannelError::DimensionMismatch {
                expected: earlier.basis.len(),
                found: later.basis.len(),
            });
        }
        Ok(Self {
            basis: earlier.basis.clone(),
            matrix: later.matrix.matmul(&earlier.matrix)?,
        })
    }

    /// Adjoint map ℰ†; the transpose of a real Liouville matrix.
    pub fn adjoint(&self) -> Self {
        Self {
            basis: self.basis.clone(),
            matrix: self.matrix.transpose(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            basis: self.basis.clone(),
            matrix: self.matrix.scale(factor),
        }
    }

    /// Entrywise average of several channels in the same basis.
    pub fn average(channels: &[Superoperator]) -> Result<Self, ChannelError> {
        let first = channels.first().ok_or(ChannelError::EmptyKraus)?;
        let mut acc = RMatrix::zeros(first.matrix.rows(), first.matrix.cols());
        for ch in channels {
            if ch.basis != first.basis {
                return Err(ChannelError::DimensionMismatch {
                    expected: first.basis.len(),
                    found: ch.basis.len(),
                });
            }
            acc = acc.try_add(&ch.matrix)?;
        }
        Ok(Self {
            basis: first.basis.clone(),
            matrix: acc.scale(1.0 / channels.len() as f64),
        })
    }

    pub fn block_decompose(&self) -> BlockDecomposition {
        block_decompose(self)
    }

    /// Choi state computed from the Liouville matrix.
    pub fn choi(&self) -> ChoiState {
        let d = self.dim();
        let mut j = CMatrix::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                let mut e = CMatrix::zeros(d, d);
                e[(a, b)] = Complex64::new(1.0, 0.0);
                let img = self.apply_operator(&e);
                j = &j + &img.kron(&e);
            }
        }
        ChoiState {
            dim: d,
            matrix: j.scale_real(1.0 / d as f64),
        }
    }

    /// Kraus operators from the eigen-decomposition of the Choi matrix:
    /// `K[i][a] = √λ · v[i·d + a]` for each eigenpair of `d·J`.
    pub fn to_kraus(&self) -> Result<KrausChannel, ChannelError> {
        let d = self.dim();
        let eig = self
            .choi()
            .matrix
            .scale_real(d as f64)
            .hermitian_eigensystem()?;
        let total: f64 = eig.values.iter().map(|l| l.abs()).sum();
        let mut ops = Vec::new();
        for (k, &l) in eig.values.iter().enumerate().rev() {
            if l < -tol::STRUCTURAL * total.max(1.0) {
                return Err(ChannelError::NotCompletelyPositive(l));
            }
            if l <= tol::RANK_CUTOFF * total {
                continue;
            }
            let r = fmath::sqrt(l);
            ops.push(CMatrix::from_fn(d, d, |i, a| {
                eig.vectors[(i * d + a, k)] * r
            }));
        }
        if ops.is_empty() {
            ops.push(CMatrix::zeros(d, d));
        }
        KrausChannel::new(ops)
    }
}

/// Entry `(k, l) = Tr(A_k† Σ_i K_i A_l K_i†)`.
pub fn kraus_to_liouville(
    k: &KrausChannel,
    basis: &Arc<OperatorBasis>,
) -> Result<Superoperator, ChannelError> {
    if k.dim != basis.dim() {
        return Err(ChannelError::DimensionMismatch {
            expected: basis.dim(),
            found: k.dim,
        });
    }
    let n = basis.len();
    let mut m = RMatrix::zeros(n, n);
    for l in 0..n {
        let image = k.apply(&basis.elements()[l]);
        for (row, a) in basis.elements().iter().enumerate() {
            let z = a.frobenius_inner(&image)?;
            if z.im.abs() > tol::IMAG_RESIDUE {
                return Err(ChannelError::ImaginaryResidue {
                    row,
                    col: l,
                    residue: z.im.abs(),
                });
            }
            m[(row, l)] = z.re;
        }
    }
    Ok(Superoperator {
        basis: basis.clone(),
        matrix: m,
    })
}

/// Matrix product `later · earlier`.
pub fn compose(
    later: &Superoperator,
    earlier: &Superoperator,
) -> Result<Superoperator, ChannelError> {
    Superoperator::compose(later, earlier)
}

pub fn adjoint_channel(s: &Superoperator) -> Superoperator {
    s.adjoint()
}

/// The (S, sdl, n, unital) blocks of a Liouville matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    pub survival: f64,
    pub sdl: Vec<f64>,
    pub nonunital: Vec<f64>,
    pub unital_block: RMatrix,
}

impl BlockDecomposition {
    pub fn sdl_norm_sqr(&self) -> f64 {
        self.sdl.iter().map(|x| x * x).sum()
    }

    pub fn nonunital_norm_sqr(&self) -> f64 {
        self.nonunital.iter().map(|x| x * x).sum()
    }

    pub fn unital_norm_sqr(&self) -> f64 {
        self.unital_block.frobenius_norm_sqr()
    }

    pub fn reassemble(&self) -> RMatrix {
        let n = self.sdl.len() + 1;
        RMatrix::from_fn(n, n, |i, j| match (i, j) {
            (0, 0) => self.survival,
            (0, j) => self.sdl[j - 1],
            (i, 0) => self.nonunital[i - 1],
            (i, j) => self.unital_block[(i - 1, j - 1)],
        })
    }
}

pub fn block_decompose(s: &Superoperator) -> BlockDecomposition {
    let m = &s.matrix;
    let n = m.rows();
    BlockDecomposition {
        survival: m[(0, 0)],
        sdl: (1..n).map(|j| m[(0, j)]).collect(),
        nonunital: (1..n).map(|i| m[(i, 0)]).collect(),
        unital_block: RMatrix::from_fn(n - 1, n - 1, |i, j| m[(i + 1, j + 1)]),
    }
}

/// Jamiołkowski state `J(ℰ) = (ℰ⊗𝓘)[Φ]`, `Φ = (1/d) Σ |jj⟩⟨kk|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiState {
    dim: usize,
    matrix: CMatrix,
}

impl ChoiState {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Tr(J†J).
    pub fn purity(&self) -> f64 {
        self.matrix.frobenius_norm_sqr()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix
            .hermitian_eigensystem()
            .map(|e| e.values)
            .unwrap_or_default()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()
            .first()
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Number of eigenvalues above the rank cutoff (relative to d·J, i.e. the
    /// unnormalized Choi matrix).
    pub fn rank(&self) -> usize {
        let d = self.dim as f64;
        self.eigenvalues()
            .iter()
            .filter(|&&l| l * d > tol::RANK_CUTOFF)
            .count()
    }
}

pub fn jamiolkowski(k: &KrausChannel) -> ChoiState {
    let d = k.dim;
    let mut j = CMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            let mut e = CMatrix::zeros(d, d);
            e[(a, b)] = Complex64::new(1.0, 0.0);
            j = &j + &k.apply(&e).kron(&e);
        }
    }
    ChoiState {
        dim: d,
        matrix: j.scale_real(1.0 / d as f64),
    }
}

pub fn pauli_basis(n_qubits: usize) -> Result<OperatorBasis, ChannelError> {
    OperatorBasis::pauli(n_qubits)
}

/// Shared Pauli basis handle for `d = 2^n`.
pub fn pauli_basis_for_dim(d: usize) -> Result<Arc<OperatorBasis>, ChannelError> {
    let n = match d {
        2 => 1,
        4 => 2,
        8 => 3,
        other => {
            return Err(ChannelError::DimensionMismatch {
                expected: 2,
                found: other,
            })
        }
    };
    Ok(Arc::new(OperatorBasis::pauli(n)?))
}
