//! Gate sets, the single-qubit Clifford group, and two-copy twirling.
//!
//! Two-copy Liouville vectors are indexed `i·n + j` for the basis element
//! `A_i ⊗ A_j` (`n = d²`). In these coordinates the invariant operators are
//! `|B₁) = e₀ ⊗ e₀` and `|B₂) = Σ_{k≥1} e_k ⊗ e_k / √(d² − 1)`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::channel::{pauli_basis_for_dim, ChannelError, OperatorBasis, Superoperator};
use crate::fmath;
use crate::kernel::{gates, CMatrix, RMatrix};
use crate::metrics::MMatrix;
use crate::tol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("gate set is empty")]
    Empty,
    #[error("gate {index} has shape {rows}x{cols}, expected {d}x{d}")]
    Shape {
        index: usize,
        rows: usize,
        cols: usize,
        d: usize,
    },
    #[error("gate {index} is not unitary (residual {residual:e})")]
    NotUnitary { index: usize, residual: f64 },
    #[error("gates {first} and {second} coincide up to a global phase")]
    Duplicate { first: usize, second: usize },
    #[error("noise acts on dimension {found}, gate set on {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Tolerance on `‖UU† − 𝟙‖` for gate set elements.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Multiplies `u` by the phase that makes its first nonzero entry (column
/// major) real and positive.
pub fn canonical_phase(u: &CMatrix) -> CMatrix {
    for c in 0..u.cols() {
        for r in 0..u.rows() {
            let z = u[(r, c)];
            let a = z.norm();
            if a > tol::GATE_DEDUP {
                return u.scale(z.conj() / a);
            }
        }
    }
    u.clone()
}

fn phase_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let ca = canonical_phase(a);
    let cb = canonical_phase(b);
    ca.try_sub(&cb)
        .map_or(f64::INFINITY, |m| m.frobenius_norm())
}

/// A finite set of d×d unitaries, stored with canonical phases together with
/// their Liouville representations in the Pauli basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSet {
    d: usize,
    label: String,
    unitaries: Vec<CMatrix>,
    liouville: Vec<Superoperator>,
    basis: Arc<OperatorBasis>,
}

impl GateSet {
    pub fn new(label: impl Into<String>, unitaries: Vec<CMatrix>) -> Result<Self, DesignError> {
        let first = unitaries.first().ok_or(DesignError::Empty)?;
        let d = first.rows();
        let mut canon: Vec<CMatrix> = Vec::with_capacity(unitaries.len());
        for (index, u) in unitaries.iter().enumerate() {
            if u.rows() != d || u.cols() != d {
                return Err(DesignError::Shape {
                    index,
                    rows: u.rows(),
                    cols: u.cols(),
                    d,
                });
            }
            let residual = u.unitary_residual();
            if residual > UNITARITY_TOL {
                return Err(DesignError::NotUnitary { index, residual });
            }
            let c = canonical_phase(u);
            if let Some(first) = canon.iter().position(|v| {
                v.try_sub(&c)
                    .is_ok_and(|m| m.frobenius_norm() < tol::GATE_DEDUP)
            }) {
                return Err(DesignError::Duplicate {
                    first,
                    second: index,
                });
            }
            canon.push(c);
        }
        let basis = pauli_basis_for_dim(d)?;
        let liouville = canon
            .iter()
            .map(|u| Superoperator::from_unitary(&basis, u))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            d,
            label: label.into(),
            unitaries: canon,
            liouville,
            basis,
        })
    }

    /// Closure of `generators` under multiplication, modulo global phase.
    pub fn from_generators(
        label: impl Into<String>,
        generators: &[CMatrix],
    ) -> Result<Self, DesignError> {
        let first = generators.first().ok_or(DesignError::Empty)?;
        let mut elems = vec![canonical_phase(&CMatrix::identity(first.rows()))];
        let mut frontier = elems.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for g in &frontier {
                for h in generators {
                    let p = canonical_phase(&(h * g));
                    let known = elems
                        .iter()
                        .chain(next.iter())
                        .any(|e: &CMatrix| phase_distance(e, &p) < tol::GATE_DEDUP);
                    if !known {
                        next.push(p);
                    }
                }
            }
            elems.extend(next.iter().cloned());
            frontier = next;
        }
        Self::new(label, elems)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn liouville(&self) -> &[Superoperator] {
        &self.liouville
    }

    pub fn basis(&self) -> &Arc<OperatorBasis> {
        &self.basis
    }

    /// Index of the element equal to `u` up to global phase.
    pub fn index_of(&self, u: &CMatrix) -> Option<usize> {
        let c = canonical_phase(u);
        self.unitaries.iter().position(|v| {
            v.try_sub(&c)
                .is_ok_and(|m| m.frobenius_norm() < tol::GATE_DEDUP)
        })
    }

    /// Whether every product `g·h` is again an element up to phase.
    pub fn is_closed(&self) -> bool {
        self.unitaries.iter().all(|g| {
            self.unitaries
                .iter()
                .all(|h| self.index_of(&(g * h)).is_some())
        })
    }

    /// `|𝒢|⁻¹ Σ_g φ(g)`.
    pub fn single_copy_twirl(&self) -> RMatrix {
        let n = self.d * self.d;
        let mut acc = RMatrix::zeros(n, n);
        for l in &self.liouville {
            acc = acc.try_add(l.matrix()).expect("same shape");
        }
        acc.scale(1.0 / self.len() as f64)
    }
}

/// The 24-element single-qubit Clifford group, generated from H and S.
pub fn clifford_1q() -> GateSet {
    GateSet::from_generators("clifford_1q", &[gates::hadamard(), gates::phase_s()])
        .expect("Clifford generators are unitary")
}

/// `|𝒢|⁻² Σ_{g,h} |Tr(g†h)|⁴`.
pub fn frame_potential_2(g: &GateSet) -> f64 {
    let mut acc = 0.0;
    for a in g.unitaries() {
        for b in g.unitaries() {
            let t = a.frobenius_inner(b).expect("same dimension").norm_sqr();
            acc += t * t;
        }
    }
    let n = g.len() as f64;
    acc / (n * n)
}

/// `|𝒢|⁻¹ Σ_g φ(g) ⊗ φ(g)` on the d⁴-dimensional two-copy Liouville space.
///
/// The Liouville representation is real in the Pauli basis, so the
/// projector is returned as a real matrix.
pub fn twirl_projector_2copy(g: &GateSet) -> RMatrix {
    let n = g.d * g.d;
    let mut acc = RMatrix::zeros(n * n, n * n);
    for l in g.liouville() {
        let m = l.matrix();
        acc = acc.try_add(&m.kron(m)).expect("same shape");
    }
    acc.scale(1.0 / g.len() as f64)
}

/// Two-copy coordinates of the invariant operators B₁ and B₂.
pub fn invariant_vectors(d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = d * d;
    let mut b1 = vec![0.0; n * n];
    let mut b2 = vec![0.0; n * n];
    b1[0] = 1.0;
    let w = 1.0 / fmath::sqrt((n - 1) as f64);
    for k in 1..n {
        b2[k * n + k] = w;
    }
    (b1, b2)
}

/// Real coordinates `Tr((A_i ⊗ A_j)† X)` of a two-copy operator.
pub fn two_copy_coefficients(basis: &OperatorBasis, x: &CMatrix) -> Vec<f64> {
    let el = basis.elements();
    let mut out = Vec::with_capacity(el.len() * el.len());
    for a in el {
        for b in el {
            out.push(a.kron(b).frobenius_inner(x).map_or(0.0, |z| z.re));
        }
    }
    out
}

/// The averaged two-copy operator and its restriction to span{B₁, B₂}.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedOperator {
    pub full: RMatrix,
    pub restricted: MMatrix,
}

/// `𝓜 = P (𝓔 ⊗ 𝓔) P` with `P` the two-copy twirl of `g`.
pub fn averaged_operator(
    g: &GateSet,
    noise: &Superoperator,
) -> Result<AveragedOperator, DesignError> {
    if noise.dim() != g.dim() {
        return Err(DesignError::DimensionMismatch {
            expected: g.dim(),
            found: noise.dim(),
        });
    }
    let p = twirl_projector_2copy(g);
    let e = noise.matrix();
    let full = &(&p * &e.kron(e)) * &p;
    let (b1, b2) = invariant_vectors(g.dim());
    let bil = |a: &[f64], b: &[f64]| -> f64 {
        let mb = full.mul_vec(b).expect("two-copy length");
        a.iter().zip(&mb).map(|(x, y)| x * y).sum()
    };
    let restricted = MMatrix {
        m11: bil(&b1, &b1),
        m12: bil(&b1, &b2),
        m21: bil(&b2, &b1),
        m22: bil(&b2, &b2),
    };
    Ok(AveragedOperator { full, restricted })
}

/// `(E_a|𝓜|Π_s)` and `(E_s|𝓜|Π_a)` by explicit two-copy contraction.
pub fn probe_probabilities_explicit(
    g: &GateSet,
    noise: &Superoperator,
) -> Result<(f64, f64), DesignError> {
    let m = averaged_operator(g, noise)?.full;
    let probes = crate::metrics::ProbeStates::new(g.dim());
    let basis = g.basis();
    let c = |x: &CMatrix| two_copy_coefficients(basis, x);
    let contract = |e: &CMatrix, rho: &CMatrix| -> f64 {
        let v = m.mul_vec(&c(rho)).expect("two-copy length");
        c(e).iter().zip(&v).map(|(x, y)| x * y).sum()
    };
    Ok((
        contract(&probes.e_a, &probes.pi_s),
        contract(&probes.e_s, &probes.pi_a),
    ))
}

/// Rank of a real projector, computed as its rounded trace.
pub fn projector_rank(p: &RMatrix) -> usize {
    let t = p.trace();
    if t <= 0.0 {
        0
    } else {
        (t + 0.5) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{depolarizing, haar_unitary, RngStream};
    use crate::metrics::m_matrix;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn clifford_group_has_24_elements_and_is_closed() {
        let g = clifford_1q();
        assert_eq!(g.len(), 24);
        assert!(g.is_closed());
        for p in [
            gates::pauli_i(),
            gates::pauli_x(),
            gates::pauli_y(),
            gates::pauli_z(),
            gates::hadamard(),
        ] {
            assert!(g.index_of(&p).is_some());
        }
        assert!(g.index_of(&p_t()).is_none());
    }

    fn p_t() -> CMatrix {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_complex_rows(&[&[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (h, h)]])
    }

    #[test]
    fn canonical_phase_is_idempotent() {
        let u = gates::pauli_y().scale(Complex64::from_polar(1.0, 0.7));
        let a = canonical_phase(&u);
        let b = canonical_phase(&a);
        assert!(a.try_sub(&b).unwrap().frobenius_norm() < 1e-15);
        assert!((a[(1, 0)] - c(0.0, 0.0)).norm() > 0.5);
        assert!(a[(1, 0)].im.abs() < 1e-15 && a[(1, 0)].re > 0.0);
    }

    #[test]
    fn frame_potentials() {
        assert!((frame_potential_2(&clifford_1q()) - 2.0).abs() < 1e-12);
        let one = GateSet::new("id", vec![CMatrix::identity(2)]).unwrap();
        assert!((frame_potential_2(&one) - 16.0).abs() < 1e-12);
        let paulis = GateSet::new(
            "pauli",
            vec![
                gates::pauli_i(),
                gates::pauli_x(),
                gates::pauli_y(),
                gates::pauli_z(),
            ],
        )
        .unwrap();
        assert!((frame_potential_2(&paulis) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_sets() {
        assert_eq!(GateSet::new("e", vec![]), Err(DesignError::Empty));
        let dup = vec![gates::pauli_x(), gates::pauli_x().scale(c(0.0, 1.0))];
        assert_eq!(
            GateSet::new("d", dup),
            Err(DesignError::Duplicate {
                first: 0,
                second: 1
            })
        );
        let bad = CMatrix::identity(2).scale_real(1.1);
        assert!(matches!(
            GateSet::new("b", vec![bad]),
            Err(DesignError::NotUnitary { index: 0, .. })
        ));
    }

    #[test]
    fn twirl_projector_structure() {
        let g = clifford_1q();
        let p = twirl_projector_2copy(&g);
        let p2 = &p * &p;
        assert!(p2.try_sub(&p).unwrap().frobenius_norm() < 1e-12);
        assert_eq!(projector_rank(&p), 2);
        let (b1, b2) = invariant_vectors(2);
        for b in [&b1, &b2] {
            let pb = p.mul_vec(b).unwrap();
            let err: f64 = pb.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum();
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn single_copy_twirl_is_rank_one() {
        let t = clifford_1q().single_copy_twirl();
        let mut e = RMatrix::zeros(4, 4);
        e[(0, 0)] = 1.0;
        assert!(t.try_sub(&e).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn liouville_of_adjoint_is_transpose() {
        let g = clifford_1q();
        for (u, l) in g.unitaries().iter().zip(g.liouville()) {
            let ld = Superoperator::from_unitary(g.basis(), &u.adjoint()).unwrap();
            assert!(
                ld.matrix()
                    .try_sub(&l.matrix().transpose())
                    .unwrap()
                    .frobenius_norm()
                    < 1e-12
            );
        }
    }

    #[test]
    fn restriction_matches_block_norms() {
        let g = clifford_1q();
        let id = Superoperator::identity(g.basis().clone());
        let a = averaged_operator(&g, &id).unwrap();
        assert!(a.restricted.max_abs_diff(&MMatrix::identity()) < 1e-12);
        let dep = depolarizing(2, 0.1)
            .unwrap()
            .to_liouville(g.basis())
            .unwrap();
        let a = averaged_operator(&g, &dep).unwrap();
        let expect = MMatrix {
            m11: 1.0,
            m12: 0.0,
            m21: 0.0,
            m22: 0.81,
        };
        assert!(a.restricted.max_abs_diff(&expect) < 1e-12);
        let u = haar_unitary(2, &RngStream::new(5));
        let s = Superoperator::from_unitary(g.basis(), &u).unwrap();
        let a = averaged_operator(&g, &s).unwrap();
        assert!(a.restricted.max_abs_diff(&m_matrix(&s)) < 1e-12);
    }
}
