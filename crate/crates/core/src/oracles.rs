//! Independent reference computations used to cross-check the closed forms.
//!
//! These work from the integral definitions over input states rather than
//! from the Liouville block norms.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::channel::{KrausChannel, Superoperator};
use crate::ensembles::{haar_unitary_with, RngStream};
use crate::fmath;
use crate::kernel::{CMatrix, RMatrix};

/// The six single-qubit stabilizer states (a state 3-design).
pub fn qubit_stabilizer_states() -> Vec<CMatrix> {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let kets: [[Complex64; 2]; 6] = [
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
        [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
        [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
    ];
    kets.iter()
        .map(|k| CMatrix::from_fn(2, 2, |i, j| k[i] * k[j].conj()))
        .collect()
}

/// `‖n[ℰ(ψ)] − n[ℰ(𝟙/d)]‖²`, `Tr ℰ(ψ)` and `⟨ψ|ℰ(ψ)|ψ⟩`.
fn integrands(k: &KrausChannel, psi: &CMatrix) -> (f64, f64, f64) {
    let d = k.dim();
    let out = k.apply(psi);
    let t = out.trace().re;
    let mixed = k.apply(&CMatrix::identity(d).scale_real(1.0 / d as f64));
    let diff = out.try_sub(&mixed).expect("same dimension");
    let dt = diff.trace().re;
    let shifted = diff
        .try_sub(&CMatrix::identity(d).scale_real(dt / d as f64))
        .expect("same dimension");
    let p = shifted.frobenius_norm_sqr();
    let f = psi.frobenius_inner(&out).expect("same dimension").re;
    (p, t, f)
}

/// Haar-averaged quantities of a channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateAverages {
    /// `d/(d−1) ∫ ‖n[ℰ(ψ)] − n[ℰ(𝟙/d)]‖² dψ`.
    pub unitarity: f64,
    /// `∫ Tr ℰ(ψ) dψ`.
    pub survival: f64,
    /// `1 − ∫ ⟨ψ|ℰ(ψ)|ψ⟩ dψ`.
    pub infidelity: f64,
}

fn average_over(k: &KrausChannel, states: impl Iterator<Item = CMatrix>) -> StateAverages {
    let d = k.dim() as f64;
    let (mut p, mut t, mut f, mut n) = (0.0, 0.0, 0.0, 0.0);
    for psi in states {
        let (a, b, c) = integrands(k, &psi);
        p += a;
        t += b;
        f += c;
        n += 1.0;
    }
    StateAverages {
        unitarity: d / (d - 1.0) * p / n,
        survival: t / n,
        infidelity: 1.0 - f / n,
    }
}

/// Exact averages for a qubit channel: every integrand is quadratic in ψ, so
/// averaging over the stabilizer states reproduces the Haar integral.
pub fn qubit_state_design_averages(k: &KrausChannel) -> StateAverages {
    assert_eq!(k.dim(), 2, "qubit channels only");
    average_over(k, qubit_stabilizer_states().into_iter())
}

/// Monte Carlo estimate from `samples` Haar-random pure states.
pub fn haar_monte_carlo_averages(
    k: &KrausChannel,
    samples: usize,
    stream: &RngStream,
) -> StateAverages {
    let d = k.dim();
    let mut rng = stream.rng();
    let states = (0..samples).map(move |_| {
        let u = haar_unitary_with(d, &mut rng);
        let col: Vec<Complex64> = (0..d).map(|i| u[(i, 0)]).collect();
        CMatrix::from_fn(d, d, |i, j| col[i] * col[j].conj())
    });
    average_over(k, states)
}

fn det3(m: &RMatrix) -> f64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// Closed-form optimized infidelity of a trace-preserving qubit channel.
///
/// `max_{O ∈ SO(3)} Tr(O E_u) = σ₁ + σ₂ + sign(det E_u)·σ₃` in terms of the
/// singular values of the unital block (σ₃ the smallest).
pub fn qubit_optimized_infidelity(s: &Superoperator) -> f64 {
    assert_eq!(s.dim(), 2, "qubit channels only");
    let m = s.matrix();
    let eu = RMatrix::from_fn(3, 3, |i, j| m[(i + 1, j + 1)]);
    let (vals, _) = (&eu.transpose() * &eu)
        .symmetric_eigensystem()
        .expect("3x3 symmetric");
    let mut sv: Vec<f64> = vals.iter().map(|v| fmath::sqrt(v.max(0.0))).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let sign = if det3(&eu) < 0.0 { -1.0 } else { 1.0 };
    let best = sv[0] + sv[1] + sign * sv[2];
    1.0 - (m[(0, 0)] + best + 2.0) / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::depolarizing;

    #[test]
    fn stabilizer_states_are_pure_and_distinct() {
        let s = qubit_stabilizer_states();
        assert_eq!(s.len(), 6);
        for x in &s {
            assert!((x.trace().re - 1.0).abs() < 1e-15);
            assert!((x.frobenius_norm_sqr() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn depolarizing_averages() {
        let a = qubit_state_design_averages(&depolarizing(2, 0.1).unwrap());
        assert!((a.unitarity - 0.81).abs() < 1e-14);
        assert!((a.survival - 1.0).abs() < 1e-14);
        assert!((a.infidelity - 0.05).abs() < 1e-14);
    }

    #[test]
    fn identity_has_zero_optimized_infidelity() {
        let b = crate::channel::pauli_basis_for_dim(2).unwrap();
        let s = Superoperator::identity(b);
        assert!(qubit_optimized_infidelity(&s).abs() < 1e-15);
    }
}
