//! Scalar figures of merit of a channel and the bound checks that relate them.
//!
//! Everything here is computed from the Liouville matrix in a basis with
//! `A_1 = 𝟙/√d`. For a channel with blocks `(S, sdl, n, E_u)`:
//!
//! * unitarity `u = ‖E_u‖²_F / (d² − 1)`
//! * survival rate `S`
//! * average gate infidelity `r = 1 − (Tr 𝓛 + d)/(d² + d)` (trace preserving)
//! * the 2×2 averaged operator `M = [[S², ‖sdl‖²/√(d²−1)], [‖n‖²/√(d²−1), u]]`
//!   whose eigenvalues `λ±` set the purity decay.

use alloc::vec::Vec;

use thiserror::Error;

use crate::channel::{jamiolkowski, ChannelError, KrausChannel, OperatorBasis, Superoperator};
use crate::ensembles::{purpose, RngStream};
use crate::fmath;
use crate::kernel::{gates, CMatrix, RMatrix};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::tol;

use alloc::sync::Arc;
use rand::Rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("negative discriminant {0:e}: averaged operator is not physical")]
    NegativeDiscriminant(f64),
    #[error("optimized infidelity is implemented for qubits only (d = {0})")]
    UnsupportedDimension(usize),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Non-fatal caveat attached to a metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricWarning {
    /// The closed-form infidelity assumes a trace-preserving channel.
    NotTracePreserving,
}

fn d2m1(d: usize) -> f64 {
    (d * d - 1) as f64
}

pub fn unitarity(s: &Superoperator) -> f64 {
    let m = s.matrix();
    let n = m.rows();
    let mut acc = 0.0;
    for i in 1..n {
        for j in 1..n {
            acc += m[(i, j)] * m[(i, j)];
        }
    }
    acc / d2m1(s.dim())
}

pub fn survival_rate(s: &Superoperator) -> f64 {
    s.matrix()[(0, 0)]
}

/// Closed form `1 − (Tr 𝓛 + d)/(d² + d)`; only meaningful for TP channels.
pub fn average_infidelity(s: &Superoperator) -> f64 {
    let d = s.dim() as f64;
    1.0 - (s.matrix().trace() + d) / (d * d + d)
}

/// [`average_infidelity`] plus a warning when the channel is not trace preserving.
pub fn average_infidelity_checked(s: &Superoperator) -> (f64, Option<MetricWarning>) {
    let warn = if is_trace_preserving(s) {
        None
    } else {
        Some(MetricWarning::NotTracePreserving)
    };
    (average_infidelity(s), warn)
}

/// TP in the Liouville picture: first row equals (1, 0, …, 0).
pub fn is_trace_preserving(s: &Superoperator) -> bool {
    let dec = s.block_decompose();
    (dec.survival - 1.0).abs() < tol::STRUCTURAL
        && fmath::sqrt(dec.sdl_norm_sqr()) < tol::STRUCTURAL
}

/// The averaged two-copy operator restricted to the invariant basis {B₁, B₂}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl MMatrix {
    pub fn identity() -> Self {
        Self {
            m11: 1.0,
            m12: 0.0,
            m21: 0.0,
            m22: 1.0,
        }
    }

    pub fn mul(&self, o: &MMatrix) -> MMatrix {
        MMatrix {
            m11: self.m11 * o.m11 + self.m12 * o.m21,
            m12: self.m11 * o.m12 + self.m12 * o.m22,
            m21: self.m21 * o.m11 + self.m22 * o.m21,
            m22: self.m21 * o.m12 + self.m22 * o.m22,
        }
    }

    pub fn pow(&self, mut k: u32) -> MMatrix {
        let mut base = *self;
        let mut acc = MMatrix::identity();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    /// `aᵀ M b` for two-component vectors.
    pub fn bilinear(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        a[0] * (self.m11 * b[0] + self.m12 * b[1]) + a[1] * (self.m21 * b[0] + self.m22 * b[1])
    }

    pub fn max_abs_diff(&self, o: &MMatrix) -> f64 {
        [
            self.m11 - o.m11,
            self.m12 - o.m12,
            self.m21 - o.m21,
            self.m22 - o.m22,
        ]
        .iter()
        .fold(0.0, |m, x| m.max(x.abs()))
    }
}

pub fn m_matrix(s: &Superoperator) -> MMatrix {
    let dec = s.block_decompose();
    let root = fmath::sqrt(d2m1(s.dim()));
    MMatrix {
        m11: dec.survival * dec.survival,
        m12: dec.sdl_norm_sqr() / root,
        m21: dec.nonunital_norm_sqr() / root,
        m22: dec.unital_norm_sqr() / d2m1(s.dim()),
    }
}

/// `λ± = ½(m11 + m22) ± ½√((m11 − m22)² + 4 m12 m21)`.
pub fn decay_eigenvalues(m: &MMatrix) -> Result<(f64, f64), MetricsError> {
    let diff = m.m11 - m.m22;
    let disc = diff * diff + 4.0 * m.m12 * m.m21;
    if disc < -tol::EQUALITY {
        return Err(MetricsError::NegativeDiscriminant(disc));
    }
    let root = fmath::sqrt(disc.max(0.0));
    let mean = 0.5 * (m.m11 + m.m22);
    Ok((mean + 0.5 * root, mean - 0.5 * root))
}

/// The invariant two-copy operators B₁ = 𝟙/d and B₂ = (SWAP − 𝟙/d)/√(d² − 1).
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantBasis {
    pub b1: CMatrix,
    pub b2: CMatrix,
}

impl InvariantBasis {
    pub fn new(d: usize) -> Self {
        let id = CMatrix::identity(d * d).scale_real(1.0 / d as f64);
        let swap = gates::swap(d);
        let b2 = (&swap - &id).scale_real(1.0 / fmath::sqrt(d2m1(d)));
        Self { b1: id, b2 }
    }
}

/// Maximally mixed states on the symmetric/antisymmetric subspaces and the
/// projectors onto those subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeStates {
    pub pi_s: CMatrix,
    pub pi_a: CMatrix,
    pub e_s: CMatrix,
    pub e_a: CMatrix,
}

impl ProbeStates {
    pub fn new(d: usize) -> Self {
        let id = CMatrix::identity(d * d);
        let swap = gates::swap(d);
        let e_s = (&id + &swap).scale_real(0.5);
        let e_a = (&id - &swap).scale_real(0.5);
        let df = d as f64;
        Self {
            pi_s: e_s.scale_real(2.0 / (df * (df + 1.0))),
            pi_a: e_a.scale_real(2.0 / (df * (df - 1.0))),
            e_s,
            e_a,
        }
    }
}

/// Probabilities `p_as = (E_a|𝓜|Π_s)` and `p_sa = (E_s|𝓜|Π_a)` from the
/// block norms.
pub fn probe_probabilities(s: &Superoperator) -> (f64, f64) {
    let d = s.dim() as f64;
    let dec = s.block_decompose();
    let s2 = dec.survival * dec.survival;
    let u = unitarity(s);
    let n2 = dec.nonunital_norm_sqr();
    let l2 = dec.sdl_norm_sqr();
    let p_as = (d - 1.0) / (2.0 * d) * (s2 - u - n2 / (d - 1.0) + l2 / (d + 1.0));
    let p_sa = (d + 1.0) / (2.0 * d) * (s2 - u + n2 / (d + 1.0) - l2 / (d - 1.0));
    (p_as, p_sa)
}

/// Residuals (rhs − lhs) of the block-norm bounds; negative means violated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBoundReport {
    /// ½(d²−1)(S² − u) − ‖n‖².
    pub nonunital_residual: f64,
    /// ½(d²−1)(S² − u) − ‖sdl‖².
    pub sdl_residual: f64,
    /// (d−1)(1 − u) − ‖n‖², for trace-preserving channels.
    pub tp_residual: Option<f64>,
}

impl NormBoundReport {
    pub fn min_residual(&self) -> f64 {
        let base = self.nonunital_residual.min(self.sdl_residual);
        self.tp_residual.map_or(base, |t| base.min(t))
    }
}

pub fn check_norm_bounds(s: &Superoperator) -> NormBoundReport {
    let d = s.dim() as f64;
    let dec = s.block_decompose();
    let u = unitarity(s);
    let rhs = 0.5 * d2m1(s.dim()) * (dec.survival * dec.survival - u);
    let n2 = dec.nonunital_norm_sqr();
    NormBoundReport {
        nonunital_residual: rhs - n2,
        sdl_residual: rhs - dec.sdl_norm_sqr(),
        tp_residual: is_trace_preserving(s).then_some((d - 1.0) * (1.0 - u) - n2),
    }
}

/// Best infidelity reachable by unitary pre/post correction, bracketed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizedInfidelity {
    /// Best value found; an upper bound on the exact minimum.
    pub upper: f64,
    /// `(d−1)/d · (1 − √u)`.
    pub lower: f64,
}

fn rotation_from_euler(a: f64, b: f64, c: f64) -> [[f64; 3]; 3] {
    let (sa, ca) = (fmath::sin(a), fmath::cos(a));
    let (sb, cb) = (fmath::sin(b), fmath::cos(b));
    let (sc, cc) = (fmath::sin(c), fmath::cos(c));
    // Rz(a) Ry(b) Rz(c)
    [
        [ca * cb * cc - sa * sc, -ca * cb * sc - sa * cc, ca * sb],
        [sa * cb * cc + ca * sc, -sa * cb * sc + ca * cc, sa * sb],
        [-sb * cc, sb * sc, cb],
    ]
}

/// Minimum over unitaries U, V of r(𝒱∘ℰ∘𝒰) for a qubit channel.
///
/// r(𝒱∘ℰ∘𝒰) depends on U and V only through the product rotation of VU
/// acting on the Bloch sphere, so the search runs over three Euler angles of
/// a single SO(3) element. Restart 0 starts at the identity, which makes the
/// result never exceed r(ℰ); the remaining restarts start at random angles.
pub fn optimized_infidelity(
    s: &Superoperator,
    restarts: usize,
    stream: &RngStream,
) -> Result<OptimizedInfidelity, MetricsError> {
    if s.dim() != 2 {
        return Err(MetricsError::UnsupportedDimension(s.dim()));
    }
    let m = s.matrix();
    let lu = [
        [m[(1, 1)], m[(1, 2)], m[(1, 3)]],
        [m[(2, 1)], m[(2, 2)], m[(2, 3)]],
        [m[(3, 1)], m[(3, 2)], m[(3, 3)]],
    ];
    let l00 = m[(0, 0)];
    let objective = |x: &[f64]| {
        let o = rotation_from_euler(x[0], x[1], x[2]);
        let mut tr = l00;
        for i in 0..3 {
            for j in 0..3 {
                tr += o[i][j] * lu[j][i];
            }
        }
        1.0 - (tr + 2.0) / 6.0
    };
    let opts = NelderMeadOptions {
        initial_step: 0.7,
        diameter_tol: 1e-9,
        max_iterations: 4000,
    };
    let mut best = average_infidelity(s);
    let mut rng = stream.child(purpose::RESTARTS).rng();
    let two_pi = 2.0 * core::f64::consts::PI;
    for k in 0..restarts.max(1) {
        let x0: [f64; 3] = if k == 0 {
            [0.0; 3]
        } else {
            [
                rng.random::<f64>() * two_pi,
                rng.random::<f64>() * core::f64::consts::PI,
                rng.random::<f64>() * two_pi,
            ]
        };
        let res = nelder_mead(objective, &x0, &opts);
        best = best.min(res.value);
    }
    let u = unitarity(s);
    Ok(OptimizedInfidelity {
        upper: best,
        lower: 0.5 * (1.0 - fmath::sqrt(u.clamp(0.0, 1.0))),
    })
}

/// Residuals of `u ≥ [1 − dR/(d−1)]² ≥ [1 − dr/(d−1)]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainReport {
    pub unitarity: f64,
    pub infidelity: f64,
    pub optimized_infidelity_upper: f64,
    /// u − [1 − dR/(d−1)]².
    pub first_residual: f64,
    /// [1 − dR/(d−1)]² − [1 − dr/(d−1)]².
    pub second_residual: f64,
}

impl ChainReport {
    pub fn min_residual(&self) -> f64 {
        self.first_residual.min(self.second_residual)
    }
}

pub fn check_infidelity_chain(
    s: &Superoperator,
    restarts: usize,
    stream: &RngStream,
) -> Result<ChainReport, MetricsError> {
    let d = s.dim() as f64;
    let u = unitarity(s);
    let r = average_infidelity(s);
    let big_r = optimized_infidelity(s, restarts, stream)?.upper;
    let a = 1.0 - d * big_r / (d - 1.0);
    let b = 1.0 - d * r / (d - 1.0);
    let (via_r, via_small) = (a * a, b * b);
    Ok(ChainReport {
        unitarity: u,
        infidelity: r,
        optimized_infidelity_upper: big_r,
        first_residual: u - via_r,
        second_residual: via_r - via_small,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JamiolkowskiReport {
    /// d² Tr(J†J).
    pub lhs: f64,
    /// S² + ‖sdl‖² + ‖n‖² + (d²−1)u.
    pub rhs: f64,
    pub residual: f64,
}

pub fn check_jamiolkowski_identity(
    k: &KrausChannel,
    basis: &Arc<OperatorBasis>,
) -> Result<JamiolkowskiReport, MetricsError> {
    let s = k.to_liouville(basis)?;
    let d = k.dim() as f64;
    let lhs = d * d * jamiolkowski(k).purity();
    let dec = s.block_decompose();
    let rhs = dec.survival * dec.survival
        + dec.sdl_norm_sqr()
        + dec.nonunital_norm_sqr()
        + d2m1(k.dim()) * unitarity(&s);
    Ok(JamiolkowskiReport {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// u(second ∘ first).
pub fn composition_unitarity(
    first: &Superoperator,
    second: &Superoperator,
) -> Result<f64, MetricsError> {
    Ok(unitarity(&Superoperator::compose(second, first)?))
}

/// All headline metrics of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReport {
    pub d: usize,
    pub unitarity: f64,
    pub survival: f64,
    pub infidelity: f64,
    pub optimized_infidelity_upper: Option<f64>,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub norm_bound_residuals: Vec<f64>,
    pub chain_residuals: Option<[f64; 2]>,
    pub jamiolkowski_residual: f64,
}

/// Computes every metric for `s`. The optimized infidelity and the chain
/// check are qubit-only and need a trace-preserving channel; they are `None`
/// otherwise.
pub fn channel_report(
    s: &Superoperator,
    restarts: usize,
    stream: &RngStream,
) -> Result<ChannelReport, MetricsError> {
    let m = m_matrix(s);
    let (lp, lm) = decay_eigenvalues(&m)?;
    let nb = check_norm_bounds(s);
    let mut norm_bound_residuals = alloc::vec![nb.nonunital_residual, nb.sdl_residual];
    if let Some(t) = nb.tp_residual {
        norm_bound_residuals.push(t);
    }
    let (opt, chain) = if s.dim() == 2 && is_trace_preserving(s) {
        let c = check_infidelity_chain(s, restarts, stream)?;
        (
            Some(c.optimized_infidelity_upper),
            Some([c.first_residual, c.second_residual]),
        )
    } else {
        (None, None)
    };
    // Jamiołkowski identity from the Liouville-derived Choi state.
    let d = s.dim() as f64;
    let dec = s.block_decompose();
    let u = unitarity(s);
    let lhs = d * d * s.choi().purity();
    let rhs = dec.survival * dec.survival
        + dec.sdl_norm_sqr()
        + dec.nonunital_norm_sqr()
        + d2m1(s.dim()) * u;
    Ok(ChannelReport {
        d: s.dim(),
        unitarity: u,
        survival: dec.survival,
        infidelity: average_infidelity(s),
        optimized_infidelity_upper: opt,
        lambda_plus: lp,
        lambda_minus: lm,
        norm_bound_residuals,
        chain_residuals: chain,
        jamiolkowski_residual: (lhs - rhs).abs(),
    })
}

/// Frobenius inner product of two real matrices, used by tests and checks.
pub fn real_inner(a: &RMatrix, b: &RMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x * y)
        .sum()
}
