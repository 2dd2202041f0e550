//! Named channels and random channel ensembles.
//!
//! Every random generator takes an [`RngStream`]: a `(seed, key)` pair that
//! deterministically selects an independent ChaCha stream, so work items can
//! be generated in any order or on any thread with identical results.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use thiserror::Error;

use crate::channel::{ChannelError, KrausChannel};
use crate::fmath;
use crate::kernel::{gates, CMatrix, KernelError};
use crate::tol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("rotation axis has norm {0}, expected 1")]
    NonUnitAxis(f64),
    #[error("Kraus rank {rank} outside [1, {max}]")]
    RankOutOfRange { rank: usize, max: usize },
    #[error("dimension {0} is not supported here")]
    UnsupportedDimension(usize),
    #[error("gate {0} is not unitary")]
    NonUnitaryGate(usize),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Stream purposes used by the simulator and scanners.
pub mod purpose {
    pub const HAAR: u64 = 1;
    pub const BRUZDA: u64 = 2;
    pub const PERTURBATION: u64 = 3;
    pub const SEQUENCE: u64 = 4;
    pub const SHOTS: u64 = 5;
    pub const SPAM: u64 = 6;
    pub const RESTARTS: u64 = 7;
    pub const TEST: u64 = 8;
    pub const BOOTSTRAP: u64 = 9;
}

/// Deterministic, keyed random stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    key: Vec<u64>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            key: Vec::new(),
        }
    }

    pub fn keyed(seed: u64, key: &[u64]) -> Self {
        Self {
            seed,
            key: key.to_vec(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn key(&self) -> &[u64] {
        &self.key
    }

    /// Sub-stream with one more key component.
    pub fn child(&self, k: u64) -> Self {
        let mut key = self.key.clone();
        key.push(k);
        Self {
            seed: self.seed,
            key,
        }
    }

    fn stream_id(&self) -> u64 {
        self.key
            .iter()
            .fold(splitmix(self.key.len() as u64), |h, &k| {
                splitmix(h ^ splitmix(k))
            })
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id());
        rng
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Ginibre matrix with iid standard complex normal entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

fn check_probability(p: f64) -> Result<(), EnsembleError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(EnsembleError::ProbabilityOutOfRange(p));
    }
    Ok(())
}

fn qubit_count(d: usize) -> Result<usize, EnsembleError> {
    match d {
        2 => Ok(1),
        4 => Ok(2),
        8 => Ok(3),
        other => Err(EnsembleError::UnsupportedDimension(other)),
    }
}

/// ρ ↦ (1−p)ρ + p𝟙/d for d = 2ⁿ, via Pauli Kraus operators.
pub fn depolarizing(d: usize, p: f64) -> Result<KrausChannel, EnsembleError> {
    check_probability(p)?;
    let n = qubit_count(d)?;
    let singles = [
        gates::pauli_i(),
        gates::pauli_x(),
        gates::pauli_y(),
        gates::pauli_z(),
    ];
    let d2 = (d * d) as f64;
    let w_id = fmath::sqrt(1.0 - p + p / d2);
    let w = fmath::sqrt(p / d2);
    let mut ops = Vec::with_capacity(d * d);
    for index in 0..d * d {
        if index > 0 && p == 0.0 {
            break;
        }
        let mut op = CMatrix::identity(1);
        for q in (0..n).rev() {
            op = op.kron(&singles[(index >> (2 * q)) & 3]);
        }
        ops.push(op.scale_real(if index == 0 { w_id } else { w }));
    }
    Ok(KrausChannel::new(ops)?)
}

/// Qubit reset mixture ρ ↦ p|0⟩⟨0| Tr ρ + (1−p)ρ.
pub fn reset_channel(p: f64) -> Result<KrausChannel, EnsembleError> {
    check_probability(p)?;
    let sp = fmath::sqrt(p);
    Ok(KrausChannel::new(vec![
        CMatrix::identity(2).scale_real(fmath::sqrt(1.0 - p)),
        gates::ket0_bra0().scale_real(sp),
        gates::ket0_bra1().scale_real(sp),
    ])?)
}

/// ℰ₀(ρ) = Tr(ρ)|0⟩⟨0|.
pub fn state_prep_channel() -> KrausChannel {
    KrausChannel::new(vec![gates::ket0_bra0(), gates::ket0_bra1()]).expect("2x2 ops")
}

/// ℰ₁(ρ) = |0⟩⟨0|ρ|0⟩⟨0| (trace decreasing).
pub fn filter_channel() -> KrausChannel {
    KrausChannel::new(vec![gates::ket0_bra0()]).expect("2x2 op")
}

/// Conjugation by cos(θ/2)𝟙 − i sin(θ/2) n̂·σ⃗.
pub fn rotation_unitary(axis: [f64; 3], angle: f64) -> Result<KrausChannel, EnsembleError> {
    let norm = fmath::sqrt(axis.iter().map(|x| x * x).sum());
    if (norm - 1.0).abs() > tol::STRUCTURAL {
        return Err(EnsembleError::NonUnitAxis(norm));
    }
    Ok(KrausChannel::unitary(gates::rotation(axis, angle))?)
}

/// Haar-random unitary from a Ginibre matrix via Gram–Schmidt, which is QR
/// with a positive real R diagonal.
pub fn haar_unitary_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, d, rng);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = g.column(j);
        // two passes of modified Gram–Schmidt for orthogonality at 1e-15
        for _ in 0..2 {
            for q in &cols {
                let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = fmath::sqrt(v.iter().map(|z| z.norm_sqr()).sum());
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        cols.push(v);
    }
    CMatrix::from_fn(d, d, |i, j| cols[j][i])
}

pub fn haar_unitary(d: usize, stream: &RngStream) -> CMatrix {
    haar_unitary_with(d, &mut stream.rng())
}

/// Per-gate error channels ℰ_g for gate-dependent noise.
#[derive(Debug, Clone, PartialEq)]
pub struct GateDependentNoise {
    channels: Vec<KrausChannel>,
}

impl GateDependentNoise {
    pub fn new(channels: Vec<KrausChannel>) -> Self {
        Self { channels }
    }

    pub fn channels(&self) -> &[KrausChannel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Each ℰ_g becomes `ℰ_g ∘ base`: `base` acts first.
    pub fn after(&self, base: &KrausChannel) -> Result<Self, EnsembleError> {
        let channels = self
            .channels
            .iter()
            .map(|e| base.then(e))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { channels })
    }
}

/// Fixed over/under-rotation errors: every eigenphase θ_k of gate g is
/// shifted by an independent ε_k ~ U[−max_delta, max_delta]. The stored error
/// channel is conjugation by g⁻¹·g̃ = Σ e^{iε_k} v_k v_k†, so that the
/// implemented gate is 𝒢 ∘ ℰ_g.
pub fn eigenvalue_perturbed_gates(
    gates_in: &[CMatrix],
    max_delta: f64,
    stream: &RngStream,
) -> Result<GateDependentNoise, EnsembleError> {
    let mut rng = stream.rng();
    let dist = Uniform::new_inclusive(-max_delta.abs(), max_delta.abs()).expect("finite bounds");
    let mut channels = Vec::with_capacity(gates_in.len());
    for (idx, g) in gates_in.iter().enumerate() {
        if g.rows() != 2 {
            return Err(EnsembleError::UnsupportedDimension(g.rows()));
        }
        let eig = g
            .unitary_eigensystem()
            .map_err(|_| EnsembleError::NonUnitaryGate(idx))?;
        let v = &eig.vectors;
        let eps: Vec<f64> = (0..2).map(|_| dist.sample(&mut rng)).collect();
        let err = CMatrix::from_fn(2, 2, |i, j| {
            (0..2)
                .map(|k| {
                    let ph = Complex64::new(fmath::cos(eps[k]), fmath::sin(eps[k]));
                    v[(i, k)] * ph * v[(j, k)].conj()
                })
                .sum()
        });
        channels.push(KrausChannel::unitary(err)?);
    }
    Ok(GateDependentNoise { channels })
}

/// Random CPTP channel with Kraus rank `kraus_rank`.
///
/// A d²×k Ginibre matrix G gives W = GG† on output⊗input; conjugating by
/// 𝟙⊗(Tr_out W)^{-1/2} makes it a trace-preserving Choi matrix, whose
/// eigenvectors are the vectorized Kraus operators.
pub fn bruzda_channel(
    d: usize,
    kraus_rank: usize,
    stream: &RngStream,
) -> Result<KrausChannel, EnsembleError> {
    bruzda_channel_with(d, kraus_rank, &mut stream.rng())
}

pub fn bruzda_channel_with<R: Rng + ?Sized>(
    d: usize,
    kraus_rank: usize,
    rng: &mut R,
) -> Result<KrausChannel, EnsembleError> {
    if kraus_rank == 0 || kraus_rank > d * d {
        return Err(EnsembleError::RankOutOfRange {
            rank: kraus_rank,
            max: d * d,
        });
    }
    let g = ginibre(d * d, kraus_rank, rng);
    let w = &g * &g.adjoint();
    let mut y = CMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            for bp in 0..d {
                y[(b, bp)] += w[(a * d + b, a * d + bp)];
            }
        }
    }
    let y_inv_sqrt = y.hermitian_function(|l| Complex64::new(1.0 / fmath::sqrt(l), 0.0))?;
    let lift = CMatrix::identity(d).kron(&y_inv_sqrt);
    let choi = &(&lift * &w) * &lift;
    let eig = choi.hermitian_eigensystem()?;
    let total: f64 = eig.values.iter().filter(|&&l| l > 0.0).sum();
    let mut ops = Vec::with_capacity(kraus_rank);
    for (k, &l) in eig.values.iter().enumerate().rev() {
        if ops.len() == kraus_rank || l <= tol::RANK_CUTOFF * total {
            break;
        }
        let s = fmath::sqrt(l);
        ops.push(CMatrix::from_fn(d, d, |a, j| {
            eig.vectors[(a * d + j, k)] * s
        }));
    }
    Ok(KrausChannel::new(ops)?)
}
