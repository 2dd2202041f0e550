//! Monte Carlo simulation of the purity and loss protocols.
//!
//! A sequence `j = (j₁, …, j_m)` of gate indices (0-based) is run as
//! `𝓤_{j_m} 𝓔 ⋯ 𝓤_{j₂} 𝓔 𝓤_{j₁}` on the prepared state: the noise before the
//! first gate is absorbed into state preparation. With gate-dependent noise
//! the channel inserted before gate `g` is `ℰ_g`.
//!
//! Simulation is organised around [`PreparedProtocol`], which holds the
//! realised SPAM and per-gate Liouville matrices and exposes one pure
//! function per sequence. Aggregation is order-fixed by index, so results do
//! not depend on how sequences are scheduled.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal, Uniform};
use thiserror::Error;

use crate::channel::{ChannelError, KrausChannel, OperatorBasis, Superoperator};
use crate::design::{twirl_projector_2copy, GateSet};
use crate::ensembles::{purpose, GateDependentNoise, RngStream};
use crate::fmath;
use crate::kernel::{CMatrix, KernelError, RMatrix};
use crate::metrics::m_matrix;
use crate::tol;

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("sequence length must be at least 1")]
    ZeroLength,
    #[error("at least one sequence per length is required")]
    NoSequences,
    #[error("the unbiased estimator needs at least 2 shots, got {0}")]
    TooFewShots(usize),
    #[error("expectation {0} outside [-1, 1]")]
    ExpectationOutOfRange(f64),
    #[error("|G|^m = {count} sequences exceeds the enumeration limit {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },
    #[error("noise has {found} gate channels for a gate set of {expected}")]
    NoiseGateCount { expected: usize, found: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no observables configured")]
    NoObservables,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Largest number of sequences [`brute_force_mean_squares`] will enumerate.
pub const ENUMERATION_LIMIT: u128 = 20_000;

/// Noise in the Liouville picture, either shared by all gates or per gate.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    Independent(Superoperator),
    GateDependent(Vec<Superoperator>),
}

impl NoiseModel {
    pub fn independent(
        k: &KrausChannel,
        basis: &alloc::sync::Arc<OperatorBasis>,
    ) -> Result<Self, SimError> {
        Ok(Self::Independent(k.to_liouville(basis)?))
    }

    pub fn gate_dependent(
        n: &GateDependentNoise,
        basis: &alloc::sync::Arc<OperatorBasis>,
    ) -> Result<Self, SimError> {
        let v = n
            .channels()
            .iter()
            .map(|k| k.to_liouville(basis))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::GateDependent(v))
    }

    /// ℰ for gate `g`.
    pub fn for_gate(&self, g: usize) -> &Superoperator {
        match self {
            Self::Independent(s) => s,
            Self::GateDependent(v) => &v[g],
        }
    }

    /// Gate-averaged channel ⟨ℰ_g⟩.
    pub fn average(&self) -> Result<Superoperator, SimError> {
        match self {
            Self::Independent(s) => Ok(s.clone()),
            Self::GateDependent(v) => Ok(Superoperator::average(v)?),
        }
    }

    fn check(&self, g: &GateSet) -> Result<(), SimError> {
        let dims: Vec<usize> = match self {
            Self::Independent(s) => vec![s.dim()],
            Self::GateDependent(v) => {
                if v.len() != g.len() {
                    return Err(SimError::NoiseGateCount {
                        expected: g.len(),
                        found: v.len(),
                    });
                }
                v.iter().map(|s| s.dim()).collect()
            }
        };
        for d in dims {
            if d != g.dim() {
                return Err(SimError::DimensionMismatch {
                    expected: g.dim(),
                    found: d,
                });
            }
        }
        Ok(())
    }
}

/// State preparation and measurement errors.
///
/// Preparation: `ρ ↦ VρV†` with `V = exp(−i·prep_angle·H)` for a random
/// Hermitian `H` of unit Frobenius norm. Measurement: for each observable the
/// non-identity Pauli coefficients are rotated by `exp(meas_angle·A)` for a
/// random antisymmetric `A` of unit Frobenius norm and scaled by a factor
/// drawn uniformly from `meas_scale`. All draws derive from the protocol seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpamModel {
    pub prep_angle: f64,
    pub meas_angle: f64,
    pub meas_scale: (f64, f64),
}

impl SpamModel {
    pub fn none() -> Self {
        Self {
            prep_angle: 0.0,
            meas_angle: 0.0,
            meas_scale: (1.0, 1.0),
        }
    }

    pub fn is_none(&self) -> bool {
        *self == Self::none()
    }
}

impl Default for SpamModel {
    fn default() -> Self {
        Self {
            prep_angle: 0.05,
            meas_angle: 0.05,
            meas_scale: (0.95, 1.0),
        }
    }
}

/// SPAM drawn for one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedSpam {
    pub rho: CMatrix,
    pub observables: Vec<CMatrix>,
}

fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let mut h = CMatrix::zeros(d, d);
    for i in 0..d {
        let x: f64 = StandardNormal.sample(rng);
        h[(i, i)] = Complex64::new(x, 0.0);
        for j in i + 1..d {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            h[(i, j)] = Complex64::new(re, im);
            h[(j, i)] = Complex64::new(re, -im);
        }
    }
    let n = h.frobenius_norm();
    if n > 0.0 {
        h.scale_real(1.0 / n)
    } else {
        h
    }
}

/// `exp(t·A)` for real antisymmetric `A`, through the Hermitian matrix `iA`.
fn expm_antisymmetric(a: &RMatrix, t: f64) -> Result<RMatrix, KernelError> {
    let n = a.rows();
    let ia = CMatrix::from_fn(n, n, |i, j| Complex64::new(0.0, a[(i, j)]));
    // exp(tA) = exp(−i t (iA))
    let e = ia.hermitian_function(|l| Complex64::new(fmath::cos(t * l), -fmath::sin(t * l)))?;
    Ok(RMatrix::from_fn(n, n, |i, j| e[(i, j)].re))
}

fn random_antisymmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RMatrix {
    let mut a = RMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let x: f64 = StandardNormal.sample(rng);
            a[(i, j)] = x;
            a[(j, i)] = -x;
        }
    }
    let norm = a.frobenius_norm();
    if norm > 0.0 {
        a.scale(1.0 / norm)
    } else {
        a
    }
}

impl SpamModel {
    /// Applies the model to `rho` and `observables` using the `SPAM` stream of
    /// `seed`. Perturbed observables are rescaled if needed so their
    /// eigenvalues stay in [−1, 1], keeping the ±1 effects valid.
    pub fn realize(
        &self,
        basis: &OperatorBasis,
        rho: &CMatrix,
        observables: &[CMatrix],
        seed: u64,
    ) -> Result<RealizedSpam, SimError> {
        let d = basis.dim();
        let stream = RngStream::keyed(seed, &[purpose::SPAM]);
        let rho = if self.prep_angle == 0.0 {
            rho.clone()
        } else {
            let h = random_hermitian(d, &mut stream.child(0).rng());
            let t = self.prep_angle;
            let v =
                h.hermitian_function(|l| Complex64::new(fmath::cos(t * l), -fmath::sin(t * l)))?;
            &(&v * rho) * &v.adjoint()
        };
        let n = basis.len();
        let mut out = Vec::with_capacity(observables.len());
        for (k, q) in observables.iter().enumerate() {
            if self.meas_angle == 0.0 && self.meas_scale == (1.0, 1.0) {
                out.push(q.clone());
                continue;
            }
            let mut rng = stream.child(1 + k as u64).rng();
            let a = random_antisymmetric(n - 1, &mut rng);
            let o = expm_antisymmetric(&a, self.meas_angle)?;
            let (lo, hi) = self.meas_scale;
            let s = if hi > lo {
                Uniform::new_inclusive(lo, hi)
                    .expect("finite range")
                    .sample(&mut rng)
            } else {
                lo
            };
            let c = basis.real_coefficients(q);
            let rotated = o.mul_vec(&c[1..])?;
            let mut coeffs = vec![c[0]];
            coeffs.extend(rotated.iter().map(|x| s * x));
            let mut qp = basis.operator_from_real(&coeffs);
            let eig = qp.hermitian_eigensystem()?;
            let top = eig.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if top > 1.0 {
                qp = qp.scale_real(1.0 / top);
            }
            out.push(qp);
        }
        Ok(RealizedSpam {
            rho,
            observables: out,
        })
    }
}

/// |0⟩⟨0| on dimension `d`.
pub fn ground_state(d: usize) -> CMatrix {
    let mut r = CMatrix::zeros(d, d);
    r[(0, 0)] = Complex64::new(1.0, 0.0);
    r
}

/// The non-identity Pauli operators (±1-valued) of `basis`.
pub fn pauli_observables(basis: &OperatorBasis) -> Vec<CMatrix> {
    let root = fmath::sqrt(basis.dim() as f64);
    basis.elements()[1..]
        .iter()
        .map(|a| a.scale_real(root))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub gateset: GateSet,
    pub noise: NoiseModel,
    pub lengths: Vec<usize>,
    pub sequences_per_length: usize,
    /// Shots per observable; `None` uses exact expectation values.
    pub shots_per_observable: Option<usize>,
    pub spam: SpamModel,
    pub seed: u64,
    /// Measured observables; defaults to the non-identity Paulis.
    pub observables: Vec<CMatrix>,
    pub initial_state: CMatrix,
}

impl ProtocolConfig {
    /// Defaults: K = 30, N = 150, m ∈ {2, 4, …, 100}, default SPAM, Pauli
    /// observables, |0⟩⟨0|.
    pub fn new(gateset: GateSet, noise: NoiseModel, seed: u64) -> Self {
        let observables = pauli_observables(gateset.basis());
        let d = gateset.dim();
        Self {
            gateset,
            noise,
            lengths: (1..=50).map(|k| 2 * k).collect(),
            sequences_per_length: 30,
            shots_per_observable: Some(150),
            spam: SpamModel::default(),
            seed,
            observables,
            initial_state: ground_state(d),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.lengths.contains(&0) {
            return Err(SimError::ZeroLength);
        }
        if self.sequences_per_length == 0 {
            return Err(SimError::NoSequences);
        }
        if let Some(n) = self.shots_per_observable {
            if n < 2 {
                return Err(SimError::TooFewShots(n));
            }
        }
        if self.observables.is_empty() {
            return Err(SimError::NoObservables);
        }
        self.noise.check(&self.gateset)
    }

    pub fn prepare(&self) -> Result<PreparedProtocol, SimError> {
        self.validate()?;
        let basis = self.gateset.basis().clone();
        let spam = self
            .spam
            .realize(&basis, &self.initial_state, &self.observables, self.seed)?;
        let steps = (0..self.gateset.len())
            .map(|g| {
                Superoperator::compose(&self.gateset.liouville()[g], self.noise.for_gate(g))
                    .map(Superoperator::into_matrix)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let gates = self
            .gateset
            .liouville()
            .iter()
            .map(|s| s.matrix().clone())
            .collect();
        Ok(PreparedProtocol {
            d: self.gateset.dim(),
            gate_count: self.gateset.len(),
            seed: self.seed,
            shots: self.shots_per_observable,
            rho: basis.real_coefficients(&spam.rho),
            observables: spam
                .observables
                .iter()
                .map(|q| basis.real_coefficients(q))
                .collect(),
            gates,
            steps,
        })
    }
}

/// Everything needed to evaluate a single sequence, with SPAM already drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedProtocol {
    d: usize,
    gate_count: usize,
    seed: u64,
    shots: Option<usize>,
    rho: Vec<f64>,
    observables: Vec<Vec<f64>>,
    gates: Vec<RMatrix>,
    /// 𝓤_g ∘ ℰ_g for every gate.
    steps: Vec<RMatrix>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl PreparedProtocol {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn shots(&self) -> Option<usize> {
        self.shots
    }

    pub fn prepared_state(&self) -> &[f64] {
        &self.rho
    }

    pub fn observable_coefficients(&self) -> &[Vec<f64>] {
        &self.observables
    }

    pub fn sequence(&self, m: usize, index: usize) -> Vec<usize> {
        sample_sequence(
            m,
            self.gate_count,
            &RngStream::keyed(self.seed, &[purpose::SEQUENCE, m as u64, index as u64]),
        )
    }

    /// Liouville vector of the output state of `seq`.
    pub fn evolve(&self, seq: &[usize]) -> Vec<f64> {
        let mut v = self.rho.clone();
        for (k, &g) in seq.iter().enumerate() {
            let m = if k == 0 {
                &self.gates[g]
            } else {
                &self.steps[g]
            };
            v = m.mul_vec(&v).expect("Liouville dimension");
        }
        v
    }

    fn trace_of(&self, v: &[f64]) -> f64 {
        v[0] * fmath::sqrt(self.d as f64)
    }

    /// Purity estimate `Σ_k est(⟨Q_k⟩²)/(d − 1)` for sequence `(m, index)`.
    pub fn sequence_purity(&self, m: usize, index: usize) -> f64 {
        let seq = self.sequence(m, index);
        let out = self.evolve(&seq);
        let trace = self.trace_of(&out);
        let mut acc = 0.0;
        for (k, q) in self.observables.iter().enumerate() {
            let mu = dot(q, &out);
            acc += match self.shots {
                None => mu * mu,
                Some(n) => {
                    let stream = RngStream::keyed(
                        self.seed,
                        &[purpose::SHOTS, m as u64, index as u64, k as u64],
                    );
                    let counts = sample_outcomes(mu, trace, n, &mut stream.rng());
                    counts.unbiased_square()
                }
            };
        }
        acc / (self.d - 1) as f64
    }

    /// Loss estimate for sequence `(m, index)`: the surviving fraction, or
    /// the exact trace without shots.
    pub fn sequence_survival(&self, m: usize, index: usize) -> f64 {
        let seq = self.sequence(m, index);
        let trace = self.trace_of(&self.evolve(&seq)).clamp(0.0, 1.0);
        match self.shots {
            None => trace,
            Some(n) => {
                let stream = RngStream::keyed(self.seed, &[purpose::SHOTS, m as u64, index as u64]);
                let k = Binomial::new(n as u64, trace)
                    .expect("probability in [0, 1]")
                    .sample(&mut stream.rng());
                k as f64 / n as f64
            }
        }
    }

    /// Exact `Q_j` for every configured observable.
    pub fn sequence_expectations(&self, m: usize, index: usize) -> Vec<f64> {
        let out = self.evolve(&self.sequence(m, index));
        self.observables.iter().map(|q| dot(q, &out)).collect()
    }
}

/// `m` iid uniform gate indices in `0..gateset_size`.
pub fn sample_sequence(m: usize, gateset_size: usize, stream: &RngStream) -> Vec<usize> {
    let mut rng = stream.rng();
    (0..m).map(|_| rng.random_range(0..gateset_size)).collect()
}

/// `(Q|𝓤_{j_m} 𝓔 ⋯ 𝓤_{j₁}|ρ)` computed directly with density matrices.
pub fn exact_expectation(
    q: &CMatrix,
    sequence: &[usize],
    rho: &CMatrix,
    noise: &NoiseModel,
    gateset: &GateSet,
) -> Result<f64, SimError> {
    let mut state = rho.clone();
    for (k, &g) in sequence.iter().enumerate() {
        if k > 0 {
            state = noise.for_gate(g).apply_operator(&state);
        }
        let u = &gateset.unitaries()[g];
        state = &(u * &state) * &u.adjoint();
    }
    Ok(q.frobenius_inner(&state)?.re)
}

/// Outcome counts of `n` measurements of a ±1 observable on a possibly
/// sub-normalised state: `+1`, `−1`, or lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotCounts {
    pub plus: u64,
    pub minus: u64,
    pub n: u64,
}

impl ShotCounts {
    pub fn mean(&self) -> f64 {
        (self.plus as f64 - self.minus as f64) / self.n as f64
    }

    /// Unbiased estimate of μ², valid also when shots can be lost:
    /// `(n·X̄² − f)/(n − 1)` with `f` the surviving fraction.
    pub fn unbiased_square(&self) -> f64 {
        let n = self.n as f64;
        let x = self.mean();
        let f = (self.plus + self.minus) as f64 / n;
        (n * x * x - f) / (n - 1.0)
    }
}

/// Draws `n` outcomes with `P(±1) = (trace ± mu)/2` and the rest lost.
pub fn sample_outcomes<R: Rng + ?Sized>(mu: f64, trace: f64, n: usize, rng: &mut R) -> ShotCounts {
    let t = trace.clamp(0.0, 1.0);
    let p_plus = (0.5 * (t + mu)).clamp(0.0, 1.0);
    let p_minus = (0.5 * (t - mu)).clamp(0.0, 1.0 - p_plus);
    let n64 = n as u64;
    let plus = Binomial::new(n64, p_plus).expect("p in [0, 1]").sample(rng);
    let rest = n64 - plus;
    let cond = if p_plus < 1.0 {
        (p_minus / (1.0 - p_plus)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let minus = Binomial::new(rest, cond).expect("p in [0, 1]").sample(rng);
    ShotCounts {
        plus,
        minus,
        n: n64,
    }
}

/// Sample mean of `n` ±1 outcomes with `P(+1) = (1 + mu)/2`.
pub fn simulate_shots(mu: f64, n: usize, stream: &RngStream) -> Result<f64, SimError> {
    if mu.abs() > 1.0 + tol::EQUALITY || mu.is_nan() {
        return Err(SimError::ExpectationOutOfRange(mu));
    }
    if n == 0 {
        return Err(SimError::TooFewShots(0));
    }
    Ok(sample_outcomes(mu.clamp(-1.0, 1.0), 1.0, n, &mut stream.rng()).mean())
}

/// `(n·x̄² − 1)/(n − 1)`, unbiased for μ² with ±1 outcomes.
pub fn unbiased_square(sample_mean: f64, n: usize) -> Result<f64, SimError> {
    if n < 2 {
        return Err(SimError::TooFewShots(n));
    }
    let n = n as f64;
    Ok((n * sample_mean * sample_mean - 1.0) / (n - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub m: usize,
    pub mean: f64,
    pub stderr: f64,
    pub k: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawRecord {
    pub m: usize,
    pub seq_index: usize,
    pub value: f64,
}

/// Per-length means with standard errors, plus the per-sequence values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecayDataset {
    pub rows: Vec<DecayRow>,
    pub raw: Vec<RawRecord>,
}

/// Mean and standard error of the mean (zero for a single value).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (mean, fmath::sqrt(var / k))
}

impl DecayDataset {
    /// Builds rows from per-length value lists given in sequence-index order.
    pub fn from_values(per_length: &[(usize, Vec<f64>)], shots: usize) -> Self {
        let mut out = Self::default();
        for (m, vals) in per_length {
            let (mean, stderr) = mean_and_stderr(vals);
            out.rows.push(DecayRow {
                m: *m,
                mean,
                stderr,
                k: vals.len(),
                n: shots,
            });
            out.raw
                .extend(vals.iter().enumerate().map(|(i, &v)| RawRecord {
                    m: *m,
                    seq_index: i,
                    value: v,
                }));
        }
        out
    }

    /// Rows built from exact values with no raw records.
    pub fn from_curve(ms: &[usize], ys: &[f64], stderr: Option<&[f64]>) -> Self {
        let rows = ms
            .iter()
            .zip(ys)
            .enumerate()
            .map(|(i, (&m, &y))| DecayRow {
                m,
                mean: y,
                stderr: stderr.map_or(0.0, |s| s[i]),
                k: 1,
                n: 0,
            })
            .collect();
        Self {
            rows,
            raw: Vec::new(),
        }
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.m).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean).collect()
    }

    pub fn stderrs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.stderr).collect()
    }
}

fn run_with(
    config: &ProtocolConfig,
    f: impl Fn(&PreparedProtocol, usize, usize) -> f64,
) -> Result<DecayDataset, SimError> {
    let prepared = config.prepare()?;
    let per_length: Vec<(usize, Vec<f64>)> = config
        .lengths
        .iter()
        .map(|&m| {
            let vals = (0..config.sequences_per_length)
                .map(|i| f(&prepared, m, i))
                .collect();
            (m, vals)
        })
        .collect();
    Ok(DecayDataset::from_values(
        &per_length,
        config.shots_per_observable.unwrap_or(0),
    ))
}

/// Runs the purity protocol sequentially.
pub fn run_purity_protocol(config: &ProtocolConfig) -> Result<DecayDataset, SimError> {
    run_with(config, PreparedProtocol::sequence_purity)
}

/// Runs the loss protocol (first moment of the survival) sequentially.
pub fn run_loss_protocol(config: &ProtocolConfig) -> Result<DecayDataset, SimError> {
    run_with(config, PreparedProtocol::sequence_survival)
}

/// `|𝒢|^{−m} Σ_j Q_j²` by enumerating every sequence of length `m`.
pub fn brute_force_mean_squares(
    m: usize,
    q: &CMatrix,
    rho: &CMatrix,
    noise: &NoiseModel,
    gateset: &GateSet,
) -> Result<f64, SimError> {
    if m == 0 {
        return Err(SimError::ZeroLength);
    }
    noise.check(gateset)?;
    let g = gateset.len();
    let count = (g as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if count > ENUMERATION_LIMIT {
        return Err(SimError::EnumerationTooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let basis = gateset.basis();
    let qc = basis.real_coefficients(q);
    let rc = basis.real_coefficients(rho);
    let gates: Vec<&RMatrix> = gateset.liouville().iter().map(|s| s.matrix()).collect();
    let steps: Vec<RMatrix> = (0..g)
        .map(|i| {
            Superoperator::compose(&gateset.liouville()[i], noise.for_gate(i))
                .map(Superoperator::into_matrix)
        })
        .collect::<Result<_, _>>()?;
    // Depth-first enumeration sharing prefixes.
    fn rec(depth: usize, m: usize, v: &[f64], steps: &[RMatrix], q: &[f64], acc: &mut f64) {
        if depth == m {
            let x = dot(q, v);
            *acc += x * x;
            return;
        }
        for s in steps {
            let w = s.mul_vec(v).expect("Liouville dimension");
            rec(depth + 1, m, &w, steps, q, acc);
        }
    }
    let mut acc = 0.0;
    for g0 in &gates {
        let v = g0.mul_vec(&rc)?;
        rec(1, m, &v, &steps, &qc, &mut acc);
    }
    Ok(acc / count as f64)
}

/// Endpoint projections `[(X⊗²|B₁), (X⊗²|B₂)]` of a Hermitian operator.
pub fn invariant_projection(basis: &OperatorBasis, x: &CMatrix) -> [f64; 2] {
    let c = basis.real_coefficients(x);
    let tail: f64 = c[1..].iter().map(|v| v * v).sum();
    [c[0] * c[0], tail / fmath::sqrt((c.len() - 1) as f64)]
}

/// `(Q⊗²|𝓜^{m−1}|ρ⊗²)` for gate-independent noise, from the 2×2 restriction.
pub fn theoretical_decay(
    noise: &Superoperator,
    gateset: &GateSet,
    q: &CMatrix,
    rho: &CMatrix,
    ms: &[usize],
) -> Result<Vec<f64>, SimError> {
    if noise.dim() != gateset.dim() {
        return Err(SimError::DimensionMismatch {
            expected: gateset.dim(),
            found: noise.dim(),
        });
    }
    let basis = gateset.basis();
    let a = invariant_projection(basis, q);
    let b = invariant_projection(basis, rho);
    let mm = m_matrix(noise);
    ms.iter()
        .map(|&m| {
            if m == 0 {
                return Err(SimError::ZeroLength);
            }
            Ok(mm.pow((m - 1) as u32).bilinear(a, b))
        })
        .collect()
}

/// Exact mean squares for any noise model through the full two-copy
/// operator `T = |𝒢|⁻¹ Σ_g (𝓤_g ℰ_g)⊗²`: `(Q⊗²|T^{m−1} P|ρ⊗²)`.
pub fn exact_mean_squares(
    noise: &NoiseModel,
    gateset: &GateSet,
    q: &CMatrix,
    rho: &CMatrix,
    ms: &[usize],
) -> Result<Vec<f64>, SimError> {
    noise.check(gateset)?;
    let basis = gateset.basis();
    let n = basis.len();
    let mut t = RMatrix::zeros(n * n, n * n);
    for g in 0..gateset.len() {
        let s = Superoperator::compose(&gateset.liouville()[g], noise.for_gate(g))?;
        t = t.try_add(&s.matrix().kron(s.matrix()))?;
    }
    let t = t.scale(1.0 / gateset.len() as f64);
    let p = twirl_projector_2copy(gateset);
    let qc = basis.real_coefficients(q);
    let rc = basis.real_coefficients(rho);
    let kron_vec = |c: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(c.len() * c.len());
        for x in c {
            for y in c {
                out.push(x * y);
            }
        }
        out
    };
    let q2 = kron_vec(&qc);
    let mut v = p.mul_vec(&kron_vec(&rc))?;
    let max_m = ms.iter().copied().max().unwrap_or(0);
    let mut values = vec![0.0; max_m + 1];
    for (m, slot) in values.iter_mut().enumerate().skip(1) {
        if m > 1 {
            v = t.mul_vec(&v)?;
        }
        *slot = dot(&q2, &v);
    }
    ms.iter()
        .map(|&m| {
            if m == 0 {
                Err(SimError::ZeroLength)
            } else {
                Ok(values[m])
            }
        })
        .collect()
}

/// Expected purity `Σ_k (Q_k⊗²|⋯|ρ⊗²)/(d−1)` over the observables of a
/// prepared configuration (SPAM included).
pub fn theoretical_purity_decay(
    config: &ProtocolConfig,
    ms: &[usize],
) -> Result<Vec<f64>, SimError> {
    config.validate()?;
    let basis = config.gateset.basis();
    let spam = config.spam.realize(
        basis,
        &config.initial_state,
        &config.observables,
        config.seed,
    )?;
    let mut acc = vec![0.0; ms.len()];
    for q in &spam.observables {
        let ys = exact_mean_squares(&config.noise, &config.gateset, q, &spam.rho, ms)?;
        for (a, y) in acc.iter_mut().zip(ys) {
            *a += y;
        }
    }
    let w = 1.0 / (config.gateset.dim() - 1) as f64;
    Ok(acc.into_iter().map(|x| x * w).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::clifford_1q;
    use crate::ensembles::{depolarizing, reset_channel};
    use crate::kernel::gates;

    fn identity_noise(g: &GateSet) -> NoiseModel {
        NoiseModel::Independent(Superoperator::identity(g.basis().clone()))
    }

    #[test]
    fn unbiased_square_values() {
        assert_eq!(unbiased_square(1.0, 150).unwrap(), 1.0);
        assert_eq!(unbiased_square(-1.0, 150).unwrap(), 1.0);
        assert!((unbiased_square(0.0, 150).unwrap() + 1.0 / 149.0).abs() < 1e-15);
        assert_eq!(unbiased_square(0.3, 1), Err(SimError::TooFewShots(1)));
    }

    #[test]
    fn shot_counts_reduce_to_two_outcome_estimator() {
        let c = ShotCounts {
            plus: 90,
            minus: 60,
            n: 150,
        };
        let two = unbiased_square(c.mean(), 150).unwrap();
        assert!((c.unbiased_square() - two).abs() < 1e-15);
    }

    #[test]
    fn simulate_shots_edges() {
        let s = RngStream::new(3);
        assert_eq!(simulate_shots(1.0, 150, &s).unwrap(), 1.0);
        assert_eq!(simulate_shots(-1.0, 10, &s).unwrap(), -1.0);
        assert!(simulate_shots(1.1, 10, &s).is_err());
        let a = simulate_shots(0.2, 100, &s).unwrap();
        assert_eq!(a, simulate_shots(0.2, 100, &s).unwrap());
    }

    #[test]
    fn sequences_are_deterministic_and_in_range() {
        let s = RngStream::keyed(1, &[purpose::SEQUENCE, 5, 0]);
        let a = sample_sequence(50, 24, &s);
        assert_eq!(a, sample_sequence(50, 24, &s));
        assert!(a.iter().all(|&i| i < 24));
        assert_eq!(sample_sequence(1, 24, &s).len(), 1);
    }

    #[test]
    fn ideal_expectation() {
        let g = clifford_1q();
        let id = g.index_of(&gates::pauli_i()).unwrap();
        let v = exact_expectation(
            &gates::pauli_z(),
            &[id],
            &ground_state(2),
            &identity_noise(&g),
            &g,
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn liouville_evolution_matches_density_matrices() {
        let g = clifford_1q();
        let noise = NoiseModel::independent(&reset_channel(0.2).unwrap(), g.basis()).unwrap();
        let mut cfg = ProtocolConfig::new(g.clone(), noise.clone(), 11);
        cfg.spam = SpamModel::none();
        let p = cfg.prepare().unwrap();
        let seq = p.sequence(7, 2);
        let out = p.evolve(&seq);
        for (k, q) in cfg.observables.iter().enumerate() {
            let direct = exact_expectation(q, &seq, &cfg.initial_state, &noise, &g).unwrap();
            assert!((direct - dot(&p.observable_coefficients()[k], &out)).abs() < 1e-13);
        }
    }

    #[test]
    fn identity_noise_gives_unit_purity() {
        let g = clifford_1q();
        let mut cfg = ProtocolConfig::new(g.clone(), identity_noise(&g), 2);
        cfg.spam = SpamModel::none();
        cfg.shots_per_observable = None;
        cfg.lengths = vec![1, 5, 20];
        cfg.sequences_per_length = 4;
        let ds = run_purity_protocol(&cfg).unwrap();
        for r in &ds.rows {
            assert!((r.mean - 1.0).abs() < 1e-12 && r.stderr < 1e-12);
        }
        assert_eq!(ds.raw.len(), 12);
    }

    #[test]
    fn maximally_mixed_state_has_zero_purity() {
        let g = clifford_1q();
        let mut cfg = ProtocolConfig::new(g.clone(), identity_noise(&g), 2);
        cfg.spam = SpamModel::none();
        cfg.shots_per_observable = None;
        cfg.initial_state = CMatrix::identity(2).scale_real(0.5);
        cfg.lengths = vec![3];
        let ds = run_purity_protocol(&cfg).unwrap();
        assert!(ds.rows[0].mean.abs() < 1e-15);
    }

    #[test]
    fn spam_effects_stay_valid() {
        let g = clifford_1q();
        let spam = SpamModel {
            prep_angle: 0.3,
            meas_angle: 0.3,
            meas_scale: (0.95, 1.0),
        };
        let obs = pauli_observables(g.basis());
        let r = spam.realize(g.basis(), &ground_state(2), &obs, 9).unwrap();
        assert!((r.rho.trace().re - 1.0).abs() < 1e-14);
        for q in &r.observables {
            assert!(q.is_hermitian(1e-12));
            let e = q.hermitian_eigensystem().unwrap().values;
            assert!(e.iter().all(|x| x.abs() <= 1.0 + 1e-10));
        }
        assert_ne!(r.observables[0], obs[0]);
    }

    #[test]
    fn brute_force_agrees_with_restriction_for_small_m() {
        let g = clifford_1q();
        let k = depolarizing(2, 0.2).unwrap();
        let s = k.to_liouville(g.basis()).unwrap();
        let noise = NoiseModel::Independent(s.clone());
        let q = gates::pauli_z();
        let rho = ground_state(2);
        let th = theoretical_decay(&s, &g, &q, &rho, &[1, 2]).unwrap();
        for (i, m) in [1usize, 2].into_iter().enumerate() {
            let b = brute_force_mean_squares(m, &q, &rho, &noise, &g).unwrap();
            assert!((b - th[i]).abs() < 1e-12, "m={m}: {b} vs {}", th[i]);
        }
        assert!(matches!(
            brute_force_mean_squares(4, &q, &rho, &noise, &g),
            Err(SimError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn two_copy_exact_matches_restriction() {
        let g = clifford_1q();
        let s = reset_channel(0.1).unwrap().to_liouville(g.basis()).unwrap();
        let ms: Vec<usize> = (1..=12).collect();
        let a = theoretical_decay(&s, &g, &gates::pauli_x(), &ground_state(2), &ms).unwrap();
        let b = exact_mean_squares(
            &NoiseModel::Independent(s),
            &g,
            &gates::pauli_x(),
            &ground_state(2),
            &ms,
        )
        .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn config_validation() {
        let g = clifford_1q();
        let mut cfg = ProtocolConfig::new(g.clone(), identity_noise(&g), 0);
        cfg.shots_per_observable = Some(1);
        assert_eq!(cfg.validate(), Err(SimError::TooFewShots(1)));
        cfg.shots_per_observable = Some(2);
        cfg.lengths = vec![0];
        assert_eq!(cfg.validate(), Err(SimError::ZeroLength));
        cfg.lengths = vec![1];
        cfg.noise = NoiseModel::GateDependent(vec![]);
        assert!(matches!(
            cfg.validate(),
            Err(SimError::NoiseGateCount { .. })
        ));
    }

    #[test]
    fn mean_and_stderr_values() {
        let (m, s) = mean_and_stderr(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_stderr(&[4.0]), (4.0, 0.0));
    }
}
