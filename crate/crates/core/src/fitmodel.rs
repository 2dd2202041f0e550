//! Weighted nonlinear least squares for the decay models.
//!
//! * `tp`:   `y = A + B·u^{m−1}`
//! * `td`:   `y = A·λ₊^{m−1} + B·λ₋^{m−1}`
//! * `loss`: `y = C·S^{m−1}`
//!
//! The optimizer is Levenberg–Marquardt on transformed parameters that keep
//! the rates in range (`u` and `λ₊/λ₋` through logistic maps, `S` through an
//! exponential). Confidence intervals come from the linearized covariance in
//! the natural parameters, scaled by the reduced χ².

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::ensembles::RngStream;
use crate::fmath;
use crate::kernel::RMatrix;
use crate::rbsim::{mean_and_stderr, DecayDataset, RawRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitModel {
    Tp,
    Td,
    Loss,
}

impl FitModel {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Tp => "tp",
            Self::Td => "td",
            Self::Loss => "loss",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tp" => Some(Self::Tp),
            "td" => Some(Self::Td),
            "loss" => Some(Self::Loss),
            _ => None,
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Self::Tp => &["A", "B", "u"],
            Self::Td => &["A", "B", "lambda_plus", "lambda_minus"],
            Self::Loss => &["C", "S"],
        }
    }

    fn min_lengths(&self) -> usize {
        match self {
            Self::Td => 5,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("{model} fit needs at least {needed} distinct lengths, got {found}")]
    TooFewLengths {
        model: &'static str,
        needed: usize,
        found: usize,
    },
    #[error("lengths and values differ in size ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite value in the data")]
    NonFinite,
    #[error("no raw per-sequence records to resample")]
    NoRawRecords,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitWarning {
    /// λ₊ ≈ λ₋ or the two-exponential fit was ill-conditioned; the result is
    /// the single-exponential fit.
    FellBackToTp,
    /// Parameter covariance is singular; intervals are infinite.
    SingularCovariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<f64>,
    pub covariance: RMatrix,
    pub ci95: Vec<f64>,
    pub rms_residual: f64,
    pub converged: bool,
    pub iterations: usize,
    /// λ₊ + λ₋ for the two-exponential model.
    pub lambda_sum: Option<f64>,
    pub warnings: Vec<FitWarning>,
    /// Weighted cost after every accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.model
            .param_names()
            .iter()
            .position(|n| *n == name)
            .map(|i| self.params[i])
    }

    pub fn ci(&self, name: &str) -> Option<f64> {
        self.model
            .param_names()
            .iter()
            .position(|n| *n == name)
            .map(|i| self.ci95[i])
    }

    /// The decay rate: `u`, `λ₊`, or `S`.
    pub fn rate(&self) -> f64 {
        match self.model {
            FitModel::Tp => self.params[2],
            FitModel::Td => self.params[2],
            FitModel::Loss => self.params[1],
        }
    }

    pub fn rate_ci(&self) -> f64 {
        match self.model {
            FitModel::Tp | FitModel::Td => self.ci95[2],
            FitModel::Loss => self.ci95[1],
        }
    }
}

/// Optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative cost change and relative step size below which to stop.
    pub tolerance: f64,
    /// |λ₊ − λ₋| below which the two-exponential model counts as degenerate.
    pub degeneracy_gap: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-12,
            degeneracy_gap: 1e-4,
        }
    }
}

/// z-value for a two-sided 95% interval.
pub const Z95: f64 = 1.959963984540054;

const LAMBDA_CAP: f64 = 1.0 + 1e-9;

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + fmath::exp(-x))
    } else {
        let e = fmath::exp(x);
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    fmath::ln(p / (1.0 - p))
}

fn pow_k(x: f64, k: u32) -> f64 {
    fmath::powi(x, k)
}

/// `k·x^{k−1}` with the `k = 0` case equal to zero.
fn dpow_k(x: f64, k: u32) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * fmath::powi(x, k - 1)
    }
}

fn natural(model: FitModel, t: &[f64]) -> Vec<f64> {
    match model {
        FitModel::Tp => vec![t[0], t[1], logistic(t[2])],
        FitModel::Td => {
            let lp = LAMBDA_CAP * logistic(t[2]);
            vec![t[0], t[1], lp, lp * logistic(t[3])]
        }
        FitModel::Loss => vec![t[0], fmath::exp(t[1])],
    }
}

fn transformed(model: FitModel, p: &[f64]) -> Vec<f64> {
    match model {
        FitModel::Tp => vec![p[0], p[1], logit(p[2])],
        FitModel::Td => {
            let lp = p[2].clamp(1e-12, LAMBDA_CAP);
            let ratio = if lp > 0.0 { p[3] / lp } else { 0.5 };
            vec![p[0], p[1], logit(lp / LAMBDA_CAP), logit(ratio)]
        }
        FitModel::Loss => vec![p[0], fmath::ln(p[1].max(1e-300))],
    }
}

/// Model value and gradient with respect to the natural parameters.
fn eval(model: FitModel, p: &[f64], k: u32) -> (f64, Vec<f64>) {
    match model {
        FitModel::Tp => {
            let uk = pow_k(p[2], k);
            (p[0] + p[1] * uk, vec![1.0, uk, p[1] * dpow_k(p[2], k)])
        }
        FitModel::Td => {
            let a = pow_k(p[2], k);
            let b = pow_k(p[3], k);
            (
                p[0] * a + p[1] * b,
                vec![a, b, p[0] * dpow_k(p[2], k), p[1] * dpow_k(p[3], k)],
            )
        }
        FitModel::Loss => {
            let sk = pow_k(p[1], k);
            (p[0] * sk, vec![sk, p[0] * dpow_k(p[1], k)])
        }
    }
}

/// `∂natural/∂transformed` as a row-major p×p matrix.
fn chain(model: FitModel, t: &[f64]) -> RMatrix {
    let n = t.len();
    let mut c = RMatrix::identity(n);
    match model {
        FitModel::Tp => {
            let u = logistic(t[2]);
            c[(2, 2)] = u * (1.0 - u);
        }
        FitModel::Td => {
            let sa = logistic(t[2]);
            let sb = logistic(t[3]);
            let dlp = LAMBDA_CAP * sa * (1.0 - sa);
            let lp = LAMBDA_CAP * sa;
            c[(2, 2)] = dlp;
            c[(3, 2)] = sb * dlp;
            c[(3, 3)] = lp * sb * (1.0 - sb);
        }
        FitModel::Loss => {
            c[(1, 1)] = fmath::exp(t[1]);
        }
    }
    c
}

struct Problem<'a> {
    model: FitModel,
    ks: Vec<u32>,
    ys: &'a [f64],
    sw: Vec<f64>,
}

impl Problem<'_> {
    fn cost_nat(&self, p: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.ys.len() {
            let r = self.sw[i] * (eval(self.model, p, self.ks[i]).0 - self.ys[i]);
            acc += r * r;
        }
        acc
    }

    /// Weighted residuals and their Jacobian in natural parameters.
    fn residuals_nat(&self, p: &[f64]) -> (Vec<f64>, RMatrix) {
        let n = self.ys.len();
        let np = p.len();
        let mut r = vec![0.0; n];
        let mut j = RMatrix::zeros(n, np);
        for i in 0..n {
            let (f, g) = eval(self.model, p, self.ks[i]);
            r[i] = self.sw[i] * (f - self.ys[i]);
            for c in 0..np {
                j[(i, c)] = self.sw[i] * g[c];
            }
        }
        (r, j)
    }

    /// Best (A, B) [or C] for fixed rates, by linear least squares.
    fn linear_solve(&self, rates: &[f64]) -> Option<Vec<f64>> {
        let basis = |k: u32| -> Vec<f64> {
            match self.model {
                FitModel::Tp => vec![1.0, pow_k(rates[0], k)],
                FitModel::Td => vec![pow_k(rates[0], k), pow_k(rates[1], k)],
                FitModel::Loss => vec![pow_k(rates[0], k)],
            }
        };
        let q = match self.model {
            FitModel::Loss => 1,
            _ => 2,
        };
        let mut ata = RMatrix::zeros(q, q);
        let mut atb = vec![0.0; q];
        for i in 0..self.ys.len() {
            let b = basis(self.ks[i]);
            let w = self.sw[i] * self.sw[i];
            for r in 0..q {
                atb[r] += w * b[r] * self.ys[i];
                for c in 0..q {
                    ata[(r, c)] += w * b[r] * b[c];
                }
            }
        }
        ata.solve(&atb).ok()
    }

    fn with_rates(&self, rates: &[f64]) -> Option<Vec<f64>> {
        let lin = self.linear_solve(rates)?;
        Some(match self.model {
            FitModel::Tp => vec![lin[0], lin[1], rates[0]],
            FitModel::Td => vec![lin[0], lin[1], rates[0], rates[1]],
            FitModel::Loss => vec![lin[0], rates[0]],
        })
    }
}

struct LmOutcome {
    t: Vec<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    fmath::sqrt(v.iter().map(|x| x * x).sum())
}

fn levenberg_marquardt(prob: &Problem<'_>, t0: Vec<f64>, opts: &FitOptions) -> LmOutcome {
    let np = t0.len();
    let mut t = t0;
    let mut p = natural(prob.model, &t);
    let mut cost = prob.cost_nat(&p);
    let mut history = vec![cost];
    let mut damping = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let (r, jn) = prob.residuals_nat(&p);
        let j = &jn * &chain(prob.model, &t);
        let jt = j.transpose();
        let h = &jt * &j;
        let g = jt.mul_vec(&r).expect("shapes agree");
        let hmax = (0..np).fold(0.0f64, |m, i| m.max(h[(i, i)]));
        let mut accepted = false;
        while damping < 1e20 {
            let mut a = h.clone();
            for i in 0..np {
                a[(i, i)] += damping * h[(i, i)].max(1e-12 * hmax).max(1e-300);
            }
            let neg_g: Vec<f64> = g.iter().map(|x| -x).collect();
            let step = match a.solve(&neg_g) {
                Ok(s) => s,
                Err(_) => {
                    damping *= 4.0;
                    continue;
                }
            };
            let tn: Vec<f64> = t.iter().zip(&step).map(|(a, b)| a + b).collect();
            let pn = natural(prob.model, &tn);
            let cn = prob.cost_nat(&pn);
            let small_step = norm(&step) <= opts.tolerance * (norm(&t) + opts.tolerance);
            if cn.is_finite() && cn <= cost {
                let rel = (cost - cn) / cost.max(f64::MIN_POSITIVE);
                t = tn;
                p = pn;
                cost = cn;
                history.push(cost);
                damping = (damping / 3.0).max(1e-15);
                accepted = true;
                if rel < opts.tolerance || small_step {
                    converged = true;
                }
                break;
            }
            if small_step {
                converged = true;
                break;
            }
            damping *= 4.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // Damping exhausted without progress: a stationary point.
            converged = true;
            break;
        }
    }
    LmOutcome {
        t,
        cost,
        iterations,
        converged,
        history,
    }
}

fn log_linear_rate(ks: &[u32], ys: &[f64], offset: f64) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(ys)
        .filter_map(|(&k, &y)| {
            let v = (y - offset).abs();
            (v > 1e-300).then(|| (k as f64, fmath::ln(v)))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((fmath::exp(slope), fmath::exp(my - slope * mx)))
}

const RATE_GRID: [f64; 14] = [
    0.05, 0.2, 0.4, 0.6, 0.75, 0.85, 0.9, 0.95, 0.97, 0.98, 0.99, 0.995, 0.998, 0.9995,
];

fn initial_guesses(prob: &Problem<'_>, ms_sorted: &[(u32, f64)]) -> Vec<Vec<f64>> {
    let n = ms_sorted.len();
    let tail = (n / 10).max(1);
    let a0 = ms_sorted[n - tail..].iter().map(|p| p.1).sum::<f64>() / tail as f64;
    let y0 = ms_sorted[0].1;
    let ks: Vec<u32> = ms_sorted.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = ms_sorted.iter().map(|p| p.1).collect();
    let mut out = Vec::new();
    match prob.model {
        FitModel::Tp => {
            let u0 = log_linear_rate(&ks[..n - tail], &ys[..n - tail], a0)
                .map_or(0.9, |(r, _)| r)
                .clamp(1e-3, 1.0 - 1e-6);
            out.push(vec![a0, y0 - a0, u0]);
            for &u in &RATE_GRID {
                if let Some(p) = prob.with_rates(&[u]) {
                    out.push(p);
                }
            }
        }
        FitModel::Td => {
            for &lp in RATE_GRID.iter().chain([1.0].iter()) {
                for &ratio in &[0.05, 0.3, 0.6, 0.85, 0.95, 0.99] {
                    if let Some(p) = prob.with_rates(&[lp, lp * ratio]) {
                        out.push(p);
                    }
                }
            }
        }
        FitModel::Loss => {
            if let Some((s, c)) = log_linear_rate(&ks, &ys, 0.0) {
                out.push(vec![c, s.max(1e-6)]);
            }
            for &s in &RATE_GRID {
                if let Some(p) = prob.with_rates(&[s]) {
                    out.push(p);
                }
            }
        }
    }
    out.retain(|p| p.iter().all(|x| x.is_finite()));
    out
}

/// Weighted covariance `s²·(JᵀWJ)⁻¹` with `s²` the reduced χ².
fn covariance(prob: &Problem<'_>, p: &[f64], cost: f64) -> Option<RMatrix> {
    let (_, j) = prob.residuals_nat(p);
    let h = &j.transpose() * &j;
    let np = p.len();
    let scale: Vec<f64> = (0..np).map(|i| fmath::sqrt(h[(i, i)])).collect();
    if scale.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return None;
    }
    let corr = RMatrix::from_fn(np, np, |i, k| h[(i, k)] / (scale[i] * scale[k]));
    let (vals, _) = corr.symmetric_eigensystem().ok()?;
    let lo = vals.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let hi = vals.iter().fold(0.0f64, |m, &v| m.max(v));
    if lo <= hi * 1e-14 {
        return None;
    }
    let inv = corr.inverse().ok()?;
    let dof = prob.ys.len().saturating_sub(np).max(1) as f64;
    let s2 = cost / dof;
    Some(RMatrix::from_fn(np, np, |i, k| {
        s2 * inv[(i, k)] / (scale[i] * scale[k])
    }))
}

fn prepare<'a>(
    model: FitModel,
    ms: &[usize],
    ys: &'a [f64],
    stderr: Option<&[f64]>,
) -> Result<Problem<'a>, FitError> {
    if ms.len() != ys.len() {
        return Err(FitError::LengthMismatch(ms.len(), ys.len()));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let mut distinct: Vec<usize> = ms.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < model.min_lengths() {
        return Err(FitError::TooFewLengths {
            model: model.name(),
            needed: model.min_lengths(),
            found: distinct.len(),
        });
    }
    let sw = match stderr {
        Some(s) if s.len() == ys.len() && s.iter().all(|&e| e > 0.0 && e.is_finite()) => {
            s.iter().map(|e| 1.0 / e).collect()
        }
        _ => vec![1.0; ys.len()],
    };
    Ok(Problem {
        model,
        ks: ms.iter().map(|&m| m.saturating_sub(1) as u32).collect(),
        ys,
        sw,
    })
}

fn fit_raw(
    model: FitModel,
    ms: &[usize],
    ys: &[f64],
    stderr: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    let prob = prepare(model, ms, ys, stderr)?;
    let mut sorted: Vec<(u32, f64)> = prob.ks.iter().copied().zip(ys.iter().copied()).collect();
    sorted.sort_by_key(|a| a.0);
    let mut guesses = initial_guesses(&prob, &sorted);
    // Start LM from the data-driven guess and the best few grid starts.
    guesses.sort_by(|a, b| prob.cost_nat(a).total_cmp(&prob.cost_nat(b)));
    guesses.truncate(4);
    let mut best: Option<LmOutcome> = None;
    for g in guesses {
        let out = levenberg_marquardt(&prob, transformed(model, &g), opts);
        if best.as_ref().is_none_or(|b| out.cost < b.cost) {
            best = Some(out);
        }
    }
    let best = best.ok_or(FitError::NonFinite)?;
    let params = natural(model, &best.t);
    let mut warnings = Vec::new();
    let np = params.len();
    let (cov, ci95) = match covariance(&prob, &params, best.cost) {
        Some(c) => {
            let ci = (0..np)
                .map(|i| Z95 * fmath::sqrt(c[(i, i)].max(0.0)))
                .collect();
            (c, ci)
        }
        None => {
            warnings.push(FitWarning::SingularCovariance);
            (
                RMatrix::from_fn(np, np, |_, _| f64::INFINITY),
                vec![f64::INFINITY; np],
            )
        }
    };
    // Unweighted root-mean-square residual.
    let rms = fmath::sqrt(
        ms.iter()
            .zip(ys)
            .map(|(&m, &y)| {
                let r = eval(model, &params, m.saturating_sub(1) as u32).0 - y;
                r * r
            })
            .sum::<f64>()
            / ys.len() as f64,
    );
    Ok(FitResult {
        model,
        lambda_sum: (model == FitModel::Td).then(|| params[2] + params[3]),
        params,
        covariance: cov,
        ci95,
        rms_residual: rms,
        converged: best.converged,
        iterations: best.iterations,
        warnings,
        cost_history: best.history,
    })
}

/// Fits `A + B·u^{m−1}`, weighting by `1/stderr²` when every stderr is positive.
pub fn fit_tp_curve(
    ms: &[usize],
    ys: &[f64],
    stderr: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    fit_raw(FitModel::Tp, ms, ys, stderr, opts)
}

/// Fits `A·λ₊^{m−1} + B·λ₋^{m−1}`, falling back to the single-exponential
/// model when the two rates cannot be separated.
pub fn fit_td_curve(
    ms: &[usize],
    ys: &[f64],
    stderr: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    let td = fit_raw(FitModel::Td, ms, ys, stderr, opts)?;
    let gap = td.params[2] - td.params[3];
    let degenerate =
        gap.abs() < opts.degeneracy_gap || td.warnings.contains(&FitWarning::SingularCovariance);
    if !degenerate {
        return Ok(td);
    }
    let mut tp = fit_raw(FitModel::Tp, ms, ys, stderr, opts)?;
    tp.warnings.push(FitWarning::FellBackToTp);
    Ok(tp)
}

/// Fits `C·S^{m−1}`.
pub fn fit_loss_curve(
    ms: &[usize],
    ys: &[f64],
    stderr: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    fit_raw(FitModel::Loss, ms, ys, stderr, opts)
}

fn split(data: &DecayDataset) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    (data.lengths(), data.means(), data.stderrs())
}

pub fn fit_tp_decay(data: &DecayDataset) -> Result<FitResult, FitError> {
    let (m, y, s) = split(data);
    fit_tp_curve(&m, &y, Some(&s), &FitOptions::default())
}

pub fn fit_td_decay(data: &DecayDataset) -> Result<FitResult, FitError> {
    let (m, y, s) = split(data);
    fit_td_curve(&m, &y, Some(&s), &FitOptions::default())
}

pub fn loss_fit(data: &DecayDataset) -> Result<FitResult, FitError> {
    let (m, y, s) = split(data);
    fit_loss_curve(&m, &y, Some(&s), &FitOptions::default())
}

pub fn fit(model: FitModel, data: &DecayDataset) -> Result<FitResult, FitError> {
    fit_with(model, data, &FitOptions::default())
}

pub fn fit_with(
    model: FitModel,
    data: &DecayDataset,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    let (m, y, s) = split(data);
    match model {
        FitModel::Tp => fit_tp_curve(&m, &y, Some(&s), opts),
        FitModel::Td => fit_td_curve(&m, &y, Some(&s), opts),
        FitModel::Loss => fit_loss_curve(&m, &y, Some(&s), opts),
    }
}

/// Percentile bootstrap: sequences are resampled with replacement within
/// each length, the per-length means refitted, and the 2.5%/97.5%
/// quantiles of each parameter reported.
pub fn bootstrap_intervals(
    model: FitModel,
    data: &DecayDataset,
    resamples: usize,
    stream: &RngStream,
) -> Result<Vec<(f64, f64)>, FitError> {
    if data.raw.is_empty() {
        return Err(FitError::NoRawRecords);
    }
    let lengths = data.lengths();
    let groups: Vec<Vec<f64>> = lengths
        .iter()
        .map(|&m| {
            data.raw
                .iter()
                .filter(|r: &&RawRecord| r.m == m)
                .map(|r| r.value)
                .collect()
        })
        .collect();
    let mut rng = stream.rng();
    let np = model.param_names().len();
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(resamples); np];
    for _ in 0..resamples {
        let mut ys = Vec::with_capacity(lengths.len());
        let mut es = Vec::with_capacity(lengths.len());
        for g in &groups {
            let pick: Vec<f64> = (0..g.len())
                .map(|_| g[rng.random_range(0..g.len())])
                .collect();
            let (m, e) = mean_and_stderr(&pick);
            ys.push(m);
            es.push(e);
        }
        let r = fit_raw(model, &lengths, &ys, Some(&es), &FitOptions::default())?;
        for (i, v) in r.params.iter().enumerate() {
            samples[i].push(*v);
        }
    }
    Ok(samples
        .into_iter()
        .map(|mut s| {
            s.sort_by(f64::total_cmp);
            let q = |f: f64| s[((f * (s.len() - 1) as f64) + 0.5) as usize];
            (q(0.025), q(0.975))
        })
        .collect())
}
