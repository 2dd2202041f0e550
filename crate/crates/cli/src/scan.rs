//! Random-channel ensemble scans and their summary statistics.

use rayon::prelude::*;
use thiserror::Error;
use unitarity_core::channel::pauli_basis_for_dim;
use unitarity_core::ensembles::{bruzda_channel, purpose, RngStream};
use unitarity_core::metrics::{average_infidelity, unitarity};

use crate::formats::ScanRow;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("Kraus rank {rank} outside 1..={max} for d = {d}")]
    Rank { rank: usize, d: usize, max: usize },
    #[error("no ranks given")]
    NoRanks,
    #[error("{0}")]
    Core(String),
}

/// Samples `samples` Bruzda channels per rank. Sample `(rank, i)` uses the
/// stream `(seed, [BRUZDA, rank, i])`.
pub fn scan_ensemble(
    d: usize,
    ranks: &[usize],
    samples: usize,
    seed: u64,
    pool: &rayon::ThreadPool,
) -> Result<Vec<ScanRow>, ScanError> {
    if ranks.is_empty() {
        return Err(ScanError::NoRanks);
    }
    for &rank in ranks {
        if rank == 0 || rank > d * d {
            return Err(ScanError::Rank {
                rank,
                d,
                max: d * d,
            });
        }
    }
    let basis = pauli_basis_for_dim(d).map_err(|e| ScanError::Core(e.to_string()))?;
    let items: Vec<(usize, usize)> = ranks
        .iter()
        .flat_map(|&r| (0..samples).map(move |i| (r, i)))
        .collect();
    pool.install(|| {
        items
            .par_iter()
            .map(|&(rank, sample)| {
                let stream = RngStream::keyed(seed, &[purpose::BRUZDA, rank as u64, sample as u64]);
                let k =
                    bruzda_channel(d, rank, &stream).map_err(|e| ScanError::Core(e.to_string()))?;
                let s = k
                    .to_liouville(&basis)
                    .map_err(|e| ScanError::Core(e.to_string()))?;
                Ok(ScanRow {
                    rank,
                    sample,
                    unitarity: unitarity(&s),
                    infidelity: average_infidelity(&s),
                })
            })
            .collect()
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Ranks starting at 1, ties get their average rank.
fn ranks_of(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks_of(x), &ranks_of(y))
}

/// Root-mean-square residual of the least-squares quadratic `y ≈ a + b·x + c·x²`.
pub fn quadratic_residual_spread(x: &[f64], y: &[f64]) -> f64 {
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let row = [1.0, xi, xi * xi];
        for i in 0..3 {
            aty[i] += row[i] * yi;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let a = unitarity_core::RMatrix::from_fn(3, 3, |i, j| ata[i][j]);
    let Ok(c) = a.solve(&aty) else {
        return 0.0;
    };
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - (c[0] + c[1] * xi + c[2] * xi * xi);
            r * r
        })
        .sum();
    (ss / x.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScanSummary {
    /// `(rank, median unitarity)` in the order the ranks were given.
    pub median_unitarity: Vec<(usize, f64)>,
    /// Spearman correlation of unitarity with average infidelity.
    pub spearman: f64,
    /// RMS residual of unitarity about its best quadratic in the infidelity.
    pub residual_spread: f64,
}

pub fn summarize(rows: &[ScanRow]) -> ScanSummary {
    let mut ranks: Vec<usize> = rows.iter().map(|r| r.rank).collect();
    ranks.dedup();
    let median_unitarity = ranks
        .iter()
        .map(|&k| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.rank == k)
                .map(|r| r.unitarity)
                .collect();
            (k, median(&v))
        })
        .collect();
    let u: Vec<f64> = rows.iter().map(|r| r.unitarity).collect();
    let r: Vec<f64> = rows.iter().map(|r| r.infidelity).collect();
    ScanSummary {
        median_unitarity,
        spearman: spearman(&u, &r),
        residual_spread: quadratic_residual_spread(&r, &u),
    }
}
