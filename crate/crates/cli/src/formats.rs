//! JSON and CSV file formats.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unitarity_core::channel::pauli_basis_for_dim;
use unitarity_core::design::GateSet;
use unitarity_core::fitmodel::{FitModel, FitResult};
use unitarity_core::metrics::ChannelReport;
use unitarity_core::rbsim::{DecayDataset, DecayRow, RawRecord};
use unitarity_core::{CMatrix, KrausChannel, RMatrix, Superoperator};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

/// `%.17g`-style formatting: 17 significant digits, trailing zeros trimmed.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 {
            "0".to_string()
        } else {
            format!("{x}")
        };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.16e}");
        let (mant, e) = s.split_once('e').expect("exponent form");
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{e}")
    }
}

fn read_text(path: &Path) -> Result<String, FormatError> {
    let mut s = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|source| FormatError::Io {
            path: path.display().to_string(),
            source,
        })?;
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|source| FormatError::Io {
            path: path.display().to_string(),
            source,
        })
}

// ---------------------------------------------------------------- channels

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelFile {
    Kraus {
        d: usize,
        ops: Vec<Vec<Vec<[f64; 2]>>>,
    },
    Liouville {
        d: usize,
        basis: String,
        matrix: Vec<Vec<f64>>,
    },
}

fn matrix_to_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

fn pairs_to_matrix(rows: &[Vec<[f64; 2]>], d: usize) -> Result<CMatrix, FormatError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(FormatError::Invalid(format!("operator is not {d}x{d}")));
    }
    Ok(CMatrix::from_fn(d, d, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

impl ChannelFile {
    pub fn from_kraus(k: &KrausChannel) -> Self {
        Self::Kraus {
            d: k.dim(),
            ops: k.ops().iter().map(matrix_to_pairs).collect(),
        }
    }

    pub fn from_liouville(s: &Superoperator) -> Self {
        let m = s.matrix();
        Self::Liouville {
            d: s.dim(),
            basis: "pauli".into(),
            matrix: (0..m.rows()).map(|i| m.row(i).to_vec()).collect(),
        }
    }

    pub fn to_kraus(&self) -> Result<KrausChannel, FormatError> {
        match self {
            Self::Kraus { d, ops } => {
                let mats = ops
                    .iter()
                    .map(|o| pairs_to_matrix(o, *d))
                    .collect::<Result<Vec<_>, _>>()?;
                KrausChannel::new(mats).map_err(|e| FormatError::Invalid(e.to_string()))
            }
            Self::Liouville { .. } => self
                .to_liouville()?
                .to_kraus()
                .map_err(|e| FormatError::Invalid(e.to_string())),
        }
    }

    pub fn to_liouville(&self) -> Result<Superoperator, FormatError> {
        match self {
            Self::Kraus { d, .. } => {
                let basis =
                    pauli_basis_for_dim(*d).map_err(|e| FormatError::Invalid(e.to_string()))?;
                self.to_kraus()?
                    .to_liouville(&basis)
                    .map_err(|e| FormatError::Invalid(e.to_string()))
            }
            Self::Liouville { d, basis, matrix } => {
                if basis != "pauli" {
                    return Err(FormatError::Invalid(format!("unsupported basis `{basis}`")));
                }
                let b = pauli_basis_for_dim(*d).map_err(|e| FormatError::Invalid(e.to_string()))?;
                let n = d * d;
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(FormatError::Invalid(format!(
                        "Liouville matrix is not {n}x{n}"
                    )));
                }
                let m = RMatrix::from_fn(n, n, |i, j| matrix[i][j]);
                Superoperator::from_matrix(b, m).map_err(|e| FormatError::Invalid(e.to_string()))
            }
        }
    }
}

pub fn read_channel_file(path: &Path) -> Result<KrausChannel, FormatError> {
    let text = read_text(path)?;
    let f: ChannelFile = serde_json::from_str(&text).map_err(|source| FormatError::Json {
        path: path.display().to_string(),
        source,
    })?;
    f.to_kraus()
}

// ---------------------------------------------------------------- gate sets

/// A gate-set file: a JSON list of d×d matrices of `[re, im]` pairs.
pub fn read_gateset_file(path: &Path, check_design: bool) -> Result<GateSet, FormatError> {
    let text = read_text(path)?;
    let raw: Vec<Vec<Vec<[f64; 2]>>> =
        serde_json::from_str(&text).map_err(|source| FormatError::Json {
            path: path.display().to_string(),
            source,
        })?;
    let d = raw.first().map_or(0, |m| m.len());
    let mats = raw
        .iter()
        .map(|m| pairs_to_matrix(m, d))
        .collect::<Result<Vec<_>, _>>()?;
    let label = path
        .file_stem()
        .map_or("file".into(), |s| s.to_string_lossy().into_owned());
    let g = GateSet::new(label, mats).map_err(|e| FormatError::Invalid(e.to_string()))?;
    if check_design {
        let f = unitarity_core::design::frame_potential_2(&g);
        if (f - 2.0).abs() > 1e-10 {
            return Err(FormatError::Invalid(format!(
                "gate set is not a unitary 2-design (frame potential {f})"
            )));
        }
    }
    Ok(g)
}

pub fn gateset_to_json(g: &GateSet) -> String {
    let raw: Vec<_> = g.unitaries().iter().map(matrix_to_pairs).collect();
    serde_json::to_string_pretty(&raw).expect("serializable")
}

// ---------------------------------------------------------------- reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReportJson {
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

impl From<&ChannelReport> for ChannelReportJson {
    fn from(r: &ChannelReport) -> Self {
        Self {
            d: r.d,
            unitarity: r.unitarity,
            survival: r.survival,
            infidelity: r.infidelity,
            optimized_infidelity_upper: r.optimized_infidelity_upper,
            lambda_plus: r.lambda_plus,
            lambda_minus: r.lambda_minus,
            norm_bound_residuals: r.norm_bound_residuals.clone(),
            chain_residuals: r.chain_residuals,
            jamiolkowski_residual: r.jamiolkowski_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReportJson {
    pub model: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    /// Half-widths; `null` when the covariance is singular.
    pub ci95: serde_json::Map<String, serde_json::Value>,
    pub rms_residual: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_sum: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bootstrap95: Option<serde_json::Map<String, serde_json::Value>>,
}

fn num(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

impl FitReportJson {
    pub fn new(r: &FitResult, bootstrap: Option<&[(f64, f64)]>) -> Self {
        let names = r.model.param_names();
        let map = |v: &[f64]| -> serde_json::Map<String, serde_json::Value> {
            names
                .iter()
                .zip(v)
                .map(|(n, x)| (n.to_string(), num(*x)))
                .collect()
        };
        Self {
            model: r.model.name().into(),
            params: map(&r.params),
            ci95: map(&r.ci95),
            rms_residual: r.rms_residual,
            converged: r.converged,
            iterations: r.iterations,
            lambda_sum: r.lambda_sum,
            warnings: r.warnings.iter().map(|w| format!("{w:?}")).collect(),
            bootstrap95: bootstrap.map(|b| {
                names
                    .iter()
                    .zip(b)
                    .map(|(n, (lo, hi))| (n.to_string(), serde_json::json!([num(*lo), num(*hi)])))
                    .collect()
            }),
        }
    }
}

// ---------------------------------------------------------------- CSV

pub const RAW_HEADER: [&str; 3] = ["m", "seq_index", "purity_estimate"];
pub const AGGREGATE_HEADER: [&str; 5] = ["m", "mean_sq", "stderr", "K", "N"];
pub const LOSS_HEADER: [&str; 5] = ["m", "mean", "stderr", "K", "N"];
pub const SCAN_HEADER: [&str; 4] = ["rank", "sample", "unitarity", "infidelity"];

fn csv_string(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn raw_csv(data: &DecayDataset) -> String {
    csv_string(
        &RAW_HEADER,
        data.raw
            .iter()
            .map(|r| vec![r.m.to_string(), r.seq_index.to_string(), fmt_g17(r.value)]),
    )
}

/// Aggregate CSV; `loss` selects the `mean` column name.
pub fn aggregate_csv(data: &DecayDataset, loss: bool) -> String {
    let header = if loss {
        &LOSS_HEADER
    } else {
        &AGGREGATE_HEADER
    };
    csv_string(
        header,
        data.rows.iter().map(|r| {
            vec![
                r.m.to_string(),
                fmt_g17(r.mean),
                fmt_g17(r.stderr),
                r.k.to_string(),
                r.n.to_string(),
            ]
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub rank: usize,
    pub sample: usize,
    pub unitarity: f64,
    pub infidelity: f64,
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    csv_string(
        &SCAN_HEADER,
        rows.iter().map(|r| {
            vec![
                r.rank.to_string(),
                r.sample.to_string(),
                fmt_g17(r.unitarity),
                fmt_g17(r.infidelity),
            ]
        }),
    )
}

/// What kind of decay CSV was read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayCsvKind {
    Aggregate,
    Loss,
    Raw,
}

/// Reads an aggregate, loss or raw CSV. Raw files are aggregated per length.
pub fn read_decay_csv(path: &Path) -> Result<(DecayDataset, DecayCsvKind), FormatError> {
    let text = read_text(path)?;
    parse_decay_csv(&text, &path.display().to_string())
}

pub fn parse_decay_csv(
    text: &str,
    name: &str,
) -> Result<(DecayDataset, DecayCsvKind), FormatError> {
    let err = |line: u64, message: String| FormatError::Csv {
        path: name.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let kind = if header == AGGREGATE_HEADER {
        DecayCsvKind::Aggregate
    } else if header == LOSS_HEADER {
        DecayCsvKind::Loss
    } else if header == RAW_HEADER {
        DecayCsvKind::Raw
    } else {
        return Err(err(1, format!("unexpected header `{}`", header.join(","))));
    };
    let mut rows = Vec::new();
    let mut raw: Vec<RawRecord> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| err(line, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(err(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let int = |k: usize| -> Result<usize, FormatError> {
            rec[k]
                .parse()
                .map_err(|_| err(line, format!("`{}` is not a non-negative integer", &rec[k])))
        };
        let float = |k: usize| -> Result<f64, FormatError> {
            let v: f64 = rec[k]
                .parse()
                .map_err(|_| err(line, format!("`{}` is not a number", &rec[k])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(line, format!("`{}` is not finite", &rec[k])))
            }
        };
        let m = int(0)?;
        if m == 0 {
            return Err(err(line, "sequence length must be at least 1".into()));
        }
        match kind {
            DecayCsvKind::Raw => raw.push(RawRecord {
                m,
                seq_index: int(1)?,
                value: float(2)?,
            }),
            _ => {
                let stderr = float(2)?;
                if stderr < 0.0 {
                    return Err(err(line, "stderr must be non-negative".into()));
                }
                rows.push(DecayRow {
                    m,
                    mean: float(1)?,
                    stderr,
                    k: int(3)?,
                    n: int(4)?,
                })
            }
        }
    }
    let data = match kind {
        DecayCsvKind::Raw => {
            let mut lengths: Vec<usize> = raw.iter().map(|r| r.m).collect();
            lengths.sort_unstable();
            lengths.dedup();
            let per: Vec<(usize, Vec<f64>)> = lengths
                .iter()
                .map(|&m| {
                    let mut recs: Vec<&RawRecord> = raw.iter().filter(|r| r.m == m).collect();
                    recs.sort_by_key(|r| r.seq_index);
                    (m, recs.iter().map(|r| r.value).collect())
                })
                .collect();
            DecayDataset::from_values(&per, 0)
        }
        _ => DecayDataset { rows, raw },
    };
    Ok((data, kind))
}

pub fn default_model(kind: DecayCsvKind) -> FitModel {
    match kind {
        DecayCsvKind::Loss => FitModel::Loss,
        _ => FitModel::Tp,
    }
}
