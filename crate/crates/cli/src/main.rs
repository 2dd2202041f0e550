use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use unitarity_core::ensembles::{purpose, RngStream};
use unitarity_core::fitmodel::{bootstrap_intervals, fit_with, FitModel, FitOptions};
use unitarity_core::metrics::channel_report;

use unitarity_cli::channel_spec::parse_channel;
use unitarity_cli::config::{parse_lengths, SimulateConfig};
use unitarity_cli::formats::{
    aggregate_csv, default_model, raw_csv, read_decay_csv, scan_csv, ChannelFile,
    ChannelReportJson, FitReportJson,
};
use unitarity_cli::manifest::ManifestBuilder;
use unitarity_cli::runner::{pool, run_protocol, Protocol};
use unitarity_cli::scan::{scan_ensemble, summarize};
use unitarity_cli::verify::{Level, Verifier};
use unitarity_cli::CliError;

#[derive(Parser)]
#[command(
    name = "unitarity",
    version,
    about = "Unitarity of quantum channels: metrics, benchmarking simulation and fitting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Purity,
    Loss,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Tp,
    Td,
    Loss,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelKind {
    Kraus,
    Liouville,
}

#[derive(Subcommand)]
enum Command {
    /// Report every metric of a channel as JSON.
    ChannelInfo {
        /// Channel specifier, e.g. `dep:0.1` or `compose:[reset:0.003,haar:42]`.
        spec: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Restarts for the optimized infidelity search.
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the channel itself to this JSON file.
        #[arg(long)]
        save_channel: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "kraus")]
        channel_kind: ChannelKind,
    },
    /// Simulate the purity or loss protocol and write CSVs plus a manifest.
    Simulate {
        /// JSON config; flags given explicitly override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        noise: Option<String>,
        /// Gate-dependent eigenphase perturbations of this half-width.
        #[arg(long)]
        gate_dependent: Option<f64>,
        #[arg(long, value_enum)]
        protocol: Option<ProtocolArg>,
        /// `a,b,c` or `start:stop:step`.
        #[arg(long)]
        lengths: Option<String>,
        #[arg(long)]
        sequences: Option<usize>,
        /// Shots per observable; 0 means exact expectations.
        #[arg(long)]
        shots: Option<usize>,
        #[arg(long, value_enum)]
        spam: Option<OnOff>,
        #[arg(long)]
        seed: Option<u64>,
        /// Gate set JSON file (default: single-qubit Cliffords).
        #[arg(long)]
        gateset: Option<PathBuf>,
        #[arg(long, env = "UNITARITY_WORKERS", default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit a decay model to an aggregate, loss or raw CSV.
    Fit {
        csv: PathBuf,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Percentile bootstrap resamples (needs raw records).
        #[arg(long, default_value_t = 0)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = FitOptions::default().max_iterations)]
        max_iterations: usize,
    },
    /// Sample random channels per Kraus rank and record their metrics.
    ScanEnsemble {
        #[arg(long, default_value = "1,2,3,4")]
        ranks: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, env = "UNITARITY_WORKERS", default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the verification suite.
    Verify {
        #[arg(long, value_enum, default_value = "quick")]
        level: LevelArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "UNITARITY_WORKERS", default_value_t = 0)]
        workers: usize,
        /// Multiplies every tolerance; used to exercise the failure path.
        #[arg(long, hide = true, default_value_t = 1.0)]
        tamper_tolerance: f64,
    },
}

fn emit(
    out: Option<&Path>,
    command: &str,
    config: serde_json::Value,
    seed: Option<u64>,
    text: &str,
) -> Result<(), CliError> {
    match out {
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .context("writing stdout")?;
        }
        Some(path) => {
            let mut b = ManifestBuilder::start(command, config, seed);
            b.write(path, text)?;
            let mut name = path.as_os_str().to_owned();
            name.push(".manifest.json");
            b.finish(Path::new(&name))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ChannelInfo {
            spec,
            out,
            restarts,
            seed,
            save_channel,
            channel_kind,
        } => {
            let k = parse_channel(&spec)?;
            let basis = unitarity_core::channel::pauli_basis_for_dim(k.dim())?;
            let s = k.to_liouville(&basis)?;
            let report =
                channel_report(&s, restarts, &RngStream::keyed(seed, &[purpose::RESTARTS]))?;
            let text = serde_json::to_string_pretty(&ChannelReportJson::from(&report))? + "\n";
            let config = serde_json::json!({ "spec": spec, "restarts": restarts });
            emit(
                out.as_deref(),
                "channel-info",
                config.clone(),
                Some(seed),
                &text,
            )?;
            if let Some(path) = save_channel {
                let f = match channel_kind {
                    ChannelKind::Kraus => ChannelFile::from_kraus(&k),
                    ChannelKind::Liouville => ChannelFile::from_liouville(&s),
                };
                let text = serde_json::to_string_pretty(&f)? + "\n";
                emit(Some(&path), "channel-info", config, Some(seed), &text)?;
            }
            Ok(())
        }
        Command::Simulate {
            config,
            noise,
            gate_dependent,
            protocol,
            lengths,
            sequences,
            shots,
            spam,
            seed,
            gateset,
            workers,
            out,
        } => {
            let mut c = match &config {
                Some(p) => SimulateConfig::from_json(
                    &std::fs::read_to_string(p)
                        .with_context(|| format!("reading {}", p.display()))?,
                )?,
                None => SimulateConfig::default(),
            };
            if let Some(v) = noise {
                c.noise = v;
            }
            if gate_dependent.is_some() {
                c.gate_dependent = gate_dependent;
            }
            if let Some(p) = protocol {
                c.protocol = match p {
                    ProtocolArg::Purity => Protocol::Purity,
                    ProtocolArg::Loss => Protocol::Loss,
                };
            }
            if let Some(l) = lengths {
                c.lengths = parse_lengths(&l)?;
            }
            if let Some(k) = sequences {
                c.sequences = k;
            }
            if let Some(n) = shots {
                c.shots = (n > 0).then_some(n);
            }
            if let Some(s) = spam {
                c.spam = matches!(s, OnOff::On);
            }
            if let Some(s) = seed {
                c.seed = s;
            }
            if gateset.is_some() {
                c.gateset = gateset;
            }
            let cfg = c.build()?;
            let data = run_protocol(&cfg, c.protocol, &pool(workers))?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut b = ManifestBuilder::start("simulate", serde_json::to_value(&c)?, Some(c.seed));
            match c.protocol {
                Protocol::Purity => {
                    b.write(&out.join("raw.csv"), &raw_csv(&data))?;
                    b.write(&out.join("aggregate.csv"), &aggregate_csv(&data, false))?;
                }
                Protocol::Loss => b.write(&out.join("loss.csv"), &aggregate_csv(&data, true))?,
            }
            b.finish(&out.join("manifest.json"))?;
            eprintln!(
                "wrote {} lengths x {} sequences to {}",
                cfg.lengths.len(),
                cfg.sequences_per_length,
                out.display()
            );
            Ok(())
        }
        Command::Fit {
            csv,
            model,
            out,
            bootstrap,
            seed,
            max_iterations,
        } => {
            let (data, kind) = read_decay_csv(&csv)?;
            let model = match model {
                Some(ModelArg::Tp) => FitModel::Tp,
                Some(ModelArg::Td) => FitModel::Td,
                Some(ModelArg::Loss) => FitModel::Loss,
                None => default_model(kind),
            };
            let opts = FitOptions {
                max_iterations,
                ..FitOptions::default()
            };
            let r = fit_with(model, &data, &opts)?;
            let boot = if bootstrap > 0 {
                Some(bootstrap_intervals(
                    r.model,
                    &data,
                    bootstrap,
                    &RngStream::keyed(seed, &[purpose::BOOTSTRAP]),
                )?)
            } else {
                None
            };
            let text =
                serde_json::to_string_pretty(&FitReportJson::new(&r, boot.as_deref()))? + "\n";
            let config = serde_json::json!({
                "csv": csv.display().to_string(),
                "model": model.name(),
                "bootstrap": bootstrap,
            });
            emit(out.as_deref(), "fit", config, Some(seed), &text)?;
            if r.converged {
                Ok(())
            } else {
                Err(CliError::NonConvergence(format!(
                    "{} iterations",
                    r.iterations
                )))
            }
        }
        Command::ScanEnsemble {
            ranks,
            samples,
            seed,
            dim,
            workers,
            out,
        } => {
            let ranks: Vec<usize> = ranks
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| anyhow!("bad rank `{t}`")))
                .collect::<Result<_, _>>()?;
            let rows = scan_ensemble(dim, &ranks, samples, seed, &pool(workers))?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let config = serde_json::json!({ "ranks": ranks, "samples": samples, "dim": dim });
            let mut b = ManifestBuilder::start("scan-ensemble", config, Some(seed));
            b.write(&out.join("scan.csv"), &scan_csv(&rows))?;
            b.finish(&out.join("manifest.json"))?;
            let sum = summarize(&rows);
            eprintln!("{}", serde_json::to_string(&sum)?);
            Ok(())
        }
        Command::Verify {
            level,
            out,
            workers,
            tamper_tolerance,
        } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let report = Verifier::new(workers)
                .with_tolerance_scale(tamper_tolerance)
                .run(level);
            for c in &report.criteria {
                eprintln!(
                    "criterion {:>2} {}  {} ({:.1} s)",
                    c.criterion,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.title,
                    c.seconds
                );
            }
            let text = serde_json::to_string_pretty(&report)? + "\n";
            let config = serde_json::json!({ "level": level });
            emit(out.as_deref(), "verify", config, None, &text)?;
            if report.passed {
                Ok(())
            } else {
                let failed: Vec<String> = report
                    .criteria
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.criterion.to_string())
                    .collect();
                Err(CliError::Verification(format!(
                    "criteria {}",
                    failed.join(", ")
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
