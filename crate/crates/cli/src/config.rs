//! The `simulate` configuration: a JSON file, flags, or both (flags win).

use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use unitarity_core::design::{clifford_1q, GateSet};
use unitarity_core::ensembles::{eigenvalue_perturbed_gates, purpose, RngStream};
use unitarity_core::rbsim::{NoiseModel, ProtocolConfig, SpamModel};

use crate::channel_spec::parse_channel;
use crate::formats::read_gateset_file;
use crate::runner::Protocol;

/// Default noise: reset with p = 0.003 followed by a fixed Haar unitary.
pub const DEFAULT_NOISE: &str = "compose:[reset:0.003,haar:1]";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub noise: String,
    /// Eigenphase perturbation half-width for gate-dependent noise.
    pub gate_dependent: Option<f64>,
    pub protocol: Protocol,
    pub lengths: Vec<usize>,
    pub sequences: usize,
    /// Shots per observable; `null` gives exact expectations.
    pub shots: Option<usize>,
    pub spam: bool,
    pub seed: u64,
    pub gateset: Option<PathBuf>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            noise: DEFAULT_NOISE.into(),
            gate_dependent: None,
            protocol: Protocol::Purity,
            lengths: (1..=50).map(|k| 2 * k).collect(),
            sequences: 30,
            shots: Some(150),
            spam: true,
            seed: 1,
            gateset: None,
        }
    }
}

/// Parses `a,b,c` or `start:stop:step` (inclusive).
pub fn parse_lengths(s: &str) -> anyhow::Result<Vec<usize>> {
    let s = s.trim();
    let out: Vec<usize> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, step] = parts[..] else {
            bail!("length range `{s}` must be start:stop:step");
        };
        let (a, b, step): (usize, usize, usize) = (
            a.trim()
                .parse()
                .with_context(|| format!("bad length `{a}`"))?,
            b.trim()
                .parse()
                .with_context(|| format!("bad length `{b}`"))?,
            step.trim()
                .parse()
                .with_context(|| format!("bad step `{step}`"))?,
        );
        if step == 0 || a > b {
            bail!("empty length range `{s}`");
        }
        (a..=b).step_by(step).collect()
    } else {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .with_context(|| format!("bad length `{t}`"))
            })
            .collect::<Result<_, _>>()?
    };
    if out.is_empty() || out.contains(&0) {
        bail!("sequence lengths must be positive");
    }
    Ok(out)
}

impl SimulateConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        serde_json::from_str(text).context("invalid simulate config")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let mut problems = Vec::new();
        if self.lengths.is_empty() || self.lengths.contains(&0) {
            problems.push("lengths: must be non-empty and positive".to_string());
        }
        if self.sequences == 0 {
            problems.push("sequences: must be at least 1".to_string());
        }
        if matches!(self.shots, Some(n) if n < 2) {
            problems.push("shots: must be at least 2 (or null for exact)".to_string());
        }
        if let Some(d) = self.gate_dependent {
            if !(d.is_finite() && d >= 0.0) {
                problems.push("gate_dependent: must be a non-negative angle".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            bail!("invalid config fields:\n  {}", problems.join("\n  "))
        }
    }

    pub fn gateset(&self) -> anyhow::Result<GateSet> {
        match &self.gateset {
            None => Ok(clifford_1q()),
            Some(p) => Ok(read_gateset_file(p, true)?),
        }
    }

    pub fn build(&self) -> anyhow::Result<ProtocolConfig> {
        self.validate()?;
        let g = self.gateset()?;
        let base = parse_channel(&self.noise)?;
        if base.dim() != g.dim() {
            bail!(
                "noise acts on d = {} but the gate set has d = {}",
                base.dim(),
                g.dim()
            );
        }
        let noise = match self.gate_dependent {
            None => NoiseModel::independent(&base, g.basis())?,
            Some(delta) => {
                let pert = eigenvalue_perturbed_gates(
                    g.unitaries(),
                    delta,
                    &RngStream::keyed(self.seed, &[purpose::PERTURBATION]),
                )?
                .after(&base)?;
                NoiseModel::gate_dependent(&pert, g.basis())?
            }
        };
        let mut cfg = ProtocolConfig::new(g, noise, self.seed);
        cfg.lengths = self.lengths.clone();
        cfg.sequences_per_length = self.sequences;
        cfg.shots_per_observable = self.shots;
        if !self.spam {
            cfg.spam = SpamModel::none();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths_forms() {
        assert_eq!(parse_lengths("1,5, 9").unwrap(), vec![1, 5, 9]);
        assert_eq!(parse_lengths("2:10:4").unwrap(), vec![2, 6, 10]);
        assert!(parse_lengths("0,1").is_err());
        assert!(parse_lengths("5:1:1").is_err());
        assert!(parse_lengths("a").is_err());
    }

    #[test]
    fn defaults_are_fig2_setup() {
        let c = SimulateConfig::default();
        let p = c.build().unwrap();
        assert_eq!(p.sequences_per_length, 30);
        assert_eq!(p.shots_per_observable, Some(150));
        assert_eq!(p.lengths.first(), Some(&2));
        assert_eq!(p.lengths.last(), Some(&100));
        assert!(!p.spam.is_none());
    }

    #[test]
    fn json_partial_and_unknown_fields() {
        let c = SimulateConfig::from_json(r#"{"noise": "dep:0.1", "sequences": 5, "shots": null}"#)
            .unwrap();
        assert_eq!(c.sequences, 5);
        assert_eq!(c.shots, None);
        assert_eq!(c.seed, 1);
        assert!(SimulateConfig::from_json(r#"{"nosie": "dep:0.1"}"#).is_err());
    }

    #[test]
    fn invalid_fields_are_enumerated() {
        let c = SimulateConfig {
            sequences: 0,
            shots: Some(1),
            ..Default::default()
        };
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("sequences") && msg.contains("shots"), "{msg}");
    }
}
