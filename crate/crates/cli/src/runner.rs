//! Parallel protocol execution. Work items are `(m, sequence index)` pairs
//! with their own RNG streams, so results do not depend on scheduling.

use rayon::prelude::*;
use unitarity_core::rbsim::{PreparedProtocol, ProtocolConfig, SimError};
use unitarity_core::DecayDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Purity,
    Loss,
}

impl Protocol {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "purity" => Some(Self::Purity),
            "loss" => Some(Self::Loss),
            _ => None,
        }
    }
}

/// A thread pool with `workers` threads; 0 means one per core.
pub fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
}

pub fn run_protocol(
    config: &ProtocolConfig,
    protocol: Protocol,
    pool: &rayon::ThreadPool,
) -> Result<DecayDataset, SimError> {
    let prepared = config.prepare()?;
    let k = config.sequences_per_length;
    let items: Vec<(usize, usize)> = config
        .lengths
        .iter()
        .flat_map(|&m| (0..k).map(move |i| (m, i)))
        .collect();
    let eval = |p: &PreparedProtocol, (m, i): (usize, usize)| match protocol {
        Protocol::Purity => p.sequence_purity(m, i),
        Protocol::Loss => p.sequence_survival(m, i),
    };
    let values: Vec<f64> =
        pool.install(|| items.par_iter().map(|&it| eval(&prepared, it)).collect());
    let per_length: Vec<(usize, Vec<f64>)> = config
        .lengths
        .iter()
        .zip(values.chunks(k))
        .map(|(&m, v)| (m, v.to_vec()))
        .collect();
    Ok(DecayDataset::from_values(
        &per_length,
        config.shots_per_observable.unwrap_or(0),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use unitarity_core::design::clifford_1q;
    use unitarity_core::ensembles::reset_channel;
    use unitarity_core::rbsim::{run_loss_protocol, run_purity_protocol, NoiseModel};

    #[test]
    fn parallel_matches_sequential() {
        let g = clifford_1q();
        let k = reset_channel(0.02).unwrap().scaled(0.99);
        let noise = NoiseModel::independent(&k, g.basis()).unwrap();
        let mut cfg = ProtocolConfig::new(g, noise, 9);
        cfg.lengths = vec![1, 3, 8, 20];
        cfg.sequences_per_length = 7;
        for workers in [1, 3] {
            let p = pool(workers);
            assert_eq!(
                run_protocol(&cfg, Protocol::Purity, &p).unwrap(),
                run_purity_protocol(&cfg).unwrap()
            );
            assert_eq!(
                run_protocol(&cfg, Protocol::Loss, &p).unwrap(),
                run_loss_protocol(&cfg).unwrap()
            );
        }
    }
}
