//! Unitarity of quantum noise channels.
//!
//! This crate holds the numerical core: small dense complex linear algebra,
//! channel representations (Kraus, Liouville, Choi), the coherence metrics
//! built on them, random channel ensembles, unitary 2-design machinery, a
//! Monte Carlo simulator of the purity-benchmarking protocol and the decay
//! fits used to read the unitarity back out of simulated data.
//!
//! The crate is `no_std` with `alloc` when the default `std` feature is
//! disabled. File formats, parallel drivers and the command-line front end
//! live in the companion `unitarity-cli` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod channel;
pub mod design;
pub mod ensembles;
pub mod fitmodel;
pub mod kernel;
pub mod metrics;
pub mod optimize;
pub mod oracles;
pub mod rbsim;
pub mod tol;

pub(crate) mod fmath;

pub use channel::{
    BlockDecomposition, ChannelError, ChoiState, CptpReport, KrausChannel, OperatorBasis,
    Superoperator,
};
pub use design::GateSet;
pub use ensembles::{GateDependentNoise, RngStream};
pub use fitmodel::{FitModel, FitResult};
pub use kernel::{CMatrix, KernelError, RMatrix};
pub use metrics::MMatrix;
pub use rbsim::{DecayDataset, NoiseModel, ProtocolConfig, SpamModel};
