//! Numerical tolerances shared across the crate.

/// Structural checks: hermiticity, unitarity, trace preservation, PSD.
pub const STRUCTURAL: f64 = 1e-10;

/// Equality assertions between two routes to the same number.
pub const EQUALITY: f64 = 1e-12;

/// Largest imaginary residue accepted when a Liouville entry is stored as real.
pub const IMAG_RESIDUE: f64 = 1e-12;

/// Eigenvalues below this are treated as zero when counting Kraus rank.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Frobenius distance under which two phase-canonical unitaries are the same gate.
pub const GATE_DEDUP: f64 = 1e-8;
