//! One test per acceptance criterion. Each prints a single PASS/FAIL line
//! followed by the individual checks.

use std::sync::OnceLock;

use unitarity_cli::verify::Verifier;

fn verifier() -> &'static Verifier {
    static V: OnceLock<Verifier> = OnceLock::new();
    V.get_or_init(|| Verifier::new(0))
}

fn criterion(n: u32, budget_seconds: f64) {
    let r = verifier().criterion(n);
    let within = r.seconds <= budget_seconds;
    println!(
        "criterion {n:>2}: {}  {} ({:.1} s, budget {budget_seconds} s)",
        if r.passed && within { "PASS" } else { "FAIL" },
        r.title,
        r.seconds
    );
    for c in &r.checks {
        println!(
            "    [{}] {}: value {:.3e}, bound {:.3e} {}",
            if c.passed { "ok" } else { "FAILED" },
            c.name,
            c.value,
            c.bound,
            c.detail
        );
    }
    assert!(r.passed, "criterion {n} failed");
    assert!(within, "criterion {n} exceeded its runtime budget");
}

#[test]
fn criterion_01_oracle_equivalence() {
    criterion(1, 120.0);
}

#[test]
fn criterion_02_functional_form() {
    criterion(2, 10.0);
}

#[test]
fn criterion_03_reset_noise_reproduction() {
    criterion(3, 300.0);
}

#[test]
fn criterion_04_unitary_noise_flat_curves() {
    criterion(4, 120.0);
}

#[test]
fn criterion_05_random_channel_properties() {
    criterion(5, 120.0);
}

#[test]
fn criterion_06_infidelity_chain() {
    criterion(6, 300.0);
}

#[test]
fn criterion_07_non_monotone_composition() {
    criterion(7, 1.0);
}

#[test]
fn criterion_08_two_design() {
    criterion(8, 60.0);
}

#[test]
fn criterion_09_ensemble_scan() {
    criterion(9, 120.0);
}

#[test]
fn criterion_10_unbiased_estimator() {
    criterion(10, 60.0);
}

#[test]
fn criterion_11_loss_and_variance() {
    criterion(11, 120.0);
}
