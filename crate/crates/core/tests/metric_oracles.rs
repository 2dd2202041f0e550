use unitarity_core::channel::pauli_basis_for_dim;
use unitarity_core::ensembles::{bruzda_channel, depolarizing, purpose, reset_channel, RngStream};
use unitarity_core::metrics::{
    average_infidelity, check_infidelity_chain, optimized_infidelity, survival_rate, unitarity,
};
use unitarity_core::oracles::{
    haar_monte_carlo_averages, qubit_optimized_infidelity, qubit_state_design_averages,
};
use unitarity_core::KrausChannel;

fn channels() -> Vec<KrausChannel> {
    let mut out = vec![depolarizing(2, 0.3).unwrap(), reset_channel(0.2).unwrap()];
    for i in 0..40u64 {
        let k = bruzda_channel(
            2,
            1 + (i as usize % 4),
            &RngStream::keyed(7, &[purpose::TEST, i]),
        )
        .unwrap();
        out.push(if i % 2 == 0 { k } else { k.scaled(0.6) });
    }
    out
}

#[test]
fn closed_forms_match_state_design_integrals() {
    let basis = pauli_basis_for_dim(2).unwrap();
    for k in channels() {
        let s = k.to_liouville(&basis).unwrap();
        let a = qubit_state_design_averages(&k);
        assert!((a.unitarity - unitarity(&s)).abs() < 1e-12);
        assert!((a.survival - survival_rate(&s)).abs() < 1e-12);
        if k.is_trace_preserving() {
            assert!((a.infidelity - average_infidelity(&s)).abs() < 1e-12);
        }
    }
}

#[test]
fn closed_forms_match_haar_monte_carlo_for_two_qubits() {
    let basis = pauli_basis_for_dim(4).unwrap();
    let k = bruzda_channel(4, 3, &RngStream::keyed(3, &[purpose::TEST])).unwrap();
    let s = k.to_liouville(&basis).unwrap();
    let a = haar_monte_carlo_averages(&k, 20_000, &RngStream::keyed(3, &[purpose::TEST, 1]));
    // Integrands are bounded by 1, so 20k samples give errors well under 0.02.
    assert!(
        (a.unitarity - unitarity(&s)).abs() < 0.02,
        "{} {}",
        a.unitarity,
        unitarity(&s)
    );
    assert!((a.infidelity - average_infidelity(&s)).abs() < 0.02);
}

#[test]
fn optimized_infidelity_matches_singular_value_form() {
    let basis = pauli_basis_for_dim(2).unwrap();
    for (i, k) in channels()
        .into_iter()
        .filter(|k| k.is_trace_preserving())
        .enumerate()
    {
        let s = k.to_liouville(&basis).unwrap();
        let nm = optimized_infidelity(&s, 20, &RngStream::keyed(11, &[i as u64])).unwrap();
        let exact = qubit_optimized_infidelity(&s);
        assert!((nm.upper - exact).abs() < 1e-8, "{} vs {exact}", nm.upper);
        assert!(nm.lower <= exact + 1e-12 && exact <= average_infidelity(&s) + 1e-12);
    }
}

#[test]
fn infidelity_chain_on_random_channels() {
    let basis = pauli_basis_for_dim(2).unwrap();
    for i in 0..100u64 {
        let k = bruzda_channel(
            2,
            1 + (i as usize % 4),
            &RngStream::keyed(9, &[purpose::TEST, i]),
        )
        .unwrap();
        let s = k.to_liouville(&basis).unwrap();
        let c = check_infidelity_chain(&s, 20, &RngStream::keyed(9, &[i])).unwrap();
        assert!(c.min_residual() > -1e-8, "{c:?}");
    }
}
