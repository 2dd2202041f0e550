use proptest::prelude::*;
use unitarity_core::channel::pauli_basis_for_dim;
use unitarity_core::design::{clifford_1q, probe_probabilities_explicit};
use unitarity_core::ensembles::{bruzda_channel, purpose, RngStream};
use unitarity_core::metrics::{
    check_jamiolkowski_identity, check_norm_bounds, decay_eigenvalues, m_matrix,
    probe_probabilities, survival_rate, unitarity,
};
use unitarity_core::{KrausChannel, Superoperator};

fn random_channel(seed: u64, rank: usize) -> KrausChannel {
    bruzda_channel(
        2,
        rank,
        &RngStream::keyed(seed, &[purpose::TEST, rank as u64]),
    )
    .unwrap()
}

/// Drops the last Kraus operator, leaving a trace-decreasing channel.
fn truncated(k: &KrausChannel) -> KrausChannel {
    let ops = k.ops();
    if ops.len() == 1 {
        return k.scaled(0.7);
    }
    KrausChannel::new(ops[..ops.len() - 1].to_vec()).unwrap()
}

fn channel_strategy() -> impl Strategy<Value = KrausChannel> {
    (any::<u64>(), 1usize..=4, 0.3f64..=1.0, any::<bool>()).prop_map(|(seed, rank, scale, drop)| {
        let k = random_channel(seed, rank.max(if drop { 2 } else { 1 }));
        let k = if drop { truncated(&k) } else { k };
        k.scaled(scale)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jamiolkowski_identity_holds(k in channel_strategy()) {
        let b = pauli_basis_for_dim(2).unwrap();
        let r = check_jamiolkowski_identity(&k, &b).unwrap();
        prop_assert!(r.residual < 1e-10, "{r:?}");
    }

    #[test]
    fn block_norm_bounds_hold(k in channel_strategy()) {
        let s = k.to_liouville(&pauli_basis_for_dim(2).unwrap()).unwrap();
        prop_assert!(check_norm_bounds(&s).min_residual() > -1e-12);
    }

    #[test]
    fn eigenvalue_sum_rule(k in channel_strategy()) {
        let s = k.to_liouville(&pauli_basis_for_dim(2).unwrap()).unwrap();
        let (lp, lm) = decay_eigenvalues(&m_matrix(&s)).unwrap();
        let sr = survival_rate(&s);
        prop_assert!((lp + lm - sr * sr - unitarity(&s)).abs() < 1e-12);
        prop_assert!(lm <= lp);
    }

    #[test]
    fn unitarity_and_probes_in_unit_interval(k in channel_strategy()) {
        let s = k.to_liouville(&pauli_basis_for_dim(2).unwrap()).unwrap();
        let u = unitarity(&s);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&u));
        let (a, b) = probe_probabilities(&s);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&a));
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&b));
    }

    #[test]
    fn liouville_composition_matches_kraus_composition(
        a in channel_strategy(),
        b in channel_strategy(),
    ) {
        let basis = pauli_basis_for_dim(2).unwrap();
        let la = a.to_liouville(&basis).unwrap();
        let lb = b.to_liouville(&basis).unwrap();
        let composed = a.then(&b).unwrap().to_liouville(&basis).unwrap();
        let product = Superoperator::compose(&lb, &la).unwrap();
        let diff = composed.matrix().try_sub(product.matrix()).unwrap().frobenius_norm();
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn block_decomposition_roundtrip(k in channel_strategy()) {
        let s = k.to_liouville(&pauli_basis_for_dim(2).unwrap()).unwrap();
        let back = s.block_decompose().reassemble();
        prop_assert!(back.try_sub(s.matrix()).unwrap().frobenius_norm() == 0.0);
    }

    #[test]
    fn choi_of_cptp_is_positive(seed in any::<u64>(), rank in 1usize..=4) {
        let k = random_channel(seed, rank);
        let rep = k.is_cptp();
        prop_assert!(rep.cp && rep.tp, "{rep:?}");
        let s = k.to_liouville(&pauli_basis_for_dim(2).unwrap()).unwrap();
        prop_assert_eq!(s.choi().rank(), rank);
    }
}

#[test]
fn probe_probabilities_match_explicit_contraction() {
    let g = clifford_1q();
    for i in 0..25u64 {
        let k = random_channel(1000 + i, 1 + (i as usize % 4));
        let k = if i % 2 == 0 { truncated(&k) } else { k };
        let s = k.to_liouville(g.basis()).unwrap();
        let (a, b) = probe_probabilities(&s);
        let (ea, eb) = probe_probabilities_explicit(&g, &s).unwrap();
        assert!(
            (a - ea).abs() < 1e-10 && (b - eb).abs() < 1e-10,
            "{a} {ea} {b} {eb}"
        );
    }
}

#[test]
fn averaged_operator_restriction_matches_block_norms() {
    let g = clifford_1q();
    for i in 0..100u64 {
        let k = random_channel(2000 + i, 1 + (i as usize % 4));
        let k = if i % 3 == 0 {
            truncated(&k).scaled(0.8)
        } else {
            k
        };
        let s = k.to_liouville(g.basis()).unwrap();
        let a = unitarity_core::design::averaged_operator(&g, &s).unwrap();
        assert!(a.restricted.max_abs_diff(&m_matrix(&s)) < 1e-10);
        // Support of 𝓜 is the invariant block.
        let p = unitarity_core::design::twirl_projector_2copy(&g);
        let pmp = &(&p * &a.full) * &p;
        assert!(pmp.try_sub(&a.full).unwrap().frobenius_norm() < 1e-10);
    }
}
