use unitarity_core::channel::pauli_basis_for_dim;
use unitarity_core::design::clifford_1q;
use unitarity_core::ensembles::{
    bruzda_channel, eigenvalue_perturbed_gates, haar_unitary, purpose, reset_channel, RngStream,
};
use unitarity_core::fitmodel::fit_tp_decay;
use unitarity_core::kernel::gates;
use unitarity_core::metrics::{decay_eigenvalues, m_matrix, unitarity};
use unitarity_core::rbsim::{
    brute_force_mean_squares, exact_mean_squares, ground_state, run_purity_protocol,
    sample_sequence, simulate_shots, theoretical_decay, theoretical_purity_decay, unbiased_square,
    NoiseModel, ProtocolConfig, SpamModel,
};
use unitarity_core::{CMatrix, KrausChannel};

fn random_channel(i: u64, trace_decreasing: bool) -> KrausChannel {
    let rank = 1 + (i as usize % 4);
    let k = bruzda_channel(2, rank, &RngStream::keyed(21, &[purpose::TEST, i])).unwrap();
    if trace_decreasing {
        k.scaled(0.9)
    } else {
        k
    }
}

fn random_state(seed: u64) -> CMatrix {
    let u = haar_unitary(2, &RngStream::keyed(seed, &[purpose::TEST]));
    let mixed = &(&u * &ground_state(2)) * &u.adjoint();
    // Slightly mixed so both invariant projections are generic.
    mixed
        .scale_real(0.9)
        .try_add(&CMatrix::identity(2).scale_real(0.05))
        .unwrap()
}

#[test]
fn enumeration_matches_averaged_operator() {
    let g = clifford_1q();
    for i in 0..4u64 {
        let k = random_channel(i, i % 2 == 1);
        let s = k.to_liouville(g.basis()).unwrap();
        let noise = NoiseModel::Independent(s.clone());
        let q = gates::pauli_x()
            .scale_real(0.8)
            .try_add(&gates::pauli_z().scale_real(0.2))
            .unwrap();
        let rho = random_state(100 + i);
        let th = theoretical_decay(&s, &g, &q, &rho, &[1, 2, 3]).unwrap();
        for m in 1..=3usize {
            let b = brute_force_mean_squares(m, &q, &rho, &noise, &g).unwrap();
            assert!(
                (b - th[m - 1]).abs() < 1e-10,
                "channel {i} m={m}: {b} vs {}",
                th[m - 1]
            );
        }
    }
}

#[test]
fn gate_dependent_enumeration_matches_two_copy_operator() {
    let g = clifford_1q();
    let pert = eigenvalue_perturbed_gates(
        g.unitaries(),
        0.1,
        &RngStream::keyed(4, &[purpose::PERTURBATION]),
    )
    .unwrap()
    .after(&reset_channel(0.05).unwrap())
    .unwrap();
    let noise = NoiseModel::gate_dependent(&pert, g.basis()).unwrap();
    let rho = ground_state(2);
    let ex = exact_mean_squares(&noise, &g, &gates::pauli_z(), &rho, &[1, 2, 3]).unwrap();
    for m in 1..=3usize {
        let b = brute_force_mean_squares(m, &gates::pauli_z(), &rho, &noise, &g).unwrap();
        assert!((b - ex[m - 1]).abs() < 1e-12);
    }
}

#[test]
fn trace_preserving_decay_is_single_exponential() {
    let g = clifford_1q();
    let s = random_channel(3, false).to_liouville(g.basis()).unwrap();
    let ms: Vec<usize> = (1..=100).collect();
    let ys = theoretical_decay(&s, &g, &gates::pauli_z(), &ground_state(2), &ms).unwrap();
    let u = unitarity(&s);
    let b = (ys[0] - ys[1]) / (1.0 - u);
    let a = ys[0] - b;
    for (m, y) in ms.iter().zip(&ys) {
        assert!((a + b * u.powi(*m as i32 - 1) - y).abs() < 1e-10);
    }
}

#[test]
fn trace_decreasing_decay_is_two_exponential() {
    let g = clifford_1q();
    let s = random_channel(6, true).to_liouville(g.basis()).unwrap();
    let (lp, lm) = decay_eigenvalues(&m_matrix(&s)).unwrap();
    let ms: Vec<usize> = (1..=100).collect();
    let ys = theoretical_decay(&s, &g, &gates::pauli_y(), &random_state(8), &ms).unwrap();
    // Solve A + B = y₁, A λ₊ + B λ₋ = y₂.
    let b = (ys[1] - lp * ys[0]) / (lm - lp);
    let a = ys[0] - b;
    for (m, y) in ms.iter().zip(&ys) {
        let k = *m as i32 - 1;
        assert!((a * lp.powi(k) + b * lm.powi(k) - y).abs() < 1e-10);
    }
}

#[test]
fn sequence_indices_are_uniform() {
    let s = RngStream::keyed(5, &[purpose::SEQUENCE]);
    let draws = sample_sequence(100_000, 24, &s);
    let mut counts = [0f64; 24];
    for d in draws {
        counts[d] += 1.0;
    }
    let e = 100_000.0 / 24.0;
    let chi2: f64 = counts.iter().map(|c| (c - e) * (c - e) / e).sum();
    // 23 degrees of freedom: the 0.999 quantile is 49.7.
    assert!(chi2 < 49.7, "chi2 = {chi2}");
}

#[test]
fn shot_noise_statistics() {
    let reps = 10_000;
    let vals: Vec<f64> = (0..reps)
        .map(|i| simulate_shots(0.0, 150, &RngStream::keyed(6, &[purpose::SHOTS, i])).unwrap())
        .collect();
    let mean = vals.iter().sum::<f64>() / reps as f64;
    let sigma = (1.0 / 150.0 / reps as f64).sqrt();
    assert!(mean.abs() < 3.0 * sigma);
    let mu = 0.4;
    let vals: Vec<f64> = (0..reps)
        .map(|i| simulate_shots(mu, 150, &RngStream::keyed(7, &[purpose::SHOTS, i])).unwrap())
        .collect();
    let m = vals.iter().sum::<f64>() / reps as f64;
    let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (reps - 1) as f64;
    let expect = (1.0 - mu * mu) / 150.0;
    assert!((var / expect - 1.0).abs() < 0.05, "{var} vs {expect}");
}

#[test]
fn unbiased_square_is_unbiased() {
    let reps = 100_000u64;
    let mu = 0.6;
    let vals: Vec<f64> = (0..reps)
        .map(|i| {
            let x = simulate_shots(mu, 150, &RngStream::keyed(8, &[purpose::SHOTS, i])).unwrap();
            unbiased_square(x, 150).unwrap()
        })
        .collect();
    let m = vals.iter().sum::<f64>() / reps as f64;
    let sd = (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (reps - 1) as f64).sqrt();
    assert!((m - 0.36).abs() < 3.0 * sd / (reps as f64).sqrt());
}

fn fig2_config(noise: NoiseModel, seed: u64) -> ProtocolConfig {
    ProtocolConfig::new(clifford_1q(), noise, seed)
}

fn reset_with_unitary(p: f64, seed: u64) -> KrausChannel {
    let u =
        KrausChannel::unitary(haar_unitary(2, &RngStream::keyed(seed, &[purpose::HAAR]))).unwrap();
    reset_channel(p).unwrap().then(&u).unwrap()
}

#[test]
fn simulation_converges_to_theory() {
    let g = clifford_1q();
    let noise = NoiseModel::independent(&reset_with_unitary(0.01, 3), g.basis()).unwrap();
    let mut cfg = fig2_config(noise, 31);
    cfg.lengths = vec![1, 10, 40];
    cfg.sequences_per_length = 300;
    cfg.shots_per_observable = Some(10_000);
    let data = run_purity_protocol(&cfg).unwrap();
    let th = theoretical_purity_decay(&cfg, &cfg.lengths).unwrap();
    for (row, t) in data.rows.iter().zip(&th) {
        assert!(
            (row.mean - t).abs() < 3.0 * row.stderr,
            "m={} {} vs {t} ± {}",
            row.m,
            row.mean,
            row.stderr
        );
    }
}

#[test]
fn reset_noise_at_length_twenty_matches_theory() {
    let g = clifford_1q();
    let noise = NoiseModel::independent(&reset_channel(0.003).unwrap(), g.basis()).unwrap();
    let mut cfg = fig2_config(noise, 32);
    cfg.lengths = vec![20];
    let data = run_purity_protocol(&cfg).unwrap();
    let th = theoretical_purity_decay(&cfg, &[20]).unwrap()[0];
    let row = data.rows[0];
    assert!((row.mean - th).abs() < 3.0 * row.stderr);
}

#[test]
fn fitted_rate_is_insensitive_to_spam() {
    let g = clifford_1q();
    let noise = NoiseModel::independent(&reset_with_unitary(0.01, 5), g.basis()).unwrap();
    let mut a = fig2_config(noise.clone(), 40);
    a.spam = SpamModel {
        prep_angle: 0.1,
        meas_angle: 0.1,
        meas_scale: (0.9, 1.0),
    };
    let mut b = fig2_config(noise, 40);
    b.spam = SpamModel::none();
    let fa = fit_tp_decay(&run_purity_protocol(&a).unwrap()).unwrap();
    let fb = fit_tp_decay(&run_purity_protocol(&b).unwrap()).unwrap();
    assert!((fa.params[2] - fb.params[2]).abs() < fa.ci95[2] + fb.ci95[2]);
}

#[test]
fn gate_dependent_rotations_track_average_channel() {
    let g = clifford_1q();
    let pert = eigenvalue_perturbed_gates(
        g.unitaries(),
        0.01,
        &RngStream::keyed(41, &[purpose::PERTURBATION]),
    )
    .unwrap()
    .after(&reset_channel(0.003).unwrap())
    .unwrap();
    let noise = NoiseModel::gate_dependent(&pert, g.basis()).unwrap();
    let target = unitarity(&noise.average().unwrap());
    let cfg = fig2_config(noise, 41);
    let fit = fit_tp_decay(&run_purity_protocol(&cfg).unwrap()).unwrap();
    assert!(
        (fit.params[2] - target).abs() < 0.003,
        "{} vs {target}",
        fit.params[2]
    );
}

#[test]
fn datasets_are_reproducible() {
    let g = clifford_1q();
    let noise = NoiseModel::independent(&reset_channel(0.01).unwrap(), g.basis()).unwrap();
    let mut cfg = fig2_config(noise, 77);
    cfg.lengths = vec![1, 7, 30];
    let a = run_purity_protocol(&cfg).unwrap();
    let b = run_purity_protocol(&cfg).unwrap();
    assert_eq!(a, b);
    cfg.seed = 78;
    assert_ne!(a, run_purity_protocol(&cfg).unwrap());
}

#[test]
fn two_qubit_purity_is_one_without_noise() {
    let basis = pauli_basis_for_dim(4).unwrap();
    let h = gates::hadamard();
    let s = gates::phase_s();
    let id = CMatrix::identity(2);
    let gens = vec![h.kron(&id), id.kron(&h), s.kron(&id), id.kron(&s)];
    let set = unitarity_core::design::GateSet::new("local", gens).unwrap();
    let noise = NoiseModel::Independent(unitarity_core::Superoperator::identity(basis));
    let mut cfg = ProtocolConfig::new(set, noise, 1);
    cfg.spam = SpamModel::none();
    cfg.shots_per_observable = None;
    cfg.lengths = vec![1, 4];
    cfg.sequences_per_length = 3;
    for r in run_purity_protocol(&cfg).unwrap().rows {
        assert!((r.mean - 1.0).abs() < 1e-12);
    }
}
