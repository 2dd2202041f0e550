use std::path::Path;
use std::process::{Command, Output};

use unitarity_cli::manifest::{verify_digests, RunManifest};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_unitarity"));
    c.env_remove("UNITARITY_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn channel_info_values() {
    let o = run(&["channel-info", "dep:0.1"]);
    assert!(o.status.success());
    let v = json(&o);
    assert!((v["unitarity"].as_f64().unwrap() - 0.81).abs() < 1e-12);
    assert!((v["infidelity"].as_f64().unwrap() - 0.05).abs() < 1e-12);
    let v = json(&run(&["channel-info", "reset:0.003"]));
    assert!((v["unitarity"].as_f64().unwrap() - 0.994009).abs() < 1e-12);
    let v = json(&run(&["channel-info", "haar:42"]));
    assert!((v["unitarity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    for key in [
        "d",
        "survival",
        "optimized_infidelity_upper",
        "lambda_plus",
        "lambda_minus",
        "norm_bound_residuals",
        "chain_residuals",
        "jamiolkowski_residual",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn bad_spec_is_a_usage_error_naming_the_token() {
    let o = run(&["channel-info", "compose:[dep:0.1,wobble:3]"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wobble"));
}

#[test]
fn saved_channel_reloads_identically() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["kraus", "liouville"] {
        let f = dir.path().join(format!("{kind}.json"));
        let a = run(&[
            "channel-info",
            "compose:[reset:0.01,bruzda:2:5]",
            "--save-channel",
            f.to_str().unwrap(),
            "--channel-kind",
            kind,
        ]);
        assert!(a.status.success());
        let b = run(&["channel-info", &format!("file:{}", f.display())]);
        assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
        let (va, vb) = (json(&a), json(&b));
        for key in ["unitarity", "survival", "infidelity", "lambda_minus"] {
            let (x, y) = (va[key].as_f64().unwrap(), vb[key].as_f64().unwrap());
            assert!((x - y).abs() < 1e-12, "{kind} {key}: {x} vs {y}");
        }
    }
}

fn simulate(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--out", dir.to_str().unwrap()];
    if !extra.contains(&"--lengths") {
        args.extend(["--lengths", "1,5,20"]);
    }
    if !extra.contains(&"--sequences") {
        args.extend(["--sequences", "6"]);
    }
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn simulate_is_deterministic_and_manifested() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(simulate(a.path(), &["--seed", "7"]).status.success());
    assert!(simulate(b.path(), &["--seed", "7", "--workers", "3"])
        .status
        .success());
    let ma: RunManifest = serde_json::from_str(&read(&a.path().join("manifest.json"))).unwrap();
    let mb: RunManifest = serde_json::from_str(&read(&b.path().join("manifest.json"))).unwrap();
    assert_eq!(ma.outputs, mb.outputs);
    assert_eq!(ma.outputs.len(), 2);
    assert_eq!(ma.seed, Some(7));
    assert!(verify_digests(&ma, a.path()).unwrap().is_empty());
    let raw = read(&a.path().join("raw.csv"));
    assert!(raw.starts_with("m,seq_index,purity_estimate\n"));
    assert_eq!(raw.lines().count(), 1 + 3 * 6);
    assert!(read(&a.path().join("aggregate.csv")).starts_with("m,mean_sq,stderr,K,N\n"));
    let c = tempfile::tempdir().unwrap();
    assert!(simulate(c.path(), &["--seed", "8"]).status.success());
    assert_ne!(read(&c.path().join("raw.csv")), raw);
}

#[test]
fn worker_count_from_environment() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(simulate(a.path(), &[]).status.success());
    let o = bin()
        .args([
            "simulate",
            "--lengths",
            "1,5,20",
            "--sequences",
            "6",
            "--out",
            b.path().to_str().unwrap(),
        ])
        .env("UNITARITY_WORKERS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(
        read(&a.path().join("raw.csv")),
        read(&b.path().join("raw.csv"))
    );
}

#[test]
fn simulate_config_file_and_invalid_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"noise": "scale:0.98:dep:0.02", "protocol": "loss", "lengths": [1, 10, 30], "sequences": 4}"#).unwrap();
    let out = dir.path().join("o");
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(&out.join("loss.csv")).starts_with("m,mean,stderr,K,N\n"));
    let f = run(&["fit", out.join("loss.csv").to_str().unwrap()]);
    assert!(f.status.success());
    assert_eq!(json(&f)["model"], "loss");

    std::fs::write(&cfg, r#"{"sequences": 0, "shots": 1}"#).unwrap();
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sequences") && err.contains("shots"), "{err}");
}

#[test]
fn fit_synthetic_tp_csv_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.csv");
    let mut text = String::from("m,mean_sq,stderr,K,N\n");
    for m in (1..=60).step_by(3) {
        let y = 0.2 + 0.7 * 0.97f64.powi(m - 1);
        text.push_str(&format!(
            "{m},{},0,30,150\n",
            unitarity_cli::formats::fmt_g17(y)
        ));
    }
    std::fs::write(&p, text).unwrap();
    let o = run(&["fit", p.to_str().unwrap(), "--model", "tp"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["model"], "tp");
    assert!(v["converged"].as_bool().unwrap());
    for (k, want) in [("A", 0.2), ("B", 0.7), ("u", 0.97)] {
        assert!(
            (v["params"][k].as_f64().unwrap() - want).abs() < 1e-8,
            "{k}"
        );
    }
    let o = run(&[
        "fit",
        p.to_str().unwrap(),
        "--model",
        "tp",
        "--max-iterations",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fit_schema_errors_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(
        &p,
        "m,mean_sq,stderr,K,N\n1,0.9,0.01,30,150\n4,0.8,oops,30,150\n",
    )
    .unwrap();
    let o = run(&["fit", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn td_fit_of_filter_noise_obeys_sum_rule() {
    use unitarity_core::design::clifford_1q;
    use unitarity_core::ensembles::depolarizing;
    use unitarity_core::metrics::{survival_rate, unitarity};
    use unitarity_core::rbsim::{ground_state, theoretical_decay};
    use unitarity_core::{CMatrix, KrausChannel};

    let g = clifford_1q();
    let filter = KrausChannel::new(vec![CMatrix::from_complex_rows(&[
        &[(1.0, 0.0), (0.0, 0.0)],
        &[(0.0, 0.0), (0.7f64.sqrt(), 0.0)],
    ])])
    .unwrap();
    let s = filter
        .then(&depolarizing(2, 0.05).unwrap())
        .unwrap()
        .to_liouville(g.basis())
        .unwrap();
    let ms: Vec<usize> = (1..=60).collect();
    let ys = theoretical_decay(
        &s,
        &g,
        &unitarity_core::kernel::gates::pauli_z(),
        &ground_state(2),
        &ms,
    )
    .unwrap();
    let mut text = String::from("m,mean_sq,stderr,K,N\n");
    for (m, y) in ms.iter().zip(&ys) {
        text.push_str(&format!(
            "{m},{},0,1,0\n",
            unitarity_cli::formats::fmt_g17(*y)
        ));
    }
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("td.csv");
    std::fs::write(&p, text).unwrap();
    let f = run(&["fit", p.to_str().unwrap(), "--model", "td"]);
    assert!(f.status.success());
    let fit = json(&f);
    let target = survival_rate(&s).powi(2) + unitarity(&s);
    let sum = fit["lambda_sum"].as_f64().expect("two-rate fit");
    assert!((sum - target).abs() < 1e-4, "{sum} vs {target}");
}

#[test]
fn fit_with_bootstrap_from_raw_records() {
    let dir = tempfile::tempdir().unwrap();
    assert!(simulate(
        dir.path(),
        &[
            "--lengths",
            "1:61:6",
            "--sequences",
            "10",
            "--noise",
            "dep:0.05"
        ]
    )
    .status
    .success());
    let o = run(&[
        "fit",
        dir.path().join("raw.csv").to_str().unwrap(),
        "--bootstrap",
        "50",
        "--seed",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let b = &v["bootstrap95"]["u"];
    assert!(b[0].as_f64().unwrap() <= b[1].as_f64().unwrap());
}

#[test]
fn scan_ensemble_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "scan-ensemble",
        "--ranks",
        "1,4",
        "--samples",
        "20",
        "--seed",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = read(&dir.path().join("scan.csv"));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rank,sample,unitarity,infidelity"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 40);
    assert!(rows
        .iter()
        .filter(|r| r[0] == 1.0)
        .all(|r| r[2] > 1.0 - 1e-8));
    let o = run(&[
        "scan-ensemble",
        "--ranks",
        "5",
        "--samples",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_quick_and_tampered() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = run(&["verify", "--level", "quick", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["criteria"][0]["checks"].as_array().unwrap().len() >= 3);
    let o = run(&["verify", "--level", "quick", "--tamper-tolerance", "0"]);
    assert_eq!(o.status.code(), Some(3));
}
