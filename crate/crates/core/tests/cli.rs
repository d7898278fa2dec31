use std::path::Path;
use std::process::{Command, Output};

use qcloseness::experiment::{read_records, ResultRecord};

fn qclose(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qclose"))
        .args(args)
        .output()
        .expect("qclose runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = qclose(args);
    assert!(
        out.status.success(),
        "qclose {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn single_record(path: &Path) -> ResultRecord {
    let mut records = read_records(path).unwrap();
    assert_eq!(records.len(), 1);
    records.pop().unwrap()
}

fn strip_wall_time(line: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(line).unwrap();
    v.as_object_mut().unwrap().remove("wall_time_ms");
    v
}

#[test]
fn lemma_check_mode_reports_tiny_deviations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lemma.jsonl");
    run_ok(&["--mode", "lemma_check", "--n", "8", "--trials", "20", "--out", out.to_str().unwrap()]);
    let r = single_record(&out);
    assert_eq!(r.trials.len(), 20);
    assert!(r.trials.iter().all(|t| t.value <= 1e-10));
    assert_eq!(r.success_rate, Some(1.0));
}

#[test]
fn equality_on_identical_inputs_always_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eq.jsonl");
    let stdout = run_ok(&["--mode", "equality", "--n", "6", "--epsilon", "0.3", "--trials", "40", "--out", out.to_str().unwrap()]);
    assert!(stdout.contains("success_rate=1.0000"));
    let r = single_record(&out);
    assert_eq!(r.success_rate, Some(1.0));
    assert_eq!(r.threshold, Some(0.3 * 0.3 / 8.0));
    assert_eq!(Some(r.ledger_total), r.predicted_ledger_total);
}

#[test]
fn far_boundary_success_rate_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("far.jsonl");
    run_ok(&[
        "--mode", "l2", "--family", "bump_pair", "--n", "4", "--epsilon", "0.2", "--nu", "0.5",
        "--target-distance", "0.2", "--trials", "300", "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    let r = single_record(&out);
    assert_eq!(r.trials.len(), 300);
    assert_eq!(r.success_rate.unwrap(), r.successes as f64 / 300.0);
    assert!(r.success_rate.unwrap() >= 2.0 / 3.0);
    let inst = r.instance.unwrap();
    assert!((inst.l2_distance - 0.2).abs() < 1e-12);
    assert_eq!(inst.p, vec!["0.25"; 4]);
}

#[test]
fn runs_are_deterministic_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let args = |path: &Path| {
        vec![
            "--mode".to_string(), "l2".into(), "--family".into(), "bump_pair".into(),
            "--target-distance".into(), "0.12".into(), "--trials".into(), "50".into(),
            "--seed".into(), "99".into(), "--purification".into(), "permuted".into(),
            "--out".into(), path.to_str().unwrap().into(),
        ]
    };
    let a_args = args(&a);
    let b_args = args(&b);
    run_ok(&a_args.iter().map(String::as_str).collect::<Vec<_>>());
    run_ok(&b_args.iter().map(String::as_str).collect::<Vec<_>>());
    let la = std::fs::read_to_string(&a).unwrap();
    let lb = std::fs::read_to_string(&b).unwrap();
    let (mut va, mut vb) = (strip_wall_time(la.trim()), strip_wall_time(lb.trim()));
    va["config"].as_object_mut().unwrap().remove("out");
    vb["config"].as_object_mut().unwrap().remove("out");
    assert_eq!(va, vb);

    let r = single_record(&a);
    assert_eq!(ResultRecord::from_json_line(&r.to_json_line()).unwrap(), r);
    assert_eq!(r.to_json_line(), la.trim());
    let indices: Vec<u64> = r.trials.iter().map(|t| t.index).collect();
    assert_eq!(indices, (0..50).collect::<Vec<_>>());
}

#[test]
fn dist_files_and_append_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    let q = dir.path().join("q.json");
    std::fs::write(&p, r#"{"probabilities": ["0.5", "0.5"]}"#).unwrap();
    std::fs::write(&q, r#"{"probabilities": ["0.75", "0.25"]}"#).unwrap();
    let out = dir.path().join("sweep.jsonl");
    for eps in ["0.4", "0.2", "0.1", "0.05"] {
        run_ok(&[
            "--mode", "l2", "--dist-file", p.to_str().unwrap(), q.to_str().unwrap(), "--epsilon", eps,
            "--nu", "1", "--trials", "5", "--append", "--out", out.to_str().unwrap(),
        ]);
    }
    let records = read_records(&out).unwrap();
    assert_eq!(records.len(), 4);
    assert!((records[0].instance.as_ref().unwrap().delta_exact - 0.03125).abs() < 1e-15);
    let fit = run_ok(&["fit", "--x-axis", "inv_eps", out.to_str().unwrap()]);
    let slope: f64 = fit
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("slope="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((slope - 1.0).abs() < 0.05, "{fit}");
}

#[test]
fn classical_and_envelope_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.jsonl");
    run_ok(&[
        "--mode", "classical_l2", "--family", "bump_pair", "--epsilon", "0.2", "--samples-constant", "8",
        "--trials", "100", "--out", out.to_str().unwrap(),
    ]);
    let r = single_record(&out);
    assert_eq!(r.samples_total, 100 * 2 * 200);
    assert!(r.success_rate.unwrap() >= 2.0 / 3.0);

    let out = dir.path().join("e.jsonl");
    run_ok(&[
        "--mode", "qae_envelope", "--amplitude", "0.3", "--t", "64", "--repeats", "1", "--trials", "500",
        "--out", out.to_str().unwrap(),
    ]);
    let r = single_record(&out);
    assert!(r.success_rate.unwrap() >= 8.0 / (std::f64::consts::PI.powi(2)) - 0.05);
}

#[test]
fn toml_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "mode = \"equality\"\nn = 3\nepsilon = 0.5\ntrials = 7\n").unwrap();
    let out = dir.path().join("r.jsonl");
    run_ok(&["--config", cfg.to_str().unwrap(), "--trials", "9", "--out", out.to_str().unwrap()]);
    let r = single_record(&out);
    assert_eq!(r.trials.len(), 9);
    assert_eq!(r.config.n, 3);
}

#[test]
fn exit_codes() {
    let bad = qclose(&["--mode", "l2", "--epsilon", "1.5"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("epsilon"));

    let bad = qclose(&["--mode", "l2", "--repeats", "4"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("repeats"));

    let bad = qclose(&["--mode", "l2", "--family", "bump_pair", "--n", "2", "--target-distance", "0.9"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("target_distance"));

    let big = qclose(&["--mode", "l2", "--n", "200", "--trials", "1"]);
    assert_eq!(big.status.code(), Some(3));

    let dense = qclose(&["--mode", "l2", "--n", "4", "--backend", "dense", "--epsilon", "0.1", "--nu", "0.25"]);
    assert_eq!(dense.status.code(), Some(3));

    let unknown = qclose(&["--mode", "nonsense"]);
    assert_eq!(unknown.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    std::fs::write(&p, r#"{"probabilities": ["0.5", "0.6"]}"#).unwrap();
    let bad = qclose(&["--dist-file", p.to_str().unwrap(), p.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));

    let fit = qclose(&["fit", "--x-axis", "inv_eps", dir.path().join("missing.jsonl").to_str().unwrap()]);
    assert_eq!(fit.status.code(), Some(1));
}
