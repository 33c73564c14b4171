//! End-to-end checks of the `ncs` binary: determinism across runs and worker
//! counts, lossless JSON round trips, flag validation, and exit codes.

use std::path::PathBuf;
use std::process::Command;

fn ncs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ncs"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("ncs-cli-test-{}-{}", std::process::id(), name));
    p
}

#[test]
fn wigner_output_is_deterministic_across_worker_counts() {
    let out1 = tmp("det1.csv");
    let out2 = tmp("det2.csv");
    let args = |out: &PathBuf| {
        vec![
            "wigner".to_string(),
            "--eta2".into(),
            "0.1089".into(),
            "--deformation-order".into(),
            "2".into(),
            "--alpha-re".into(),
            "2.0".into(),
            "--order".into(),
            "2".into(),
            "--n-max".into(),
            "120".into(),
            "--grid-range".into(),
            "6".into(),
            "--grid-points".into(),
            "65".into(),
            "-o".into(),
            out.to_string_lossy().into_owned(),
        ]
    };
    let s1 = ncs().args(args(&out1)).env("NCS_THREADS", "1").status().unwrap();
    let s2 = ncs().args(args(&out2)).env("NCS_THREADS", "4").status().unwrap();
    assert!(s1.success() && s2.success());
    let b1 = std::fs::read(&out1).unwrap();
    let b2 = std::fs::read(&out2).unwrap();
    assert_eq!(b1, b2, "byte-identical output across worker counts");
    let text = String::from_utf8(b1).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "q,p,value");
    assert_eq!(text.lines().count(), 1 + 65 * 65);
    std::fs::remove_file(out1).ok();
    std::fs::remove_file(out2).ok();
}

#[test]
fn field_json_round_trip_is_bit_exact() {
    let out = tmp("roundtrip.json");
    let status = ncs()
        .args([
            "husimi",
            "--eta2",
            "0.1",
            "--alpha-re",
            "1.2",
            "--n-max",
            "80",
            "--grid-range",
            "5",
            "--grid-points",
            "33",
            "--format",
            "json",
            "-o",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let doc = ncs_cli::emit::parse_field_json(&text).unwrap();
    // re-serialize and parse again: values bit-for-bit
    let text2 = serde_json::to_string_pretty(&doc).unwrap();
    let doc2 = ncs_cli::emit::parse_field_json(&text2).unwrap();
    assert_eq!(doc.values.len(), 33 * 33);
    for (a, b) in doc.values.iter().zip(doc2.values.iter()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert!(doc.values.iter().all(|v| *v >= 0.0), "husimi nonnegative");
    std::fs::remove_file(out).ok();
}

#[test]
fn state_linear_limit_is_poissonian() {
    let out = tmp("state.json");
    let status = ncs()
        .args(["state", "--eta2", "0", "--alpha-re", "1", "--n-max", "64", "--format", "json", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let amps = doc["amplitudes"].as_array().unwrap();
    let mut log_fact = 0.0f64;
    for n in 0..=20usize {
        if n > 0 {
            log_fact += (n as f64).ln();
        }
        let expect = (-0.5 - 0.5 * log_fact).exp();
        let re = amps[n][0].as_f64().unwrap();
        assert!((re - expect).abs() < 1e-12, "n={n}: {re} vs {expect}");
    }
    std::fs::remove_file(out).ok();
}

#[test]
fn invalid_config_exits_2_before_compute() {
    let out = tmp("invalid.csv");
    let status = ncs()
        .args(["state", "--eta2", "0.1", "--order", "2", "--sector", "5", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists());

    let status = ncs()
        .args(["figure", "--preset", "nonsense", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn deformation_pole_exit_code() {
    // h_2 is undefined at n = 1, so a plain NCS against it hits the domain
    // error and maps to exit code 3
    let out = tmp("pole.csv");
    let status = ncs()
        .args([
            "deformation",
            "--eta2",
            "0.1",
            "--deformation-order",
            "2",
            "--n-max",
            "10",
            "-o",
        ])
        .arg(&out)
        .status()
        .unwrap();
    // h_2 starts at n = 2; the tabulation starts there and succeeds
    assert!(status.success());
    let status = ncs()
        .args(["state", "--eta2", "0.1", "--deformation-order", "2", "--alpha-re", "1", "--n-max", "40", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
    std::fs::remove_file(out).ok();
}

#[test]
fn divergent_state_exit_code() {
    // harmonious terms grow monotonically outside the unit disk, so the
    // truncation policy finds no admissible cut and reports divergence
    let out = tmp("divergent.csv");
    let status = ncs()
        .args(["state", "--family", "harmonious", "--alpha-re", "2.0", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
    std::fs::remove_file(out).ok();
}

#[test]
fn bad_threads_env_rejected() {
    let out = tmp("threads.csv");
    let status = ncs()
        .args(["u-function", "--x-max", "1", "--points", "3", "-o"])
        .arg(&out)
        .env("NCS_THREADS", "zero")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    std::fs::remove_file(out).ok();
}

#[test]
fn measure_json_reports_moment_identity() {
    let out = tmp("measure.json");
    let status = ncs()
        .args([
            "measure", "--eta2", "0.015", "--n-max", "50", "--format", "json", "-o",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(doc["max_diag_error"].as_f64().unwrap() <= 1e-9);
    assert_eq!(doc["coefficients"].as_array().unwrap().len(), 51);
    std::fs::remove_file(out).ok();
}

#[test]
fn figure_presets_all_emit() {
    for preset in ["fig3", "fig4c", "fig5"] {
        let out = tmp(&format!("{preset}.csv"));
        let status = ncs().args(["figure", "--preset", preset, "-o"]).arg(&out).status().unwrap();
        assert!(status.success(), "{preset}");
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.lines().count() > 100, "{preset} rows");
        std::fs::remove_file(out).ok();
    }
}
