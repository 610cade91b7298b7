//! End-to-end checks of the `qhop` binary: exit codes, output files, and
//! byte-identical reruns.

use std::path::PathBuf;
use std::process::Command;

fn qhop() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qhop"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("qhop-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_tmp(name: &str, text: &str) -> PathBuf {
    let path = tmp(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn small_scan_runs_and_reruns_byte_identical() {
    let cfg = write_tmp("scan.json", r#"{"n": 8, "s_points": 3}"#);
    let out1 = tmp("scan1.csv");
    let out2 = tmp("scan2.csv");
    for out in [&out1, &out2] {
        let status = qhop()
            .args(["commutator-scan", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# {\"config_hash\""));
    assert!(text.contains("scenario,method,N,h,M,k,metric,value,walltime_s"));
}

#[test]
fn timings_flag_changes_output_but_not_values() {
    let cfg = write_tmp("scan-t.json", r#"{"n": 8, "s_points": 3}"#);
    let plain = tmp("scan-plain.csv");
    let timed = tmp("scan-timed.csv");
    assert!(qhop()
        .args(["commutator-scan", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&plain)
        .status()
        .unwrap()
        .success());
    assert!(qhop()
        .args(["commutator-scan", "--timings", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&timed)
        .status()
        .unwrap()
        .success());
    let strip = |path: &PathBuf| -> Vec<String> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip(&plain), strip(&timed));
}

#[test]
fn invalid_config_exits_2() {
    let cfg = write_tmp("bad.json", r#"{"methods": ["rk4"]}"#);
    let status = qhop()
        .args(["converge-h", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let cfg = write_tmp("unparsable.json", "{nope");
    let status = qhop()
        .args(["scale-n", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn non_convergence_exits_3() {
    // A reference tolerance at the composition roundoff floor cannot be
    // met within the halving budget.
    let cfg = write_tmp(
        "noconv.json",
        r#"{"instances": 1, "seed": 2, "n": 8, "h": [0.125], "reference_tolerance": 1e-15}"#,
    );
    let status = qhop()
        .args(["bound-check", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn estimate_emits_one_json_record_per_method() {
    let out = tmp("est.jsonl");
    let status = qhop()
        .args(["estimate", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7);
    for line in lines {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["method"].is_string());
        assert!(v["segments"].as_u64().unwrap() >= 1);
    }
}

#[test]
fn converge_h_small_run_writes_csv_to_stdout() {
    let cfg = write_tmp(
        "conv.json",
        r#"{"n": 8, "h": [0.125], "methods": ["qhop"],
            "quadrature": {"rule": "midpoint", "m": 4}}"#,
    );
    let output = qhop()
        .args(["converge-h", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert_eq!(text.lines().count(), 3); // header json, column line, one row
    assert!(text.contains("schrodinger,qhop,8,"));
}

#[test]
fn seed_flag_reaches_the_config_hash() {
    let cfg = write_tmp("seeded.json", r#"{"n": 8, "s_points": 3}"#);
    let grab = |seed: &str| -> String {
        let output = qhop()
            .args(["commutator-scan", "--seed", seed, "--config"])
            .arg(&cfg)
            .output()
            .unwrap();
        String::from_utf8(output.stdout)
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_ne!(grab("1"), grab("2"));
}
