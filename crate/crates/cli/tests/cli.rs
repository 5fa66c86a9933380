use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn tempo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempo"))
        .args(args)
        .env_remove("TEMPO_SEED")
        .output()
        .expect("binary runs")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON object")
}

fn scores(csv: &str) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn missing_input_is_an_io_error() {
    let out = tempo(&["--input", "/definitely/not/here.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["code"], "IO");
}

#[test]
fn no_source_is_an_io_error() {
    let out = tempo(&["--method", "katz"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["code"], "IO");
}

#[test]
fn malformed_rows_are_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "1,1,x,1.0\n").unwrap();
    let out = tempo(&["--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["code"], "PARSE");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = tempo(&["--no-such-flag"]);
    assert_eq!(out.status.code(), Some(64));
    assert_eq!(stderr_json(&out)["code"], "USAGE");
}

#[test]
fn inadmissible_t_is_a_parameter_error() {
    let out = tempo(&[
        "--input",
        fixture("three_frames.csv").to_str().unwrap(),
        "--method",
        "nbt",
        "--t",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(stderr_json(&out)["code"], "PARAMETER");
}

#[test]
fn too_few_trials_are_rejected() {
    let out = tempo(&["--bench", "size", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["code"], "VALIDATION");
}

#[test]
fn oracle_check_finds_no_discrepancy() {
    let out = tempo(&[
        "--generate",
        "dense:n=3,N=2,seed=5",
        "--method",
        "oracle-check",
        "--k-max",
        "6",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["k_max"], 6);
    assert_eq!(report["exact_arithmetic"], true);
    assert_eq!(report["max_discrepancy"], 0.0);
}

#[test]
fn katz_matches_product_of_resolvents() {
    let t = 0.2;
    let out = tempo(&[
        "--input",
        fixture("three_frames.csv").to_str().unwrap(),
        "--method",
        "katz",
        "--t",
        "0.2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let got = scores(&String::from_utf8(out.stdout).unwrap());

    let frames = [
        DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0]),
        DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.0, 1.0, 0.0, 0.0, 1.5, 0.0, 0.0]),
        DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0]),
    ];
    let mut q = DMatrix::<f64>::identity(3, 3);
    for a in &frames {
        q *= (DMatrix::identity(3, 3) - a * t).try_inverse().unwrap();
    }
    let expect = q * DVector::from_element(3, 1.0);
    for (g, e) in got.iter().zip(expect.iter()) {
        assert!((g - e).abs() <= 1e-12 * e, "{g} vs {e}");
    }
}

#[test]
fn window_selects_frames() {
    let input = fixture("three_frames.csv");
    let input = input.to_str().unwrap();
    let out = tempo(&[
        "--input", input, "--method", "katz", "--t", "0.2", "--window", "3:3",
    ]);
    let got = scores(&String::from_utf8(out.stdout).unwrap());
    // Frame 3 alone: 1 -> 3 -> 2 plus the walks inside it.
    let a = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0]);
    let expect = (DMatrix::<f64>::identity(3, 3) - a * 0.2)
        .try_inverse()
        .unwrap()
        * DVector::from_element(3, 1.0);
    for (g, e) in got.iter().zip(expect.iter()) {
        assert!((g - e).abs() <= 1e-12 * e);
    }
    let bad = tempo(&["--input", input, "--window", "2:9"]);
    assert_eq!(bad.status.code(), Some(5));
    assert_eq!(stderr_json(&bad)["code"], "INDEX");
}

#[test]
fn update_agrees_with_full_solve() {
    let spec = "sparse:n=60,N=5,seed=11,weights=uniform";
    let full = tempo(&["--generate", spec, "--method", "nbt"]);
    let update = tempo(&[
        "--generate",
        spec,
        "--method",
        "nbt-update",
        "--update-from",
        "2",
    ]);
    let (a, b) = (
        scores(&String::from_utf8(full.stdout).unwrap()),
        scores(&String::from_utf8(update.stdout).unwrap()),
    );
    assert_eq!(a.len(), 60);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-12 * x.abs());
    }
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = "sparse:n=300,N=4,seed=3,weights=uniform";
    for method in ["katz", "nbt", "f-exp", "nbt-update"] {
        let mut texts = Vec::new();
        for threads in ["1", "4"] {
            let prefix = dir.path().join(format!("{method}-{threads}"));
            let out = tempo(&[
                "--generate",
                spec,
                "--method",
                method,
                "--threads",
                threads,
                "--out",
                prefix.to_str().unwrap(),
            ]);
            assert!(
                out.status.success(),
                "{}",
                String::from_utf8_lossy(&out.stderr)
            );
            let csv = std::fs::read_to_string(prefix.with_extension("csv")).unwrap();
            let mut json: Value = serde_json::from_str(
                &std::fs::read_to_string(prefix.with_extension("json")).unwrap(),
            )
            .unwrap();
            json.as_object_mut().unwrap().remove("wall_time_ms");
            texts.push((csv, json));
        }
        assert_eq!(texts[0], texts[1], "{method}");
    }
}

#[test]
fn seed_env_overrides_flag() {
    let run = |env: Option<&str>, seed: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_tempo"));
        cmd.args(["--generate", "sparse:n=50,N=2,seed=1", "--seed", seed]);
        match env {
            Some(v) => cmd.env("TEMPO_SEED", v),
            None => cmd.env_remove("TEMPO_SEED"),
        };
        cmd.output().unwrap().stdout
    };
    assert_eq!(run(Some("9"), "4"), run(None, "9"));
    assert_ne!(run(None, "4"), run(None, "9"));
}
