//! End-to-end CLI checks: exit codes, output stability, file handling.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opladder"))
}

fn write_tmp(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("opladder-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

const LAGUERRE0: &str = r#"{"family":"laguerre","lambda":0.0,"atoms":[{"kind":"exp_linear","params":{"c":1.0}}],"jumps":null,"fh":null}"#;
const LEGENDRE: &str =
    r#"{"family":"jacobi","alpha":0.0,"beta":0.0,"atoms":[],"jumps":null,"fh":null}"#;

#[test]
fn recurrence_csv_row() {
    let w = write_tmp("laguerre0.json", LAGUERRE0);
    let out = bin()
        .args([
            "recurrence",
            "--weight",
            w.to_str().unwrap(),
            "--n-max",
            "4",
            "--precision-bits",
            "128",
            "--nodes",
            "40",
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let row2 = text.lines().nth(3).unwrap(); // header + n=0,1,2
    let fields: Vec<&str> = row2.split(',').collect();
    assert_eq!(fields[0], "2");
    let alpha: f64 = fields[1].parse().unwrap();
    let beta: f64 = fields[2].parse().unwrap();
    let h: f64 = fields[3].parse().unwrap();
    assert!((alpha - 5.0).abs() < 1e-12);
    assert!((beta - 4.0).abs() < 1e-12); // n(n+lambda) = 4 at n=2, lambda=0
    assert!((h - 4.0).abs() < 1e-12);
}

#[test]
fn malformed_json_exits_2() {
    let w = write_tmp("bad.json", "{ not json");
    let out = bin()
        .args(["recurrence", "--weight", w.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_of_range_lambda_exits_2() {
    let w = write_tmp(
        "bad_lambda.json",
        r#"{"family":"laguerre","lambda":-1.0,"atoms":[{"kind":"exp_linear","params":{"c":1.0}}],"jumps":null,"fh":null}"#,
    );
    let out = bin()
        .args(["recurrence", "--weight", w.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("exponent out of range"), "stderr: {err}");
}

#[test]
fn missing_output_dir_exits_2() {
    let w = write_tmp("leg.json", LEGENDRE);
    let out = bin()
        .args([
            "recurrence",
            "--weight",
            w.to_str().unwrap(),
            "--out",
            "/nonexistent-dir-xyz/report.json",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_and_is_byte_stable() {
    let w = write_tmp("legendre.json", LEGENDRE);
    let run = || {
        bin()
            .args([
                "verify",
                "--weight",
                w.to_str().unwrap(),
                "--n-max",
                "3",
                "--precision-bits",
                "192",
                "--nodes",
                "48",
                "--z-count",
                "4",
                "--checks",
                "ladder,compat,orthogonality",
            ])
            .output()
            .unwrap()
    };
    let out1 = run();
    assert_eq!(
        out1.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out1.stderr)
    );
    let out2 = run();
    assert_eq!(out1.stdout, out2.stdout, "verify output not byte-stable");
}

#[test]
fn canary_perturbed_verify_exits_1() {
    let w = write_tmp("legendre2.json", LEGENDRE);
    let out = bin()
        .args([
            "verify",
            "--weight",
            w.to_str().unwrap(),
            "--n-max",
            "4",
            "--precision-bits",
            "192",
            "--nodes",
            "48",
            "--z-count",
            "3",
            "--checks",
            "ladder",
            "--perturb-beta",
            "3=1e-6",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // the report is still written
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"pass\": false"));
}

#[test]
fn ladder_dump_matches_closed_form() {
    // classical Laguerre at z = -2 (admissible): A_3 = 1/z = -0.5, B_3 = -n/z = 1.5
    let w = write_tmp("laguerre_dump.json", LAGUERRE0);
    let out = bin()
        .args([
            "ladder",
            "--weight",
            w.to_str().unwrap(),
            "--n-max",
            "4",
            "--precision-bits",
            "128",
            "--nodes",
            "40",
            "--n",
            "3",
            "--z",
            "-2",
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    let a_re: f64 = fields[3].parse().unwrap();
    let b_re: f64 = fields[5].parse().unwrap();
    assert!((a_re + 0.5).abs() < 1e-12, "A = {a_re}");
    assert!((b_re - 1.5).abs() < 1e-12, "B = {b_re}");
}

#[test]
fn ladder_z_on_support_exits_2() {
    let w = write_tmp("laguerre_zs.json", LAGUERRE0);
    let out = bin()
        .args([
            "ladder",
            "--weight",
            w.to_str().unwrap(),
            "--n",
            "2",
            "--z",
            "2.0",
            "--precision-bits",
            "128",
            "--nodes",
            "40",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("closed support"), "stderr: {err}");
}

#[test]
fn hankel_and_diff_check_run() {
    let w = write_tmp("laguerre_h.json", LAGUERRE0);
    let out = bin()
        .args([
            "hankel",
            "--weight",
            w.to_str().unwrap(),
            "--n-max",
            "4",
            "--precision-bits",
            "128",
            "--nodes",
            "40",
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,d_n,gamma_product"));
    // D_3 = 4 for lambda = 0
    let row3 = text.lines().nth(3).unwrap();
    let d3: f64 = row3.split(',').nth(1).unwrap().parse().unwrap();
    assert!((d3 - 4.0).abs() < 1e-10);

    let w = write_tmp(
        "shifted_pow.json",
        r#"{"family":"shifted_jacobi","alpha":-0.3,"beta":-0.3,"atoms":[{"kind":"power_shift_neg","params":{"t":-0.5,"gamma":1.0}}],"jumps":null,"fh":null}"#,
    );
    let out = bin()
        .args([
            "diff-check",
            "--weight",
            w.to_str().unwrap(),
            "--n-max",
            "2",
            "--precision-bits",
            "192",
            "--nodes",
            "48",
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,identity,residual"));
    for line in text.lines().skip(1) {
        let r: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(r < 1e-8, "diff residual {r}");
    }
}
