use std::ffi::OsString;
use std::path::Path;
use std::process::Command;

use hslab_cli::config::RunConfig;
use hslab_cli::{run, EXIT_OK, EXIT_SUITE_FAILED, EXIT_USAGE};

fn hslab(args: &[&str]) -> (i32, String, String) {
    let mut argv: Vec<OsString> = vec!["hslab".into()];
    argv.extend(args.iter().map(OsString::from));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap_or_else(|e| panic!("{e}: {s}"))
}

fn check<'a>(report: &'a serde_json::Value, name: &str) -> &'a serde_json::Value {
    report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

fn outdir(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn solve_radial_writes_profile() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = hslab(&["--out-dir", &outdir(dir.path()), "solve-radial", "--dim", "3", "--s", "1.6667", "--tol", "1e-8", "-o", "prof.txt"]);
    assert_eq!(code, EXIT_OK);
    let rep = json(&out);
    assert_eq!(rep["status"], "pass");
    let text = std::fs::read_to_string(dir.path().join("prof.txt")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# N = 3")));
    assert!(text.lines().any(|l| l.starts_with("# s = 1.6667")));
}

#[test]
fn closed_form_family_is_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = hslab(&["--out-dir", &outdir(dir.path()), "solve-radial", "--dim", "4", "--family", "4overN"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(json(&out)["summary"]["source"], "closed_form");
}

#[test]
fn usage_errors() {
    let (code, _, err) = hslab(&["solve-radial", "--dim", "3", "--s", "2.5"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("s out of range"));
    let (code, _, err) = hslab(&["minimize", "--domain", "hexagon"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("unknown domain"));
    assert_eq!(hslab(&["solve-radial", "--dim", "3", "--s", "1", "--p", "4"]).0, EXIT_USAGE);
    assert_eq!(hslab(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(hslab(&["--jobs", "0", "verify", "planar"]).0, EXIT_USAGE);
    assert_eq!(hslab(&["verify", "discriminant", "--family", "2overN", "--scan", "9..4"]).0, EXIT_USAGE);
    assert_eq!(hslab(&["--help"]).0, EXIT_OK);
}

#[test]
fn verify_pohozaev() {
    let (code, out, _) = hslab(&["verify", "pohozaev", "--dim", "3", "--s", "1.6667"]);
    assert_eq!(code, EXIT_OK);
    let rep = json(&out);
    for c in rep["checks"].as_array().unwrap() {
        assert_eq!(c["pass"], true);
        if c["relation"] == "<" {
            assert!(c["value"].as_f64().unwrap() < 1e-6, "{c}");
        }
    }
}

#[test]
fn verify_discriminant_flags_threshold() {
    let (code, out, _) = hslab(&["verify", "discriminant", "--family", "2overN", "--scan", "3..40"]);
    assert_eq!(code, EXIT_OK);
    let rep = json(&out);
    assert_eq!(rep["summary"]["threshold_N"], 18);
    let cols: Vec<&str> = rep["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    let (ni, ti) = (cols.iter().position(|&c| c == "N").unwrap(), cols.iter().position(|&c| c == "threshold").unwrap());
    let flagged: Vec<i64> = rep["rows"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r[ti] == true)
        .map(|r| r[ni].as_i64().unwrap())
        .collect();
    assert_eq!(flagged, [18]);
}

#[test]
fn verify_spectrum_table() {
    let (code, out, _) = hslab(&["verify", "spectrum", "--dim", "3", "--family", "2overN", "--kmax", "4"]);
    assert_eq!(code, EXIT_OK);
    let rep = json(&out);
    assert!(check(&rep, "lambda1[k=1] - (p-1)")["value"].as_f64().unwrap() < 1e-4);
    // p - 1 = 5/3 here
    let cols: Vec<&str> = rep["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    let li = cols.iter().position(|&c| c == "lambda1").unwrap();
    let l = rep["rows"][1][li].as_f64().unwrap();
    assert!((l - 5.0 / 3.0).abs() < 1e-4);
}

#[test]
fn failing_suite_names_the_assertion() {
    // an impossible threshold must fail, not print success
    let (code, out, err) = hslab(&["verify", "pohozaev", "--dim", "3", "--s", "1.6667", "--threshold", "1e-30"]);
    assert_eq!(code, EXIT_SUITE_FAILED);
    assert_eq!(json(&out)["status"], "fail");
    assert!(err.starts_with("FAILED "));
}

#[test]
fn minimize_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = outdir(dir.path());
    let (code, out, _) = hslab(&["--out-dir", &d, "minimize", "--domain", "kidney", "--p", "3", "--h", "0.02"]);
    assert_eq!(code, EXIT_OK);
    assert!(json(&out)["summary"]["gap"].as_f64().unwrap() < 0.0);
    let (code, out, _) = hslab(&["--out-dir", &d, "minimize", "--domain", "square", "--p", "3", "--h", "0.02"]);
    assert_eq!(code, EXIT_OK);
    let sum = &json(&out)["summary"];
    assert!(sum["gap"].as_f64().unwrap() >= 0.0);
    assert!((sum["reference_mu"].as_f64().unwrap() - (2.0 * std::f64::consts::PI).powf(1.0 / 3.0)).abs() < 1e-8);
    assert!(dir.path().join("square_p3_h0.02_solution.txt").exists());
    let trace = std::fs::read_to_string(dir.path().join("square_p3_h0.02_trace.csv")).unwrap();
    assert!(!trace.contains('\r') && trace.ends_with('\n'));
    let header = trace.lines().next().unwrap();
    let width = header.split(',').count();
    assert!(width > 1);
    for line in trace.lines().skip(1) {
        assert_eq!(line.split(',').count(), width, "{line}");
        for f in line.split(',') {
            f.parse::<f64>().unwrap();
        }
    }
}

#[test]
fn non_convergence_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = hslab(&["--out-dir", &outdir(dir.path()), "minimize", "--domain", "disk", "--h", "0.1", "--max-iter", "2", "--tol", "1e-14"]);
    assert_eq!(code, hslab_cli::EXIT_NO_CONVERGENCE);
    assert!(!err.is_empty());
    assert!(std::fs::read_dir(dir.path()).unwrap().any(|e| e.unwrap().file_name().to_string_lossy().ends_with("_trace.csv")));
}

#[test]
fn csv_format() {
    let (code, out, _) = hslab(&["--format", "csv", "verify", "pohozaev", "--dim", "3", "--s", "1.6667"]);
    assert_eq!(code, EXIT_OK);
    assert!(!out.contains('\r') && !out.contains(';'));
    assert!(out.starts_with("key,value\n"));
    assert!(out.lines().any(|l| l.starts_with("check,value,relation,tolerance,pass")));
}

#[test]
fn config_round_trip_and_precedence() {
    let text = "jobs = 1\n[minimize]\ndomain = square\nh = 0.05\n[verify.pohozaev]\ndim = 3\ns = 1.6667\n";
    let cfg = RunConfig::parse(text).unwrap();
    assert_eq!(cfg.serialize(), text);
    assert_eq!(RunConfig::parse(&cfg.serialize()).unwrap(), cfg);
    assert!(RunConfig::parse("[broken\n").is_err());
    assert!(RunConfig::parse("no equals sign\n").is_err());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, text).unwrap();
    let p = path.to_str().unwrap();
    let (code, out, _) = hslab(&["--config", p, "verify", "pohozaev"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert_eq!(json(&out)["summary"]["N"], 3);
    // a flag on the command line beats the file
    let (code, out, _) = hslab(&["--config", p, "verify", "pohozaev", "--s", "1"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(json(&out)["summary"]["s"].as_f64(), Some(1.0));
    assert_eq!(hslab(&["--config", "/nonexistent/run.cfg", "verify", "planar"]).0, EXIT_USAGE);
}

#[test]
fn reports_are_deterministic() {
    let a = hslab(&["verify", "discriminant", "--family", "4overN", "--scan", "3..12"]);
    let b = hslab(&["--jobs", "4", "verify", "discriminant", "--family", "4overN", "--scan", "3..12"]);
    assert_eq!(a.1, b.1);
    let a = hslab(&["verify", "planar"]);
    let b = hslab(&["verify", "planar"]);
    assert_eq!(a.0, EXIT_OK);
    assert_eq!(a.1, b.1);
}

#[test]
fn output_directory_precedence() {
    let bin = env!("CARGO_BIN_EXE_hslab");
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let cwd = tempfile::tempdir().unwrap();
    let args = ["solve-radial", "--dim", "3", "--family", "2overN", "-o", "p.txt"];

    let st = Command::new(bin).args(args).env("HSLAB_OUT", env_dir.path()).current_dir(cwd.path()).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert!(env_dir.path().join("p.txt").exists());
    assert!(!cwd.path().join("p.txt").exists());

    let st = Command::new(bin)
        .arg("--out-dir")
        .arg(flag_dir.path())
        .args(args)
        .env("HSLAB_OUT", env_dir.path())
        .current_dir(cwd.path())
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert!(flag_dir.path().join("p.txt").exists());

    let st = Command::new(bin).args(args).env_remove("HSLAB_OUT").current_dir(cwd.path()).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert!(cwd.path().join("p.txt").exists());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_hslab");
    let st = Command::new(bin).args(["minimize", "--domain", "hexagon"]).output().unwrap();
    assert_eq!(st.status.code(), Some(64));
    let st = Command::new(bin).args(["solve-radial", "--dim", "3"]).output().unwrap();
    assert_eq!(st.status.code(), Some(64));
    assert!(!st.stderr.is_empty());
}
