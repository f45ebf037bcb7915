//! End-to-end runs of the `defcure` binary.

use defcure::io::write_dataset_path;
use defcure::simulation::{generate_dataset, gompertz_reference_params, SimScenario};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn defcure(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_defcure")).args(args).output().unwrap()
}

fn scenario() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios/gompertz.json")
        .display()
        .to_string()
}

fn sample_csv(dir: &Path, n: usize) -> String {
    let ds = generate_dataset(&SimScenario::new(gompertz_reference_params(), n, 1, 0), 17).unwrap();
    let path = dir.join("data.csv");
    write_dataset_path(&path, &ds).unwrap();
    path.display().to_string()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn json(p: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn empty_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = path(dir.path(), "empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = defcure(&["fit", "--in", &empty, "--out", &path(dir.path(), "r.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no observations"));
}

#[test]
fn malformed_csv_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = path(dir.path(), "bad.csv");
    std::fs::write(&bad, "left,right,cause,x\n0,1,1,0\n0,oops,1,1\n").unwrap();
    let out = defcure(&["fit", "--in", &bad, "--out", &path(dir.path(), "r.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn fit_report_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample_csv(dir.path(), 400);
    let report = path(dir.path(), "fit.json");
    let out = defcure(&["fit", "--in", &data, "--family", "gompertz", "--profile", "0,0.5", "--out", &report]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&report);
    let fit = &r["fit"];
    assert_eq!(fit["num_params"], 12);
    let loglik = fit["loglik"].as_f64().unwrap();
    let aic = fit["information_criteria"]["aic"].as_f64().unwrap();
    assert!((aic - (-2.0 * loglik + 24.0)).abs() < 1e-9);
    assert_eq!(fit["confidence_intervals"].as_array().unwrap().len(), 2);
    assert_eq!(r["cure_fractions"].as_array().unwrap().len(), 1);
    assert!(r["cure_fractions"][0]["overall"].as_f64().unwrap() > 0.0);
    assert_eq!(r["provenance"]["tool"], "defcure");
}

#[test]
fn non_convergence_exits_two_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample_csv(dir.path(), 300);
    let report = path(dir.path(), "fit.json");
    let out = defcure(&["fit", "--in", &data, "--max-iterations", "1", "--starts", "1", "--out", &report]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&report)["fit"]["converged"], false);
}

#[test]
fn simulate_writes_parameter_and_cure_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "mc.csv");
    let out = defcure(&["simulate", "--scenario", &scenario(), "--n", "100", "--reps", "4", "--out", &csv]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 16);
    assert_eq!(rows.iter().filter(|r| r.starts_with("gamma") || r.starts_with("beta")).count(), 12);
    assert_eq!(rows.iter().filter(|r| r.starts_with("\"p")).count(), 4);
    let summary = json(&PathBuf::from(&csv).with_extension("json").display().to_string());
    assert_eq!(summary["report"]["replications"], 4);
}

#[test]
fn simulate_rejects_zero_replications() {
    let dir = tempfile::tempdir().unwrap();
    let out = defcure(&["simulate", "--scenario", &scenario(), "--reps", "0", "--out", &path(dir.path(), "mc.csv")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn curves_by_binary_stratum_with_model_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample_csv(dir.path(), 400);
    let report = path(dir.path(), "fit.json");
    assert_eq!(defcure(&["fit", "--in", &data, "--out", &report]).status.code(), Some(0));
    let curves = path(dir.path(), "curves.csv");
    let out = defcure(&["curves", "--in", &data, "--stratify", "x1", "--model", &report, "--out", &curves]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(&curves).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["stratum", "t", "turnbull_S", "model_S"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    for stratum in ["x1=0", "x1=1"] {
        let pts: Vec<&csv::StringRecord> = rows.iter().filter(|r| &r[0] == stratum).collect();
        assert!(pts.len() > 200, "{stratum}");
        assert_eq!(&pts[0][1], "0");
        assert_eq!(pts[0][3].parse::<f64>().unwrap(), 1.0);
        let plateau: f64 = pts.last().unwrap()[2].parse().unwrap();
        assert!(plateau > 0.0, "{stratum} plateau {plateau}");
    }
}

#[test]
fn curves_by_threshold_and_missing_column() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample_csv(dir.path(), 200);
    let curves = path(dir.path(), "curves.csv");
    let out = defcure(&["curves", "--in", &data, "--stratify", "x2", "--threshold", "0.5", "--out", &curves]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&curves).unwrap();
    assert!(text.contains("x2<0.5,") && text.contains("x2>=0.5,"));
    let out = defcure(&["curves", "--in", &data, "--stratify", "cd4", "--out", &curves]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stratification column 'cd4' is missing"));
}

#[test]
fn repeated_fits_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample_csv(dir.path(), 200);
    let report = path(dir.path(), "fit.json");
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        defcure(&["--threads", threads, "fit", "--in", &data, "--family", "inverse-gaussian", "--out", &report]);
        outputs.push(std::fs::read(&report).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
