use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn advreg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_advreg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run advreg")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path) {
    let cfg = serde_json::json!({
        "model": {
            "n_list": [40],
            "p": 12,
            "beta_star": { "kind": "reference" },
            "sigma": 0.1,
            "partition": { "kind": "equal_size", "size": 4 }
        },
        "replications": 1,
        "delta_rule": { "kind": "corollary", "scale": 0.1 },
        "seed": 3,
        "output_dir": "out"
    });
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_fit_and_check() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_config(dir);
    assert_eq!(code(&advreg(dir, &["generate", "--config", "config.json"])), 0);
    let data = dir.join("out/n40_r0");
    assert!(data.join("X.csv").exists() && data.join("truth.json").exists());

    let fit = advreg(&data, &["fit", "--variant", "group", "--partition", "../partition.json", "--rule-scale", "0.1"]);
    assert_eq!(code(&fit), 0, "{}", String::from_utf8_lossy(&fit.stderr));
    let v = read_json(&data.join("fit.json"));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["variant"], "group");
    assert_eq!(v["converged"], true);

    let check = advreg(&data, &["check-bounds", "--partition", "../partition.json"]);
    assert_eq!(code(&check), 0, "{}", String::from_utf8_lossy(&check.stderr));
    let report = read_json(&data.join("bound_report.json"));
    assert_eq!(report["bounds"].as_array().unwrap().len(), 3);
}

#[test]
fn seed_flag_changes_data_and_repeats_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_config(dir);
    for (out, seed) in [("a", "1"), ("b", "1"), ("c", "2")] {
        assert_eq!(code(&advreg(dir, &["generate", "--config", "config.json", "--seed", seed, "--out", out])), 0);
    }
    let x = |d: &str| fs::read(dir.join(d).join("n40_r0/X.csv")).unwrap();
    assert_eq!(x("a"), x("b"));
    assert_ne!(x("a"), x("c"));
}

#[test]
fn experiment_writes_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_config(dir);
    let out = advreg(dir, &["experiment", "--config", "config.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let curves = fs::read_to_string(dir.join("out/error_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 3);
    assert!(read_json(&dir.join("out/slopes.json"))["classic"]["slope"].is_null());
}

#[test]
fn path_and_re_estimate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_config(dir);
    assert_eq!(code(&advreg(dir, &["generate", "--config", "config.json"])), 0);
    let data = dir.join("out/n40_r0");
    let path = advreg(&data, &["path", "--count", "4"]);
    assert_eq!(code(&path), 0, "{}", String::from_utf8_lossy(&path.stderr));
    assert_eq!(fs::read_to_string(data.join("path.csv")).unwrap().lines().count(), 1 + 4 * 12);

    let re = advreg(&data, &["re-estimate", "--size", "2", "--seed", "4"]);
    assert_eq!(code(&re), 0, "{}", String::from_utf8_lossy(&re.stderr));
    let v = read_json(&data.join("re_estimate.json"));
    assert_eq!(v["kind"], "re");
    assert_eq!(v["seed"], 4);
    let gre = advreg(&data, &["re-estimate", "--size", "1", "--partition", "../partition.json", "--out", "gre.json"]);
    assert_eq!(code(&gre), 0);
    assert_eq!(read_json(&data.join("gre.json"))["kind"], "gre");
}

/// Orthonormal design with known noise written into `dir`.
fn orthonormal_dataset(dir: &Path) {
    let (n, p) = (8usize, 4usize);
    // Columns of a scaled Hadamard matrix: XᵀX = n I.
    let h = [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
        [1.0, 1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ];
    let beta = [1.0, 0.0, 0.0, 0.0];
    let eps = [0.05, -0.02, 0.03, 0.01, -0.04, 0.02, -0.01, 0.03];
    let mut x = String::from("x1,x2,x3,x4\n");
    let mut y = String::from("y\n");
    for i in 0..n {
        let row: Vec<String> = h[i].iter().map(|v| v.to_string()).collect();
        x.push_str(&row.join(","));
        x.push('\n');
        let fit: f64 = (0..p).map(|j| h[i][j] * beta[j]).sum();
        y.push_str(&format!("{}\n", fit + eps[i]));
    }
    fs::write(dir.join("X.csv"), x).unwrap();
    fs::write(dir.join("Y.csv"), y).unwrap();
    let truth = serde_json::json!({
        "schema_version": 1, "p": p, "beta_star": beta, "support": [1], "sigma": 0.03, "epsilon": eps
    });
    fs::write(dir.join("truth.json"), truth.to_string()).unwrap();
}

#[test]
fn tampered_fit_exits_with_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    orthonormal_dataset(dir);
    // 2‖Xᵀε‖∞/‖ε‖₁ = 2 · 0.07/0.21, so δ = 1 satisfies the oracle condition.
    assert_eq!(code(&advreg(dir, &["fit", "--delta", "1.0"])), 0);
    let ok = advreg(dir, &["check-bounds"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let report = read_json(&dir.join("bound_report.json"));
    assert_eq!(report["asserted"], true);

    let mut fit = read_json(&dir.join("fit.json"));
    fit["beta_hat"] = serde_json::json!([100.0, 0.0, 0.0, 0.0]);
    fs::write(dir.join("fit.json"), fit.to_string()).unwrap();
    assert_eq!(code(&advreg(dir, &["check-bounds"])), 3);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    orthonormal_dataset(dir);

    // Missing truth file.
    assert_eq!(code(&advreg(dir, &["check-bounds", "--truth", "nope.json"])), 4);
    // Truth without the noise vector.
    assert_eq!(code(&advreg(dir, &["fit", "--delta", "0.5"])), 0);
    let mut truth = read_json(&dir.join("truth.json"));
    truth.as_object_mut().unwrap().remove("epsilon");
    fs::write(dir.join("bare.json"), truth.to_string()).unwrap();
    assert_eq!(code(&advreg(dir, &["check-bounds", "--truth", "bare.json"])), 4);
    // Missing input data.
    assert_eq!(code(&advreg(dir, &["fit", "--x", "missing.csv"])), 4);
    // Malformed CSV reports its location.
    fs::write(dir.join("bad.csv"), "x1,x2\n1,2\n3,oops\n").unwrap();
    let bad = advreg(dir, &["fit", "--x", "bad.csv"]);
    assert_eq!(code(&bad), 5);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("row 2, column 2"));
    // Unknown flag, unknown config field, invalid solver options.
    assert_eq!(code(&advreg(dir, &["fit", "--bogus"])), 5);
    fs::write(dir.join("solver.json"), r#"{"tol_cert": -1}"#).unwrap();
    assert_eq!(code(&advreg(dir, &["fit", "--config", "solver.json"])), 5);
    fs::write(dir.join("solver.json"), r#"{"no_such_option": 1}"#).unwrap();
    assert_eq!(code(&advreg(dir, &["fit", "--config", "solver.json"])), 5);
    // Iteration budget too small to converge: fit.json is still written.
    fs::write(dir.join("solver.json"), r#"{"max_iters": 1}"#).unwrap();
    let _ = fs::remove_file(dir.join("fit.json"));
    assert_eq!(code(&advreg(dir, &["fit", "--delta", "0.3", "--config", "solver.json"])), 2);
    assert_eq!(read_json(&dir.join("fit.json"))["converged"], false);
}
