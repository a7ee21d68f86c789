use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn calderon(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_calderon"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).display().to_string()
}

#[test]
fn forward_smoke_writes_one_row_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let out = calderon(&["forward"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let u = fs::read_to_string(dir.path().join("u.csv")).unwrap();
    let mut lines = u.lines();
    assert_eq!(lines.next(), Some("x,u"));
    assert_eq!(lines.count(), 129);
    let flux = fs::read_to_string(dir.path().join("flux.csv")).unwrap();
    assert!(flux.starts_with("x,input_id,epsilon,flux\n"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "forward");
}

#[test]
fn recover_coeff_on_two_orders_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("recover_coeff.json")).unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&text).unwrap();
    cfg["coefficients"]["degree"] = 2.into();
    cfg["coefficients"]["profiles"].as_array_mut().unwrap().truncate(2);
    let path = cfg_dir.path().join("k2.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = calderon(&["recover-coeff", "--config", path.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let errors = report["relative_errors"].as_array().unwrap();
    assert_eq!(errors.len(), 2);
    assert!(errors[0].as_f64().unwrap() <= 0.05 && errors[1].as_f64().unwrap() <= 0.10, "{errors:?}");
    assert_eq!(report["coefficients"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_passes_on_default_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = calderon(&["verify"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn reruns_are_byte_identical_apart_from_timings() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = config("recover_single.json");
    for dir in [&a, &b] {
        assert!(calderon(&["recover-single", "--config", &cfg], dir.path()).status.success());
    }
    for name in ["u.csv", "flux.csv", "report.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn manifest_hashes_the_exact_config_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("runge.json");
    assert!(calderon(&["runge", "--config", &cfg], dir.path()).status.success());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let expected = calderon_cli::output::sha256_hex(&fs::read(&cfg).unwrap());
    assert_eq!(manifest["config_sha256"], expected.as_str());
}

#[test]
fn invalid_config_exits_with_code_two_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = fs::read_to_string(config("minimal.json")).unwrap().replace("\"s\": 0.5", "\"s\": 1.5");
    fs::write(&bad, text).unwrap();
    let out = calderon(&["forward", "--config", bad.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s:"), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_config_file_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = calderon(&["forward", "--config", "/nonexistent/config.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oversized_data_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("minimal.json")).unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&text).unwrap();
    cfg["coefficients"] = serde_json::json!({
        "degree": 2,
        "profiles": [{"kind": "constant", "value": 1.0}, {"kind": "constant", "value": -50.0}]
    });
    cfg["input"]["height"] = 10.0.into();
    let path = dir.path().join("big.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = calderon(&["forward", "--config", path.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn every_shipped_config_validates() {
    for entry in fs::read_dir(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        if let Err(e) = calderon_cli::config::parse_config(&text) {
            panic!("{}: {e}", path.display());
        }
    }
}
