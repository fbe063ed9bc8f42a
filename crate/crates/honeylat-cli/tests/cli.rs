use std::path::Path;
use std::process::{Command, Output};

fn honeylat(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_honeylat"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HONEYLAT_THREADS")
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn dirac_report_at_large_eps() {
    let dir = tempfile::tempdir().unwrap();
    let o = honeylat(&["dirac", "--eps", "10"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&dir.path().join("dirac.json"));
    assert!((d["e_star"].as_f64().unwrap() - 11.71716773).abs() < 1e-6);
    assert_eq!(d["b_star"], 1);
    assert!(d["theta_sharp"].as_f64().unwrap().abs() > 0.0);
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "dirac");
    assert_eq!(m["config"]["eps"], 10.0);
}

#[test]
fn negative_eps_flips_the_band_index() {
    let dir = tempfile::tempdir().unwrap();
    let o = honeylat(&["dirac", "--eps", "-10"], dir.path());
    assert!(o.status.success());
    assert_eq!(json(&dir.path().join("dirac.json"))["b_star"], 2);
}

#[test]
fn v11_scan_csv_has_full_precision_and_a_sign_flip() {
    let dir = tempfile::tempdir().unwrap();
    let o = honeylat(&["v11-scan", "--a-count", "14"], dir.path());
    assert!(o.status.success());
    let mut rdr = csv::Reader::from_path(dir.path().join("v11_scan.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["a", "v11_poisson", "v11_quadrature", "sign_flip"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 14);
    let mantissa = rows[3][1].split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 17);
    for r in &rows {
        let p: f64 = r[1].parse().unwrap();
        let q: f64 = r[2].parse().unwrap();
        assert!((p - q).abs() <= 1e-6 * p.abs().max(1e-8));
    }
    assert_eq!(rows.iter().filter(|r| &r[3] == "1").count(), 1);
}

#[test]
fn nofold_reports_witness_for_negative_eps() {
    let dir = tempfile::tempdir().unwrap();
    let o = honeylat(&["nofold", "--eps", "-0.2"], dir.path());
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("fail: witness"), "{stdout}");
    let r = json(&dir.path().join("nofold.json"));
    assert_eq!(r["pass"], false);
    assert!(r["witness_lambda"].as_f64().unwrap() < 0.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(honeylat(&["dirac", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(honeylat(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(honeylat(&["dirac", "--edge", "1"], dir.path()).status.code(), Some(2));
    assert_eq!(honeylat(&["dirac", "--eps", "nan"], dir.path()).status.code(), Some(2));
    assert_eq!(
        honeylat(&["dirac", "--potential", "/nonexistent.json"], dir.path()).status.code(),
        Some(2)
    );
    // a supercell too short for the wall is a configuration error
    assert_eq!(honeylat(&["kpar-sweep", "--N", "8"], dir.path()).status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"eps": -10, "m": 8}"#).unwrap();
    let out = dir.path().join("o");
    let o = honeylat(&["dirac", "--config", cfg.to_str().unwrap(), "--M", "10"], &out);
    assert!(o.status.success());
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["eps"], -10.0);
    assert_eq!(m["config"]["m"], 10);
}

#[test]
fn rerun_reproduces_outputs_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    assert!(honeylat(&["slice", "--eps", "0.2", "--N", "31"], &first).status.success());
    let manifest = first.join("manifest.json");
    assert!(honeylat(&["rerun", manifest.to_str().unwrap()], &second).status.success());
    assert_eq!(
        std::fs::read(first.join("slice.csv")).unwrap(),
        std::fs::read(second.join("slice.csv")).unwrap()
    );
}

#[test]
fn verify_subset_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = honeylat(&["verify", "--only", "1,10"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("criterion")).count(), 2);
}
