//! Command-line surface: exit codes, messages, config files, formats.

use std::process::{Command, Output};

fn fracbv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracbv")).args(args).env_remove("FRACBV_THREADS").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scratch(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("fracbv-cli-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

#[test]
fn bad_alpha_names_flag_and_range() {
    let o = fracbv(&["gradient", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("--alpha") && e.contains("(0,1)"), "{e}");
}

#[test]
fn bad_riesz_order_names_s() {
    let o = fracbv(&["riesz", "--s", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--s"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_and_suite_are_usage_errors() {
    assert_eq!(fracbv(&["gradient", "--nope"]).status.code(), Some(2));
    let o = fracbv(&["verify", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`nope`"));
}

#[test]
fn unknown_config_key_is_named() {
    let p = scratch("bad.cfg");
    std::fs::write(&p, "alpha = 0.5\nalfa = 0.2\n").unwrap();
    let o = fracbv(&["constants", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`alfa`"), "{}", stderr(&o));
}

#[test]
fn saved_config_reproduces_the_run() {
    let cfg = scratch("run.cfg");
    let a = fracbv(&["perimeter", "--shape", "interval:0,1", "--alpha", "0.3", "--save-config", cfg.to_str().unwrap()]);
    assert!(a.status.success(), "{}", stderr(&a));
    let b = fracbv(&["perimeter", "--config", cfg.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    // flags win over the file
    let c = fracbv(&["perimeter", "--config", cfg.to_str().unwrap(), "--alpha", "0.5"]);
    let v: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    assert_eq!(v["result"]["value"], 16.0);
}

#[test]
fn perimeter_of_unit_interval() {
    let o = fracbv(&["perimeter", "--shape", "interval:0,1", "--alpha", "0.5"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["result"]["value"].as_f64().unwrap() - 16.0).abs() < 1e-12);
    assert_eq!(v["provenance"], "exact");
}

#[test]
fn gradient_csv_has_grid_header() {
    let o = fracbv(&["gradient", "--fn", "gaussian", "--alpha", "0.7", "--backend", "fft", "--out", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# grid n=1"), "{text}");
    assert!(text.contains("# budget="));
    assert!(text.contains("# method=fft"));
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert!(rows > 100);
}

#[test]
fn strict_interval_report() {
    let o = fracbv(&["verify", "strict_interval", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = &v[0];
    assert_eq!(r["status"], "pass");
    let c = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "|D^a chi|<mu*P").unwrap();
    assert!((c["measured"].as_f64().unwrap() - 2.2568).abs() < 1e-4);
    assert!((c["expected_or_bound"].as_f64().unwrap() - 3.1915).abs() < 1e-4);
}

#[test]
fn output_file_matches_stdout() {
    let p = scratch("c.json");
    let a = fracbv(&["constants", "--dim", "2"]);
    let b = fracbv(&["constants", "--dim", "2", "--output", p.to_str().unwrap()]);
    assert!(b.stdout.is_empty());
    assert_eq!(std::fs::read(&p).unwrap(), a.stdout);
}
