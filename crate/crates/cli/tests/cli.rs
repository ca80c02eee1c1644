use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brokenline"))
        .args(args)
        .env("BROKENLINE_OUT", out)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn enumerate_amalgams_of_two_points() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["enumerate", "amalgams", "--left", "2", "--right", "2"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["count"], 2);
    assert!(dir.path().join("enumerate.json").exists());
}

#[test]
fn mainc_roundtrip_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["roundtrip", "mainc", "--algebra", "builtin:zero", "--truncation", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["passed"], true);
}

#[test]
fn verify_amalgams_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "amalgams", "--left", "2", "--right", "2"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["violations"].as_array().map(Vec::len), Some(0));
}

#[test]
fn morse_demo_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["morse", "demo", "--surface", "sphere"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(dir.path().join("morse-sphere.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(json(&o)["euler_characteristic"], 2);
}

#[test]
fn fixed_seed_gives_identical_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--seed", "11", "verify", "amalgams", "--left", "2", "--right", "3"];
    let (x, y) = (run(a.path(), &args), run(b.path(), &args));
    assert!(x.status.success(), "{}", String::from_utf8_lossy(&x.stderr));
    assert_eq!(x.stdout, y.stdout);
    assert_eq!(
        std::fs::read(a.path().join("verify-amalgams.json")).unwrap(),
        std::fs::read(b.path().join("verify-amalgams.json")).unwrap()
    );
}

#[test]
fn bad_usage_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["enumerate", "amalgams", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["roundtrip", "mainc", "--algebra", "builtin:nope"]).status.code(), Some(2));
}

#[test]
fn config_file_and_out_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "truncation = 3\n").unwrap();
    let out = dir.path().join("chosen");
    let o = run(
        &dir.path().join("ignored"),
        &["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "daycon", "dims", "--algebra", "builtin:rationals"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["truncation"], 3);
    assert!(out.join("daycon-dims.json").exists());

    std::fs::write(&cfg, "truncaton = 3\n").unwrap();
    let bad = run(dir.path(), &["--config", cfg.to_str().unwrap(), "enumerate", "amalgams", "--left", "1", "--right", "1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn accept_single_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["accept", "--only", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("accept.json")).unwrap()).unwrap();
    let s = report.to_string();
    assert!(s.contains("\"passed\":true"), "{s}");
}
