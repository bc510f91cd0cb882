// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn camouflage(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_camouflage")).args(args).output().unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stdout:\n{}\nstderr:\n{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
}

fn construct(dir: &Path, builtin: &str) {
    let p = |f: &str| dir.join(f).to_str().unwrap().to_string();
    ok(&camouflage(&[
        "--builtin",
        builtin,
        "--out",
        &p("out.bench"),
        "--report",
        &p("report.json"),
        "--ground-truth",
        &p("truth.json"),
    ]));
}

#[test]
fn construct_then_check_everything() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    construct(d, "pipeline");
    for f in ["out.bench", "out.bench.delays.toml", "report.json", "truth.json"] {
        assert!(d.join(f).exists(), "{f}");
    }
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert!(rep["n_wpt"].as_u64().unwrap() > 0);

    let out = d.join("out.bench");
    let delays = d.join("out.bench.delays.toml");
    let truth = d.join("truth.json");
    let src = ["--bench", out.to_str().unwrap(), "--delays", delays.to_str().unwrap()];
    let gt = ["--ground-truth", truth.to_str().unwrap()];

    let v = camouflage(&[&["verify"][..], &src, &gt].concat());
    ok(&v);
    assert!(String::from_utf8_lossy(&v.stdout).contains("timing: ok"));

    let s = camouflage(&[&["simulate", "--original-builtin", "pipeline", "--cycles", "500", "--trials", "2"][..], &src].concat());
    ok(&s);
    let eq: serde_json::Value = serde_json::from_slice(&s.stdout).unwrap();
    assert_eq!(eq["equivalent"], true);

    let a = camouflage(&[&["attack", "--sample", "5"][..], &src, &gt].concat());
    ok(&a);
    let rep: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(rep["sizing"].is_object());

    ok(&camouflage(&[&["report", "--original-builtin", "pipeline"][..], &src, &gt].concat()));
}

#[test]
fn outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    construct(a.path(), "snippet");
    construct(b.path(), "snippet");
    for f in ["out.bench", "out.bench.delays.toml", "report.json", "truth.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("bad.bench");
    fs::write(&bench, "INPUT(a)\nOUTPUT(b)\nb = FOO(a)\n").unwrap();
    let o = camouflage(&["verify", "--bench", bench.to_str().unwrap(), "--ground-truth", "missing.json"]);
    assert!(!o.status.success());
    let o = camouflage(&["--builtin", "nosuch", "--out", "x", "--report", "y", "--ground-truth", "z"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown benchmark"));
}
