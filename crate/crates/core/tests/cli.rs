//! End-to-end runs of the `fairbary` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fairbary::files::{InstanceFile, Payload, ResultFile};
use fairbary::nestedness::Verdict;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairbary"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn error_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("stderr carries one JSON error object")
}

fn example(dir: &Path, which: &str, n: &str) -> PathBuf {
    let name = format!("ex{which}.json");
    ok(dir, &["gen", "--example", which, "--n", n, "-o", &name]);
    dir.join(name)
}

#[test]
fn pipeline_on_example_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    example(d, "1", "60");
    ok(d, &["solve", "ex1.json", "-o", "solve.json"]);
    ok(
        d,
        &["classify", "ex1.json", "--y", "0", "-o", "classify.json"],
    );
    ok(d, &["nested", "ex1.json", "-o", "nested.json"]);
    ok(
        d,
        &[
            "audit",
            "ex1.json",
            "solve.json",
            "--y",
            "0,0.5",
            "-o",
            "audit.json",
        ],
    );
    ok(
        d,
        &[
            "plot",
            "nested.json",
            "--kind",
            "boundary",
            "--at",
            "0,1",
            "--out",
            "b.svg",
        ],
    );
    ok(
        d,
        &["plot", "nested.json", "--kind", "cdf", "--out", "cdf.csv"],
    );
    ok(
        d,
        &[
            "plot",
            "solve.json",
            "--kind",
            "omega",
            "--out",
            "omega.svg",
        ],
    );

    let solve = ResultFile::read(&d.join("solve.json")).unwrap();
    let Payload::Solve(s) = &solve.payload else {
        panic!("solve payload expected")
    };
    assert!((s.ot_value - 0.25).abs() < 0.01);

    let nested = ResultFile::read(&d.join("nested.json")).unwrap();
    let Payload::Nested(n) = &nested.payload else {
        panic!("nested payload expected")
    };
    assert_eq!(n.report.verdict, Verdict::Nested);
    assert!(n.regression.is_some());
    assert_eq!(nested.instance_sha256, solve.instance_sha256);

    let svg = std::fs::read_to_string(d.join("b.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    let csv = std::fs::read_to_string(d.join("cdf.csv")).unwrap();
    assert!(csv.lines().count() > 2);
}

#[test]
fn results_parse_back_to_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    example(d, "2", "20");
    ok(
        d,
        &[
            "nested",
            "ex2.json",
            "--grid",
            "-7:3:0.05",
            "-o",
            "nested.json",
        ],
    );
    let text = std::fs::read_to_string(d.join("nested.json")).unwrap();
    let parsed = ResultFile::from_json(&text).unwrap();
    assert_eq!(parsed.to_json().unwrap(), text);

    let inst_text = std::fs::read_to_string(d.join("ex2.json")).unwrap();
    assert_eq!(
        InstanceFile::from_json(&inst_text)
            .unwrap()
            .to_json()
            .unwrap(),
        inst_text
    );
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    example(d, "2", "40");
    let outputs: Vec<Vec<u8>> = ["1", "4"]
        .iter()
        .map(|t| {
            let out = bin()
                .current_dir(d)
                .env("FAIRBARY_THREADS", t)
                .args(["nested", "ex2.json", "--grid", "-7:3:0.02"])
                .output()
                .unwrap();
            assert!(out.status.success());
            out.stdout
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    let again = run(d, &["nested", "ex2.json", "--grid", "-7:3:0.02"]);
    assert_eq!(again.stdout, outputs[0]);
}

#[test]
fn not_nested_is_a_result_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    example(d, "2", "40");
    ok(
        d,
        &[
            "nested",
            "ex2.json",
            "--grid",
            "-7:3:0.02",
            "-o",
            "nested.json",
        ],
    );
    let r = ResultFile::read(&d.join("nested.json")).unwrap();
    let Payload::Nested(n) = &r.payload else {
        panic!("nested payload expected")
    };
    assert_eq!(n.report.verdict, Verdict::NotNested);
    assert!(n.regression.is_none());

    let out = run(
        d,
        &["plot", "nested.json", "--kind", "cdf", "--out", "cdf.svg"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"], "not_nested");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("broken.json"), "{ not json").unwrap();
    let out = run(d, &["solve", "broken.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["exit_code"], 2);

    let out = run(d, &["solve", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(d, &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "usage");

    example(d, "1", "10");
    let out = run(d, &["nested", "ex1.json", "--grid", "3:-2:0.1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .current_dir(d)
        .env("FAIRBARY_THREADS", "zero")
        .args(["solve", "ex1.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Ω-spec whose unit masses cannot be realized by any raw instance.
    let heavy = r#"{"version":"v1","mode":"omega","omega":{"mu_plus":[{"h":0,"d":0.1,"w":1}],"mu_minus":[{"h":1,"d":-0.1,"w":1}],"d_scale":1.0}}"#;
    std::fs::write(d.join("heavy.json"), heavy).unwrap();
    let out = run(d, &["solve", "heavy.json"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    assert_eq!(run(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn audit_rejects_a_result_for_another_instance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    example(d, "1", "10");
    example(d, "2", "10");
    ok(d, &["solve", "ex1.json", "-o", "solve1.json"]);
    let out = run(d, &["audit", "ex2.json", "solve1.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "schema");
}
