//! End-to-end tests of the `intbox` command line. Golden files live in
//! `tests/golden`; set `INTBOX_BLESS=1` to rewrite them.

use std::path::{Path, PathBuf};
use std::process::Command;

use clap::Parser;
use serde_json::Value;

use intbox_cli::{execute, CliConfig, Output, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION};

fn data(name: &str) -> String {
    format!("tests/data/{name}")
}

fn exec(args: &[&str]) -> Output {
    let cli = CliConfig::try_parse_from(std::iter::once("intbox").chain(args.iter().copied())).unwrap();
    execute(&cli).unwrap()
}

fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("INTBOX_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs from golden");
}

fn binary(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_intbox"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn analyze_text_golden() {
    let out = exec(&["analyze", &data("loop.mini")]);
    assert_eq!(out.code, EXIT_OK);
    golden("analyze_loop.txt", &out.text);
}

#[test]
fn analyze_json_golden() {
    let out = exec(&["--format", "json", "analyze", &data("loop.mini")]);
    golden("analyze_loop.json", &out.text);
    let v: Value = serde_json::from_str(&out.text).unwrap();
    let exit = v["nodes"].as_array().unwrap().last().unwrap();
    assert_eq!(exit["stmt"], "exit");
    assert_eq!(exit["before"]["i"], "[10,10]");
    assert_eq!(v["config"]["widening_delay"], 2);
}

#[test]
fn knobs_reach_the_analysis() {
    let out = exec(&["--format", "json", "analyze", "--narrowing-passes", "0", &data("loop.mini")]);
    let v: Value = serde_json::from_str(&out.text).unwrap();
    assert_eq!(v["config"]["narrowing_passes"], 0);
    let head = &v["nodes"][1];
    assert_eq!(head["before"]["i"], "[0,+inf]");
}

#[test]
fn optimize_golden() {
    let out = exec(&["optimize", &data("guard.mini")]);
    assert_eq!(out.code, EXIT_OK);
    golden("optimize_guard.txt", &out.text);
}

#[test]
fn optimize_json_carries_the_rewritten_program() {
    let out = exec(&["--format", "json", "optimize", &data("guard.mini")]);
    let v: Value = serde_json::from_str(&out.text).unwrap();
    let program = v["output"].as_str().unwrap();
    assert!(program.contains("y = x + 1;") && !program.contains("y = 0 - 1;"), "{program}");
}

#[test]
fn instrument_golden() {
    let out = exec(&["instrument", &data("loop.mini")]);
    golden("instrument_loop.txt", &out.text);
}

#[test]
fn contract_prints_the_narrowed_box() {
    let out = exec(&["contract", "--constraint", "x + y == 5", "--box", "x:[0,10], y:[2,4]"]);
    assert_eq!(out.text.trim(), "x:[1,3], y:[2,4]");
    let out = exec(&["contract", "--constraint", "x + y == 9", "--box", "x:[0,1], y:[0,1]"]);
    assert_eq!(out.text.trim(), "empty");
}

#[test]
fn check_reports_clean_programs() {
    let out = exec(&["check", &data("guard.mini")]);
    assert_eq!(out.code, EXIT_OK, "{}", out.text);
    assert!(out.text.ends_with("clean\n"), "{}", out.text);
}

#[test]
fn failing_assertions_exit_with_one() {
    let (code, stdout, _) = binary(&["analyze", &data("failing.mini")]);
    assert_eq!(code, EXIT_VIOLATION);
    assert!(stdout.contains("assertion always fails: main:n2"), "{stdout}");
    let (code, _, _) = binary(&["optimize", &data("failing.mini")]);
    assert_eq!(code, EXIT_VIOLATION);
}

#[test]
fn usage_errors_exit_with_two() {
    let (code, _, stderr) = binary(&["analyze", &data("broken.mini")]);
    assert_eq!(code, EXIT_USAGE);
    assert!(stderr.contains("broken.mini:1:9"), "{stderr}");
    assert_eq!(binary(&["analyze", "tests/data/missing.mini"]).0, EXIT_USAGE);
    assert_eq!(binary(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(binary(&["contract", "--constraint", "x +", "--box", "x:[0,1]"]).0, EXIT_USAGE);
    assert_eq!(binary(&["--help"]).0, EXIT_OK);
}

#[test]
fn output_flag_writes_a_file() {
    let path: PathBuf = std::env::temp_dir().join(format!("intbox-cli-test-{}.json", std::process::id()));
    let p = path.to_str().unwrap();
    let (code, stdout, _) = binary(&["--format", "json", "-o", p, "analyze", &data("loop.mini")]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["nodes"].is_array());
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn every_corpus_program_checks_clean() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = exec(&["check", path.to_str().unwrap()]);
        assert_eq!(out.code, EXIT_OK, "{}: {}", path.display(), out.text);
        n += 1;
    }
    assert_eq!(n, 30);
}
