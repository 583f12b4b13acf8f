use std::io::Write;
use std::process::{Command, Output, Stdio};

use qratpp_core::{parse_qdimacs, write_qdimacs};

const XOR_PAIR: &str = "p cnf 2 2\na 1 0\ne 2 0\n1 2 0\n-1 -2 0\n";
const INNER_UNIVERSAL: &str = "p cnf 2 2\ne 1 0\na 2 0\n2 1 0\n-2 -1 0\n";
const MIXED: &str = "c mixed\np cnf 4 4\na 1 0\ne 2 3 0\na 4 0\n1 2 4 0\n-1 3 0\n-2 -3 -4 0\n2 3 0\n";

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qratpp"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn xor_pair_is_solved_sat() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("xor.qdimacs");
    std::fs::write(&path, XOR_PAIR).unwrap();
    let out = run(&[path.to_str().unwrap()], "");
    assert_eq!(out.status.code(), Some(10));
    assert!(stdout(&out).starts_with("c solved: SAT\n"));
}

#[test]
fn inner_universal_simplified_from_stdin() {
    let out = run(&[], INNER_UNIVERSAL);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "p cnf 1 2\ne 1 0\n1 0\n-1 0\n");
}

#[test]
fn unsat_exit_code() {
    let out = run(&[], "p cnf 1 1\ne 1 0\n0\n");
    assert_eq!(out.status.code(), Some(20));
    assert!(stdout(&out).starts_with("c solved: UNSAT\n"));
}

#[test]
fn all_rules_off_canonicalizes() {
    let out = run(
        &["--no-qbce", "--no-ble", "--no-qat", "--no-qrate", "--no-qratu"],
        MIXED,
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), write_qdimacs(&parse_qdimacs(MIXED).unwrap()));
}

#[test]
fn output_reparses_and_stats_on_stderr() {
    let out = run(&["--stats", "--seed", "7", "--qrat"], MIXED);
    let code = out.status.code().unwrap();
    assert!([0, 10, 20].contains(&code));
    parse_qdimacs(&stdout(&out)).unwrap();
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("c reduction #cl="), "{err}");
    assert!(err.contains("checks="), "{err}");
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("result.qdimacs");
    let out = run(&["--out", path.to_str().unwrap()], INNER_UNIVERSAL);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(path).unwrap(), "p cnf 1 2\ne 1 0\n1 0\n-1 0\n");
}

#[test]
fn timed_out_output_is_valid() {
    let out = run(&["--seed", "7", "--soft-time-limit", "0"], MIXED);
    assert_eq!(out.status.code(), Some(0));
    parse_qdimacs(&stdout(&out)).unwrap();
}

#[test]
fn parse_error_exit_one() {
    let out = run(&[], "p cnf 2 1\n1 3 0\n");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line"));
    let out = run(&["/nonexistent/file.qdimacs"], "");
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["--bogus"], "");
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn harness_reports_summary() {
    let out = run(&["harness", "--count", "50", "--kind", "truth", "--seed", "3"], "");
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(
        text.lines().last().unwrap(),
        "summary kind=truth instances=50 violations=0"
    );
    let out = run(&["harness", "--count", "20", "--kind", "propagation"], "");
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("summary kind=propagation episodes=200 "));
}
