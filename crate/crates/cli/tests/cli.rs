use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use uniatt::eval::enumerate_uniform;
use uniatt::{fixtures, parse_tree};

fn uniatt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uniatt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn with_fixtures() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_path_buf();
    let o = uniatt(&["fixtures", path.to_str().unwrap()]);
    assert!(o.status.success());
    (dir, path)
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn eval_ex1() {
    let (_d, dir) = with_fixtures();
    let o = uniatt(&["eval", arg(&dir.join("ex1.att")), "f(e,e)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "d(d(d(e)))\n");
}

#[test]
fn trace_ends_in_the_output() {
    let (_d, dir) = with_fixtures();
    let o = uniatt(&["eval", "--trace", arg(&dir.join("ex1.att")), "f(e,e)"]);
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().ends_with("a(1)"));
    assert!(text.lines().last().unwrap().contains("d(d(d(e)))  [rules root #0]"));
}

#[test]
fn uniformized_run_picks_a_uniform_output() {
    let (_d, dir) = with_fixtures();
    let out = dir.join("run.dattu");
    let o = uniatt(&["uniformize", arg(&dir.join("run.att")), "-o", arg(&out)]);
    assert!(o.status.success());
    let o = uniatt(&["eval", arg(&out), "g(g(e))"]);
    let got = parse_tree(stdout(&o).trim(), None).unwrap();
    let allowed = enumerate_uniform(&fixtures::run(), &parse_tree("g(g(e))", None).unwrap()).unwrap();
    assert!(allowed.contains(&got), "{got}");
}

#[test]
fn uniformizer_check_passes() {
    let (_d, dir) = with_fixtures();
    let o = uniatt(&["check", "uniformizer", arg(&dir.join("run.att")), "--max-size", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(": PASS"));
}

#[test]
fn outputs_are_reproducible() {
    let (_d, dir) = with_fixtures();
    for args in [
        vec!["uniformize", arg(&dir.join("revg.att"))],
        vec!["check", "lemma2", arg(&dir.join("run.att")), "--max-size", "4"],
        vec!["enumerate", arg(&dir.join("run.att")), "g(e)"],
        vec!["compose", arg(&dir.join("prime.la")), arg(&dir.join("unprime.la"))],
    ] {
        let a = uniatt(&args);
        let b = uniatt(&args);
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn failing_check_exits_with_one() {
    let (_d, dir) = with_fixtures();
    let o = uniatt(&[
        "check",
        "equivalence",
        arg(&dir.join("ex1.att")),
        arg(&dir.join("amb.att")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains(": FAIL") && text.contains("input:"), "{text}");
}

#[test]
fn nonfunctional_chain_fails_its_precondition() {
    let (_d, dir) = with_fixtures();
    let o = uniatt(&["check", "composition", arg(&dir.join("branch.att"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("PRECONDITION-FAILED"));
}

#[test]
fn usage_and_parse_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.att");
    std::fs::write(&bad, "att x {\n  input { f:2, f:1 }\n").unwrap();
    let o = uniatt(&["validate", arg(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert_eq!(uniatt(&["frobnicate"]).status.code(), Some(2));
    let (_d, fx) = with_fixtures();
    assert_eq!(
        uniatt(&["eval", arg(&fx.join("ex1.att")), "f(e)"]).status.code(),
        Some(2)
    );
}

#[test]
fn written_fixtures_validate() {
    let (_d, dir) = with_fixtures();
    for (name, _) in fixtures::SOURCES {
        let o = uniatt(&["validate", arg(&dir.join(name))]);
        assert!(o.status.success(), "{name}");
    }
}

#[test]
fn seeded_fixture_is_stable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    uniatt(&["fixtures", arg(a.path()), "--seed", "7"]);
    uniatt(&["fixtures", arg(b.path()), "--seed", "7"]);
    let read = |d: &TempDir| std::fs::read(d.path().join("rand7.att")).unwrap();
    assert_eq!(read(&a), read(&b));
}
