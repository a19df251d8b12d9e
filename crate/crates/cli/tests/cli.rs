use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hashcount");
const SAT: &str = env!("CARGO_BIN_EXE_hashcount-sat");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("HASHCOUNT_SOLVER")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

/// A satisfiable 3-CNF with a few thousand models.
fn medium_cnf() -> String {
    let mut s = String::from("p cnf 16 12\n");
    for i in 0..12u32 {
        let a = i % 16 + 1;
        let b = (i * 5 + 3) % 16 + 1;
        let c = (i * 7 + 11) % 16 + 1;
        s.push_str(&format!("{a} -{b} {c} 0\n"));
    }
    s
}

#[test]
fn plan_reports_both_repetition_counts() {
    let o = run(&["plan", "--epsilon", "0.8", "--delta", "0.001"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("t(rounding)=19 t(classic)=117"), "{text}");
    assert!(text.contains("thresh=72"));
}

#[test]
fn plan_json() {
    let o = run(&["plan", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["t_rounding"], 19);
    assert_eq!(v["t_classic"], 117);
    assert_eq!(v["round_up"], true);
}

#[test]
fn exact_counts_small_formula() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "or.cnf", "p cnf 2 1\n1 2 0\n");
    let o = run(&["exact", "--input", &f]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "3");
}

#[test]
fn count_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "m.cnf", &medium_cnf());
    let args = ["count", "--input", &f, "--epsilon", "0.8", "--delta", "0.1", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("exact: false"), "{text}");
    assert!(text.contains(" × 2^"));
    assert!(text.contains("seed: 7"));
    assert!(text.contains("t: 5"));
}

#[test]
fn count_json_and_external_solver_agree() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "m.cnf", &medium_cnf());
    let base = ["count", "--input", &f, "--delta", "0.2", "--seed", "3", "--format", "json"];
    let a = run(&base);
    let mut ext: Vec<&str> = base.to_vec();
    ext.extend(["--solver", SAT]);
    let b = run(&ext);
    assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    let va: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let vb: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(va, vb);
    assert_eq!(va["seed"], 3);
    assert_eq!(va["rounds"], 3);
}

#[test]
fn seed_is_printed_when_not_given() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "or.cnf", "p cnf 2 1\n1 2 0\n");
    let text = stdout(&run(&["count", "--input", &f]));
    assert!(text.lines().any(|l| l.starts_with("seed: ")), "{text}");
    assert!(text.contains("decimal: 3"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cnf", "p cnf 2 1\n1 5 0\n");
    let good = write(dir.path(), "or.cnf", "p cnf 2 1\n1 2 0\n");
    assert_eq!(run(&["count", "--input", &bad]).status.code(), Some(3));
    assert_eq!(run(&["count", "--input", &good, "--epsilon", "0"]).status.code(), Some(2));
    assert_eq!(run(&["count", "--input", &good, "--delta", "2"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let missing = run(&["count", "--input", &good, "--solver", "/nonexistent/solver"]);
    assert_eq!(missing.status.code(), Some(4));
    let med = write(dir.path(), "m.cnf", &medium_cnf());
    assert_eq!(run(&["count", "--input", &med, "--timeout", "0"]).status.code(), Some(4));
}

#[test]
fn curves_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curves.csv");
    let o = run(&["curves", "--epsilon", "0.8", "--t-max", "125", "--output", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,round_bound,classic_bound"));
    assert_eq!(lines.count(), 63);
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.cnf", &medium_cnf());
    write(dir.path(), "b.cnf", "p cnf 2 1\n1 2 0\n");
    let csv = dir.path().join("runs.csv");
    let o = run(&[
        "bench",
        "--dir",
        dir.path().to_str().unwrap(),
        "--delta",
        "0.2",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PAR-2"));
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 5);
    let empty = tempfile::tempdir().unwrap();
    assert_eq!(run(&["bench", "--dir", empty.path().to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn sat_helper_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let sat = write(dir.path(), "s.cnf", "p cnf 3 2\n1 2 0\n-1 0\nx 2 3 0\n");
    let o = Command::new(SAT).arg(&sat).output().unwrap();
    assert_eq!(o.status.code(), Some(10));
    assert_eq!(stdout(&o), "s SATISFIABLE\nv -1 2 -3 0\n");
    let unsat = write(dir.path(), "u.cnf", "p cnf 1 2\n1 0\n-1 0\n");
    let o = Command::new(SAT).arg(&unsat).output().unwrap();
    assert_eq!(o.status.code(), Some(20));
    assert_eq!(stdout(&o), "s UNSATISFIABLE\n");
}
