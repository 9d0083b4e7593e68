use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_benders-atoms"))
}

fn poc_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/poc.milp.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_poc_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", poc_path().to_str().unwrap(), "--sampler", "exact", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "status=Optimal objective=2.0 iterations=2");
    let trace = fs::read_to_string(dir.path().join("poc.trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 2);
    let summary = fs::read_to_string(dir.path().join("poc.summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("poc,Optimal,2,0,2,9,"), "{summary}");
}

#[test]
fn missing_file_is_error() {
    let out = run(&["solve", "/definitely/not/here.milp.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("error"));
}

#[test]
fn emulator_over_budget() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "solve",
        poc_path().to_str().unwrap(),
        "--sampler",
        "emulator",
        "--max-qubits",
        "8",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("BudgetExceeded"), "{}", stderr(&out));
}

fn write_instance(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

#[test]
fn infeasible_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_instance(
        dir.path(),
        "inf.milp.json",
        r#"{"n":2,"p":1,"m1":1,"m2":1,"A":[[0,0]],"G":[[1]],"b":[-1],"B":[[1,1]],"b_prime":[1],"c":[1,1],"h":[1]}"#,
    );
    let out = run(&["solve", p.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("status=Infeasible"));
}

#[test]
fn unbounded_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_instance(
        dir.path(),
        "unb.milp.json",
        r#"{"n":1,"p":1,"m1":0,"m2":0,"A":[],"G":[],"b":[],"B":[],"b_prime":[],"c":[1],"h":[1]}"#,
    );
    let out = run(&["solve", p.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn bench_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let out = bin()
            .args(["bench", "--count", "6", "--backends", "exact,anneal", "--shots", "20", "--seed", "5", "--out-dir"])
            .arg(dir.path())
            .env("BENDERS_ATOMS_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    for f in ["records.csv", "aggregates.csv"] {
        let x = fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
    let records = fs::read_to_string(a.path().join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 6 * 2);
}

#[test]
fn bench_help_lists_columns() {
    let out = run(&["bench", "--help"]);
    let text = stdout(&out);
    for col in ["optimal_objective", "feasible_pct", "gap_ci95", "wall_ms", "BENDERS_ATOMS_THREADS"] {
        assert!(text.contains(col), "missing {col}");
    }
}

#[test]
fn embed_reports_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let one = write_instance(dir.path(), "one.json", r#"{"t":1,"constant":0,"entries":[[0,0,-1.0]]}"#);
    let out = run(&["embed", one.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "atoms=1 deviation=0 locally_optimal=true");
    let reg: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("register.json")).unwrap()).unwrap();
    assert_eq!(reg["positions"][0], serde_json::json!([0.0, 0.0]));

    let two = write_instance(dir.path(), "two.json", r#"{"t":2,"constant":0,"entries":[[0,1,5.42]]}"#);
    let out = run(&["embed", two.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(stdout(&out).contains("locally_optimal=true"), "{}", stdout(&out));
}

#[test]
fn embed_oversize_fails() {
    let dir = tempfile::tempdir().unwrap();
    let big = write_instance(dir.path(), "big.json", r#"{"t":13,"constant":0,"entries":[[0,1,1.0]]}"#);
    let out = run(&["embed", big.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_dumps_qubo_for_embed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["solve", poc_path().to_str().unwrap(), "--dump-qubo", "--out-dir", d]);
    assert_eq!(out.status.code(), Some(0));
    let q: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("poc.qubo.json")).unwrap()).unwrap();
    assert_eq!(q["t"], 9);
    let out = run(&["embed", dir.path().join("poc.qubo.json").to_str().unwrap(), "--out-dir", d]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("atoms=9 "));
}

#[test]
fn trace_dump_table_and_pulse() {
    let dir = tempfile::tempdir().unwrap();
    run(&["solve", poc_path().to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    let out = run(&["trace-dump", dir.path().join("poc.trace.jsonl").to_str().unwrap()]);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().contains("Optimality"));

    let out = run(&["trace-dump", "--pulse", "6,-10,10,2", "--steps", "4"]);
    let csv = stdout(&out);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "time,omega,delta");
    assert_eq!(lines.len(), 6);
    assert!(lines[3].starts_with("1.000000000,6.000000000,0.000000000"), "{}", lines[3]);
}

#[test]
fn generate_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["generate", "--count", "3", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let n = fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(n, 3);
    let solved = run(&["solve", dir.path().join("instance_000.milp.json").to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(solved.status.code(), Some(0), "{}", stderr(&solved));
}

#[test]
fn unknown_sampler_rejected() {
    let out = run(&["solve", poc_path().to_str().unwrap(), "--sampler", "dwave"]);
    assert_eq!(out.status.code(), Some(2));
}
