use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn claimpred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_claimpred"))
        .args(args)
        .env_remove("CLAIMPRED_WORKERS")
        .output()
        .expect("spawn claimpred")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const TOY: &str = "X,Y\n0.5,1\n1,2\n2,3\n5,10\n";

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn line<'a>(out: &'a str, key: &str) -> &'a str {
    out.lines()
        .find_map(|l| l.strip_prefix(key))
        .unwrap_or_else(|| panic!("no '{key}' line in:\n{out}"))
        .trim()
}

#[test]
fn help_for_every_subcommand() {
    for sub in ["simulate", "predict", "summarize", "plausibility"] {
        let o = claimpred(&[sub, "--help"]);
        assert_eq!(code(&o), 0, "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
    assert_eq!(code(&claimpred(&["--help"])), 0);
}

#[test]
fn missing_subcommand_or_source_is_usage_error() {
    assert_eq!(code(&claimpred(&[])), 1);
    assert_eq!(code(&claimpred(&["simulate"])), 1);
    assert_eq!(code(&claimpred(&["simulate", "--example", "4"])), 1);
}

#[test]
fn single_replication_is_flagged_low_precision() {
    let o = claimpred(&["simulate", "--example", "1", "--reps", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("warning: low precision"));
}

#[test]
fn unreadable_config_is_usage_error() {
    let o = claimpred(&["simulate", "--config", "/nonexistent/config.json"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read config"));
}

#[test]
fn simulate_is_deterministic_across_workers() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = ["simulate", "--example", "2", "--reps", "200", "--seed", "7"];
    let o1 = claimpred(&[&base[..], &["--workers", "1", "--out", s(&a)]].concat());
    let o2 = claimpred(&[&base[..], &["--workers", "3", "--out", s(&b)]].concat());
    assert_eq!(code(&o1), 0);
    assert_eq!(o1.stdout, o2.stdout);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let o3 = claimpred(&["simulate", "--example", "2", "--reps", "200", "--seed", "8"]);
    assert_ne!(o1.stdout, o3.stdout);
}

#[test]
fn predict_positive_branch() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "toy.csv", TOY);
    let o = claimpred(&[
        "predict",
        "--data",
        s(&data),
        "--response",
        "Y",
        "--predictors",
        "X",
        "--transform",
        "t1",
        "--alpha",
        "0.2",
        "--x-new",
        "3",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(line(&out, "rank:"), "4");
    assert_eq!(line(&out, "upper:"), "8");
    assert_eq!(line(&out, "branch:"), "positive");
}

#[test]
fn zero_transform_matches_response_only_bound() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "toy.csv", TOY);
    let o = claimpred(&[
        "predict",
        "--data",
        s(&data),
        "--response",
        "Y",
        "--predictors",
        "X",
        "--transform",
        "0",
        "--alpha",
        "0.2",
        "--x-new",
        "3",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(line(&stdout(&o), "upper:"), "10");
}

#[test]
fn holdout_last_reports_coverage() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "toy.csv", "X,Y\n0.5,1\n1,2\n2,3\n5,10\n3,4\n");
    let o = claimpred(&[
        "predict",
        "--data",
        s(&data),
        "--response",
        "Y",
        "--predictors",
        "X",
        "--transform",
        "t1",
        "--alpha",
        "0.2",
        "--holdout-last",
    ]);
    assert_eq!(code(&o), 0);
    assert!(line(&stdout(&o), "held-out response:").starts_with("4 (covered: true)"));
}

#[test]
fn transform_outside_domain_is_data_error() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "toy.csv", TOY);
    let o = claimpred(&[
        "predict",
        "--data",
        s(&data),
        "--response",
        "Y",
        "--predictors",
        "X",
        "--transform",
        "log(t1-99)",
        "--alpha",
        "0.2",
        "--x-new",
        "3",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn negative_response_is_data_error() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "neg.csv", "X,Y\n1,1\n2,-2\n3,3\n");
    let o = claimpred(&[
        "predict",
        "--data",
        s(&data),
        "--response",
        "Y",
        "--predictors",
        "X",
        "--transform",
        "t1",
        "--alpha",
        "0.5",
        "--x-new",
        "1",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_transform_syntax_and_unknown_column_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "toy.csv", TOY);
    let bad_expr = claimpred(&[
        "predict",
        "--data",
        s(&data),
        "--response",
        "Y",
        "--predictors",
        "X",
        "--transform",
        "t1 +",
        "--alpha",
        "0.2",
        "--x-new",
        "3",
    ]);
    assert_eq!(code(&bad_expr), 1);
    let bad_col = claimpred(&["summarize", "--data", s(&data), "--cols", "Z"]);
    assert_eq!(code(&bad_col), 1);
}

#[test]
fn two_sided_infeasible_alpha_exits_3() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "toy.csv", TOY);
    let o = claimpred(&[
        "predict",
        "--data",
        s(&data),
        "--response",
        "Y",
        "--predictors",
        "X",
        "--transform",
        "t1",
        "--alpha",
        "0.1",
        "--x-new",
        "3",
        "--two-sided",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn summarize_prints_quartiles() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "toy.csv", "A,B\n1,\n2,4\n3,.\n4,8\n");
    let o = claimpred(&["summarize", "--data", s(&data), "--cols", "A,B"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let a: Vec<&str> = out.lines().nth(1).unwrap().split_whitespace().collect();
    assert_eq!(a, ["A", "1.000", "1.000", "2.000", "3.000", "4.000", "2.500"]);
    let b: Vec<&str> = out.lines().nth(2).unwrap().split_whitespace().collect();
    assert_eq!(b[6], "3.000", "missing cells imputed with 0");
}

#[test]
fn plausibility_matches_hand_computation() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "y.csv", "Y\n1\n2\n3\n");
    let o = claimpred(&[
        "plausibility",
        "--data",
        s(&data),
        "--response",
        "Y",
        "--y-candidate",
        "10",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(line(&out, "plausibility:"), "0.25");
    assert_eq!(line(&out, "n:"), "3");
}
