use std::path::Path;
use std::process::{Command, Output};

use kmax_cli::report::parse_test_report;
use kmax_core::pipeline::MethodTag;

fn kmax(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kmax")).args(args).current_dir(dir).env("KMAX_THREADS", "1").output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn assert_one_line_error(out: &Output, needle: &str) {
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "diagnostic: {err}");
    assert!(err.contains(needle), "diagnostic {err:?} lacks {needle:?}");
}

fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("two.csv"), "group,x\na,0.0\na,0.2\nb,1.0\nb,1.3\n").unwrap();
    std::fs::write(dir.path().join("three.csv"), "group,x\na,0\nb,1\nc,3\n").unwrap();
    std::fs::write(dir.path().join("levels.csv"), "group,level\ng1,1\ng1,2\ng2,2\ng2,2\ng3,1\ng3,2\n").unwrap();
    dir
}

#[test]
fn exact_test_on_csv() {
    let dir = workdir();
    let text = stdout(&kmax(&["test", "--input", "three.csv", "--kernel", "linear", "--method", "perm"], dir.path()));
    let (result, config) = parse_test_report(&text).unwrap();
    assert_eq!(result.statistic, 3.0);
    assert_eq!(result.argmax_pair, Some((0, 2)));
    assert_eq!(result.method, MethodTag::PermExact);
    // every assignment of three singletons has the same maximum
    assert_eq!(result.p_value, 1.0);
    assert_eq!(config.input.as_deref(), Some(Path::new("three.csv")));
    std::fs::write(dir.path().join("pairs.csv"), "group,x\nu,0\nu,0\nv,1\nv,1\n").unwrap();
    let text = stdout(&kmax(&["test", "--input", "pairs.csv", "--kernel", "linear", "--method", "perm"], dir.path()));
    assert_eq!(parse_test_report(&text).unwrap().0.p_value, 1.0 / 3.0);
}

#[test]
fn report_echo_reproduces_the_run() {
    let dir = workdir();
    let first = stdout(&kmax(
        &["test", "--scenario", "b", "--K", "3", "--n", "6", "--d", "2", "--M", "59", "--seed", "4"],
        dir.path(),
    ));
    let (result, config) = parse_test_report(&first).unwrap();
    assert!(result.bandwidth.is_some());
    std::fs::write(dir.path().join("run.toml"), config.to_toml().unwrap()).unwrap();
    let again = stdout(&kmax(&["test", "--config", "run.toml"], dir.path()));
    assert_eq!(first, again);
    let tweaked = stdout(&kmax(&["test", "--config", "run.toml", "--M", "19"], dir.path()));
    assert_eq!(parse_test_report(&tweaked).unwrap().0.num_permutations, Some(19));
}

#[test]
fn out_flag_writes_file() {
    let dir = workdir();
    let out = kmax(&["test", "--input", "two.csv", "--method", "bobkov", "--out", "r.json"], dir.path());
    assert_eq!(stdout(&out), "");
    let (result, _) = parse_test_report(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(result.method, MethodTag::Bobkov);
}

#[test]
fn discrete_input_with_gumbel() {
    let dir = workdir();
    let text =
        stdout(&kmax(&["test", "--input", "levels.csv", "--kernel", "chisquare", "--method", "gumbel"], dir.path()));
    let (result, config) = parse_test_report(&text).unwrap();
    assert_eq!(result.method, MethodTag::Gumbel);
    assert!((0.0..=1.0).contains(&result.p_value));
    assert!(serde_json::to_string(&config.test.kernel).unwrap().contains("0.5"));
}

#[test]
fn error_paths_are_one_line() {
    let dir = workdir();
    std::fs::write(dir.path().join("bad.csv"), "group,x\na,1\nb,x1\n").unwrap();
    std::fs::write(dir.path().join("nogroup.csv"), "x,y\n1,2\n").unwrap();
    assert_one_line_error(&kmax(&["test", "--input", "bad.csv"], dir.path()), "line 3");
    assert_one_line_error(&kmax(&["test", "--input", "nogroup.csv"], dir.path()), "group");
    assert_one_line_error(&kmax(&["test", "--input", "three.csv", "--method", "bobkov"], dir.path()), "balanced");
    assert_one_line_error(&kmax(&["test", "--input", "two.csv", "--alpha", "1.5"], dir.path()), "alpha");
    assert_one_line_error(&kmax(&["test", "--input", "missing.csv"], dir.path()), "missing.csv");
    assert_one_line_error(&kmax(&["test", "--input", "two.csv", "--bandwidth", "-1"], dir.path()), "bandwidth");
    assert_one_line_error(&kmax(&["test"], dir.path()), "input file or a scenario");
    assert_one_line_error(&kmax(&["test", "--method", "nope"], dir.path()), "nope");
    assert_one_line_error(&kmax(&["frobnicate"], dir.path()), "frobnicate");
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_kmax"))
        .args(["test", "--input", "two.csv"])
        .current_dir(dir.path())
        .env("KMAX_THREADS", "many")
        .output()
        .unwrap();
    assert_one_line_error(&bad_threads, "KMAX_THREADS");
}

#[test]
fn power_table_shape() {
    let dir = workdir();
    let text = stdout(&kmax(
        &["power", "--scenario", "a", "--K", "2,3", "--reps", "4", "--M", "9", "--methods", "max_eng,disco"],
        dir.path(),
    ));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,scenario,K,n,d,power,mc_se,reps,seed");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("max_eng,normal_location,2,10,5,"));
}

#[test]
fn other_harnesses_run() {
    let dir = workdir();
    let bounds = stdout(&kmax(&["bounds", "--N", "10", "--reps", "3", "--format", "json"], dir.path()));
    let rows: serde_json::Value = serde_json::from_str(&bounds).unwrap();
    assert_eq!(rows[0]["bound"].as_f64(), Some(10.0));
    let tail =
        stdout(&kmax(&["tailratio", "--n", "20", "--reps", "100", "--nsim", "1000", "--probs", "0.9"], dir.path()));
    assert_eq!(tail.lines().count(), 2);
    std::fs::write(dir.path().join("s.txt"), "1\n1\n").unwrap();
    let g = stdout(&kmax(&["gumbel", "--spectrum", "s.txt", "--value", "0.5", "--K", "4", "--n", "30"], dir.path()));
    let v: serde_json::Value = serde_json::from_str(&g).unwrap();
    assert_eq!(v["mu1"], 2);
    assert_one_line_error(
        &kmax(&["gumbel", "--spectrum", "s.txt", "--value", "0.5", "--K", "2", "--n", "30"], dir.path()),
        "K",
    );
}
