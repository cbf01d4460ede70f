use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_safe-imdp"));
    c.env("RUST_LOG", "error");
    c
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(config: &Path, out: &Path) -> Output {
    bin().arg("run").arg(config).arg("--out").arg(out).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Copy of a shipped config with one line replaced.
fn variant(dir: &Path, name: &str, from: &str, to: &str) -> PathBuf {
    let text = fs::read_to_string(configs().join(name)).unwrap();
    assert!(text.contains(from), "{from} not in {name}");
    let path = dir.join(format!("variant-{name}"));
    fs::write(&path, text.replacen(from, to, 1)).unwrap();
    path
}

#[test]
fn run_exit_codes_follow_the_outcome() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = run(&configs().join("small_exact.toml"), &tmp.path().join("ok"));
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).starts_with("satisfied"));

    let enclosed = run(&configs().join("enclosed_goal.toml"), &tmp.path().join("enclosed"));
    assert_eq!(enclosed.status.code(), Some(2));
    assert!(stdout(&enclosed).starts_with("impossible"));

    let short = variant(tmp.path(), "small_exact.toml", "max_iterations = 12", "max_iterations = 0");
    let budget = run(&short, &tmp.path().join("budget"));
    assert_eq!(budget.status.code(), Some(3));
    assert!(stdout(&budget).contains("reason: iteration limit"));

    let bad = variant(tmp.path(), "small_exact.toml", "support = 0.2", "support = -0.2");
    let err = run(&bad, &tmp.path().join("bad"));
    assert_eq!(err.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&err.stderr).contains("noise.support"));
    assert!(!tmp.path().join("bad").exists());
}

#[test]
fn run_writes_every_artifact_reproducibly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("small_exact.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&cfg, &a).status.code(), Some(0));
    assert_eq!(run(&cfg, &b).status.code(), Some(0));
    for f in ["config.toml", "iterations.csv", "timings.csv", "trajectory.csv", "policy.txt", "fsa.txt", "field.csv", "manifest.json"] {
        assert!(a.join(f).is_file(), "missing {f}");
    }
    for f in ["iterations.csv", "trajectory.csv", "policy.txt", "fsa.txt", "field.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs between runs");
    }
    assert_eq!(fs::read(a.join("config.toml")).unwrap(), fs::read(&cfg).unwrap());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"][0]["outcome"], "satisfied");
    assert_eq!(manifest["runs"][0]["seeds"]["noise"], 1_000_001);
}

#[test]
fn batch_members_match_standalone_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("small_exact.toml");
    let dir = tmp.path().join("batch");
    let o = bin()
        .args(["batch", "--seeds", "1,2", "--jobs", "2", "--out"])
        .arg(&dir)
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    // The shipped config carries the seeds batch member 1 derives.
    let solo = tmp.path().join("solo");
    assert_eq!(run(&cfg, &solo).status.code(), Some(0));
    for f in ["iterations.csv", "trajectory.csv"] {
        assert_eq!(fs::read(dir.join("seed-1").join(f)).unwrap(), fs::read(solo.join(f)).unwrap(), "{f}");
    }
    assert!(dir.join("seed-2/iterations.csv").is_file());
    let mut rdr = csv::Reader::from_path(dir.join("aggregate.csv")).unwrap();
    let first: Vec<String> = rdr.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(first, ["1", "2", "mean", "median"]);
}

#[test]
fn batch_rejects_malformed_seed_lists() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["batch", "--seeds", "1,x", "--out"])
        .arg(tmp.path().join("b"))
        .arg(configs().join("small_exact.toml"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn dump_fsa_prints_the_until_automaton() {
    let o = bin().args(["dump-fsa", "!Haz U Goal", "--alphabet", "none"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("state 1 \"true\" accepting"));
    assert!(text.contains("state 2 \"false\" trap"));
    assert!(text.contains("0 -- Goal --> 1"));
    assert!(text.contains("0 -- Haz --> 2"));
    assert!(text.contains("0 -- none --> 0"));
}

#[test]
fn check_reports_bounds_of_a_text_model() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("m.imdp");
    // The 0.7/0.2/0.1 row sums to just under one in floating point.
    fs::write(
        &path,
        "imdp\nstates 4\ninitial 0\nlabels none Goal Haz none\n\
         0 1 1 0.6 0.8\n0 1 2 0.2 0.4\n\
         0 3 1 0.7 0.7\n0 3 2 0.2 0.2\n0 3 3 0.1 0.1\n\
         1 1 1 1 1\n2 2 2 1 1\n3 3 3 1 1\n",
    )
    .unwrap();
    let o = bin().arg("check").arg(&path).arg("!Haz U Goal").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let vals: Vec<f64> = stdout(&o).lines().map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap()).collect();
    assert!((vals[0] - 0.7).abs() < 1e-9, "{vals:?}");
    assert!((vals[1] - 0.8).abs() < 1e-9, "{vals:?}");
}

#[test]
fn check_rejects_infeasible_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.imdp");
    fs::write(&path, "imdp\nstates 2\ninitial 0\nlabels none Goal\n0 1 1 0.2 0.4\n1 1 1 1 1\n").unwrap();
    let o = bin().arg("check").arg(&path).arg("F Goal").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
