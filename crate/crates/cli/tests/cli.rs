use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gnf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnf")).args(args).env_remove("GNF_OUT_DIR").output().expect("gnf runs")
}

fn scratch(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn dry_run_config_round_trips() {
    let d = scratch("dry");
    let first = gnf(&["verify", "apriori", "--grid", "default", "--p", "1.75", "--h", "0.3", "--dry-run"]);
    assert_eq!(first.status.code(), Some(0));
    let text = stdout(&first);
    assert!(text.contains("p = 1.75") && text.contains("ps = [1.75]"), "{text}");
    let path = d.join("run.toml");
    std::fs::write(&path, &text).unwrap();
    let again = gnf(&["--config", path.to_str().unwrap(), "--dry-run", "verify", "apriori"]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(stdout(&again), text);
}

#[test]
fn flags_beat_config_and_environment() {
    let d = scratch("precedence");
    let path = d.join("c.toml");
    std::fs::write(&path, "out_dir = \"from-file\"\n[params]\np = 3.0\nre = 2.0\n").unwrap();
    let cfg = path.to_str().unwrap();
    let o = gnf(&["--config", cfg, "--dry-run", "solve", "--p", "1.5"]);
    let t = stdout(&o);
    assert!(t.contains("p = 1.5") && t.contains("re = 2.0") && t.contains("out_dir = \"from-file\""), "{t}");
    let env = Command::new(env!("CARGO_BIN_EXE_gnf"))
        .args(["--config", cfg, "--dry-run", "solve"])
        .env("GNF_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(stdout(&env).contains("out_dir = \"from-env\""));
    let flag = Command::new(env!("CARGO_BIN_EXE_gnf"))
        .args(["--config", cfg, "--dry-run", "--out-dir", "from-flag", "solve"])
        .env("GNF_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(stdout(&flag).contains("out_dir = \"from-flag\""));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["solve", "--bogus"][..],
        &["solve", "--p", "abc"],
        &["solve", "--p", "1.0", "--dry-run"],
        &["solve", "--shape", "hexagon"],
        &["verify", "apriori", "--grid", "huge"],
        &["study"],
    ] {
        let o = gnf(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
    let d = scratch("badcfg");
    let path = d.join("c.toml");
    std::fs::write(&path, "[params]\nq = 2.0\n").unwrap();
    assert_eq!(gnf(&["--config", path.to_str().unwrap(), "solve"]).status.code(), Some(2));
    std::fs::write(&path, "command = \"study dean\"\n").unwrap();
    assert_eq!(gnf(&["--config", path.to_str().unwrap(), "solve"]).status.code(), Some(2));
}

#[test]
fn small_poiseuille_solve_writes_artifacts() {
    let d = scratch("solve");
    let o = gnf(&[
        "solve",
        "--p",
        "2",
        "--delta",
        "0",
        "--re",
        "0",
        "--g",
        "1",
        "--shape",
        "disk",
        "--h",
        "0.25",
        "--out-dir",
        d.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let t = stdout(&o);
    assert!(t.contains("unidirectional: true"), "{t}");
    assert!(!t.contains("FAIL"), "{t}");
    for f in ["solution.vtk", "coefficients.txt", "report.json"] {
        assert!(d.join(f).is_file(), "{f}");
    }
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["converged"], true);
}

#[test]
fn curved_solve_is_not_unidirectional() {
    let d = scratch("curved");
    let o = gnf(&["solve", "--p", "4", "--delta", "0.2", "--re", "20", "--h", "0.25", "--out-dir", d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let t = stdout(&o);
    assert!(t.contains("unidirectional: false") && t.contains("thick.du-2b"), "{t}");
}

#[test]
fn same_seed_single_thread_gives_identical_csv() {
    let run = |name: &str| {
        let d = scratch(name);
        let o = gnf(&["--seed", "11", "--threads", "1", "--out-dir", d.to_str().unwrap(), "verify", "sobolev", "--n", "5", "--h", "0.3"]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(d.join("records.csv")).unwrap()
    };
    let a = run("repro-a");
    assert_eq!(a, run("repro-b"));
    assert!(!a.is_empty());
}

#[test]
fn failing_records_exit_one() {
    // the stated pointwise continuity constants are violated by random pairs
    let d = scratch("tensors");
    let o = gnf(&["--out-dir", d.to_str().unwrap(), "verify", "tensors", "--n", "200", "--ps", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let t = stdout(&o);
    assert!(t.contains("continuity_factor_two"), "{t}");
    assert!(d.join("records.csv").is_file() && d.join("summary.txt").is_file());
}

#[test]
fn uniqueness_study_prints_distance() {
    let d = scratch("uniq");
    let o = gnf(&["--out-dir", d.to_str().unwrap(), "study", "uniqueness", "--p", "3", "--h", "0.25", "--n-guesses", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("max pairwise distance"));
    assert!(d.join("uniqueness.json").is_file());
}

#[test]
fn mesh_build_then_info_from_file() {
    let d = scratch("mesh");
    let o = gnf(&["--out-dir", d.to_str().unwrap(), "mesh", "build", "--h", "0.3"]);
    assert_eq!(o.status.code(), Some(0));
    let built = stdout(&o);
    let info = gnf(&["mesh", "info", "--mesh-file", d.join("mesh.txt").to_str().unwrap()]);
    assert_eq!(info.status.code(), Some(0));
    let cells = |s: &str| s.lines().find(|l| l.starts_with("cells")).map(str::to_owned);
    assert_eq!(cells(&built), cells(&stdout(&info)));
}
