use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lowrank(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowrank"))
        .args(args)
        .current_dir(dir)
        .env_remove("LOWRANK_SEED")
        .output()
        .expect("binary runs")
}

fn write_diag(dir: &Path) {
    fs::write(
        dir.join("y.mtx"),
        "%%MatrixMarket matrix coordinate real general\n3 3 3\n1 1 3\n2 2 2\n3 3 1\n",
    )
    .unwrap();
}

fn last_f(csv: &str) -> f64 {
    csv.lines()
        .skip(1)
        .last()
        .and_then(|l| l.split(',').nth(2))
        .map_or(0.0, |f| f.parse().unwrap())
}

#[test]
fn fit_diagonal_target_reaches_sum_of_squares() {
    let tmp = tempfile::tempdir().unwrap();
    write_diag(tmp.path());
    for (k, expected) in [(2, 13.0), (3, 14.0)] {
        let out = lowrank(
            tmp.path(),
            &["fit", "--loss", "quadratic", "--input", "y.mtx", "--k", &k.to_string(), "--algorithm", "geco", "--out-dir", "o"],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = fs::read_to_string(tmp.path().join("o/history.csv")).unwrap();
        assert!(csv.starts_with("iteration,gain,f_after,sigma_estimate\n"));
        assert!((last_f(&csv) - expected).abs() < 1e-8, "k={k}: {csv}");
    }
}

#[test]
fn zero_budget_writes_empty_support() {
    let tmp = tempfile::tempdir().unwrap();
    write_diag(tmp.path());
    let out = lowrank(tmp.path(), &["fit", "--loss", "quadratic", "--input", "y.mtx", "--k", "0", "--out-dir", "o"]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(tmp.path().join("o/support.txt")).unwrap(), "");
    assert_eq!(last_f(&fs::read_to_string(tmp.path().join("o/history.csv")).unwrap()), 0.0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("f=0e0"));
}

#[test]
fn same_seed_gives_identical_history() {
    let tmp = tempfile::tempdir().unwrap();
    write_diag(tmp.path());
    let run = |dir: &str| {
        let out = lowrank(
            tmp.path(),
            &["fit", "--loss", "quadratic", "--input", "y.mtx", "--k", "2", "--algorithm", "greedy", "--seed", "5", "--out-dir", dir],
        );
        assert!(out.status.success());
        fs::read(tmp.path().join(dir).join("history.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn seed_comes_from_environment_unless_given() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_lowrank"));
        cmd.current_dir(tmp.path()).args(["experiment", "recovery", "--n", "100", "--k", "2"]).args(extra);
        match env {
            Some(v) => cmd.env("LOWRANK_SEED", v),
            None => cmd.env_remove("LOWRANK_SEED"),
        };
        cmd.output().unwrap().stdout
    };
    assert_eq!(run(Some("9"), &[]), run(None, &["--seed", "9"]));
    assert_ne!(run(Some("9"), &[]), run(None, &[]));
    assert_eq!(run(Some("1"), &["--seed", "9"]), run(None, &["--seed", "9"]));
}

#[test]
fn config_file_fills_missing_flags() {
    let tmp = tempfile::tempdir().unwrap();
    write_diag(tmp.path());
    fs::write(tmp.path().join("run.cfg"), "# fit settings\nk = 1\nalgorithm = greedy\nout_dir = cfg_out\n").unwrap();
    let out = lowrank(tmp.path(), &["--config", "run.cfg", "fit", "--loss", "quadratic", "--input", "y.mtx"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!((last_f(&fs::read_to_string(tmp.path().join("cfg_out/history.csv")).unwrap()) - 9.0).abs() < 1e-8);
    // an explicit flag beats the file
    let out = lowrank(tmp.path(), &["--config", "run.cfg", "fit", "--loss", "quadratic", "--input", "y.mtx", "--k", "2"]);
    assert!(out.status.success());
    assert!((last_f(&fs::read_to_string(tmp.path().join("cfg_out/history.csv")).unwrap()) - 13.0).abs() < 1e-8);
}

#[test]
fn quick_verification_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lowrank(tmp.path(), &["verify", "--suite", "quick", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("check,seed,lhs,rhs,slack,holds\n"));
}

#[test]
fn recovery_suite_emits_one_passing_row_per_instance() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lowrank(tmp.path(), &["verify", "--suite", "thm4", "--instances", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn failing_suite_exits_one_and_names_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lowrank(tmp.path(), &["verify", "--suite", "thm1", "--instances", "20"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAILED thm1_"));
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(lowrank(tmp.path(), &["verify", "--suite", ""]).status.code(), Some(2));
    assert_eq!(
        lowrank(tmp.path(), &["experiment", "sbm", "--p-grid", "0.9:0.5:0.1"]).status.code(),
        Some(2)
    );
    assert_eq!(lowrank(tmp.path(), &["fit", "--loss", "cubic", "--input", "y.mtx"]).status.code(), Some(2));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lowrank(tmp.path(), &["fit", "--loss", "quadratic", "--input", "absent.mtx"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.mtx"));
}

#[test]
fn sbm_row_count_follows_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lowrank(
        tmp.path(),
        &["experiment", "sbm", "--n", "30", "--p-grid", "0.7:0.9:0.1", "--runs", "2", "--out", "sbm.csv", "--adjacency-dir", "graphs"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("sbm.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 9 * 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("Greedy,3,0.7,0,"));
    assert_eq!(fs::read_dir(tmp.path().join("graphs")).unwrap().count(), 3 * 2);
}

#[test]
fn linear_loss_fits_from_design_files() {
    let tmp = tempfile::tempdir().unwrap();
    // four measurements of a 2×2 parameter: the standard basis
    fs::write(
        tmp.path().join("x.mtx"),
        "%%MatrixMarket matrix coordinate real general\n4 4 4\n1 1 1\n2 2 1\n3 3 1\n4 4 1\n",
    )
    .unwrap();
    fs::write(tmp.path().join("y.mtx"), "%%MatrixMarket matrix array real general\n4 1\n2\n0\n0\n1\n").unwrap();
    let out = lowrank(
        tmp.path(),
        &["fit", "--loss", "linear", "--input", "x.mtx", "--responses", "y.mtx", "--shape", "2,2", "--k", "2", "--out-dir", "o"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // ℓ(0) = −(4 + 1)/4, ℓ(Θ*) = 0
    assert!((last_f(&fs::read_to_string(tmp.path().join("o/history.csv")).unwrap()) - 1.25).abs() < 1e-8);
}
