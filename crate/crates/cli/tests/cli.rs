use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sspif(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sspif"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

/// Header row followed by data rows.
fn csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn verify_tableaux_registry() {
    let dir = TempDir::new().unwrap();
    let o = sspif(&["verify-tableaux"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    for (name, c) in [
        ("eSSPRK(3,3)", "C=1.0000"),
        ("eSSPRK(4,3)", "C=2.0000"),
        ("eSSPRK(5,4)", "C=1.5082"),
        ("eSSPRK(10,4)", "C=6.0000"),
    ] {
        let line = out.lines().find(|l| l.starts_with(name)).unwrap();
        assert!(line.contains(c) && line.contains("order=pass"), "{line}");
    }
    let plus = out.lines().find(|l| l.starts_with("eSSPRK+(3,3)")).unwrap();
    assert!(plus.ends_with("decreasing pairs: none"), "{plus}");
}

#[test]
fn verify_tableaux_reads_files_and_flags_corruption() {
    let dir = TempDir::new().unwrap();
    let text = sspif::tableaux::registry_get("eSSPRK(3,3)")
        .unwrap()
        .to_text()
        .replace("eSSPRK(3,3)", "mine");
    let good = write(dir.path(), "good.tab", &text);
    let o = sspif(&["verify-tableaux", "--tableau-file", &good], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l.starts_with("mine") && l.contains("order=pass")));

    let bad = write(dir.path(), "bad.tab", "this is not a tableau\n");
    let o = sspif(&["verify-tableaux", "--tableau-file", &good, "--tableau-file", &bad], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.contains("bad.tab") && l.contains("error")), "{out}");
    assert!(out.lines().any(|l| l.starts_with("mine")));
}

#[test]
fn verify_tableaux_expectations_set_exit_status() {
    let dir = TempDir::new().unwrap();
    let pass = write(dir.path(), "p.cfg", "expect_coefficient = eSSPRK+(3,3) 0.74 0.76\n");
    assert!(sspif(&["verify-tableaux", "--config", &pass], dir.path()).status.success());
    let fail = write(dir.path(), "f.cfg", "expect_coefficient = eSSPRK(4,3) 0.9 1.1\n");
    let o = sspif(&["verify-tableaux", "--config", &fail], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("check FAIL"));
}

#[test]
fn motivating_sweep_writes_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "m.cfg",
        "modes = rule\nlambda_grid = 0.3, 0.5, 0.6, 0.7, 0.8\nexpect_threshold = eSSPRK(3,3) rule 0.6 0.7\n",
    );
    let o = sspif(&["tv-sweep", "--preset", "motivating", "--config", &cfg, "--out", "res"], dir.path());
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));

    let sweep = csv(&dir.path().join("res/tv_sweep.csv"));
    assert_eq!(sweep[0], ["method", "mode", "lambda", "max_tv_rise", "log10_rise"]);
    assert_eq!(sweep.len(), 6);
    let th = csv(&dir.path().join("res/thresholds.csv"));
    assert_eq!(th[0], ["method", "mode", "observed_lambda", "theoretical_lambda"]);
    assert_eq!(th[1][0..2], ["eSSPRK(3,3)", "rule"]);
    let observed: f64 = th[1][2].parse().unwrap();
    assert!((observed - 0.65).abs() <= 0.05, "{observed}");
    assert_eq!(th[1][3].parse::<f64>().unwrap(), 0.5);
    // Seventeen significant digits.
    assert_eq!(sweep[1][2], "2.9999999999999999e-1");
}

#[test]
fn failed_expectation_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "m.cfg",
        "modes = rule\nlambda_grid = 0.3, 0.8\nexpect_threshold = eSSPRK(3,3) rule 2.0 3.0\n",
    );
    let o = sspif(&["tv-sweep", "--preset", "motivating", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_errors_name_the_line() {
    let dir = TempDir::new().unwrap();
    for (body, line) in [
        ("modes = rule\nlambda_grid = ,\n", "line 2"),
        ("n = 100\nwidth = 3\n", "line 2"),
        ("n = 100\nn = 200\n", "line 2"),
        ("just words\n", "line 1"),
        ("lambda_range = 1.0:0.5:0.1\n", "line 1"),
        ("methods = eSSPRK(9,9)\n", "line 1"),
    ] {
        let cfg = write(dir.path(), "bad.cfg", body);
        let o = sspif(&["tv-sweep", "--config", &cfg], dir.path());
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert!(stderr(&o).contains(line), "{body}: {}", stderr(&o));
    }
}

#[test]
fn wrong_preset_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = sspif(&["tv-sweep", "--preset", "test2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = sspif(&["corefine", "--preset", "nonsense"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seeded_sweep_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "r.cfg",
        "methods = eSSPRK(3,3), eSSPRK(5,4)\nmodes = rule\nn = 300\nic = random_steps:3\nlambda_grid = 0.8, 1.2, 1.6\n",
    );
    let run = |seed: &str, out: &str| {
        let o = sspif(&["tv-sweep", "--config", &cfg, "--seed", seed, "--out", out, "--threads", "3"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        (
            fs::read(dir.path().join(out).join("tv_sweep.csv")).unwrap(),
            fs::read(dir.path().join(out).join("thresholds.csv")).unwrap(),
        )
    };
    let a = run("11", "a");
    let b = run("11", "b");
    let c = run("12", "c");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}

#[test]
fn corefine_rejects_non_nested_grids() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.cfg", "reference_n = 1000\ngrids = 100, 300, 500\n");
    let o = sspif(&["corefine", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("300") && err.contains("1000") && err.contains("line 2"), "{err}");
}

#[test]
fn corefine_first_order_operator() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.cfg",
        "operators = L1\nmethods = eSSPRK(3,3)\nmodes = rule\nexpect_order = eSSPRK(3,3) rule L1 0.8 1.2\n",
    );
    let o = sspif(&["corefine", "--preset", "test1", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let rows = csv(&dir.path().join("out/convergence.csv"));
    assert_eq!(
        rows[0],
        ["study", "method", "mode", "operator", "resolution_or_dt", "error", "fitted_order", "stalled"]
    );
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r[0] == "corefine" && r[3] == "L1" && r[6] == rows[1][6]));
}

#[test]
fn ode_converge_detects_stall() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "o.cfg",
        "operators = L1\nmethods = eSSPRK(3,3)\nmodes = rule, never\n\
         expect_stall = eSSPRK(3,3) rule L1 1.9e-3 7.6e-3\n\
         expect_no_stall = eSSPRK(3,3) never L1\n\
         expect_order = eSSPRK(3,3) never L1 2.7 3.3\n",
    );
    let o = sspif(&["ode-converge", "--preset", "test2", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let rows = csv(&dir.path().join("out/convergence.csv"));
    assert_eq!(rows.len(), 1 + 2 * 6);
    let rule_stalled = rows[1..].iter().filter(|r| r[2] == "rule" && r[7] == "true").count();
    assert!(rule_stalled >= 2);
    assert!(rows[1..].iter().filter(|r| r[2] == "never").all(|r| r[7] == "false"));
}

#[test]
fn reference_writes_profile() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "r.cfg", "n = 64\nt_final = 0.5\nreference_tol = 1e-9\n");
    let o = sspif(&["reference", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv(&dir.path().join("out/reference.csv"));
    assert_eq!(rows[0], ["x", "u"]);
    assert_eq!(rows.len(), 65);
    for r in &rows[1..] {
        let u: f64 = r[1].parse().unwrap();
        assert!((-0.1..=1.1).contains(&u), "{u}");
    }
}
