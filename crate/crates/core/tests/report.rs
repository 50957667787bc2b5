use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use platoon::report::{self, ReportError, SweepParam};
use platoon::scenario::ScenarioFile;
use proptest::prelude::*;

/// The shipped square, shortened so debug builds stay quick.
fn short_file(dir: &Path) -> PathBuf {
    let mut f = ScenarioFile::paper_square();
    f.simulation.duration = 8.0;
    f.leader.ramp_start = 4.0;
    f.leader.ramp_end = 6.0;
    let path = dir.join("short.toml");
    fs::write(&path, f.to_toml()).unwrap();
    path
}

fn names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let path = short_file(tmp.path());
    let a = report::run_command(&path, &tmp.path().join("a")).unwrap();
    let b = report::run_command(&path, &tmp.path().join("b")).unwrap();
    assert_eq!(a.files.len(), b.files.len());
    assert_eq!(a.summary.trigger_table.len(), 4);
    for name in names(&tmp.path().join("a")) {
        if name.ends_with(".csv") {
            let x = fs::read(tmp.path().join("a").join(&name)).unwrap();
            let y = fs::read(tmp.path().join("b").join(&name)).unwrap();
            assert!(x == y, "{name} differs");
        }
    }
}

#[test]
fn summary_json_has_every_section() {
    let tmp = tempfile::tempdir().unwrap();
    let path = short_file(tmp.path());
    let out = tmp.path().join("run");
    report::run_command(&path, &out).unwrap();
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    for key in [
        "trigger_table",
        "constraint_audit",
        "lyapunov",
        "settling",
        "zeno",
        "weights",
        "runtime_seconds",
    ] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["trigger_table"].as_array().unwrap().len(), 4);
}

#[cfg(unix)]
#[test]
fn unwritable_directory_leaves_nothing_behind() {
    use std::os::unix::fs::PermissionsExt;
    let tmp = tempfile::tempdir().unwrap();
    let path = short_file(tmp.path());
    let locked = tmp.path().join("locked");
    fs::create_dir(&locked).unwrap();
    fs::set_permissions(&locked, fs::Permissions::from_mode(0o555)).unwrap();
    // Root ignores directory permissions; nothing to check then.
    if fs::write(locked.join("probe"), b"").is_ok() {
        return;
    }
    let err = report::run_command(&path, &locked).unwrap_err();
    assert!(matches!(err, ReportError::Io { .. }));
    assert_eq!(err.exit_code(), 1);
    assert!(names(&locked).is_empty());
}

#[test]
fn output_path_that_is_a_file_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = short_file(tmp.path());
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, b"x").unwrap();
    let err = report::run_command(&path, &blocker.join("out")).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert_eq!(fs::read(&blocker).unwrap(), b"x");
}

#[test]
fn single_value_sweep_also_writes_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let path = short_file(tmp.path());
    let out = tmp.path().join("sweep");
    let (rep, _) = report::sweep_command(&path, SweepParam::Delta2, &[0.3], &out).unwrap();
    assert_eq!(rep.rows.len(), 1);
    assert!(rep.skipped.is_empty());
    let files = names(&out);
    for f in ["sweep.csv", "sweep.json", "summary.json", "states.csv"] {
        assert!(files.iter().any(|n| n == f), "missing {f} in {files:?}");
    }
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn sweep_skips_gains_below_the_floor() {
    let tmp = tempfile::tempdir().unwrap();
    let path = short_file(tmp.path());
    let (rep, _) =
        report::sweep_command(&path, SweepParam::K2, &[0.01, 5.0], &tmp.path().join("o")).unwrap();
    assert_eq!(rep.rows.len(), 1);
    assert_eq!(rep.rows[0].value, 5.0);
    assert_eq!(rep.skipped.len(), 1);
    assert!(rep.skipped[0]
        .diagnostics
        .iter()
        .any(|d| d.rule.starts_with("gains.")));
}

#[test]
fn sweep_rows_keep_value_order() {
    let file = ScenarioFile::paper_square();
    let mut short = file.clone();
    short.simulation.duration = 3.0;
    short.leader.ramp_start = 1.0;
    short.leader.ramp_end = 2.0;
    let rep = report::sweep(&short, SweepParam::Delta2, &[0.6, 0.1, 0.3]).unwrap();
    let values: Vec<f64> = rep.rows.iter().map(|r| r.value).collect();
    assert_eq!(values, vec![0.6, 0.1, 0.3]);
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_platoon"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let good = short_file(tmp.path());
    let good = good.to_str().unwrap();

    let (code, stdout, _) = cli(&["validate", good]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.starts_with("ok"));

    let (code, _, _) = cli(&[
        "validate",
        tmp.path().join("missing.toml").to_str().unwrap(),
    ]);
    assert_eq!(code, 1);

    let broken = tmp.path().join("broken.toml");
    fs::write(&broken, "schema_version = [").unwrap();
    let (code, _, stderr) = cli(&["validate", broken.to_str().unwrap()]);
    assert_eq!(code, 3, "{stderr}");

    let mut bad = ScenarioFile::paper_square();
    bad.setm.epsilon = -1.0;
    bad.vehicles[0].mass = -1.0;
    bad.rbf.centers = 0;
    let invalid = tmp.path().join("invalid.toml");
    fs::write(&invalid, bad.to_toml()).unwrap();
    let (code, _, stderr) = cli(&["validate", invalid.to_str().unwrap()]);
    assert_eq!(code, 4);
    // Every broken rule is listed, not just the first.
    assert!(stderr.lines().count() >= 2, "{stderr}");

    let out = tmp.path().join("cli");
    let (code, _, stderr) = cli(&[
        "sweep",
        good,
        "--param",
        "gamma",
        "--values",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{stderr}");

    let (code, stdout, stderr) = cli(&["run", good, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("AV4"));
    assert!(out.join("summary.json").exists());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Loading never panics: any edit to one number either validates or
    /// comes back with at least one named rule.
    #[test]
    fn validation_is_total(line in 0usize..120, value in prop_oneof![
        Just(f64::NAN), Just(f64::INFINITY), Just(-1.0), Just(0.0), Just(1e9), -100.0..100.0f64
    ]) {
        let base = ScenarioFile::paper_square().to_toml();
        let lines: Vec<&str> = base.lines().collect();
        let k = line % lines.len();
        let edited: String = lines
            .iter()
            .enumerate()
            .map(|(i, l)| match (i == k, l.split_once(" = ")) {
                (true, Some((key, rhs))) if rhs.parse::<f64>().is_ok() => format!("{key} = {}\n", format!("{value:?}").to_lowercase()),
                _ => format!("{l}\n"),
            })
            .collect();
        match ScenarioFile::parse(&edited) {
            Ok(f) => {
                if let Err(e) = f.validate() {
                    prop_assert!(!e.diagnostics.is_empty());
                    prop_assert!(e.diagnostics.iter().all(|d| !d.rule.is_empty()));
                }
            }
            Err(e) => prop_assert!(!e.diagnostics.is_empty()),
        }
    }
}
