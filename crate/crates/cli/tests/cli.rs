use std::path::Path;
use std::process::{Command, Output};

use photon_counting_cli::figures;
use photon_counting_cli::scenario::Task;

const FIG2_FILES: [&str; 3] = ["fig2_eps_delta.csv", "fig2_omega2.csv", "fig2_gamma.csv"];

fn pcount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcount")).args(args).output().unwrap()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name).to_string_lossy().into_owned()
}

#[test]
fn fig2_oracle_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcount(&["fig2", "--method", "analytic-oracle", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for f in FIG2_FILES {
        let got = std::fs::read(dir.path().join(f)).unwrap();
        let want = std::fs::read(golden.join(f)).unwrap();
        assert!(got == want, "{f} differs from the golden copy");
    }
}

#[test]
fn fig2_enumerates_three_phases_over_three_sweeps() {
    let scenarios = figures::scenarios("fig2").unwrap().unwrap();
    let sweeps: usize = scenarios
        .iter()
        .map(|s| match &s.task {
            Task::Scan { sweeps, series } => {
                assert_eq!(series.as_ref().map(|s| s.values.len()), Some(3));
                sweeps.len()
            }
            other => panic!("{other:?}"),
        })
        .sum();
    assert_eq!(sweeps, 3);
    let points: usize = scenarios.iter().map(|s| s.scan_points()).sum();
    assert_eq!(points, 549);
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let rows: usize = FIG2_FILES
        .iter()
        .map(|f| csv::Reader::from_path(golden.join(f)).unwrap().records().count())
        .sum();
    assert_eq!(rows, 549);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = scenario("jc_cumulants.toml");
    for d in [&a, &b] {
        let out = pcount(&["cumulants", "--config", &cfg, "--out", d.path().to_str().unwrap(), "--threads", "2"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        assert_eq!(std::fs::read(a.path().join(&n)).unwrap(), std::fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn invalid_config_exits_with_two_and_lists_problems() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[model]\nkind = \"jaynes-cummings\"\n[model.params]\neps_delta = 0.3\n").unwrap();
    let out = pcount(&["cumulants", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("omega1") && err.contains("gamma") && err.contains("task"), "{err}");
}

#[test]
fn unknown_method_is_rejected() {
    let out = pcount(&["fig2", "--method", "guesswork"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn conserve_prints_pass_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcount(&["conserve", "--config", &scenario("jc_conserve.toml"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS conservation")), "{stdout}");
}

#[test]
fn task_kind_must_match_command() {
    let out = pcount(&["scan", "--config", &scenario("jc_conserve.toml")]);
    assert_eq!(out.status.code(), Some(2));
}
