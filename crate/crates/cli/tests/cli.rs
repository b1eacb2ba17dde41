use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use clap::Parser;
use shapemem_cli::{execute, parse_scenario, run_scenario, Cli, CliError, Kind, Outcome};
use shapemem_core::io::{read_table, CONVERGENCE_HEADER, LEDGER_HEADER, TRAJECTORY_HEADER};

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const MINIMAL_POINT: &str = r#"
kind = "point-test"
[stress]
direction = [1.0, -1.0, 0.0, 0.0, 0.0, 0.0]
scales = [[0.0, 0.0], [1.0, 2.0]]
"#;

#[test]
fn minimal_scenario_gets_documented_defaults() {
    let s = parse_scenario(MINIMAL_POINT).unwrap();
    assert_eq!(s.kind, Some(Kind::PointTest));
    assert_eq!(s.seed, 0);
    assert_eq!(s.material, shapemem_core::MaterialParams::default());
    assert_eq!(s.time.final_time, 1.0);
    assert_eq!(s.time.grid().unwrap().steps(), 32);
    assert!(s.violations(Kind::PointTest).is_empty());
}

#[test]
fn validation_lists_every_violation() {
    let text = format!("{MINIMAL_POINT}\n[material]\nc3 = -1.0\nc2 = 0.0\nrho = -0.5\n");
    let s = parse_scenario(&text).unwrap();
    let v = s.violations(Kind::PointTest);
    assert!(v.iter().any(|e| e.contains("c3 must be > 0")), "{v:?}");
    assert!(v.iter().any(|e| e.contains("c2 must be > 0")), "{v:?}");
    assert!(v.iter().any(|e| e.contains("rho must be >= 0")), "{v:?}");
    let bvp = s.violations(Kind::BvpRun);
    assert!(bvp.iter().any(|e| e.contains("needs a [problem] table")));
    assert!(bvp
        .iter()
        .any(|e| e.contains("does not use a [stress] table")));
}

#[test]
fn unknown_key_is_a_parse_error_naming_it() {
    let err = parse_scenario(&format!("{MINIMAL_POINT}\n[material]\nshear = 2.0\n")).unwrap_err();
    match err {
        CliError::Parse(msg) => assert!(msg.contains("shear"), "{msg}"),
        other => panic!("expected parse error, got {other:?}"),
    }
    assert!(matches!(
        parse_scenario("kind = \"point-tset\""),
        Err(CliError::Parse(_))
    ));
}

#[test]
fn kind_mismatch_is_rejected() {
    let s = parse_scenario(MINIMAL_POINT).unwrap();
    assert!(s.resolve_kind(Some(Kind::ConvTau)).is_err());
    assert_eq!(s.resolve_kind(None).unwrap(), Kind::PointTest);
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let sc = scenario_path("tension.toml");
    let cli = Cli::parse_from([
        "shapemem",
        "bvp-run",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--dry-run",
    ]);
    assert!(matches!(
        execute(&cli).unwrap(),
        Outcome::Validated { kind: Kind::BvpRun }
    ));
    assert!(!out.exists());
}

#[test]
fn superelastic_point_test_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let s =
        parse_scenario(&fs::read_to_string(scenario_path("superelastic.toml")).unwrap()).unwrap();
    let summary = run_scenario(&s, Kind::PointTest, dir.path(), None).unwrap();
    assert!(summary.passed);
    let produced = fs::read(dir.path().join("trajectory.csv")).unwrap();
    let golden = fs::read(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/superelastic_trajectory.csv"),
    )
    .unwrap();
    assert!(
        produced == golden,
        "trajectory differs from the golden file"
    );
    let (header, rows) = read_table(&dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(header, TRAJECTORY_HEADER);
    assert_eq!(rows.len(), 65);
    let last = rows.last().unwrap();
    assert!(last[13..18].iter().all(|&z| z.abs() <= 1e-6));
    let report = read_json(&dir.path().join("report.json"));
    assert!(report["total_dissipation"].as_f64().unwrap() >= 0.1);
    assert_eq!(report["all_states_stable"], true);
}

fn run_twice(scenario: &str, kind: Kind) -> (tempfile::TempDir, tempfile::TempDir, Vec<String>) {
    let s = parse_scenario(&fs::read_to_string(scenario_path(scenario)).unwrap()).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_scenario(&s, kind, a.path(), None).unwrap();
    let rb = run_scenario(&s, kind, b.path(), None).unwrap();
    assert_eq!(ra.outputs, rb.outputs);
    for f in &ra.outputs {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
    let strip = |p: &Path| {
        let mut m = read_json(&p.join("manifest.json"));
        m.as_object_mut().unwrap().remove("wall_time_seconds");
        m
    };
    assert_eq!(strip(a.path()), strip(b.path()));
    (a, b, ra.outputs)
}

#[test]
fn bvp_run_is_deterministic_and_round_trips() {
    let (a, _b, outputs) = run_twice("tension.toml", Kind::BvpRun);
    assert!(outputs.iter().any(|f| f.starts_with("fields/node_")));
    let (header, rows) = read_table(&a.path().join("ledger.csv")).unwrap();
    assert_eq!(header, LEDGER_HEADER);
    assert_eq!(rows.len(), 9);
    let report = read_json(&a.path().join("report.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(report["bound"]["holds"], true);
    let manifest = read_json(&a.path().join("manifest.json"));
    assert_eq!(manifest["seed"], 11);
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn conv_tau_reports_fitted_order() {
    let dir = tempfile::tempdir().unwrap();
    let s = parse_scenario(&fs::read_to_string(scenario_path("rate.toml")).unwrap()).unwrap();
    run_scenario(&s, Kind::ConvTau, dir.path(), None).unwrap();
    let (header, rows) = read_table(&dir.path().join("rate.csv")).unwrap();
    assert_eq!(header, ["tau", "error"]);
    assert_eq!(rows.len(), 5);
    let report = read_json(&dir.path().join("report.json"));
    assert!(report["order"].as_f64().unwrap() >= 0.45);
}

#[test]
fn conv_rho_and_gamma_tables() {
    let (a, _b, _) = run_twice("rho_limit.toml", Kind::ConvRho);
    let (header, rows) = read_table(&a.path().join("convergence.csv")).unwrap();
    assert_eq!(header, CONVERGENCE_HEADER);
    assert_eq!(rows.len(), 4);
    assert!(rows.windows(2).all(|w| w[1][5] <= w[0][5]));
    let (g, _g2, _) = run_twice("gamma.toml", Kind::GammaTable);
    let (header, rows) = read_table(&g.path().join("gamma.csv")).unwrap();
    assert_eq!(header.len(), 9);
    assert_eq!(rows.len(), 50);
    assert_eq!(read_json(&g.path().join("report.json"))["passed"], true);
}

#[test]
fn bvp_conv_writes_member_subdirectories() {
    let text = fs::read_to_string(scenario_path("tension_joint.toml"))
        .unwrap()
        .replace("tau = [0.125, 0.0625, 0.03125]", "tau = [0.25, 0.125]")
        .replace("divisions = [2, 4, 8]", "divisions = [1, 2]")
        .replace("rho = [0.1, 0.05, 0.025]", "rho = [0.1, 0.05]");
    let s = parse_scenario(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = run_scenario(&s, Kind::BvpConv, dir.path(), None).unwrap();
    for k in ["00", "01"] {
        assert!(dir.path().join(format!("members/{k}/ledger.csv")).exists());
        assert_eq!(
            read_json(&dir.path().join(format!("members/{k}/report.json")))["bound"]["holds"],
            true
        );
    }
    assert!(summary.outputs.contains(&"convergence.csv".to_string()));
}

#[test]
fn binary_reports_errors_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, format!("{MINIMAL_POINT}\n[material]\nc3 = -1.0\n")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_shapemem"))
        .args(["point-test", "--scenario"])
        .arg(&bad)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("c3 must be > 0"));

    let sc = scenario_path("gamma.toml");
    let out = Command::new(env!("CARGO_BIN_EXE_shapemem"))
        .args([
            "gamma-table",
            "--dry-run",
            "--threads",
            "1",
            "--seed",
            "3",
            "--scenario",
        ])
        .arg(&sc)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("valid gamma-table scenario"));
}
