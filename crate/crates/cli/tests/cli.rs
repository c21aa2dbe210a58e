use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cbml::sim::{SimTrace, SUMMARY_HEADER};

fn cbml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbml"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn seed_is_mandatory() {
    assert_eq!(code(&cbml(&["simulate"])), 2);
    assert_eq!(code(&cbml(&["ratio"])), 2);
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(
        code(&cbml(&[
            "simulate",
            "--seed",
            "1",
            "--config",
            path(&missing)
        ])),
        2
    );

    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"horizon": 10, "colour": "red"}"#).unwrap();
    assert_eq!(
        code(&cbml(&[
            "simulate",
            "--seed",
            "1",
            "--config",
            path(&unknown)
        ])),
        2
    );

    let no_family = dir.path().join("fam.json");
    fs::write(&no_family, r#"{"family": "missing_family.json"}"#).unwrap();
    assert_eq!(
        code(&cbml(&[
            "simulate",
            "--seed",
            "1",
            "--config",
            path(&no_family)
        ])),
        2
    );

    let out = cbml(&["simulate", "--seed", "1", "--strategies", "optimal,bogus"]);
    assert_eq!(code(&out), 2);
    assert_eq!(
        code(&cbml(&["simulate", "--seed", "1", "--horizon", "0"])),
        2
    );
}

#[test]
fn horizon_one_writes_single_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = cbml(&[
        "simulate",
        "--seed",
        "3",
        "--horizon",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for kind in ["optimal", "modified-ck", "centralized-ck", "deadbeat"] {
        let text = fs::read_to_string(dir.path().join(format!("trace_{kind}_0.csv"))).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 2, "{kind}: header plus one row");
        assert!(data[1].starts_with("1,"));
    }
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    assert!(dir.path().join("running_cost.svg").exists());
}

#[test]
fn summary_is_reproduced_from_trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"horizon": 301, "seeds": 2, "record_stride": 40, "plots": false}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("run");
    let out = cbml(&[
        "simulate",
        "--seed",
        "5",
        "--config",
        path(&cfg),
        "--out",
        path(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.join("running_cost.svg").exists());

    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some(SUMMARY_HEADER));
    let mut n = 0;
    for line in lines {
        let mut parts = line.split(',');
        let (kind, traj) = (parts.next().unwrap(), parts.nth(1).unwrap());
        let text = fs::read_to_string(out_dir.join(format!("trace_{kind}_{traj}.csv"))).unwrap();
        let trace = SimTrace::from_csv(&text).unwrap();
        assert_eq!(trace.summary().csv_line(), line);
        n += 1;
    }
    assert_eq!(n, 8);
}

#[test]
fn json_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = cbml(&[
        "platoon-demo",
        "--horizon",
        "50",
        "--strategies",
        "optimal,deadbeat",
        "--format",
        "json",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("trace_deadbeat_0.json")).unwrap();
    let trace: SimTrace = serde_json::from_str(&text).unwrap();
    assert_eq!(trace.horizon, 50);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 2);
}

const FAMILY: &str = r#"{
  "state_dims": [1, 1],
  "input_dims": [1, 1],
  "plant_adj": [[1, 0], [1, 1]],
  "a": [[{"free": [0.0, 1.0]}, "zero"], [{"fixed": 0.5}, {"free": [0.2, 0.9]}]],
  "b": [[{"fixed": 1.0}, "zero"], ["zero", {"free": [0.5, 1.5]}]],
  "q": [[1.0, 0.0], [0.0, 1.0]],
  "r": [[1.0, 0.0], [0.0, 1.0]]
}"#;

#[test]
fn validate_family_and_custom_family_runs() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("family.json");
    fs::write(&fam, FAMILY).unwrap();
    let out = cbml(&["validate-family", path(&fam)]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("2 subsystems"));
    for label in ["a11", "a22", "b22"] {
        assert!(stdout.contains(label), "{stdout}");
    }

    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        FAMILY.replace(
            r#"[{"free": [0.0, 1.0]}, "zero"]"#,
            r#"[{"free": [0.0, 1.0]}, {"fixed": 2.0}]"#,
        ),
    )
    .unwrap();
    assert_eq!(code(&cbml(&["validate-family", path(&bad)])), 2);
    assert_eq!(code(&cbml(&["validate-family"])), 2);

    // family paths resolve relative to the config file
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"family": "family.json", "horizon": 60, "strategies": ["optimal", "modified-ck"]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = cbml(&[
        "simulate",
        "--seed",
        "2",
        "--config",
        path(&cfg),
        "--out",
        path(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("trace_modified-ck_0.csv").exists());
    // the deadbeat design only exists for the platoon
    let out = cbml(&[
        "simulate",
        "--seed",
        "2",
        "--config",
        path(&cfg),
        "--strategies",
        "deadbeat",
    ]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&cbml(&["platoon-demo", "--config", path(&cfg)])), 2);
}

#[test]
fn ratio_writes_per_strategy_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"ratio": {"n_plants": 3, "grid": 3}, "horizon": 200}"#,
    )
    .unwrap();
    let out = cbml(&[
        "ratio",
        "--seed",
        "4",
        "--config",
        path(&cfg),
        "--strategies",
        "deadbeat,modified-ck",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let grid = fs::read_to_string(dir.path().join("ratio_deadbeat.csv")).unwrap();
    // 3 points on each of 4 free entries
    assert_eq!(grid.lines().filter(|l| !l.starts_with('#')).count(), 1 + 81);
    let sim = fs::read_to_string(dir.path().join("ratio_modified-ck.csv")).unwrap();
    assert!(sim.contains("# r_sup_hat_lower_bound="));
    assert_eq!(sim.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3);
}
