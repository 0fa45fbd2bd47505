use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use afv_cli::sweep::{self, SweepConfig};
use afv_core::catalog::SHIPPED_CATALOG_JSON;
use afv_core::simulator::Scenario;

fn afv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afv"))
        .args(args)
        .env_remove("AFV_CATALOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

#[test]
fn sweep_ratio_csv_has_stable_header_and_rows() {
    let o = afv(&[
        "sweep-ratio",
        "--trials",
        "20",
        "--ratios",
        "0.5,2",
        "--seed",
        "3",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "ratio,strategy,mean_cost_reduction_pct_vs_strategy,std"
    );
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1].starts_with("0.5,optimal,"));
}

#[test]
fn sweeps_are_reproducible_across_thread_counts() {
    let args = [
        "sweep-functions",
        "--trials",
        "25",
        "--functions",
        "1,4",
        "--seed",
        "11",
    ];
    let a = afv(&args);
    let b = afv(&[&args[..], &["--parallel", "1"]].concat());
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = afv(&[
        "sweep-functions",
        "--trials",
        "25",
        "--functions",
        "1,4",
        "--seed",
        "12",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn sweep_functions_writes_csv_to_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = afv(&[
        "sweep-functions",
        "--trials",
        "10",
        "--functions",
        "2",
        "--out",
        out,
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(
        first_line(&dir.path().join("sweep_functions.csv")),
        "n_functions,strategy,mean_cost_reduction_pct_vs_strategy,std,mean_cost_saving"
    );
}

#[test]
fn savings_over_all_grow_with_function_count() {
    let cfg = SweepConfig {
        n_trials: 200,
        seed: 5,
        ..SweepConfig::default()
    };
    let rows = sweep::sweep_functions(&cfg, 1.0, &[1, 5, 10, 15, 20]);
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.strategy == "all")
        .map(|r| (r.n_functions as f64, r.mean_cost_saving))
        .collect();
    assert!(sweep::slope(&points) > 0.0, "{points:?}");
}

#[test]
fn validate_exit_codes() {
    let ok = afv(&["validate", "--criteria", "4,8"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let text = stdout(&ok);
    assert!(text.contains("criterion 4 [PASS]"));
    assert!(text.contains("criterion 8 [PASS]"));

    let missing = afv(&["validate", "--catalog", "/nonexistent/catalog.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let unknown = afv(&["validate", "--criteria", "12"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn perturbed_catalog_fails_validation() {
    let mut catalog: serde_json::Value = serde_json::from_str(SHIPPED_CATALOG_JSON).unwrap();
    for entry in catalog["sensing"].as_array_mut().unwrap() {
        if entry["device"] == "Phone"
            && entry["sensor"] == "Accelerometer"
            && entry["speed"] == "FASTEST"
        {
            entry["mJ_per_s"] = serde_json::json!(80.0);
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("catalog.json");
    std::fs::write(&path, catalog.to_string()).unwrap();
    let o = afv(&[
        "validate",
        "--criteria",
        "4",
        "--catalog",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("criterion 4 [FAIL]"));

    let env = Command::new(env!("CARGO_BIN_EXE_afv"))
        .args(["validate", "--criteria", "4"])
        .env("AFV_CATALOG", &path)
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(1));
}

#[test]
fn encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let msg = dir.path().join("msg.json");
    std::fs::write(
        &msg,
        r#"{"type":"Assignments","rd_pairs":[[1,2]],"vd_pairs":[[3,1]]}"#,
    )
    .unwrap();
    let enc = afv(&["encode", msg.to_str().unwrap()]);
    assert!(enc.status.success());
    assert_eq!(stdout(&enc).trim(), "04010102010301");

    let dec = afv(&["decode", "04010102010301"]);
    assert!(dec.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&dec)).unwrap();
    assert_eq!(v["type"], "Assignments");
    assert_eq!(v["rd_pairs"], serde_json::json!([[1, 2]]));

    assert_eq!(afv(&["decode", "09"]).status.code(), Some(2));
}

#[test]
fn shipped_scenarios_parse_and_match_presets() {
    let mut n = 0;
    for entry in std::fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let sc =
            Scenario::from_json_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let name = path.file_stem().unwrap().to_str().unwrap();
        let preset = afv(&["preset", name]);
        assert!(preset.status.success(), "no preset {name}");
        assert_eq!(Scenario::from_json_str(&stdout(&preset)).unwrap(), sc);
        n += 1;
    }
    assert_eq!(n, 4);
}

#[test]
fn uptime_on_scenario_file_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios_dir().join("heart-rate.json");
    let o = afv(&[
        "uptime",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        first_line(&dir.path().join("trace.csv")),
        "t_s,device_id,soc_percent"
    );
    assert_eq!(
        first_line(&dir.path().join("uptime.csv")),
        "baseline,device_id,uptime_s,baseline_uptime_s,gain_h,gain_pct"
    );
    let events: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("events.json")).unwrap())
            .unwrap();
    assert!(events
        .as_array()
        .unwrap()
        .iter()
        .any(|e| e["event"] == "allocation"));
}

#[test]
fn malformed_scenario_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"devices": []}"#).unwrap();
    let o = afv(&["uptime", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
