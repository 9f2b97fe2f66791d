use std::fs;
use std::process::Command;

use soen_core::cli::{parse_config, run_scenario, OutputFormat, ScenarioConfig};

fn soen() -> Command {
    Command::new(env!("CARGO_BIN_EXE_soen"))
}

#[test]
fn config_round_trips_through_toml() {
    let text = r#"
        command = "simulate"
        seed = 9

        [topology]
        kind = "hierarchical"
        levels = [{ group_size = 10, degree = 3 }, { group_size = 4, degree = 1 }]

        [photonics]
        stochastic = true

        [photonics.media.fiber]
        loss_db_per_m = 0.001
        insertion_db = 0.0
        group_index = 1.47

        [simulation]
        t_end = 2e-6
        latency = { processing = 1e-10 }
    "#;
    let a = parse_config(text).unwrap();
    let b = parse_config(&a.to_toml()).unwrap();
    assert_eq!(a, b);
    let defaults = parse_config("").unwrap();
    assert_eq!(parse_config(&defaults.to_toml()).unwrap(), defaults);
}

#[test]
fn figure_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig { command: Some(soen_core::cli::Command::Fig2a), ..ScenarioConfig::default() };
    run_scenario(&cfg, dir.path(), OutputFormat::Csv).unwrap();
    let csv = fs::read_to_string(dir.path().join("fig2a.csv")).unwrap();
    assert!(csv.starts_with("L,N_tot,k\n"));
    assert!(csv.contains("\n2,1000000,1000\n"));
    assert!(csv.contains("\n2,100000000,10000\n"));

    let out = soen().args(["fig2b", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("fig2b.csv")).unwrap();
    assert!(csv.starts_with("k,p,N_300\n"));
    assert!(csv.lines().any(|l| l.starts_with("1000,6,")));
}

#[test]
fn scaling_report_has_every_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = soen().args(["scaling-report", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("scaling_report.json")).unwrap()).unwrap();
    for key in [
        "wafer_capacity",
        "vertical_links",
        "edge_couplers_per_side",
        "fiber_tract_total",
        "fibers_per_wafer",
        "grey_m3",
        "white_m3",
        "total_m3",
        "device_w",
        "wallplug_w",
        "max_span_m",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["edge_couplers_per_side"], 11480);
    assert_eq!(v["max_span_m"], 10.0);
}

#[test]
fn simulate_is_reproducible_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "command = \"simulate\"\n[topology]\nn = 300\nk = 6\nweight = 0.2\n[simulation]\nt_end = 5e-6\nstimulus_rate = 2e6\n",
    )
    .unwrap();
    let mut logs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = soen().arg("--config").arg(&cfg).args(["--seed", "4", "--out"]).arg(&out_dir).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        logs.push(fs::read(out_dir.join("events.log")).unwrap());
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
        assert!(summary["summary"]["spikes"].as_u64().unwrap() > 0);
    }
    assert_eq!(logs[0], logs[1]);
    assert!(!logs[0].is_empty());
}

#[test]
fn topology_stats_from_an_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("cycle.txt");
    fs::write(&edges, "soen-topology v1, n=4\n0 1 0.5\n1 2 0.5\n2 3 0.5\n3 0 0.5\n").unwrap();
    let cfg = dir.path().join("stats.toml");
    fs::write(&cfg, format!("[topology]\nkind = \"file\"\npath = {:?}\n", edges.display().to_string())).unwrap();
    let out = soen()
        .arg("topology-stats")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("topology_stats.json")).unwrap()).unwrap();
    assert_eq!(v["avg_path_length"]["mean"], 2.0);
    assert_eq!(v["clustering"], 0.0);
}

#[test]
fn invalid_config_exits_nonzero_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[wafer]\nwaveguide_pitch = -1.5e-6\n").unwrap();
    let out = soen().arg("scaling-report").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["key"], "wafer.waveguide_pitch");
    assert!(!dir.path().join("scaling_report.json").exists());
}
