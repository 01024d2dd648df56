use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn monitor_config() -> PathBuf {
    fixtures().join("monitor/config.json")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carbonpath"))
        .args(args)
        .env_remove("CARBONPATH_CONFIG")
        .env("RUST_LOG", "off")
        .output()
        .expect("spawn carbonpath")
}

fn with_config(args: &[&str]) -> Output {
    let config = monitor_config();
    let mut all = vec!["--config", config.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn lines(out: &Output) -> Vec<Value> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("JSON line"))
        .collect()
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["--version"], &["simulate", "--help"]] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(0));
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one_on_stderr() {
    for args in [&["bogus"][..], &[], &["metrics"], &["monitor", "1.2.3.4", "--replay"], &["report", "x", "--format", "xml"]] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn missing_config_is_usage_error() {
    let out = run(&["trace", "198.51.100.10"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("missing.json", None),
        ("garbage.json", Some("{not json")),
        ("unknown.json", Some(r#"{"geo": {"offline": "g.csv"}, "colour": 1}"#)),
        ("two.json", Some(r#"{"geo": {"offline": "g.csv", "online": {"endpoint": "http://x"}}}"#)),
        ("nofile.json", Some(r#"{"geo": {"offline": "does-not-exist.csv"}}"#)),
    ];
    std::fs::write(dir.path().join("g.csv"), "").unwrap();
    for (name, body) in cases {
        let path = dir.path().join(name);
        if let Some(body) = body {
            std::fs::write(&path, body).unwrap();
        }
        let out = run(&["--config", path.to_str().unwrap(), "trace", "198.51.100.10"]);
        assert_eq!(out.status.code(), Some(3), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn config_from_env() {
    let out = Command::new(env!("CARGO_BIN_EXE_carbonpath"))
        .args(["trace", "198.51.100.10"])
        .env("CARBONPATH_CONFIG", monitor_config())
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn trace_matches_topology() {
    let topo: Value =
        serde_json::from_str(&std::fs::read_to_string(fixtures().join("monitor/topology.json")).unwrap()).unwrap();
    let path = json(&with_config(&["trace", "198.51.100.10"]));
    assert_eq!(path["source_host"], topo["source"]);
    let hops = path["hops"].as_array().unwrap();
    let want = topo["hops"].as_array().unwrap();
    assert_eq!(hops.len(), want.len());
    for (i, (got, want)) in hops.iter().zip(want).enumerate() {
        assert_eq!(got["ttl"], i + 1);
        if want["drop"].as_bool().unwrap_or(false) {
            assert!(got["ip"].is_null());
        } else {
            assert_eq!(got["ip"], want["ip"]);
        }
    }
}

#[test]
fn carbon_path_at_peak() {
    let report = json(&with_config(&["carbon-path", "198.51.100.10", "--at", "2024-04-14T06:30:00Z"]));
    assert_eq!(report["average_intensity"], 488.6);
    assert_eq!(report["known_hop_count"], 6);
    assert_eq!(report["unknown_hop_count"], 3);
}

#[test]
fn schedule_time_and_space() {
    let time = json(&with_config(&["schedule", fixtures().join("monitor/schedule-time.json").to_str().unwrap(), "--policy", "time"]));
    assert_eq!(time["kind"], "time_shift");
    assert_eq!(time["chosen_start"], "2024-04-14T18:00:00Z");
    assert!((time["savings_ratio"].as_f64().unwrap() - 1.9107).abs() < 1e-3);

    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let space = json(&run(&[
        "schedule",
        fixtures().join("monitor/schedule-space.json").to_str().unwrap(),
        "--policy",
        "space",
        "--store",
        store.to_str().unwrap(),
    ]));
    assert_eq!(space["chosen_source"], "VT");
    assert_eq!(space["savings_ratio"], 1919.0);
    let stored = std::fs::read_to_string(store.join("decisions.jsonl")).unwrap();
    assert_eq!(stored.lines().count(), 1);
}

#[test]
fn schedule_policy_mismatch_is_data_error() {
    let out = with_config(&["schedule", fixtures().join("monitor/schedule-space.json").to_str().unwrap(), "--policy", "time"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_overlay_and_steps_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("steps.csv");
    let o = fixtures().join("overlay");
    let report = json(&run(&[
        "simulate",
        o.join("world.json").to_str().unwrap(),
        o.join("overlay.json").to_str().unwrap(),
        "--steps-csv",
        csv_path.to_str().unwrap(),
    ]));
    assert_eq!(report["chosen"], "ftn-m1");
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["run", "start", "end", "ftn", "bytes", "ci"]);
    assert!(reader.records().count() > 0);
}

#[test]
fn simulate_unknown_world_is_data_error() {
    let out = run(&["simulate", "/nonexistent/world.json", "/nonexistent/s.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn metrics_once_and_watch() {
    let once = json(&run(&["metrics", "--once", "--seed", "5"]));
    assert!(once["host"]["core_count"].as_u64().unwrap() > 0);
    let again = json(&run(&["metrics", "--once", "--seed", "5"]));
    assert_eq!(once["host"], again["host"]);

    let watch = lines(&run(&["metrics", "--watch", "--count", "4", "--interval", "0", "--seed", "5"]));
    assert_eq!(watch.len(), 4);
    let sent: Vec<u64> = watch.iter().map(|s| s["net"]["packets_sent"].as_u64().unwrap()).collect();
    assert!(sent.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn monitor_replay_then_report_tables() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let config = dir.path().join("config.json");
    let mon = fixtures().join("monitor");
    std::fs::write(
        &config,
        serde_json::json!({
            "geo": {"offline": mon.join("geo.csv")},
            "carbon": {"traces": fixtures().join("timeshift/uc-tacc.csv")},
            "prober": {"simulated": mon.join("topology.json")},
            "store_dir": store,
        })
        .to_string(),
    )
    .unwrap();
    let c = config.to_str().unwrap();
    let reports = lines(&run(&[
        "--config", c, "monitor", "198.51.100.10", "--interval", "3600", "--duration", "36000", "--replay", "--at",
        "2024-04-14T00:00:00Z",
    ]));
    assert_eq!(reports.len(), 10);
    assert_eq!(reports[6]["average_intensity"], 488.6);

    let s = store.to_str().unwrap();
    let table = |name: &str, extra: &[&str]| {
        let mut args = vec!["report", s, "--format", "csv", "--table", name];
        args.extend_from_slice(extra);
        let out = run(&args);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let mut r = csv::Reader::from_reader(out.stdout.as_slice());
        let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
        (header, r.records().map(Result::unwrap).collect::<Vec<_>>())
    };
    assert_eq!(table("per-tick", &[]).1.len(), 10);
    assert_eq!(table("per-tick", &["--from", "2024-04-14T02:00:00Z", "--to", "2024-04-14T05:00:00Z"]).1.len(), 3);
    let (_, per_hop) = table("per-hop", &[]);
    assert_eq!(per_hop.len(), 10 * 9);
    assert!(!table("zones", &[]).1.is_empty());
    assert!(!table("series", &[]).1.is_empty());

    let out = run(&["report", dir.path().join("absent").to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn corrupt_store_lines_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    let mon = fixtures().join("monitor");
    let store = dir.path().join("store");
    std::fs::write(
        &config,
        serde_json::json!({
            "geo": {"offline": mon.join("geo.csv")},
            "carbon": {"traces": fixtures().join("timeshift/uc-tacc.csv")},
            "prober": {"simulated": mon.join("topology.json")},
            "store_dir": store,
        })
        .to_string(),
    )
    .unwrap();
    let out = run(&[
        "--config", config.to_str().unwrap(), "monitor", "198.51.100.10", "--interval", "3600", "--duration", "7200",
        "--replay", "--at", "2024-04-14T00:00:00Z",
    ]);
    assert!(out.status.success());
    let reports = store.join("reports.jsonl");
    let mut text = std::fs::read_to_string(&reports).unwrap();
    text.push_str("{truncated\n");
    std::fs::write(&reports, text).unwrap();
    let out = run(&["report", store.to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success());
    assert_eq!(csv::Reader::from_reader(out.stdout.as_slice()).records().count(), 2);
}
