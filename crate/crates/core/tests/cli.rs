use std::io::Write;
use std::process::{Command, Output, Stdio};

use redstates::scenario::{self, Scenario, ScenarioConfig};
use redstates::Error;

fn redstates(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_redstates"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    if let Some(text) = stdin {
        child.stdin.as_mut().unwrap().write_all(text.as_bytes()).unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().unwrap()
}

#[test]
fn consecutive_reports_one_half() {
    let out = redstates(&["consecutive"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("pr(p+x | p+z),5.0000000000000000e-1"), "{text}");
}

#[test]
fn contrast_json_has_provenance_and_flag() {
    let out = redstates(&["contrast", "--format", "json"], None);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["scenario"], "contrast");
    assert_eq!(v["config"]["discrepancy_flagged"], true);
    let cols = &v["tables"][0]["columns"];
    assert_eq!(cols[3]["provenance"], "reduced");
    assert_eq!(cols[2]["provenance"], "fundamental");
}

#[test]
fn verify_on_two_by_three_passes() {
    let out = redstates(&["verify", "--seed", "5", "--format", "json"], Some(""));
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for c in v["checks"].as_array().unwrap() {
        assert_eq!(c["passed"], true, "{c}");
    }
}

#[test]
fn config_errors_exit_two() {
    let out = redstates(&["decohere"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed required"));

    let out = redstates(&["consecutive", "--config", "-"], Some("{\"ampltudes\": [0.6, 0.8]}"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ampltudes"));

    let out = redstates(&["consecutive", "--config", "/nonexistent/cfg.json"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dimension_overflow_exits_three() {
    let out = redstates(&["decohere", "--seed", "1", "--config", "-"], Some("bath_size = 12\n"));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn dimension_limit_override_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_redstates"))
        .args(["recohere", "--config", "-"])
        .env("REDSTATES_DIM_LIMIT", "16")
        .stdin(Stdio::null())
        .output()
        .unwrap();
    // The default recohere bath needs dimension 32.
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn invariant_failure_exits_one_and_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    // A tolerance of 1e-300 is tighter than the rounding floor of the checks.
    let out = redstates(
        &["verify", "--seed", "3", "--tolerance", "1e-300", "--out", path.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains(",false,"));
}

#[test]
fn out_extension_selects_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = redstates(&["classical", "--out", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["scenario"], "classical");
}

#[test]
fn key_value_and_json_configs_agree() {
    let kv = scenario::parse_config("scenario = decohere\nbath_size = 3\ncouplings = 0.7, 0.9, 1.1\nt_count = 5\n", None).unwrap();
    let js = scenario::parse_config(
        r#"{"scenario": "decohere", "bath_size": 3, "couplings": [0.7, 0.9, 1.1], "t_count": 5}"#,
        None,
    )
    .unwrap();
    assert_eq!(kv, js);
    let a = scenario::run(&kv).unwrap().to_csv().unwrap();
    let b = scenario::run(&js).unwrap().to_csv().unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_scenario_passes_with_defaults() {
    for s in Scenario::ALL {
        let cfg = defaults_with_seed(s);
        let report = scenario::run(&cfg).unwrap();
        assert!(report.all_passed(), "{s}: {:?}", report.checks);
        assert!(!report.tables.is_empty());
    }
}

#[test]
fn seed_handling() {
    let mut cfg = ScenarioConfig::defaults(Scenario::Contrast);
    assert!(matches!(cfg.set_seed(1), Err(Error::Config(_))));
    let unseeded = ScenarioConfig::defaults(Scenario::Verify);
    assert!(matches!(scenario::run(&unseeded), Err(Error::Config(m)) if m.contains("seed required")));
}

fn defaults_with_seed(s: Scenario) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::defaults(s);
    if matches!(s, Scenario::Decohere | Scenario::CoarseGrain | Scenario::Verify) {
        cfg.set_seed(11).unwrap();
    }
    cfg
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.cfg");
    std::fs::write(&path, "# two rounds\nscenario = consecutive\nsecond = z\n").unwrap();
    let cfg = scenario::parse_config_file(&path, None).unwrap();
    let report = scenario::run(&cfg).unwrap();
    assert_eq!(report.table("probabilities").unwrap().lookup("pr(p+z2 | p+z)", "value"), Some(1.0));
    assert!(matches!(
        scenario::parse_config_file(&dir.path().join("missing"), None),
        Err(Error::Config(_))
    ));
}
