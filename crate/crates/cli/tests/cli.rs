use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn normplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_normplan"))
        .args(args)
        .current_dir(root())
        .output()
        .expect("run normplan")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_text_has_mode_separators() {
    let o = normplan(&[
        "solve",
        "--scenario",
        "s1",
        "--mode",
        "safe",
        "--change",
        "3:normal",
        "--change",
        "7:risky",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("*** Begin in Safe Mode ***\n0. Move from l4 to l1\n"));
    assert!(text.contains("*** Change to Normal Mode ***\n3. Move from l0 to l3\n"));
    assert!(text.contains("*** Change to Risky Mode ***\n7. Move from l7 to l4\n"));
    assert!(text.contains("9. Collect iron\n10-13. Wait\n"));
}

#[test]
fn solve_json_is_the_annotated_plan() {
    let o = normplan(&[
        "solve",
        "--scenario",
        "scenarios/mining/s1.json",
        "--mode",
        "risky",
        "--json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["steps"][1]["action"], "collect(silver)");
    assert_eq!(v["final_metrics"][0]["wait_count"], 7);
}

#[test]
fn horizon_override_shortens_the_plan() {
    let o = normplan(&[
        "solve",
        "--scenario",
        "s1",
        "--mode",
        "risky",
        "--horizon",
        "4",
        "--json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["steps"].as_array().unwrap().len(), 4);
    assert_eq!(v["subgoals_achieved"], 2);
}

#[test]
fn invalid_schedule_lists_every_problem() {
    let o = normplan(&[
        "solve",
        "--scenario",
        "s1",
        "--change",
        "3",
        "--change",
        "2:normal",
    ]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("mode_and_step_required"));
    assert!(err.contains("steps_not_increasing"));
}

#[test]
fn analyze_reports_the_contradiction() {
    let o = normplan(&[
        "analyze",
        "--scenario",
        "s1",
        "--policy",
        "policies/demo/inconsistent.aopl",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["consistent"], false);
    assert!(!v["witnesses"]["inconsistent"]
        .as_array()
        .unwrap()
        .is_empty());

    let o = normplan(&["analyze", "--scenario", "s1", "--policy", "safe"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["consistent"], true);
    assert_eq!(v["categorical"], true);
}

#[test]
fn lists_scenarios() {
    let o = normplan(&["scenarios", "list", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ids: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["id"].as_str().unwrap())
        .collect();
    assert_eq!(
        ids,
        ["s1", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10"]
    );
}

#[test]
fn unknown_scenario_fails() {
    let o = normplan(&["solve", "--scenario", "nope"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no scenario `nope`"));
}
