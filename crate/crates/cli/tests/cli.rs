use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netobserve"))
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/fixtures/six_state.gml")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_fixture_counts() {
    let out = run(&["analyze", path_str(&fixture())]);
    assert!(out.status.success());
    let report = json_of(&out);
    let counts = &report["counts"];
    assert_eq!(counts["s_rank"], 4);
    assert_eq!(counts["n_alpha"], 2);
    assert_eq!(counts["matched_parents"], 2);
    assert_eq!(counts["n_beta_min"], 1);
    assert_eq!(report["unmatched"].as_array().unwrap().len(), 2);
}

#[test]
fn empty_edge_list_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "# nothing\n").unwrap();
    let out = run(&["analyze", "--format", "edgelist", path_str(&empty)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no nodes"));
}

#[test]
fn design_writes_verified_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["design", path_str(&fixture()), "--out", path_str(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["design.json", "plan.json", "network.json", "network.dot", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let design: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("design.json")).unwrap()).unwrap();
    assert_eq!(design["agents"], 3);
    assert_eq!(design["numeric_rank"], 18);
    let dot = std::fs::read_to_string(dir.path().join("network.dot")).unwrap();
    assert!(dot.contains("style=solid") && dot.contains("style=dashed"));

    let verify = run(&[
        "verify",
        path_str(&fixture()),
        "--network",
        path_str(&dir.path().join("network.json")),
        "--plan",
        path_str(&dir.path().join("plan.json")),
        "--numeric",
        "--seeds",
        "5",
    ]);
    assert!(verify.status.success());
    let report = json_of(&verify);
    assert_eq!(report["valid"], true);
    assert_eq!(report["numeric"]["agreeing_seeds"], 5);
}

#[test]
fn extra_agents_still_verify() {
    let out = run(&["design", path_str(&fixture()), "--agents", "5"]);
    assert!(out.status.success());
    assert_eq!(json_of(&out)["agents"], 5);
}

#[test]
fn missing_broadcast_names_deprived_agent() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["design", path_str(&fixture()), "--out", path_str(dir.path())]).status.success());
    let net_path = dir.path().join("network.json");
    let mut net: Value = serde_json::from_str(&std::fs::read_to_string(&net_path).unwrap()).unwrap();
    let edges = net["alpha_edges"].as_array_mut().unwrap();
    edges.retain(|e| e != &serde_json::json!([0, 1]));
    std::fs::write(&net_path, net.to_string()).unwrap();
    let out = run(&["verify", path_str(&fixture()), "--network", path_str(&net_path)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("agents {1}"));
}

#[test]
fn single_agent_design_has_no_edges() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("cycle.txt");
    std::fs::write(&g, "0 1\n1 2\n2 0\n").unwrap();
    let out = run(&["design", path_str(&g), "--out", path_str(dir.path())]);
    assert!(out.status.success());
    let net: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("network.json")).unwrap()).unwrap();
    assert_eq!(net["observations"].as_array().unwrap().len(), 1);
    assert!(net["alpha_edges"].as_array().unwrap().is_empty());
    assert!(net["beta_edges"].as_array().unwrap().is_empty());
}

#[test]
fn simulate_is_deterministic() {
    let a = run(&["simulate", path_str(&fixture()), "--horizon", "30", "--seed", "3"]);
    let b = run(&["simulate", path_str(&fixture()), "--horizon", "30", "--seed", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("k,agent,mse\n"));
    assert_eq!(text.lines().count(), 1 + 30 * 3);
}

#[test]
fn simulate_rejects_finite_field() {
    let out = run(&["simulate", path_str(&fixture()), "--field", "gf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_refuses_unobservable_network() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["design", path_str(&fixture()), "--out", path_str(dir.path())]).status.success());
    let net_path = dir.path().join("network.json");
    let mut net: Value = serde_json::from_str(&std::fs::read_to_string(&net_path).unwrap()).unwrap();
    net["beta_edges"] = serde_json::json!([]);
    std::fs::write(&net_path, net.to_string()).unwrap();
    let out = run(&["simulate", path_str(&fixture()), "--network", path_str(&net_path)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn batch_analyze_writes_counts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("in");
    std::fs::create_dir(&inputs).unwrap();
    std::fs::copy(fixture(), inputs.join("six.gml")).unwrap();
    std::fs::write(inputs.join("chain.txt"), "1 2\n2 3\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&["analyze", path_str(&inputs), "--out", path_str(&out_dir), "--seed", "9"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(out_dir.join("counts.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("\nsix,6,9,4,"));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 9);
    assert_eq!(manifest["config"]["command"], "analyze");
}

#[test]
fn conflicting_preprocessing_flags_rejected() {
    let out = run(&["analyze", path_str(&fixture()), "--drop-isolates", "--largest"]);
    assert_eq!(out.status.code(), Some(2));
}
