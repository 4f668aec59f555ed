use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_effort-alloc"));
    c.env("EFFORT_ALLOC_THREADS", "2");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn exact_prints_the_figure_value() {
    let o = run(&["exact", "--builtin", "fig3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("value: 9/16 (0.5625)"), "{text}");
    assert!(text.contains("root action: a_1"), "{text}");
}

#[test]
fn evaluate_emits_a_stable_csv_row() {
    let args = ["evaluate", "--builtin", "fig3", "--policy", "dp", "--runs", "500", "--seed", "3"];
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "instance,policy,runs,seed,success_rate,ci95,elapsed_ms");
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&cols[..4], &["fig3", "dp", "500", "3"]);
    for c in &cols[4..6] {
        assert_eq!(c.split('.').nth(1).map(str::len), Some(6), "{c}");
    }
    let strip = |s: &str| s.lines().nth(1).unwrap().rsplit_once(',').unwrap().0.to_string();
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn bench_covers_every_policy() {
    let o = run(&["bench", "--builtin", "instance4", "--policies", "dp,dp-rerun,greedy,round-robin", "--runs", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("instance,policy,runs,seed,success_rate,ci95,mean_decision_ms,elapsed_ms"));
    let policies: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(policies, vec!["dp", "dp-rerun", "greedy", "round-robin"]);
}

#[test]
fn invalid_instance_exits_one_and_names_the_problem() {
    let path = scratch("bad.json");
    std::fs::write(
        &path,
        r#"{"deadline": 5, "actions": {"a": {"planning": {"1": "0.5", "2": "0.2"}, "execution": {"1": "1"}}}, "skeletons": [["a"], ["zz"]]}"#,
    )
    .unwrap();
    let o = run(&["validate", "--instance", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("actions.a.planning"), "{err}");
    assert!(err.contains("`zz`"), "{err}");
}

#[test]
fn domain_and_usage_errors_use_distinct_codes() {
    assert_eq!(run(&["evaluate", "--builtin", "fig3", "--policy", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["exact", "--builtin", "nowhere"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let both = ["evaluate", "--builtin", "fig3", "--policy", "mcts", "--mcts-iters", "10", "--mcts-time-ms", "5"];
    assert_eq!(run(&both).status.code(), Some(2));
}

#[test]
fn knapsack_instances_round_trip_through_files() {
    let path = scratch("knap.json");
    let o = run(&["generate-knapsack", "--items", "1:1,1:1", "--capacity", "2", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["exact", "--instance", path.to_str().unwrap()]);
    assert!(stdout(&o).contains("value: 15/64"), "{}", stdout(&o));
}

#[test]
fn instances_can_be_listed_and_dumped() {
    let text = stdout(&run(&["instances", "list"]));
    for name in ["fig3", "instance1", "instance5", "navigation", "manipulation"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
    let path = scratch("fig3.json");
    assert!(run(&["instances", "dump", "--name", "fig3", "--out", path.to_str().unwrap()]).status.success());
    let o = run(&["validate", "--instance", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn estimate_reads_a_duration_log() {
    let path = scratch("log.txt");
    std::fs::write(&path, "1\n1\n4\n4\n").unwrap();
    let o = run(&["estimate", "--log", path.to_str().unwrap(), "--deadline", "5", "--alpha", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["1"], "0.5");
    assert_eq!(v["4"], "0.5");
}
