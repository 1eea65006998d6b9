use std::fs;
use std::process::{Command, Output};

fn consensus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_consensus")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const SPLIT_PAIR: &str = r#"{
  "kind": "finite",
  "agents": ["a", "b"],
  "num_states": 2,
  "partitions": { "a": [["0"], ["1"]], "b": [["0", "1"]] },
  "message_function": { "name": "known_state" },
  "graph": []
}"#;

#[test]
fn check_exit_codes() {
    let ok = consensus(&["check", "integers_example"]);
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));
    assert!(stdout(&ok).contains("reciprocity: holds"));

    let cycle = consensus(&["check", "cycle3_no_reciprocity"]);
    assert_eq!(code(&cycle), 2);
    assert!(stdout(&cycle).contains("reciprocity: fails"));

    let stp = consensus(&["check", "stp_counterexample_1"]);
    assert_eq!(code(&stp), 2);
    assert!(stdout(&stp).contains("f({x}) = f({y})"));
}

#[test]
fn run_symbolic_reaches_consensus_after_two_limits() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let out = consensus(&[
        "run",
        "integers_example",
        "--true-state",
        "4",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("final ordinal: w*2+2"));
    let text = fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].contains(r#""ordinal":"0""#));
    assert!(lines.iter().any(|l| l.contains(r#""ordinal":"w*1""#) && l.contains(r#""kind":"limit""#)));
    assert!(lines.last().unwrap().contains(r#""fixed_point":true"#));

    let again = dir.path().join("again.jsonl");
    consensus(&["run", "integers_example", "--true-state", "4", "--trace", again.to_str().unwrap()]);
    assert_eq!(fs::read(&trace).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn run_exit_codes() {
    let out = consensus(&["run", "nonmonotone"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("final ordinal: 1"));

    let out = consensus(&["run", "integers_example", "--ordinal-budget", "w*1"]);
    assert_eq!(code(&out), 4);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("split.scenario");
    fs::write(&path, SPLIT_PAIR).unwrap();
    let out = consensus(&["run", path.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", stdout(&out));
    assert!(stdout(&out).contains("consensus: no"));

    let out = consensus(&["run", "informed_broadcaster", "--trace", "-"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().filter(|l| l.starts_with('{')).count(), 2);
}

#[test]
fn oracle_exit_codes() {
    assert_eq!(code(&consensus(&["oracle", "integers_example", "--window", "20", "--stages", "8"])), 0);
    assert_eq!(code(&consensus(&["oracle", "integers_example", "--corrupt-stage", "3"])), 2);
    let finite = consensus(&["oracle", "nonmonotone"]);
    assert_eq!(code(&finite), 1);
    assert!(String::from_utf8_lossy(&finite.stderr).contains("symbolic"));
}

#[test]
fn export_dot() {
    let out = consensus(&["export", "integers_example", "--dot", "-"]);
    assert_eq!(code(&out), 0);
    let dot = stdout(&out);
    assert_eq!(dot.matches("->").count(), 4);
    assert_eq!(dot.lines().filter(|l| l.ends_with("\";") && !l.contains("->")).count(), 3);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("split.scenario");
    fs::write(&path, SPLIT_PAIR).unwrap();
    let out = consensus(&["export", path.to_str().unwrap(), "--dot", "-"]);
    assert!(!stdout(&out).contains("->"));
}

#[test]
fn parse_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scenario");
    fs::write(&path, "{\n  \"kind\": \"finite\",\n  \"agents\": [\"a\" \"b\"]\n}\n").unwrap();
    let out = consensus(&["check", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert_eq!(code(&consensus(&["check", "no_such_thing"])), 1);
}

#[test]
fn suites_from_the_command_line() {
    let out = consensus(&["suite", "step_bound", "--cases", "30"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains(r#""failures":0"#));

    let out = consensus(&["suite", "consensus_characterization", "--cases", "100", "--inject", "stp_counterexample_1"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains(r#""expected_failure":true"#));

    assert_eq!(code(&consensus(&["suite", "nonsense", "--cases", "1"])), 1);
}
