use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quanty-hall"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn demo_keys_agree() {
    let o = run(&["demo"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("keys agree      true"));
    assert!(text.contains("verdict         safe"));
}

#[test]
fn seeded_sessions_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut transcripts = Vec::new();
    let mut outputs = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let path = dir.path().join(name);
        let o = run(&[
            "session",
            "--protocol",
            "qubit",
            "--rounds",
            "40",
            "--attack",
            "double-ir",
            "--p",
            "0.3",
            "--seed",
            "77",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        outputs.push(o.stdout);
        transcripts.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(transcripts[0], transcripts[1]);
    assert_eq!(transcripts[0].iter().filter(|&&b| b == b'\n').count(), 40);
}

#[test]
fn full_double_ir_is_compromised() {
    let o = run(&[
        "session",
        "--rounds",
        "50",
        "--attack",
        "double-ir",
        "--p",
        "1.0",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("verdict         compromised"));
}

#[test]
fn summary_document_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("summary.json");
    let o = run(&[
        "session",
        "--rounds",
        "8",
        "--summary",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(doc["result"]["verdict"], "safe");
    assert_eq!(doc["config"]["n_rounds"], 8);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["session", "--chi", "2.0"][..],
        &["session", "--p", "1.5", "--attack", "ir-first"],
        &["session", "--rounds", "0"],
        &["session", "--attack", "single-qubit"],
        &["session", "--bogus"],
        &["sweep", "--from", "0.8", "--to", "0.2"],
        &["sweep", "--steps", "1"],
        &["nonsense"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn sweep_csv_schema() {
    let o = run(&["sweep", "--protocol", "qubit", "--steps", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,bell"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (p, b) = l.split_once(',').unwrap();
            (p.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows.last().unwrap(), &(1.0, 0.0));
    assert!(rows.iter().any(|&(p, _)| (p - 0.625).abs() < 1e-9));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0.625"));
}

#[test]
fn verify_passes_and_figures_are_written() {
    let o = run(&["verify", "--rounds", "3000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 failed"));

    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "figures",
        "--dir",
        dir.path().to_str().unwrap(),
        "--steps",
        "11",
    ]);
    assert!(o.status.success());
    for name in ["i3_vs_p.csv", "f6_vs_p.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with("p,bell\n"));
        assert_eq!(text.lines().count(), 13);
    }
}
