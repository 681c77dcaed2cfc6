use std::path::Path;
use std::process::{Command, Output};

fn reportminer(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reportminer"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn missing_input_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = reportminer(dir.path(), &["stats", "--input", "nope.jsonl"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("nope.jsonl"), "{}", stderr(&out));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = reportminer(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_label_is_named() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("labeled.tsv"),
        "EVENT\tstuck pipe\nFOO\tcirc bottoms up\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("vectors.txt"), "1 2\nstuck 0.5 0.5\n").unwrap();
    let out = reportminer(
        dir.path(),
        &[
            "--out",
            ".",
            "train",
            "--labeled",
            "labeled.tsv",
            "--embeddings",
            "vectors.txt",
        ],
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("FOO"), "{}", stderr(&out));
    assert!(!dir.path().join("classifier.bin").exists());
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = reportminer(
        dir.path(),
        &[
            "--seed",
            "3",
            "--arch",
            "cnn",
            "--set",
            "embed.dim=20",
            "--set",
            "train.pad_length=9",
            "--print-config",
        ],
    );
    assert!(first.status.success(), "{}", stderr(&first));
    std::fs::write(dir.path().join("run.conf"), &first.stdout).unwrap();
    let second = reportminer(dir.path(), &["--config", "run.conf", "--print-config"]);
    assert!(second.status.success(), "{}", stderr(&second));
    assert_eq!(stdout(&first), stdout(&second));
    assert!(stdout(&first).contains("embed.dim = 20"));
    assert!(stdout(&first).contains("arch = cnn"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "seed = 1\narch = avg\nembed.dim = 8\n").unwrap();
    let out = reportminer(
        dir.path(),
        &[
            "--config",
            "run.conf",
            "--set",
            "embed.dim=12",
            "--seed",
            "5",
            "--print-config",
        ],
    );
    let text = stdout(&out);
    assert!(
        text.contains("seed = 5") && text.contains("arch = avg") && text.contains("embed.dim = 12"),
        "{text}"
    );
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = reportminer(dir.path(), &["--set", "embed.size=3", "--print-config"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("embed.size"));
}

#[test]
fn empty_report_file_gives_empty_outputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("reports.jsonl"), "").unwrap();
    let out = reportminer(dir.path(), &["--out", ".", "clean", "--input", "reports.jsonl"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(std::fs::read(dir.path().join("clean.jsonl")).unwrap(), b"");
    let stats = reportminer(dir.path(), &["stats", "--input", "reports.jsonl"]);
    assert!(stats.status.success());
    let v: serde_json::Value = serde_json::from_slice(&stats.stdout).unwrap();
    assert_eq!(v["token_count"], 0);
    let summary = reportminer(dir.path(), &["query", "summary", "--input", "reports.jsonl"]);
    assert!(!summary.status.success());
}

#[test]
fn clean_writes_one_sentence_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let report = r#"{"well_id":"W1","date":"2017-02-03","operator_id":"OP1","npt":true,"text":"Stuck (pipe) at 500m. circ,cond mud"}"#;
    std::fs::write(dir.path().join("reports.jsonl"), format!("{report}\n")).unwrap();
    let out = reportminer(dir.path(), &["--out", ".", "clean", "--input", "reports.jsonl"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let line = std::fs::read_to_string(dir.path().join("clean.jsonl")).unwrap();
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(v["text"], "Stuck pipe at 500m\ncirc cond mud");
    assert_eq!(v["npt"], true);
}

#[test]
fn small_pipeline_answers_queries() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let mut full = vec!["--seed", "1", "--out", "."];
        full.extend_from_slice(args);
        let o = reportminer(dir.path(), &full);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        o
    };
    run(&["synth", "--wells", "6", "--labeled", "150"]);
    run(&[
        "embed",
        "--input",
        "reports.jsonl",
        "--set",
        "embed.dim=8",
        "--set",
        "embed.epochs=2",
    ]);
    let nb = run(&["neighbors", "--embeddings", "embeddings.txt", "stuck", "-n", "3"]);
    let nb: Vec<(String, f64)> = serde_json::from_slice(&nb.stdout).unwrap();
    assert_eq!(nb.len(), 3);
    run(&[
        "--arch",
        "avg",
        "train",
        "--labeled",
        "labeled.tsv",
        "--embeddings",
        "embeddings.txt",
        "--set",
        "train.epochs=20",
        "--set",
        "train.folds=0",
    ]);
    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("eval.json")).unwrap()).unwrap();
    assert!(eval["accuracy"].as_f64().unwrap() > 0.5);
    assert!(eval.get("cv_mean_accuracy").is_none());
    run(&[
        "classify",
        "--model",
        "classifier.bin",
        "--input",
        "reports.jsonl",
        "--npt-only",
    ]);
    let labels = run(&["query", "labels", "--timelines", "timelines.jsonl"]);
    let shares: serde_json::Value = serde_json::from_slice(&labels.stdout).unwrap();
    let total: f64 = ["event", "symptom", "action"]
        .iter()
        .map(|k| shares[k].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
    let seq = run(&[
        "query",
        "sequences",
        "--timelines",
        "timelines.jsonl",
        "--antecedent",
        "SYMPTOM:torque",
    ]);
    let matches: Vec<serde_json::Value> = serde_json::from_slice(&seq.stdout).unwrap();
    for m in &matches {
        assert!(m["antecedent"]["sentence"].as_str().unwrap().contains("torque"));
    }
    let bad = reportminer(
        dir.path(),
        &[
            "query",
            "sequences",
            "--timelines",
            "timelines.jsonl",
            "--antecedent",
            "BOGUS",
        ],
    );
    assert!(!bad.status.success());
    assert!(stderr(&bad).contains("BOGUS"));
}
