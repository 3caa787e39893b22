mod common;

use std::path::Path;
use std::process::{Command, Output};

use ctxtree::files::{model_to_json, pattern_from_json, pattern_to_json, tree_from_json};
use ctxtree::{Alphabet, LeafFlag, PatternTree, Word};

use common::*;

fn ctxtree(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctxtree"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn estimate_writes_tree_dot_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cycle.txt"), "012".repeat(100) + "\n").unwrap();
    let out = ctxtree(
        d,
        &[
            "estimate", "--input", "cycle.txt", "--alphabet", "0,1,2", "--c", "5.3", "--output", "tree.json", "--dot",
            "tree.dot", "--report", "report.txt",
        ],
    );
    assert!(stdout(&out).contains("leaves=3"));
    let tree = tree_from_json(&std::fs::read_to_string(d.join("tree.json")).unwrap()).unwrap();
    assert_eq!(tree.leaves().len(), 3);
    assert!(std::fs::read_to_string(d.join("tree.dot")).unwrap().starts_with("digraph"));
    let report = std::fs::read_to_string(d.join("report.txt")).unwrap();
    assert!(report.contains("n = 300"));
    assert!(report.contains("leaf brackets"));
}

#[test]
fn estimate_reports_window_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.txt"), "0120").unwrap();
    let out = ctxtree(d, &["estimate", "--input", "bad.txt", "--alphabet", "0,1", "--alpha", "0.05", "--output", "t.json"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("position 3"), "{err}");

    let out = ctxtree(d, &["estimate", "--input", "bad.txt", "--alphabet", "0,1,2", "--output", "t.json"]);
    assert!(!out.status.success(), "one of --alpha/--c is required");

    std::fs::write(d.join("short.txt"), "0101010101").unwrap();
    let out = ctxtree(d, &["estimate", "--input", "short.txt", "--alphabet", "0,1", "--alpha", "0.05", "--output", "t.json"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside the certified window"));
}

#[test]
fn test_command_rejects_root_on_the_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = Alphabet::numeric(3).unwrap();
    std::fs::write(d.join("cycle.txt"), "012".repeat(100)).unwrap();
    std::fs::write(d.join("root.json"), pattern_to_json(&PatternTree::root(&a))).unwrap();
    std::fs::write(d.join("inf.json"), pattern_to_json(&PatternTree::infinite(&a))).unwrap();
    let text = stdout(&ctxtree(d, &["test", "--input", "cycle.txt", "--tau0", "root.json", "--alpha", "0.05"]));
    assert!(text.contains("decision = reject"), "{text}");
    assert!(text.contains("witness = "), "{text}");
    let text = stdout(&ctxtree(d, &["test", "--input", "cycle.txt", "--tau0", "inf.json", "--alpha", "0.05"]));
    assert!(text.contains("decision = not-reject"), "{text}");
}

#[test]
fn simulate_round_trips_through_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("model.json"), model_to_json(&example_model())).unwrap();
    stdout(&ctxtree(d, &["simulate", "--model", "model.json", "-n", "1000", "--seed", "9", "--output", "x.txt"]));
    let text = std::fs::read_to_string(d.join("x.txt")).unwrap();
    assert_eq!(text.trim_end().len(), 1000);
    assert!(text.chars().filter(|c| !c.is_whitespace()).all(|c| c == '0' || c == '1'));
    stdout(&ctxtree(d, &["estimate", "--input", "x.txt", "--alphabet", "0,1", "--alpha", "0.05", "--output", "t.json"]));

    stdout(&ctxtree(
        d,
        &["simulate", "--model", "model.json", "-n", "50", "--mode", "tokens", "--output", "tok.txt"],
    ));
    let tokens = std::fs::read_to_string(d.join("tok.txt")).unwrap();
    assert_eq!(tokens.split_whitespace().count(), 50);
}

#[test]
fn experiment_commands_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("model.json"), model_to_json(&example_model())).unwrap();
    stdout(&ctxtree(
        d,
        &["coverage", "--model", "model.json", "-n", "1000", "--alpha", "0.05", "-M", "8", "--out", "cov.csv"],
    ));
    let csv = std::fs::read_to_string(d.join("cov.csv")).unwrap();
    assert!(csv.starts_with("# experiment=coverage"));
    assert!(csv.contains("replicate,covered,distance,leaves,depth"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 9);

    stdout(&ctxtree(
        d,
        &["curve", "--model", "model.json", "--grid", "300,600", "--c", "2.5", "--reps", "3", "--out", "curve.csv"],
    ));
    let csv = std::fs::read_to_string(d.join("curve.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 7);

    let out = ctxtree(
        d,
        &["curve", "--model", "model.json", "--grid", "300", "--c", "1.5", "--reps", "3", "--out", "bad.csv"],
    );
    assert!(!out.status.success(), "c below 2(|A|-1) must be refused");

    stdout(&ctxtree(
        d,
        &["deviation", "--model", "model.json", "-n", "300", "--c-list", "3,4", "-M", "5", "--out", "dev.csv"],
    ));
    let csv = std::fs::read_to_string(d.join("dev.csv")).unwrap();
    assert!(csv.contains("c,threshold,satisfied,replicates,frequency,bound,floor"));
}

#[test]
fn pattern_files_keep_flags() {
    let a = Alphabet::parse("0,1,2,3,4").unwrap();
    let p = PatternTree::single_context(&a, &Word::from(vec![2])).unwrap();
    let back = pattern_from_json(&pattern_to_json(&p)).unwrap();
    assert_eq!(back, p);
    assert_eq!(back.leaves()[&Word::from(vec![2])], LeafFlag::Terminal);
    assert_eq!(back.leaves()[&Word::from(vec![0])], LeafFlag::Open);
}
