use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qpp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpp"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "info")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = qpp(dir, args);
    assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
    out
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

/// Ten queries over three turns with graded judgments.
fn toy(dir: &Path) {
    let mut run = String::new();
    let mut qrels = String::new();
    let mut queries = String::new();
    for q in 0..10 {
        let qid = format!("{}_{}", q / 3 + 1, q % 3 + 1);
        for r in 0..20 {
            let score = 30.0 - r as f64 * (1.0 + q as f64 * 0.1);
            run.push_str(&format!("{qid} Q0 d{q}_{r} {} {score} toy\n", r + 1));
        }
        qrels.push_str(&format!("{qid} 0 d{q}_{} 2\n{qid} 0 d{q}_{} 1\n", q % 5, 10 - q));
        queries.push_str(&format!("{qid}\tquery number {q}\n"));
    }
    write(dir, "run.txt", &run);
    write(dir, "qrels.txt", &qrels);
    write(dir, "queries.tsv", &queries);
}

#[test]
fn eval_run_writes_one_file_per_metric() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    toy(d);
    let out = ok(d, &["eval-run", "--run", "run.txt", "--qrels", "qrels.txt", "--out", "a"]);
    for m in ["ndcg@3", "ndcg@100", "recall@100"] {
        let text = read(d, &format!("a/actuals.{m}.tsv"));
        assert_eq!(text.lines().count(), 11, "{m}");
        assert!(text.lines().last().unwrap().starts_with(&format!("ALL\t{m}\t")));
    }
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);
    let first = read(d, "a/actuals.ndcg@3.tsv");
    ok(d, &["eval-run", "--run", "run.txt", "--qrels", "qrels.txt", "--out", "a"]);
    assert_eq!(read(d, "a/actuals.ndcg@3.tsv"), first);
}

#[test]
fn eval_run_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    toy(d);
    write(d, "bad.txt", "1_1 0 d0_0 1\n1_1 0 d0_1 x\n");
    let out = qpp(d, &["eval-run", "--run", "run.txt", "--qrels", "bad.txt"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bad.txt:2:"), "{}", stderr(&out));

    assert_eq!(code(&qpp(d, &["eval-run", "--run", "missing.txt", "--qrels", "qrels.txt"])), 2);
    assert_eq!(code(&qpp(d, &["eval-run", "--qrels", "qrels.txt"])), 2);

    write(d, "other.txt", "99_1 0 x 1\n");
    let out = qpp(d, &["eval-run", "--run", "run.txt", "--qrels", "other.txt", "--out", "b"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn build_stats_examples() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(
        d,
        "corpus.jsonl",
        "{\"id\":\"a\",\"contents\":\"the cat\"}\n{\"id\":\"b\",\"contents\":\"The dog\"}\n{\"id\":\"c\",\"contents\":\"cat, dog!\"}\n",
    );
    ok(d, &["build-stats", "--corpus", "corpus.jsonl", "--out", "stats.tsv"]);
    let stats = read(d, "stats.tsv");
    let terms: Vec<&str> = stats.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(terms, ["cat", "dog", "the"]);
    let hash = read(d, "stats.tsv.sha256");
    assert_eq!(hash.trim().len(), 64);
    ok(d, &["build-stats", "--corpus", "corpus.jsonl", "--out", "stats.tsv"]);
    assert_eq!(read(d, "stats.tsv"), stats);
    assert_eq!(read(d, "stats.tsv.sha256"), hash);

    write(d, "corrupt.jsonl", "{\"id\":\"a\",\"contents\":\"x\"}\n{\"id\":\"b\",\"conte\n{\"id\":\"c\",\"contents\":\"y\"}\n");
    let out = qpp(d, &["build-stats", "--corpus", "corrupt.jsonl", "--out", "s2.tsv"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("corrupt.jsonl:2:"), "{}", stderr(&out));

    write(d, "empty.jsonl", "{\"id\":\"a\",\"contents\":\"  ...  \"}\n");
    assert_eq!(code(&qpp(d, &["build-stats", "--corpus", "empty.jsonl", "--out", "s3.tsv"])), 3);
}

#[test]
fn predict_examples() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    toy(d);
    let args = ["predict", "--run", "run.txt", "--queries", "queries.tsv", "--predictors", "wig,nqc"];
    ok(d, &[&args[..], &["--out", "p1.tsv"]].concat());
    let p1 = read(d, "p1.tsv");
    assert_eq!(p1.lines().count(), 20);
    ok(d, &[&args[..], &["--out", "p2.tsv"]].concat());
    assert_eq!(read(d, "p2.tsv"), p1);

    let out = ok(d, &[&args[..], &["--score-shift", "100", "--out", "p3.tsv"]].concat());
    assert!(stderr(&out).contains("adding 100 to every retrieval score"));
    let shifted = read(d, "p3.tsv");
    let nqc = |t: &str| t.lines().find(|l| l.starts_with("1_1\tnqc")).unwrap().to_string();
    assert_ne!(nqc(&shifted), nqc(&p1));

    let out = qpp(d, &["predict", "--run", "run.txt", "--queries", "queries.tsv", "--predictors", "clarity"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--stats"));
    assert!(!d.join("predictions.tsv").exists());
    assert_eq!(code(&qpp(d, &["predict", "--run", "run.txt", "--predictors", "bogus"])), 2);
    assert_eq!(code(&qpp(d, &["predict", "--run", "run.txt", "--predictors", "wig"])), 2);
}

#[test]
fn predict_clarity_checks_corpus_hash() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["synth-bench", "--queries", "4", "--depth", "30", "--out", "s"]);
    ok(d, &["build-stats", "--corpus", "s/corpus.jsonl", "--out", "stats.tsv"]);
    let args = [
        "predict", "--run", "s/run.txt", "--queries", "s/queries.tsv", "--stats", "stats.tsv",
        "--corpus", "s/corpus.jsonl",
    ];
    ok(d, &[&args[..], &["--out", "p.tsv"]].concat());
    assert_eq!(read(d, "p.tsv").lines().count(), 4 * 6);
    write(d, "stats.tsv.sha256", &format!("{}\n", "0".repeat(64)));
    let out = qpp(d, &[&args[..], &["--out", "q.tsv"]].concat());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("does not match"));
}

#[test]
fn correlate_examples() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    toy(d);
    ok(d, &["eval-run", "--run", "run.txt", "--qrels", "qrels.txt", "--metrics", "ndcg@3", "--out", "."]);
    ok(d, &["predict", "--run", "run.txt", "--predictors", "nqc", "--out", "p.tsv"]);
    let external: String = (0..10).map(|q| format!("{}_{}\t{}\n", q / 3 + 1, q % 3 + 1, (q * 7 % 10) as f64 / 10.0)).collect();
    write(d, "bertqpp.tsv", &external);
    ok(d, &[
        "correlate", "--predictions", "p.tsv", "--external", "bertqpp=bertqpp.tsv", "--actuals",
        "actuals.ndcg@3.tsv", "--per-turn", "pearson", "--out", "c",
    ]);
    let report = read(d, "c/correlation.tsv");
    let rows: Vec<&str> = report.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("bertqpp\tndcg@3\t") && rows[1].starts_with("nqc\tndcg@3\t"));
    assert!(read(d, "c/correlation.json").contains("\"predictor\": \"nqc\""));
    let turns = read(d, "c/per_turn.nqc.ndcg@3.tsv");
    assert_eq!(turns.lines().next(), Some("turn\tn\tcoefficient\tp\tstatus"));
    assert_eq!(turns.lines().count(), 4);

    write(d, "far.tsv", "77_1\t0.1\n77_2\t0.2\n77_3\t0.3\n");
    let out = qpp(d, &["correlate", "--external", "far=far.tsv", "--actuals", "actuals.ndcg@3.tsv", "--out", "e"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(read(d, "e/correlation.tsv").contains("far\tndcg@3\tNA"));
    assert_eq!(code(&qpp(d, &["correlate", "--external", "noequals", "--actuals", "actuals.ndcg@3.tsv"])), 2);
}

#[test]
fn score_dist_examples() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    toy(d);
    write(d, "flat.txt", "1_1 Q0 a 1 5 x\n1_1 Q0 b 2 5 x\n");
    ok(d, &["score-dist", "--run", "a=run.txt", "--run", "b=run.txt", "--run", "flat=flat.txt", "--bins", "20", "--out", "h"]);
    let hist = read(d, "h/a.hist.tsv");
    assert_eq!(hist.lines().filter(|l| !l.starts_with('#')).count(), 21);
    assert_eq!(read(d, "h/b.hist.tsv"), hist);
    assert!(!d.join("h/flat.hist.tsv").exists());
    let summary = read(d, "h/summary.tsv");
    assert!(summary.lines().any(|l| l.starts_with("flat\tNA") && l.contains("degenerate")));
    ok(d, &["score-dist", "--run", "a=run.txt", "--out", "h2"]);
    assert_eq!(read(d, "h2/a.hist.tsv").lines().count(), 52);
    assert_eq!(code(&qpp(d, &["score-dist", "--run", "flat=flat.txt", "--out", "h3"])), 3);
}

#[test]
fn synth_bench_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["synth-bench", "--seed", "7", "--out", "a"]);
    ok(d, &["synth-bench", "--seed", "7", "--out", "b"]);
    for f in ["run.txt", "qrels.txt", "queries.tsv", "corpus.jsonl"] {
        assert!(fs::read(d.join("a").join(f)).unwrap() == fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
    let run = read(d, "a/run.txt");
    assert_eq!(run.lines().count(), 50 * 1000);
    let qids: std::collections::BTreeSet<&str> = run.lines().map(|l| l.split(' ').next().unwrap()).collect();
    assert_eq!(qids.len(), 50);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    toy(d);
    write(d, "job.toml", "run = \"run.txt\"\nqueries = \"queries.tsv\"\npredictors = [\"wig\"]\nout = \"cfg.tsv\"\n[params]\nwig_k = 2\n");
    ok(d, &["--config", "job.toml", "predict"]);
    assert_eq!(read(d, "cfg.tsv").lines().count(), 10);
    ok(d, &["--config", "job.toml", "predict", "--predictors", "wig,nqc", "--out", "flag.tsv"]);
    assert_eq!(read(d, "flag.tsv").lines().count(), 20);
    write(d, "typo.toml", "wigk = 3\n");
    assert_eq!(code(&qpp(d, &["--config", "typo.toml", "predict"])), 2);
}

#[test]
fn help_documents_defaults() {
    let tmp = TempDir::new().unwrap();
    let out = ok(tmp.path(), &["predict", "--help"]);
    let help = String::from_utf8(out.stdout).unwrap();
    for needle in ["default: 5", "default: 100", "default: 50", "default: 1000", "Zhou & Croft", "Shtok"] {
        assert!(help.contains(needle), "{needle}");
    }
}
