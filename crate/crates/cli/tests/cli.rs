//! End-to-end tests of the command-line surface: the five subcommands, the
//! artifact files they exchange, determinism across runs and the
//! machine-parseable failure lines.

use std::path::Path;
use std::process::{Command, Output};

const FIXTURE: &str = "the cat sat on the mat\nthe dog ran over the hill\nthe cat ran fast\n\
                       a bird can sing a song\nthe dog sat down\nbirds sing happy songs\n\
                       the cat and the dog ran\na song for the bird\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_factored-lm"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn factored-lm")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr_category(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().next().unwrap_or_default();
    assert!(line.starts_with("error: "), "unexpected stderr: {text}");
    line.split(':').nth(1).unwrap_or_default().trim().to_string()
}

fn write_fixture(dir: &Path) {
    std::fs::write(dir.join("corpus.txt"), FIXTURE).unwrap();
}

#[test]
fn full_pipeline_produces_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());

    assert_ok(&run_in(dir.path(), &["analyze", "--corpus", "corpus.txt", "--min-count", "1", "--out", "run"]));
    assert_ok(&run_in(dir.path(), &["pack", "--corpus", "corpus.txt", "--min-count", "1", "--out", "run"]));
    assert_ok(&run_in(
        dir.path(),
        &["train", "--corpus", "corpus.txt", "--min-count", "1", "--out", "run", "--hidden", "10", "--epochs", "2", "--seed", "3"],
    ));

    for artifact in ["vocab.tsv", "assignment.txt", "model.flm", "histogram.csv", "follow.csv", "pack_report.csv", "train_log.csv"] {
        assert!(dir.path().join("run").join(artifact).exists(), "missing {artifact}");
    }

    let eval = run_in(dir.path(), &["eval", "--test", "corpus.txt", "--out", "run"]);
    assert_ok(&eval);
    let stdout = String::from_utf8_lossy(&eval.stdout);
    assert!(stdout.contains("hidden,train_minutes,train_tokens,test_tokens,perplexity"));
    assert!(stdout.contains("speedup_effective"));

    let predict = run_in(dir.path(), &["predict", "--out", "run", "--k", "3", "the", "cat"]);
    assert_ok(&predict);
    let stdout = String::from_utf8_lossy(&predict.stdout);
    assert!(stdout.starts_with("rank,word_id,word,probability"));
    assert_eq!(stdout.lines().count(), 4);

    // k beyond the layer size clamps to the full layer.
    let wide = run_in(dir.path(), &["predict", "--out", "run", "--k", "9999", "the", "cat"]);
    assert_ok(&wide);
    let rows = String::from_utf8_lossy(&wide.stdout).lines().count() - 1;
    let vocab_rows = std::fs::read_to_string(dir.path().join("run/vocab.tsv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    assert!(rows <= vocab_rows);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());

    for out in ["a", "b"] {
        assert_ok(&run_in(dir.path(), &["analyze", "--corpus", "corpus.txt", "--min-count", "1", "--out", out]));
        assert_ok(&run_in(dir.path(), &["pack", "--corpus", "corpus.txt", "--min-count", "1", "--out", out]));
        assert_ok(&run_in(
            dir.path(),
            &["train", "--corpus", "corpus.txt", "--min-count", "1", "--out", out, "--hidden", "8", "--epochs", "2", "--seed", "11", "--shuffle"],
        ));
    }
    for artifact in ["vocab.tsv", "assignment.txt", "model.flm"] {
        let a = std::fs::read(dir.path().join("a").join(artifact)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(artifact)).unwrap();
        assert_eq!(a, b, "{artifact} differs between identical runs");
    }
}

#[test]
fn repacking_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    assert_ok(&run_in(dir.path(), &["pack", "--corpus", "corpus.txt", "--min-count", "1", "--out", "run"]));
    let first = std::fs::read(dir.path().join("run/assignment.txt")).unwrap();
    assert_ok(&run_in(dir.path(), &["pack", "--corpus", "corpus.txt", "--min-count", "1", "--out", "run"]));
    let second = std::fs::read(dir.path().join("run/assignment.txt")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn trained_bigram_pair_predicts_successor() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("pairs.txt"), "a b\n".repeat(40)).unwrap();
    assert_ok(&run_in(dir.path(), &["pack", "--corpus", "pairs.txt", "--min-count", "1", "--out", "run"]));
    assert_ok(&run_in(
        dir.path(),
        &["train", "--corpus", "pairs.txt", "--min-count", "1", "--out", "run", "--hidden", "8", "--epochs", "6", "--lr", "0.3"],
    ));
    let predict = run_in(dir.path(), &["predict", "--out", "run", "--k", "2", "a"]);
    assert_ok(&predict);
    let stdout = String::from_utf8_lossy(&predict.stdout);
    let top = stdout.lines().nth(1).expect("one prediction row");
    assert_eq!(top.split(',').nth(2), Some("b"), "top prediction was {top}");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    std::fs::write(
        dir.path().join("run.conf"),
        "train = corpus.txt\nmin_count = 1\nhidden = 6\nepochs = 1\nout = from-config\n",
    )
    .unwrap();

    assert_ok(&run_in(dir.path(), &["--config", "run.conf", "pack"]));
    assert!(dir.path().join("from-config/assignment.txt").exists());

    assert_ok(&run_in(dir.path(), &["--config", "run.conf", "train", "--epochs", "3"]));
    let log = std::fs::read_to_string(dir.path().join("from-config/train_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 4, "expected header + 3 epochs:\n{log}");
}

#[test]
fn failures_are_machine_parseable() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());

    let missing = run_in(dir.path(), &["analyze", "--corpus", "nope.txt", "--out", "run"]);
    assert!(!missing.status.success());
    assert_eq!(stderr_category(&missing), "io");

    std::fs::write(dir.path().join("empty.txt"), "").unwrap();
    let empty = run_in(dir.path(), &["analyze", "--corpus", "empty.txt", "--out", "run"]);
    assert!(!empty.status.success());
    assert_eq!(stderr_category(&empty), "empty-input");

    std::fs::write(dir.path().join("bad.conf"), "mystery = 1\n").unwrap();
    let bad = run_in(dir.path(), &["--config", "bad.conf", "analyze", "--corpus", "corpus.txt"]);
    assert!(!bad.status.success());
    assert_eq!(stderr_category(&bad), "config");

    // Model trained in one run dir evaluated against another's artifacts.
    assert_ok(&run_in(dir.path(), &["train", "--corpus", "corpus.txt", "--min-count", "1", "--out", "one", "--hidden", "6", "--epochs", "1"]));
    std::fs::write(dir.path().join("other.txt"), "x y\ny x\nx x\n").unwrap();
    assert_ok(&run_in(dir.path(), &["pack", "--corpus", "other.txt", "--min-count", "1", "--out", "two"]));
    let clash = run_in(
        dir.path(),
        &["eval", "--model", "one/model.flm", "--test", "corpus.txt", "--out", "two"],
    );
    assert!(!clash.status.success());
    assert_eq!(stderr_category(&clash), "incompatible");
}

#[test]
fn no_marker_mode_runs_through() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    assert_ok(&run_in(
        dir.path(),
        &["analyze", "--corpus", "corpus.txt", "--min-count", "1", "--no-markers", "--out", "run"],
    ));
    let vocab = std::fs::read_to_string(dir.path().join("run/vocab.tsv")).unwrap();
    // Specials are still present, with zero observed count.
    assert!(vocab.lines().any(|l| l.contains("<s>")));
}
