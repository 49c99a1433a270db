//! End-to-end tests of the `cash` binary: the full pipeline from corpus to
//! curves, reproducibility across reruns and thread counts, and error
//! handling on bad input.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cash(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cash"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let output = cash(args);
    assert!(
        output.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn write_small_corpus(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let plaintext = dir.join("corpus.txt");
    let mut lines = Vec::new();
    lines.extend(std::iter::repeat_n("123456", 3));
    lines.extend(std::iter::repeat_n("password", 2));
    lines.push("qwerty");
    lines.push("letmein");
    fs::write(&plaintext, lines.join("\n") + "\n").unwrap();

    // The same corpus as a frequency histogram: one password seen 3 times,
    // one seen twice, two seen once.
    let frequency = dir.join("corpus.freq");
    fs::write(&frequency, "# histogram\n3 1\n2 1\n1 2\n").unwrap();
    (plaintext, frequency)
}

#[test]
fn pipeline_from_corpus_to_curves() {
    let dir = tempfile::tempdir().unwrap();
    let (plaintext, frequency) = write_small_corpus(dir.path());
    let cache = dir.path().join("dist.cache");
    let cache_from_freq = dir.path().join("dist2.cache");

    run_ok(&[
        "ingest",
        "--plaintext",
        plaintext.to_str().unwrap(),
        "--out",
        cache.to_str().unwrap(),
    ]);
    let cache_text = fs::read_to_string(&cache).unwrap();
    assert!(cache_text.contains("users 7"), "cache:\n{cache_text}");

    // Both corpus forms describe the same distribution, byte for byte.
    run_ok(&[
        "ingest",
        "--freq",
        frequency.to_str().unwrap(),
        "--out",
        cache_from_freq.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&cache).unwrap(), fs::read(&cache_from_freq).unwrap());

    let defense = dir.path().join("defense.txt");
    let optimize_args = [
        "optimize",
        "--dist",
        cache.to_str().unwrap(),
        "--vhat",
        "2",
        "--m",
        "3",
        "--kset",
        "0.2,0.4",
        "--bset",
        "2,4",
        "--out",
        defense.to_str().unwrap(),
    ];
    run_ok(&optimize_args);
    let defense_text = fs::read_to_string(&defense).unwrap();
    assert!(defense_text.starts_with("# cash runtime distribution"));
    let weight_lines = defense_text
        .lines()
        .filter(|line| !line.starts_with('#'))
        .count();
    assert_eq!(weight_lines, 3);

    let curves = dir.path().join("curves.csv");
    run_ok(&[
        "curves",
        "--dist",
        cache.to_str().unwrap(),
        "--m",
        "3",
        "--kset",
        "0.2,0.4",
        "--bset",
        "2,4",
        "--vgrid",
        "0.5,2,8",
        "--out",
        curves.to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(&curves).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "v_over_cmax,p_cash,p_unif,p_det,note");
    assert_eq!(rows.len(), 4);
    for row in &rows[1..] {
        assert_eq!(row.split(',').count(), 5, "row: {row}");
    }

    let store = dir.path().join("records.csv");
    let simulate = run_ok(&[
        "simulate",
        "--defense",
        defense.to_str().unwrap(),
        "--accounts",
        "40",
        "--seed",
        "9",
        "--kiter",
        "2",
        "--store",
        store.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8(simulate.stdout).unwrap();
    assert!(stdout.contains("accounts 40"), "stdout:\n{stdout}");
    assert!(stdout.contains("k_iter 2"));
    assert!(stdout.contains("runtime_histogram"));
    assert_eq!(fs::read_to_string(&store).unwrap().lines().count(), 40);

    let cdf = dir.path().join("cdf.csv");
    run_ok(&[
        "costcdf",
        "--defense",
        defense.to_str().unwrap(),
        "--out",
        cdf.to_str().unwrap(),
    ]);
    let cdf_text = fs::read_to_string(&cdf).unwrap();
    let mut lines = cdf_text.lines();
    assert_eq!(lines.next().unwrap(), "cost_over_cmax,p_cash_le,p_det_le");
    let mut previous_cost = f64::NEG_INFINITY;
    let mut previous_cum = 0.0;
    let mut last_row = (0.0, 0.0);
    for line in lines {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 3);
        assert!(fields[0] > previous_cost, "costs must strictly increase");
        assert!(fields[1] >= previous_cum - 1e-12, "CDF must be monotone");
        previous_cost = fields[0];
        previous_cum = fields[1];
        last_row = (fields[1], fields[2]);
    }
    assert!((last_row.0 - 1.0).abs() < 1e-9, "CDF must end at 1");
    assert_eq!(last_row.1, 1.0, "deterministic CDF steps to 1 at the budget");
}

#[test]
fn seeded_outputs_are_byte_identical_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let (plaintext, _) = write_small_corpus(dir.path());
    let cache = dir.path().join("dist.cache");
    run_ok(&[
        "ingest",
        "--plaintext",
        plaintext.to_str().unwrap(),
        "--out",
        cache.to_str().unwrap(),
    ]);

    let mut outputs: Vec<Vec<u8>> = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("curves-{threads}.csv"));
        run_ok(&[
            "curves",
            "--threads",
            threads,
            "--dist",
            cache.to_str().unwrap(),
            "--m",
            "3",
            "--kset",
            "0.2,0.4",
            "--bset",
            "2,4",
            "--vgrid",
            "0.5,2,8",
            "--out",
            out.to_str().unwrap(),
        ]);
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);

    let defense = dir.path().join("defense.txt");
    run_ok(&[
        "optimize",
        "--dist",
        cache.to_str().unwrap(),
        "--vhat",
        "2",
        "--m",
        "3",
        "--kset",
        "0.2,0.4",
        "--bset",
        "2,4",
        "--out",
        defense.to_str().unwrap(),
    ]);
    let simulate_args = [
        "simulate",
        "--defense",
        defense.to_str().unwrap(),
        "--accounts",
        "25",
        "--seed",
        "31",
    ];
    let first = run_ok(&simulate_args);
    let second = run_ok(&simulate_args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn bad_inputs_exit_nonzero_with_context() {
    let dir = tempfile::tempdir().unwrap();

    let missing = cash(&["optimize", "--dist", "no-such-file", "--vhat", "2"]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no-such-file"));

    let bad_corpus = dir.path().join("bad.freq");
    fs::write(&bad_corpus, "3 1\nnot numbers\n").unwrap();
    let out = dir.path().join("cache");
    let malformed = cash(&[
        "ingest",
        "--freq",
        bad_corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!malformed.status.success());
    assert!(
        String::from_utf8_lossy(&malformed.stderr).contains("line 2"),
        "stderr should carry the line number:\n{}",
        String::from_utf8_lossy(&malformed.stderr)
    );

    let conflicting = cash(&[
        "ingest",
        "--freq",
        "a",
        "--plaintext",
        "b",
        "--out",
        "c",
    ]);
    assert!(!conflicting.status.success());
}
