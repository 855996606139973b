//! End-to-end runs of the `hypernn` binary.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use hypernn::dataset::save_dataset;
use hypernn::oracle::EuclideanOracle;
use hypernn::search::recentering_knn;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypernn"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_then_query_matches_in_memory_search() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::random_dataset(300, 3, 7001, 0.98);
    let data_path = dir.path().join("points.tsv");
    save_dataset(&data, &data_path).unwrap();

    let mut rng = <rand::rngs::StdRng as rand::SeedableRng>::seed_from_u64(7002);
    let queries = std::sync::Arc::new(
        hypernn::Dataset::new(
            3,
            vec![0, 1, 2],
            (0..3)
                .map(|_| common::random_query(&mut rng, 3, 0.95))
                .collect(),
        )
        .unwrap(),
    );
    let query_path = dir.path().join("queries.tsv");
    save_dataset(&queries, &query_path).unwrap();

    let index_path = dir.path().join("points.idx");
    let stdout = run_ok(&[
        "build",
        "--dataset",
        path_str(&data_path),
        "--out",
        path_str(&index_path),
        "--oracle",
        "kdtree",
    ]);
    assert!(
        stdout.contains("wrote"),
        "unexpected build output: {stdout}"
    );

    let stdout = run_ok(&[
        "query",
        "--index",
        path_str(&index_path),
        "--query-file",
        path_str(&query_path),
        "--k",
        "3",
    ]);

    let oracle = EuclideanOracle::kd(data.clone());
    for (line, (qid, q)) in stdout.lines().zip(queries.iter()) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(fields.len(), 1 + 2 * 3, "bad line: {line}");
        assert_eq!(fields[0].parse::<u64>().unwrap(), qid);
        let expected = recentering_knn(q, &oracle, 3, None).unwrap();
        for rank in 0..3 {
            let id: u64 = fields[1 + 2 * rank].parse().unwrap();
            let dist: f64 = fields[2 + 2 * rank].parse().unwrap();
            assert_eq!(id, expected.neighbor_ids[rank]);
            let want = expected.hyper_distances[rank];
            assert!(
                (dist - want).abs() <= 1e-12 * (1.0 + want),
                "rank {rank}: printed {dist}, computed {want}"
            );
        }
    }
}

#[test]
fn generated_worstcase_benches_at_exactly_k_plus_one_calls() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("worst.tsv");
    let stdout = run_ok(&[
        "gen-adversarial",
        "--kind",
        "recentering-worstcase",
        "--k",
        "5",
        "--out",
        path_str(&out),
    ]);
    assert!(
        stdout.contains("dataset:") && stdout.contains("queries:") && stdout.contains("expected:")
    );
    assert!(dir.path().join("worst.tsv.expected.json").exists());

    let rows_path = dir.path().join("rows.jsonl");
    let table = run_ok(&[
        "bench",
        "--dataset",
        path_str(&out),
        "--query-file",
        path_str(&dir.path().join("worst.tsv.queries")),
        "--algo",
        "recentering",
        "--oracle",
        "brute",
        "--out",
        path_str(&rows_path),
    ]);
    assert!(table.contains("6.00"), "expected 6 mean calls in:\n{table}");

    let rows = std::fs::read_to_string(&rows_path).unwrap();
    let row: serde_json::Value = serde_json::from_str(rows.lines().next().unwrap()).unwrap();
    assert!(row["budget"].is_null());
    assert_eq!(row["recall"].as_f64(), Some(1.0));
    assert_eq!(row["mean_oracle_calls"].as_f64(), Some(6.0));
}

#[test]
fn shell_bench_on_the_counterexample_scores_zero_recall() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pair.tsv");
    run_ok(&[
        "gen-adversarial",
        "--kind",
        "shell-exact-counterexample",
        "--out",
        path_str(&out),
    ]);
    let table = run_ok(&[
        "bench",
        "--dataset",
        path_str(&out),
        "--query-file",
        path_str(&dir.path().join("pair.tsv.queries")),
        "--algo",
        "shell",
        "--oracle",
        "brute",
        "--w",
        "3",
    ]);
    assert!(
        table.contains("0.0000"),
        "expected zero recall in:\n{table}"
    );
}

#[test]
fn bench_without_queries_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::random_dataset(50, 2, 7003, 0.9);
    let data_path = dir.path().join("points.tsv");
    save_dataset(&data, &data_path).unwrap();

    let out = run(&["bench", "--dataset", path_str(&data_path)]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error:"), "stderr was: {stderr}");
}
