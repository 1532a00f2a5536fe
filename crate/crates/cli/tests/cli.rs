use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fairrank::{fairness_level, MarginalRankMatrix, RankingDistribution, TopKMatrix};

fn fairrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairrank"))
        .args(args)
        .env("FAIRRANK_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exact_topk_of_example2() {
    let q = TopKMatrix::from_csv(&stdout(&fairrank(&["topk", "--example2", "--exact"]))).unwrap();
    let expected = [[14.0, 22.0, 24.0], [5.0, 13.0, 24.0], [5.0, 13.0, 24.0]];
    for (x, row) in expected.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            assert!((q.get(x, k) - v / 24.0).abs() < 1e-12);
        }
    }
}

#[test]
fn phi_zero_lottery_is_one_ranking_and_audits_nonnegative() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve");
    stdout(&fairrank(&[
        "solve",
        "--example2",
        "--phi",
        "0",
        "--out",
        path(&out),
    ]));
    let lottery =
        RankingDistribution::from_json(&fs::read_to_string(out.join("lottery.json")).unwrap())
            .unwrap();
    assert_eq!(lottery.len(), 1);
    let q_csv = dir.path().join("q.csv");
    stdout(&fairrank(&[
        "topk",
        "--example2",
        "--exact",
        "-o",
        path(&q_csv),
    ]));
    let report = stdout(&fairrank(&[
        "audit",
        "--q",
        path(&q_csv),
        "--lottery",
        path(&out.join("lottery.json")),
    ]));
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!(report["phi_star"].as_f64().unwrap() >= 0.0);
}

#[test]
fn solve_output_reaudits_at_requested_phi() {
    let dir = tempfile::tempdir().unwrap();
    let q_csv = dir.path().join("q.csv");
    stdout(&fairrank(&[
        "topk",
        "--example2",
        "--exact",
        "-o",
        path(&q_csv),
    ]));
    let q = TopKMatrix::from_csv(&fs::read_to_string(&q_csv).unwrap()).unwrap();
    for phi in ["0.3", "0.9", "1"] {
        let out = dir.path().join(format!("phi{phi}"));
        stdout(&fairrank(&[
            "solve",
            "--example2",
            "--phi",
            phi,
            "--out",
            path(&out),
        ]));
        let phi: f64 = phi.parse().unwrap();
        let m =
            MarginalRankMatrix::from_csv(&fs::read_to_string(out.join("marginals.csv")).unwrap())
                .unwrap();
        assert!(fairness_level(&m, &q).unwrap().phi_star >= phi - 1e-6);
        for source in [
            ["--marginals", "marginals.csv"],
            ["--lottery", "lottery.json"],
        ] {
            let report = stdout(&fairrank(&[
                "audit",
                "--q",
                path(&q_csv),
                source[0],
                path(&out.join(source[1])),
            ]));
            let report: serde_json::Value = serde_json::from_str(&report).unwrap();
            assert!(report["phi_star"].as_f64().unwrap() >= phi - 1e-6);
        }
    }
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::write(
        &model,
        r#"{"kind": "dirichlet", "alphas": [[1, 2, 3], [3, 2, 1], [2, 2, 2], [1, 1, 4]]}"#,
    )
    .unwrap();
    let runs: Vec<(String, String)> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("run{i}"));
            let q = stdout(&fairrank(&[
                "topk",
                "--model",
                path(&model),
                "--samples",
                "5000",
                "--seed",
                "17",
            ]));
            stdout(&fairrank(&[
                "solve",
                "--model",
                path(&model),
                "--samples",
                "5000",
                "--seed",
                "17",
                "--phi",
                "0.7",
                "--out",
                path(&out),
            ]));
            let files: Vec<String> = ["marginals.csv", "lottery.json", "report.json"]
                .iter()
                .map(|f| fs::read_to_string(out.join(f)).unwrap())
                .collect();
            (q, files.concat())
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let other = stdout(&fairrank(&[
        "topk",
        "--model",
        path(&model),
        "--samples",
        "5000",
        "--seed",
        "18",
    ]));
    assert_ne!(runs[0].0, other);
}

#[test]
fn sample_draws_rankings_from_the_lottery() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    stdout(&fairrank(&[
        "solve",
        "--example2",
        "--phi",
        "1",
        "--out",
        path(&out),
    ]));
    let lottery = path(&out.join("lottery.json")).to_string();
    let a = stdout(&fairrank(&[
        "sample",
        "--lottery",
        &lottery,
        "--count",
        "50",
        "--seed",
        "3",
    ]));
    let b = stdout(&fairrank(&[
        "sample",
        "--lottery",
        &lottery,
        "--count",
        "50",
        "--seed",
        "3",
    ]));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 50);
    for line in a.lines() {
        let mut agents: Vec<usize> = line.split(' ').map(|t| t.parse().unwrap()).collect();
        agents.sort();
        assert_eq!(agents, vec![0, 1, 2]);
    }
}

#[test]
fn tradeoff_formats() {
    let csv = stdout(&fairrank(&["tradeoff", "--example2", "--steps", "4"]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "phi,lp_utility,mixing_utility,lp_ndcg,mixing_ndcg,lp_phi_star"
    );
    assert_eq!(lines.len(), 6);
    assert!(lines[5].starts_with("1.000000000,1.458333333,1.458333333,"));
    let svg = stdout(&fairrank(&[
        "tradeoff",
        "--example2",
        "--steps",
        "4",
        "--format",
        "svg",
    ]));
    assert!(svg.starts_with("<svg"));
    let json = stdout(&fairrank(&[
        "tradeoff",
        "--example2",
        "--steps",
        "4",
        "--format",
        "json",
    ]));
    assert!(fairrank::experiments::table_from_json(&json).is_ok());
}

#[test]
fn movielens_on_synthetic_ratings() {
    let csv = stdout(&fairrank(&[
        "movielens",
        "--genre",
        "Comedy",
        "--n-items",
        "6",
        "--samples",
        "2000",
        "--runs",
        "2",
        "--steps",
        "2",
        "--seed",
        "5",
    ]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,"));
}

#[test]
fn exposure_report() {
    let out = stdout(&fairrank(&[
        "exposure",
        "--synthetic-users",
        "60",
        "--synthetic-items",
        "30",
        "--users-per-arm",
        "50",
        "--seed",
        "1",
    ]));
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["opt"]["counts"].as_array().unwrap().len(), 30);
    assert!(report["ts"]["gini"].as_f64().is_some());
}

#[test]
fn exit_codes() {
    assert_eq!(fairrank(&["--help"]).status.code(), Some(0));
    assert_eq!(fairrank(&["--version"]).status.code(), Some(0));
    assert_eq!(
        fairrank(&["topk", "--example2", "--bogus"]).status.code(),
        Some(1)
    );
    assert_eq!(
        fairrank(&["solve", "--example2", "--phi", "1.5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(fairrank(&["topk"]).status.code(), Some(1));
    assert_eq!(
        fairrank(&[
            "exposure",
            "--synthetic-users",
            "5",
            "--users-per-arm",
            "10"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        fairrank(&[
            "audit",
            "--q",
            "/nonexistent.csv",
            "--marginals",
            "/nonexistent.csv"
        ])
        .status
        .code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "k=1,k=2\n0.5,1\n0.4,1\n").unwrap();
    let out = fairrank(&["audit", "--q", path(&bad), "--example2"]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "conflicting flags are a usage error"
    );
    let out = fairrank(&["audit", "--q", path(&bad), "--marginals", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn invalid_thread_count_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_fairrank"))
        .args(["topk", "--example2", "--exact"])
        .env("FAIRRANK_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
