use std::path::Path;
use std::process::{Command, Output};

use pdhg_cli::commands::{self, AnalyzeOptions, SolveOptions};
use pdhg_cli::io::{read_instance, read_trace, write_instance, write_trace, TimedTrace, TRACE_HEADER};
use pdhg_core::{GeneralFormLp, SparseMatrix};

fn pdhg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdhg")).args(args).output().expect("binary runs")
}

fn stdout_first_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).lines().next().unwrap_or_default().to_string()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn example1_demo_statuses() {
    let cases = [
        ("0", "1", "optimal"),
        ("1", "2", "both_infeasible"),
        ("0", "2", "primal_infeasible"),
        ("1", "1", "dual_infeasible"),
    ];
    for (alpha, beta, want) in cases {
        let out = pdhg(&["solve", "--demo", "ex1", "--alpha", alpha, "--beta", beta]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(stdout_first_line(&out), want);
    }
}

#[test]
fn exit_codes_follow_the_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.txt");
    std::fs::write(&garbage, "this is not an lp\n").unwrap();
    let out = pdhg(&["solve", path_str(&garbage)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let out = pdhg(&["solve", "--demo", "ex1", "--max-iters", "10"]);
    assert_eq!((out.status.code(), stdout_first_line(&out)), (Some(4), "iteration_limit".to_string()));

    let huge = dir.path().join("huge.json");
    std::fs::write(
        &huge,
        r#"{"c":[-1e300,1e300],"a":{"rows":1,"cols":2,"entries":[[0,0,1],[0,1,1]]},"b":[1e300],"lower":[null,null],"upper":[null,null]}"#,
    )
    .unwrap();
    assert_eq!(pdhg(&["solve", path_str(&huge)]).status.code(), Some(3));

    assert_eq!(pdhg(&["solve", "--demo", "nope"]).status.code(), Some(2));
    assert_eq!(pdhg(&["solve", dir.path().join("missing.mps").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(pdhg(&["solve", "--demo", "ex1", "--step-factor", "1.5"]).status.code(), Some(2));
    assert_eq!(pdhg(&["solve"]).status.code(), Some(2));
}

#[test]
fn trace_and_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let json = dir.path().join("r.json");
    let out = pdhg(&[
        "solve",
        "--demo",
        "ex1",
        "--alpha",
        "0",
        "--beta",
        "2",
        "--eps",
        "1e-8",
        "--trace-out",
        path_str(&trace),
        "--json-out",
        path_str(&json),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().next().unwrap(), TRACE_HEADER.join(","));
    let rows = read_trace(text.as_bytes()).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.windows(2).all(|w| w[0].record.k <= w[1].record.k));
    assert!(rows.iter().all(|r| r.record.k % 40 == 0));
    for r in &rows {
        assert_eq!(r.record.scaled_err.is_none(), r.record.obj_term <= 0.0);
    }

    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert_eq!(report["status"], "primal_infeasible");
    assert_eq!(report["primal_certificate"]["vector"].as_array().unwrap().len(), 3);
    assert!(report["primal_certificate"]["scaled_error"].as_f64().unwrap() <= 1e-8);
    assert!(report["dual_certificate"].is_null());
}

#[test]
fn trace_csv_round_trips() {
    let p = pdhg_core::demos::example1(0.0, 2.0);
    let mut sink = TimedTrace::new();
    commands::solve(&p, &SolveOptions::default(), &mut sink).unwrap();
    assert!(sink.rows.iter().any(|r| r.record.scaled_err.is_none()));
    let mut buf = Vec::new();
    write_trace(&sink.rows, &mut buf).unwrap();
    assert_eq!(read_trace(buf.as_slice()).unwrap(), sink.rows);
}

#[test]
fn demo_instance_feeds_back_into_solve() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdhg(&["demo", "transport_shortfall"]);
    assert_eq!(out.status.code(), Some(0));
    let file = dir.path().join("t.json");
    std::fs::write(&file, &out.stdout).unwrap();
    let lp = read_instance(&out.stdout).unwrap();
    assert_eq!(lp, pdhg_core::demos::transport_shortfall().to_general_form());
    assert_eq!(stdout_first_line(&pdhg(&["solve", path_str(&file)])), "primal_infeasible");
}

#[test]
fn mps_file_solves() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("lp.mps");
    // min x + y, x + 2y ≥ 2, 3x + y ≥ 3: optimum 1.4 at (0.8, 0.6)
    std::fs::write(
        &file,
        "NAME LP\nROWS\n N obj\n G a\n G b\nCOLUMNS\n x obj 1 a 1\n x b 3\n y obj 1 a 2\n y b 1\nRHS\n rhs a 2 b 3\nENDATA\n",
    )
    .unwrap();
    let json = dir.path().join("r.json");
    let out = pdhg(&["solve", path_str(&file), "--json-out", path_str(&json)]);
    assert_eq!(stdout_first_line(&out), "optimal");
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert!((report["primal_objective"].as_f64().unwrap() - 1.4).abs() < 1e-6);

    let out = pdhg(&["oracle", path_str(&file)]);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.starts_with("both_feasible"));
    assert!(text.contains("optimal value 7/5"));
}

#[test]
fn oracle_subcommand_on_example1() {
    let cases = [
        ("0", "1", "both_feasible"),
        ("1", "2", "both_infeasible"),
        ("0", "2", "primal_infeasible"),
        ("1", "1", "dual_infeasible"),
    ];
    for (alpha, beta, want) in cases {
        let out = pdhg(&["oracle", "--demo", "ex1", "--alpha", alpha, "--beta", beta]);
        assert_eq!((out.status.code(), stdout_first_line(&out)), (Some(0), want.to_string()));
    }
}

#[test]
fn analyze_feasible_demo() {
    let p = pdhg_core::demos::example1(0.0, 1.0);
    let opts = AnalyzeOptions { horizon: 20_000, ..AnalyzeOptions::default() };
    let r = commands::analyze(&p, &opts).unwrap();
    assert!(r.v.iter().all(|&v| v == 0.0));
    assert!(r.spectral.skipped.is_none());
    let mu = r.spectral.mu.unwrap();
    assert!(mu > 0.0 && mu < 1.0);
    assert!(r.ray_residual <= 1e-10);

    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("a.json");
    let out = pdhg(&["analyze", "--demo", "ex1_primal_infeasible", "--horizon", "2e4", "--json-out", path_str(&json)]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert!(report["v_y_norm"].as_f64().unwrap() > 0.1);
    assert!(report["farkas_y"].as_f64().unwrap() <= 1e-4);
    assert_eq!(report["rates"]["rate_in_bracket"], true);
}

#[test]
fn oversize_instance_skips_the_spectral_section() {
    // x_i ≥ 1 over 600 nonnegative columns, 800 rows: 2200 unknowns in
    // standard form
    let (n, m) = (600, 800);
    let triplets: Vec<(usize, usize, f64)> = (0..m).map(|i| (i, i % n, 1.0)).collect();
    let p = GeneralFormLp {
        c: vec![1.0; n],
        a: SparseMatrix::from_triplets(m, n, &triplets).unwrap(),
        b: vec![1.0; m],
        lower: vec![0.0; n],
        upper: vec![f64::INFINITY; n],
        obj_offset: 0.0,
    };
    let opts = AnalyzeOptions { warm_iters: 2_000, horizon: 4_000, fit_start: 100, ..AnalyzeOptions::default() };
    let r = commands::analyze(&p, &opts).unwrap();
    assert!(r.spectral.skipped.as_deref().unwrap().contains("2200"));
    assert!(r.spectral.mu.is_none());
    assert!(r.rates.rate_in_bracket.is_none());

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("big.json");
    std::fs::write(&file, write_instance(&p)).unwrap();
    let out = pdhg(&["analyze", path_str(&file), "--warm-iters", "2000", "--horizon", "4000"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("spectral skipped"));
}
