use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mvsk_core::moments::{estimate_moments, portfolio_moments, read_moments, read_returns_csv};
use mvsk_core::SolveReport;
use tempfile::TempDir;

fn mvsk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvsk"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(p: &Path) -> SolveReport {
    SolveReport::from_json(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn gen_data_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    for p in [&a, &b] {
        let o = mvsk(&[
            "gen-data",
            "--n-assets",
            "3",
            "--n-obs",
            "15",
            "--seed",
            "7",
            "--out",
            s(p),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn gen_data_default_shape() {
    let o = mvsk(&["gen-data", "--n-assets", "5", "--seed", "1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 5);
    assert_eq!(lines.count(), 25);
}

#[test]
fn gen_data_needs_a_size() {
    assert_eq!(code(&mvsk(&["gen-data"])), 1);
    assert_eq!(code(&mvsk(&["gen-data", "--n-assets", "1"])), 1);
}

#[test]
fn moments_writes_binary_and_prints_footprint() {
    let dir = TempDir::new().unwrap();
    let (csv, bin) = (path(&dir, "r.csv"), path(&dir, "m.bin"));
    assert_eq!(
        code(&mvsk(&[
            "gen-data",
            "--n-assets",
            "3",
            "--seed",
            "2",
            "--out",
            s(&csv)
        ])),
        0
    );
    let o = mvsk(&["moments", "--input", s(&csv), "--out", s(&bin)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("N = 3") && out.contains("T = 15"), "{out}");
    assert!(out.contains("footprint = 960 bytes"), "{out}");
    assert_eq!(fs::metadata(&bin).unwrap().len(), 8 * (1 + 3 + 9 + 27 + 81));

    let from_bin = read_moments(fs::File::open(&bin).unwrap(), 150).unwrap();
    let direct =
        estimate_moments(&read_returns_csv(fs::File::open(&csv).unwrap()).unwrap()).unwrap();
    assert_eq!(from_bin, direct);
}

#[test]
fn malformed_csv_names_line_and_column() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "bad.csv");
    fs::write(&csv, "A,B,C\n0.01,0.02,0.03\n0.01,abc,0.02\n0.0,0.0,0.0\n").unwrap();
    let o = mvsk(&[
        "moments",
        "--input",
        s(&csv),
        "--out",
        s(&path(&dir, "m.bin")),
    ]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("line 3") && err.contains("column 2"), "{err}");
}

#[test]
fn asset_cap_is_a_resource_error() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "wide.csv");
    let header: Vec<String> = (0..200).map(|i| format!("A{i}")).collect();
    let row = vec!["0.001"; 200].join(",");
    fs::write(&csv, format!("{}\n{row}\n{row}\n{row}\n", header.join(","))).unwrap();
    let o = mvsk(&[
        "moments",
        "--input",
        s(&csv),
        "--out",
        s(&path(&dir, "m.bin")),
    ]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("O(N^4)"), "{}", stderr(&o));
    assert_eq!(code(&mvsk(&["solve", "--n-assets", "200"])), 3);
}

#[test]
fn qmvsk_end_to_end() {
    let dir = TempDir::new().unwrap();
    let (csv, rep, trace) = (
        path(&dir, "r.csv"),
        path(&dir, "rep.json"),
        path(&dir, "trace.csv"),
    );
    assert_eq!(
        code(&mvsk(&[
            "gen-data",
            "--n-assets",
            "20",
            "--seed",
            "3",
            "--out",
            s(&csv)
        ])),
        0
    );
    let o = mvsk(&[
        "solve",
        "--input",
        s(&csv),
        "--kind",
        "mvsk",
        "--method",
        "qmvsk",
        "--xi",
        "10",
        "--report",
        s(&rep),
        "--trace",
        s(&trace),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&rep);
    assert!(r.converged());
    assert!(r.max_violation <= 1e-6);
    let m = estimate_moments(&read_returns_csv(fs::File::open(&csv).unwrap()).unwrap()).unwrap();
    let phi = portfolio_moments(&r.w_final.to_vector(), &m).unwrap();
    for (a, b) in phi.iter().zip(r.moments_final) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
    }
    let trace = fs::read_to_string(&trace).unwrap();
    assert_eq!(trace.lines().count(), r.trace.len() + 1);
    assert!(trace.starts_with("k,objective,gamma,eta,max_violation,stationarity,wall_ms\n"));
}

#[test]
fn tilting_with_zero_budget_stays_put() {
    let dir = TempDir::new().unwrap();
    let rep = path(&dir, "rep.json");
    let o = mvsk(&[
        "solve",
        "--n-assets",
        "6",
        "--kind",
        "tilting",
        "--method",
        "qmvskt",
        "--c",
        "0",
        "--report",
        s(&rep),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&rep);
    assert_eq!(r.delta_final, Some(0.0));
    assert!(r.max_violation <= 1e-6);
}

#[test]
fn method_kind_mismatch_fails_before_compute() {
    let dir = TempDir::new().unwrap();
    let rep = path(&dir, "rep.json");
    let o = mvsk(&[
        "solve",
        "--n-assets",
        "20",
        "--kind",
        "mvsk",
        "--method",
        "lmvskt",
        "--report",
        s(&rep),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("lmvskt"));
    assert!(!rep.exists());
    // no data source either: the mismatch is still reported first
    assert_eq!(
        code(&mvsk(&["solve", "--kind", "tilting", "--method", "mm"])),
        1
    );
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&mvsk(&["solve", "--bogus"])), 1);
    assert_eq!(code(&mvsk(&["solve", "--method", "sqp"])), 1);
    assert_eq!(
        code(&mvsk(&["solve", "--n-assets", "4", "--stop-tol", "0"])),
        1
    );
    assert_eq!(code(&mvsk(&["solve"])), 1);
    assert_eq!(code(&mvsk(&["--help"])), 0);
}

#[test]
fn max_iter_exits_four() {
    let dir = TempDir::new().unwrap();
    let rep = path(&dir, "rep.json");
    let o = mvsk(&[
        "solve",
        "--n-assets",
        "10",
        "--method",
        "dc",
        "--max-iter",
        "1",
        "--report",
        s(&rep),
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(!report(&rep).converged());
}

#[test]
fn reports_are_bitwise_reproducible() {
    let dir = TempDir::new().unwrap();
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let (rep, trace) = (
                path(&dir, &format!("r{i}.json")),
                path(&dir, &format!("t{i}.csv")),
            );
            let o = mvsk(&[
                "solve",
                "--n-assets",
                "8",
                "--seed",
                "5",
                "--method",
                "mm",
                "--report",
                s(&rep),
                "--trace",
                s(&trace),
            ]);
            assert_eq!(code(&o), 0);
            [fs::read(&rep).unwrap(), fs::read(&trace).unwrap()].concat()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = TempDir::new().unwrap();
    let (cfg, rep) = (path(&dir, "run.toml"), path(&dir, "rep.json"));
    fs::write(
        &cfg,
        "version = 1\nn_assets = 6\nseed = 4\nmethod = \"dc\"\nmax_iter = 1\n",
    )
    .unwrap();
    let o = mvsk(&[
        "solve",
        "--config",
        s(&cfg),
        "--method",
        "qmvsk",
        "--max-iter",
        "200",
        "--report",
        s(&rep),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(report(&rep).method.name(), "qmvsk");

    fs::write(&cfg, "version = 1\nn_asets = 6\n").unwrap();
    let o = mvsk(&["solve", "--config", s(&cfg)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("n_asets"), "{}", stderr(&o));
    fs::write(&cfg, "n_assets = 6\n").unwrap();
    assert_eq!(code(&mvsk(&["solve", "--config", s(&cfg)])), 1);
}

fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn bench_sweep_is_paired_and_sorted() {
    let dir = TempDir::new().unwrap();
    let (out, runs) = (path(&dir, "bench.csv"), path(&dir, "runs.csv"));
    let o = mvsk(&[
        "bench",
        "--sizes",
        "20,10",
        "--methods",
        "qmvsk,dc,mm",
        "--reps",
        "5",
        "--out",
        s(&out),
        "--runs",
        s(&runs),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&out);
    let keys: Vec<(String, String)> = rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    let expect = [
        ("10", "dc"),
        ("10", "mm"),
        ("10", "qmvsk"),
        ("20", "dc"),
        ("20", "mm"),
        ("20", "qmvsk"),
    ];
    assert_eq!(keys, expect.map(|(a, b)| (a.to_string(), b.to_string())));
    for r in &rows {
        assert_eq!(r[2], "5");
        assert!(!r[6].is_empty() && !r[8].is_empty());
    }

    let runs = csv_rows(&runs);
    assert_eq!(runs.len(), 30);
    for n in ["10", "20"] {
        let of = |m: &str| -> Vec<(u64, f64)> {
            runs.iter()
                .filter(|r| r[0] == n && r[1] == m)
                .map(|r| (r[2].parse().unwrap(), r[6].parse().unwrap()))
                .collect()
        };
        let (q, mm) = (of("qmvsk"), of("mm"));
        assert_eq!(
            q.iter().map(|p| p.0).collect::<Vec<_>>(),
            mm.iter().map(|p| p.0).collect::<Vec<_>>()
        );
        for ((_, fq), (_, fm)) in q.iter().zip(&mm) {
            assert!(*fq <= fm + 1e-6, "n = {n}: {fq} vs {fm}");
        }
    }
}

#[test]
fn bench_records_failed_runs() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "bench.csv");
    let o = mvsk(&[
        "bench",
        "--sizes",
        "4,12",
        "--max-assets",
        "10",
        "--methods",
        "mm",
        "--reps",
        "2",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].last().unwrap(), "ok");
    assert_eq!(
        (rows[1][5].as_str(), rows[1].last().unwrap().as_str()),
        ("2", "failed")
    );
}

#[test]
fn bench_rejects_mixed_kinds() {
    let o = mvsk(&[
        "bench",
        "--kind",
        "mvsk",
        "--methods",
        "mm,qmvskt",
        "--reps",
        "1",
    ]);
    assert_eq!(code(&o), 1);
}
