use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_purify-bound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn exit_codes() {
    let cases: &[(&[&str], i32)] = &[
        (&["ancilla-limit"], 0),
        (&["--help"], 0),
        (&["survey", "--help"], 0),
        (&["--version"], 0),
        (&["apex-scan", "--n-min", "4", "--n-max", "3"], 2),
        (&["survey", "--q", "0.7"], 2),
        (&["simulate", "--f0", "0.4", "--q-max", "0.01"], 2),
        (&["max", "--out", "/nonexistent-dir/out.csv"], 3),
        (&["max", "--format", "xml"], 4),
        (&["simulate", "--noise", "bogus"], 4),
        (&["region", "--model", "bogus"], 4),
        (&["frobnicate"], 4),
        (&["max", "--tol", "-1"], 4),
    ];
    for (args, code) in cases {
        assert_eq!(run(args).status.code(), Some(*code), "{args:?}");
    }
}

#[test]
fn help_documents_columns() {
    let columns: &[(&str, &[&str])] = &[
        ("max", &["n", "p", "q", "f_star", "residual_max"]),
        ("apex-scan", &["n", "p", "q", "f_star", "residual_max"]),
        ("region", &["p", "q", "branch"]),
        ("loss", &["q_f", "q_l_max", "n_star"]),
        ("adversarial", &["theta", "polar", "azimuth", "eof"]),
        ("simulate", &["q", "verdict", "rounds", "final_f"]),
        ("survey", &["left", "right", "fidelity"]),
        ("ancilla-limit", &["p_limit", "percent"]),
    ];
    for (cmd, cols) in columns {
        let help = stdout(&[cmd, "--help"]);
        assert!(help.contains("Output columns:"), "{cmd}");
        for col in *cols {
            assert!(
                help.lines().any(|l| l.trim_start().starts_with(col)),
                "{cmd}: {col}"
            );
        }
    }
}

#[test]
fn header_matches_help() {
    let header = |args: &[&str]| stdout(args).lines().next().unwrap().to_string();
    assert_eq!(header(&["max"]), "n,p,q,f_star,residual_max");
    assert_eq!(header(&["survey"]), "left,right,fidelity");
    assert_eq!(header(&["ancilla-limit"]), "p_limit,percent");
    assert_eq!(header(&["region", "--p-step", "0.1"]), "p,q,branch");
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "apex-scan",
        "--n-min",
        "2",
        "--n-max",
        "3",
        "--step",
        "0.25",
    ];
    let mut files = Vec::new();
    for (i, threads) in ["1", "2"].iter().enumerate() {
        let path = dir.path().join(format!("scan{i}.csv"));
        let mut full = args.to_vec();
        full.extend(["--threads", threads, "--out", path.to_str().unwrap()]);
        assert_eq!(run(&full).status.code(), Some(0));
        files.push(fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], stdout(&args).into_bytes());
}

#[test]
fn json_mirrors_csv() {
    let csv = stdout(&["survey", "--q", "0.1", "--n", "3"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&[
        "survey", "--q", "0.1", "--n", "3", "--format", "json",
    ]))
    .unwrap();
    let records = json.as_array().unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(records.len(), rows.len());
    for (rec, row) in records.iter().zip(rows) {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(rec["left"], cells[0]);
        assert_eq!(rec["right"], cells[1]);
        assert_eq!(
            rec["fidelity"].as_f64().unwrap(),
            cells[2].parse::<f64>().unwrap()
        );
    }
}

#[test]
fn gnuplot_companion() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("apex.dat");
    let csv = stdout(&[
        "apex-scan",
        "--n-min",
        "2",
        "--n-max",
        "2.5",
        "--step",
        "0.5",
        "--gnuplot",
        path.to_str().unwrap(),
    ]);
    let dat = fs::read_to_string(&path).unwrap();
    assert!(dat.starts_with('#'));
    assert_eq!(dat.lines().skip(1).count(), csv.lines().skip(1).count());
    for line in dat.lines().skip(1) {
        assert_eq!(line.split_whitespace().count(), 2);
    }
}

#[test]
fn region_rejects_points_beyond_limit() {
    let out = run(&[
        "region", "--p-min", "0.28", "--p-max", "0.31", "--p-step", "0.01",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = String::from_utf8(out.stdout).unwrap();
    for line in rows.lines().skip(1) {
        let p: f64 = line.split(',').next().unwrap().parse().unwrap();
        assert!(p <= 1.0 - 0.5f64.sqrt() + 1e-12);
    }
    assert!(!out.stderr.is_empty());
}
