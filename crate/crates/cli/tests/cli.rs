use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ncsched"))
}

#[test]
fn erlang_curve_has_32_rows() {
    let out = bin()
        .args([
            "analytic", "erlang", "--lambda", "0.9", "--T", "100", "--N", "1..32",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 33);
    assert!(lines[0].starts_with("scenario,mode,sweep_value,N,T,W,R,s,lambda,pbd"));
    assert!(lines[0].ends_with("analytic_ext_block"));
    assert!(lines[1].ends_with(",0.989011"));
}

#[test]
fn leader_curve_lists_every_rank() {
    let out = bin()
        .args([
            "analytic", "leader", "--pbd", "0.5", "--W", "2", "--T", "4", "--s", "4", "--mode",
            "coded",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(
        rows,
        [
            "CODED_FIN,0.5,0,,,,0.00390625,,,",
            "CODED_FIN,0.5,1,,,,0.0078125,,,",
            "CODED_FIN,0.5,2,,,,0.015625,,,",
            "CODED_FIN,0.5,3,,,,0.03125,,,",
        ]
    );
    let bad = bin()
        .args([
            "analytic", "leader", "--pbd", "1.5", "--W", "2", "--T", "4", "--s", "4", "--mode",
            "coded",
        ])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn simulate_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.json");
    fs::write(
        &cfg,
        r#"{
  "id": "tiny",
  "T": 4, "W": 2, "s": 2, "N": 4,
  "lambda": 0.8, "pbd": 0.4,
  "horizon": 3000, "replications": 3,
  "compare_modes": ["UNCODED_FIN", "CODED_FIN", "UNCODED_INF"],
  "sweep": {"parameter": "N", "values": [2, 4]},
  "dump_layout": true
}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let status = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .args(["--seed", "5", "--threads", "2"])
        .status()
        .unwrap();
    assert!(status.success());
    for f in [
        "results.csv",
        "leader_block.csv",
        "leader_block_useful.csv",
        "scenario.json",
        "layout_CODED_FIN.json",
        "layout_UNCODED_FIN.json",
    ] {
        assert!(out_dir.join(f).exists(), "{f} missing");
    }
    let results = fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let rows: Vec<Vec<&str>> = results
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r.len(), 19);
        // only infinite-I/O rows carry the Erlang value
        assert_eq!(r[1] == "UNCODED_INF", !r[18].is_empty());
    }
    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("scenario.json")).unwrap()).unwrap();
    assert_eq!(echo["config"]["master_seed"], 5);
    let layout: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("layout_CODED_FIN.json")).unwrap())
            .unwrap();
    assert_eq!(layout["H"], 8);
    assert_eq!(layout["drives"].as_array().unwrap().len(), 4);
}

#[test]
fn bad_documents_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.json", "{\"T\": 4,\n \"W\": }"),
        ("field.json", "{\"T\": 4, \"W\": 2, \"s\": 2, \"N\": 3, \"lambda\": 0.5, \"pbd\": 2.0, \"mode\": \"CODED_FIN\"}"),
        ("unknown.json", "{\"T\": 4, \"W\": 2, \"s\": 2, \"N\": 3, \"lambda\": 0.5, \"pbd\": 0.2, \"mode\": \"CODED_FIN\", \"colour\": 1}"),
        ("layout.json", "{\"T\": 4, \"W\": 2, \"s\": 3, \"N\": 3, \"lambda\": 0.5, \"pbd\": 0.2, \"mode\": \"CODED_FIN\"}"),
    ];
    for (name, text) in cases {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        let out = bin()
            .args(["simulate", "--config"])
            .arg(&p)
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(2),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
    let out = bin()
        .args(["simulate", "--preset", "fig7"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 6);
}
