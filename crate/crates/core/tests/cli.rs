use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mcmc_combine::bundle::SubposteriorBundle;
use mcmc_combine::density::trapezoid;
use mcmc_combine::io::{read_bundle, read_combined, read_matrix, write_bundle, write_matrix};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcmc-combine"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small logistic harness run shared by several tests.
fn harness_dir() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = cli(&[
        "harness",
        "--model",
        "logistic",
        "--n",
        "1500",
        "--shards",
        "3",
        "--iters",
        "800",
        "--burnin",
        "200",
        "--seed",
        "17",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (dir, out)
}

#[test]
fn harness_writes_bundle_chain_and_run_manifest() {
    let (_dir, out) = harness_dir();
    let bundle = read_bundle(&out.join("bundle.json")).unwrap();
    assert_eq!(
        (bundle.dim(), bundle.draws(), bundle.machines()),
        (5, 800, 3)
    );
    let full = read_combined(&out.join("full.csv")).unwrap();
    assert_eq!((full.dim(), full.draws()), (5, 800));
    let run: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["model"], "logistic");
    assert_eq!(run["seed"], 17);
    assert_eq!(run["shards"], 3);
    assert_eq!(run["burnin"], 200);
    assert_eq!(run["coefficients"].as_array().unwrap().len(), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("bundle.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 17);
    assert_eq!(manifest["T"], 800);
}

#[test]
fn every_method_preserves_shape() {
    let (_dir, out) = harness_dir();
    for method in [
        "sample-avg",
        "consensus-indep",
        "consensus-cov",
        "semiparam-dpe",
    ] {
        let path = out.join(format!("{method}.csv"));
        let o = cli(&[
            "combine",
            "--method",
            method,
            "--bundle",
            s(&out.join("bundle.json")),
            "--out",
            s(&path),
        ]);
        assert!(
            o.status.success(),
            "{method}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let m = read_matrix(&path).unwrap();
        assert_eq!((m.rows, m.cols), (800, 5), "{method}");
    }
}

#[test]
fn dpe_seed_controls_output() {
    let (_dir, out) = harness_dir();
    let bundle = out.join("bundle.json");
    let run = |seed: &str, name: &str| {
        let path = out.join(name);
        let o = cli(&[
            "combine",
            "--method",
            "semiparam-dpe",
            "--bundle",
            s(&bundle),
            "--out",
            s(&path),
            "--shuff",
            "--seed",
            seed,
            "--no-anneal",
            "--bandw",
            "1.0,1.0,1.0,1.0,1.0",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(path).unwrap()
    };
    assert_eq!(run("3", "a.csv"), run("3", "b.csv"));
    assert_ne!(run("3", "a.csv"), run("4", "c.csv"));
    // Without --seed the manifest's seed is used.
    let implicit = out.join("d.csv");
    assert!(cli(&[
        "combine",
        "--method",
        "semiparam-dpe",
        "--bundle",
        s(&bundle),
        "--out",
        s(&implicit)
    ])
    .status
    .success());
    let explicit = out.join("e.csv");
    assert!(cli(&[
        "combine",
        "--method",
        "semiparam-dpe",
        "--bundle",
        s(&bundle),
        "--out",
        s(&explicit),
        "--seed",
        "17"
    ])
    .status
    .success());
    assert_eq!(fs::read(implicit).unwrap(), fs::read(explicit).unwrap());
}

#[test]
fn discard_drops_leading_draws() {
    let (_dir, out) = harness_dir();
    let path = out.join("c.csv");
    let o = cli(&[
        "combine",
        "--method",
        "semiparam-dpe",
        "--bundle",
        s(&out.join("bundle.json")),
        "--out",
        s(&path),
        "--discard",
        "100",
    ]);
    assert!(o.status.success());
    assert_eq!(read_matrix(&path).unwrap().rows, 700);
}

#[test]
fn metric_on_identical_files_is_zero() {
    let (_dir, out) = harness_dir();
    let full = out.join("full.csv");
    let o = cli(&["metric", "--full", s(&full), "--combined", s(&full)]);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for (i, row) in rows.iter().enumerate() {
        let fields: Vec<&str> = row.split_whitespace().collect();
        assert_eq!(fields[0], (i + 1).to_string());
        assert_eq!(fields[1].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn density_table_integrates_to_one() {
    let (_dir, out) = harness_dir();
    let combined = out.join("c.csv");
    assert!(cli(&[
        "combine",
        "--method",
        "consensus-cov",
        "--bundle",
        s(&out.join("bundle.json")),
        "--out",
        s(&combined)
    ])
    .status
    .success());
    let density = out.join("density.csv");
    let o = cli(&[
        "metric",
        "--full",
        s(&out.join("full.csv")),
        "--combined",
        s(&combined),
        "--density-out",
        s(&density),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&density).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("parameter,grid,p_full,p_combined"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    for parameter in 1..=5 {
        let block: Vec<&Vec<f64>> = rows.iter().filter(|r| r[0] == parameter as f64).collect();
        assert_eq!(block.len(), 512);
        let grid: Vec<f64> = block.iter().map(|r| r[1]).collect();
        for col in [2, 3] {
            let values: Vec<f64> = block.iter().map(|r| r[col]).collect();
            let mass = trapezoid(&grid, &values);
            assert!(
                (mass - 1.0).abs() < 1e-3,
                "parameter {parameter} column {col}: {mass}"
            );
        }
    }
}

#[test]
fn gamma_harness_reports_shape_and_rate() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&[
        "harness",
        "--model",
        "gamma",
        "--n",
        "4000",
        "--shards",
        "2",
        "--iters",
        "500",
        "--burnin",
        "200",
        "--seed",
        "2",
        "--alpha",
        "3.0",
        "--beta",
        "1.5",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let b = read_bundle(&dir.path().join("bundle.json")).unwrap();
    assert_eq!((b.dim(), b.machines()), (2, 2));
    let run: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(run["alpha"], 3.0);
    assert_eq!(run["beta"], 1.5);
}

fn constant_bundle(dir: &Path) -> PathBuf {
    let mut values = Vec::new();
    for m in 0..2 {
        for t in 0..50 {
            values.push(t as f64 * 0.1 + m as f64);
            values.push(2.0);
        }
    }
    let b = SubposteriorBundle::new(values, 2, 50, 2).unwrap();
    write_bundle(dir, "m.json", &b, None).unwrap()
}

fn assert_error(o: &Output, code: i32, kind: &str) {
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(o.status.code(), Some(code), "{err}");
    assert!(err.starts_with(&format!("error[{kind}]")), "{err}");
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");

    let o = cli(&[
        "combine",
        "--method",
        "bogus",
        "--bundle",
        "x",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));

    let o = cli(&[
        "combine",
        "--method",
        "sample-avg",
        "--bundle",
        s(&dir.path().join("nope.json")),
        "--out",
        s(&out),
    ]);
    assert_error(&o, 2, "file-missing");

    let manifest = constant_bundle(dir.path());
    let o = cli(&[
        "combine",
        "--method",
        "consensus-cov",
        "--bundle",
        s(&manifest),
        "--out",
        s(&out),
    ]);
    assert_error(&o, 3, "degenerate-chain");
    // Averaging needs no variances, so a constant component is fine.
    assert!(cli(&[
        "combine",
        "--method",
        "sample-avg",
        "--bundle",
        s(&manifest),
        "--out",
        s(&out)
    ])
    .status
    .success());

    let o = cli(&[
        "combine",
        "--method",
        "semiparam-dpe",
        "--bundle",
        s(&manifest),
        "--out",
        s(&out),
        "--bandw",
        "1.0",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let one = dir.path().join("one.csv");
    let three = dir.path().join("three.csv");
    write_matrix(&one, &[1.0, 2.0, 3.0], 1).unwrap();
    write_matrix(&three, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3).unwrap();
    let o = cli(&["metric", "--full", s(&one), "--combined", s(&three)]);
    assert_error(&o, 2, "dimension-mismatch");

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1.0\n2.0\nx\n").unwrap();
    let o = cli(&["metric", "--full", s(&bad), "--combined", s(&one)]);
    assert_error(&o, 2, "parse-error");
    assert!(String::from_utf8_lossy(&o.stderr).contains(":3:1:"));

    let o = cli(&[
        "harness",
        "--model",
        "logistic",
        "--n",
        "2",
        "--shards",
        "5",
        "--iters",
        "10",
        "--out",
        s(dir.path()),
    ]);
    assert_error(&o, 2, "too-many-shards");
}
