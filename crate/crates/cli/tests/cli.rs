use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use noisy_draws::analytic;
use noisy_draws::empirical::reduce_panel;
use noisy_draws::{Panel, ThetaGrid};
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_noisy-draws"));
    cmd.env_remove("NOISY_DRAWS_THREADS").env("RUST_LOG", "error");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn table(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    (header, rows)
}

fn generate(dir: &TempDir, name: &str, n: usize, m: usize, seed: u64) -> PathBuf {
    let path = dir.path().join(name);
    ok(&[
        "generate",
        "--n",
        &n.to_string(),
        "--m",
        &m.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        s(&path),
    ]);
    path
}

#[test]
fn naive_cdf_steps() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "e.csv", "theta_hat,sigma2\n1,1\n2,1\n3,1\n");
    let out = ok(&["estimate", s(&input), "--m", "2", "--method", "naive", "--grid", "0:4:9"]);
    let (header, rows) = table(&out);
    assert_eq!(header, ["theta", "f_hat", "bias_hat", "f_corrected", "se"]);
    let f: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let third = 1.0 / 3.0;
    let want = [0.0, 0.0, third, third, 2.0 * third, 2.0 * third, 1.0, 1.0, 1.0];
    for (a, b) in f.iter().zip(want) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn analytic_bias_integrates_to_zero() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "p.csv", 100, 4, 7);
    let out = ok(&["estimate", s(&input), "--method", "analytic", "--cv"]);
    let (_, rows) = table(&out);
    assert_eq!(rows.len(), 201);
    let range = rows[200][0] - rows[0][0];
    let integral: f64 = rows
        .windows(2)
        .map(|w| 0.5 * (w[1][0] - w[0][0]) * (w[0][2] + w[1][2]))
        .sum();
    assert!(integral.abs() < 1e-3 * range, "integral {integral}, range {range}");
    assert!(rows.iter().any(|r| r[2].abs() > 1e-3));
}

#[test]
fn constant_unit_is_named() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "p.csv",
        "unit,period,value\nalpha,1,1\nalpha,2,2\nbeta,1,3\nbeta,2,3\ngamma,1,0\ngamma,2,1\n",
    );
    let out = run(&["estimate", s(&input), "--method", "naive"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("'beta'"), "{err}");
}

#[test]
fn parse_errors_carry_line_numbers() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "e.csv", "theta_hat,sigma2\n1,1\n2,oops\n3,1\n");
    let out = run(&["estimate", s(&input), "--m", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let input = write(&dir, "f.csv", "a,b\n1,2\n");
    assert_eq!(run(&["estimate", s(&input), "--m", "2"]).status.code(), Some(2));
    assert_eq!(run(&["estimate", "/no/such/file.csv"]).status.code(), Some(2));
    assert_eq!(run(&["estimate", "--bogus"]).status.code(), Some(2));
}

#[test]
fn output_round_trips_library_values() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "p.csv", 60, 3, 11);
    let out = dir.path().join("cdf.csv");
    ok(&["estimate", s(&input), "--h", "0.4", "--grid", "-4:4:41", "--out", s(&out)]);
    let (_, rows) = table(&std::fs::read_to_string(&out).unwrap());

    let mut reader = csv::Reader::from_path(&input).unwrap();
    let values: Vec<f64> = reader
        .records()
        .map(|r| r.unwrap()[2].parse().unwrap())
        .collect();
    let panel = Panel::new(values, 60, 3).unwrap();
    let sample = reduce_panel(&panel).unwrap();
    let grid = ThetaGrid::linspace(-4.0, 4.0, 41).unwrap();
    let est = analytic::corrected_cdf(&sample, &grid, 0.4).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1e-300) || a == b;
    for (k, row) in rows.iter().enumerate() {
        assert!(close(row[0], grid.points()[k]));
        assert!(close(row[1], est.f_hat[k]));
        assert!(close(row[2], est.bias_hat[k]));
        assert!(close(row[3], est.f_corrected[k]));
        assert!(close(row[4], est.se[k]));
    }
}

#[test]
fn clamp_is_presentation_only() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "p.csv", 30, 3, 5);
    let plain = table(&ok(&["estimate", s(&input), "--h", "0.2"])).1;
    let clamped = table(&ok(&["estimate", s(&input), "--h", "0.2", "--clamp"])).1;
    assert!(plain.iter().any(|r| !(0.0..=1.0).contains(&r[3])));
    for (p, c) in plain.iter().zip(&clamped) {
        assert_eq!(p[1], c[1]);
        assert_eq!(p[3].clamp(0.0, 1.0), c[3]);
    }
}

#[test]
fn quantile_table_and_bootstrap_seed() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "p.csv", 80, 4, 3);
    let args = ["estimate", s(&input), "--h", "0.5", "--taus", "0.25,0.5", "--bootstrap", "199"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let (header, rows) = table(&a);
    assert_eq!(header, ["tau", "q_naive", "tau_star", "q_corrected", "ci_lower", "ci_upper"]);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r[4] <= r[3] && r[3] <= r[5]);
    }
    let mut other = args.to_vec();
    other.extend(["--seed", "1"]);
    assert_ne!(a, ok(&other));
    let threaded = bin().args(args).env("NOISY_DRAWS_THREADS", "1").output().unwrap();
    assert_eq!(String::from_utf8(threaded.stdout).unwrap(), a);
    let bad = bin().args(args).env("NOISY_DRAWS_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn jackknife_methods() {
    let dir = TempDir::new().unwrap();
    let panel = generate(&dir, "p.csv", 50, 6, 2);
    let q = dir.path().join("q.csv");
    for method in ["split-jackknife", "lambda-jackknife"] {
        let cdf = ok(&[
            "estimate", s(&panel), "--method", method, "--taus", "0.3", "--grid", "-3:3:7", "--quantile-out", s(&q),
        ]);
        assert_eq!(table(&cdf).1.len(), 7, "{method}");
        let (_, rows) = table(&std::fs::read_to_string(&q).unwrap());
        assert_eq!(rows.len(), 1);
        assert!(rows[0][2].is_nan() && rows[0][3].is_finite(), "{method}");
    }
    let est = dir.path().join("e.csv");
    ok(&["generate", "--n", "50", "--m", "6", "--layout", "estimates", "--out", s(&est)]);
    let out = run(&["estimate", s(&est), "--m", "6", "--method", "split-jackknife"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bandwidth_trace_and_argmin() {
    let dir = TempDir::new().unwrap();
    let input = generate(&dir, "p.csv", 100, 4, 1);
    let trace = dir.path().join("trace.csv");
    let h: f64 = ok(&["bandwidth", s(&input), "--trace", s(&trace)]).trim().parse().unwrap();
    let (header, rows) = table(&std::fs::read_to_string(&trace).unwrap());
    assert_eq!(header, ["h", "v"]);
    assert!(rows.iter().all(|r| r[0] > 0.0 && r[1].is_finite()));
    let k = (0..rows.len()).min_by(|&a, &b| rows[a][1].total_cmp(&rows[b][1])).unwrap();
    assert!(k > 0 && k < rows.len() - 1);
    assert!(rows[k - 1][0] <= h && h <= rows[k + 1][0], "h {h} vs argmin {}", rows[k][0]);
}

#[test]
fn bandwidth_edge_minimum_exit_code() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "e.csv", "theta_hat,sigma2\n0,0.01\n0.1,0.01\n5,0.01\n5.1,0.01\n");
    let out = run(&["bandwidth", s(&input), "--m", "5"]);
    assert_eq!(out.status.code(), Some(3));
    let h: f64 = ok(&["bandwidth", s(&input), "--m", "5", "--fallback"]).trim().parse().unwrap();
    assert!(h > 0.0);
    let out = run(&["estimate", s(&input), "--m", "5", "--cv"]);
    assert_eq!(out.status.code(), Some(3));
    ok(&["estimate", s(&input), "--m", "5", "--cv", "--fallback"]);
}

#[test]
fn bandwidth_shrinks_with_m() {
    let dir = TempDir::new().unwrap();
    let median_h = |m: usize| {
        let mut hs: Vec<f64> = (0..50)
            .map(|seed| {
                let input = generate(&dir, &format!("m{m}_{seed}.csv"), 100, m, seed);
                let text = ok(&["bandwidth", s(&input), "--fallback"]);
                text.trim().parse().unwrap()
            })
            .collect();
        hs.sort_by(f64::total_cmp);
        0.5 * (hs[24] + hs[25])
    };
    let (h3, h12) = (median_h(3), median_h(12));
    assert!(h12 < h3, "median h: m=3 {h3}, m=12 {h12}");
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let config = config_path("table2.json");
    let json = |name: &str| {
        let path = dir.path().join(name);
        ok(&["simulate", "--config", s(&config), "--replications", "20", "--quiet", "--json", s(&path)]);
        std::fs::read(path).unwrap()
    };
    let a = json("a.json");
    assert_eq!(a, json("b.json"));
    let doc: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["reports"].as_array().unwrap().len(), 3);
}

#[test]
fn table1_config_reproduces_variance_bands() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("t1.json");
    let csv = dir.path().join("t1.csv");
    let text = ok(&[
        "simulate",
        "--config",
        s(&config_path("table1.json")),
        "--json",
        s(&json),
        "--csv",
        s(&csv),
        "--strict",
    ]);
    assert!(text.contains("psi2_check"));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let cell = |rep: usize, est: &str, key: &str| {
        doc["reports"][rep]["rows"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["estimator"] == est)
            .unwrap()[key]
            .as_f64()
            .unwrap()
    };
    assert!((cell(0, "psi2_hat", "bias") - 1.616).abs() < 0.05);
    assert!((cell(0, "psi2_hat", "size_5pct") - 0.973).abs() < 0.015);
    assert!((cell(0, "psi2_check", "size_5pct") - 0.082).abs() < 0.015);
    assert!((cell(1, "psi2_hat", "bias") - 0.989).abs() < 0.03);
    assert!((cell(1, "psi2_check", "size_5pct") - 0.062).abs() < 0.01);
    let lines = std::fs::read_to_string(&csv).unwrap();
    assert!(lines.starts_with("experiment,section,estimator"));
    assert_eq!(lines.lines().count(), 1 + 2 * 2);
}

#[test]
fn table2_config_reproduces_rmse_bands() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("t2.json");
    ok(&[
        "simulate",
        "--config",
        s(&config_path("table2.json")),
        "--replications",
        "1000",
        "--quiet",
        "--json",
        s(&json),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let want = [(0.0969, 0.0816), (0.0756, 0.0578), (0.0620, 0.0424)];
    for (rep, (hat, check)) in want.iter().enumerate() {
        let curve = |name: &str| {
            doc["reports"][rep]["curves"]
                .as_array()
                .unwrap()
                .iter()
                .find(|c| c["estimator"] == name)
                .unwrap()["rmse"]
                .as_f64()
                .unwrap()
        };
        assert!((curve("f_hat") - hat).abs() < 0.006, "design {rep}");
        assert!((curve("f_check") - check).abs() < 0.006, "design {rep}");
        assert!(curve("f_check") < curve("f_hat"));
    }
}

#[test]
fn config_validation() {
    let dir = TempDir::new().unwrap();
    let good = r#"{"schema": 1, "experiments": [{"design": {"kind": "normal", "n": 20, "m": 3}, "estimators": ["variance"], "replications": 10}]}"#;
    let path = write(&dir, "good.json", good);
    ok(&["simulate", "--config", s(&path), "--strict", "--quiet"]);

    let typo = good.replace("\"replications\"", "\"extra\": 1, \"replications\"");
    let path = write(&dir, "typo.json", &typo);
    ok(&["simulate", "--config", s(&path), "--quiet"]);
    let out = run(&["simulate", "--config", s(&path), "--strict", "--quiet"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiments[0].extra"));

    let path = write(&dir, "v2.json", &good.replace("\"schema\": 1", "\"schema\": 2"));
    assert_eq!(run(&["simulate", "--config", s(&path)]).status.code(), Some(2));
    let path = write(&dir, "bad.json", "{not json");
    assert_eq!(run(&["simulate", "--config", s(&path)]).status.code(), Some(2));
    let path = write(&dir, "tiny.json", &good.replace("\"n\": 20", "\"n\": 1"));
    assert_eq!(run(&["simulate", "--config", s(&path)]).status.code(), Some(2));
}
