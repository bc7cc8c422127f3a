use skspline::{FundamentalSpline, GaussianKernel, Lattice};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
    out: PathBuf,
}

fn skspline(dir: &TempDir, config: &str, args: &[&str]) -> Run {
    let cfg = dir.path().join("job.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let Output { status, stdout, stderr } = Command::new(env!("CARGO_BIN_EXE_skspline"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    Run {
        code: status.code().unwrap(),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
        out,
    }
}

fn value(stdout: &str, key: &str) -> f64 {
    let prefix = format!("{key} = ");
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("{key} missing from {stdout}"))
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn symbol_one_dimensional() {
    let dir = TempDir::new().unwrap();
    let run = skspline(&dir, r#"{"dim": 1}"#, &["symbol"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (header, rows) = read_csv(&run.out.join("symbol.csv"));
    assert_eq!(header, ["z_1", "upsilon_inv_freq", "upsilon_inv_spatial_re", "upsilon_inv_spatial_im", "upsilon"]);
    assert_eq!(rows.len(), 64);
    assert!(value(&run.stdout, "min_symbol_inverse") > 0.0);
    assert!(value(&run.stdout, "poisson_residual") <= 1e-10);
}

#[test]
fn malformed_matrix_names_the_field() {
    let dir = TempDir::new().unwrap();
    let run = skspline(&dir, r#"{"dim": 2, "A": [[1.0, 0.0], [0.0]]}"#, &["symbol"]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("A:"), "{}", run.stderr);
}

#[test]
fn kernel_width_moves_the_symbol_minimum() {
    let dir = TempDir::new().unwrap();
    let min = |b: f64| {
        let run = skspline(&dir, &format!(r#"{{"dim": 1, "B": [[{b}]]}}"#), &["symbol"]);
        assert_eq!(run.code, 0, "{}", run.stderr);
        value(&run.stdout, "min_symbol_inverse")
    };
    let base = min(1.0);
    // a narrower kernel flattens the symbol, a wider one pushes it towards zero
    assert!(min(4.0) > base);
    assert!(min(0.5) < base);
}

#[test]
fn degenerate_symbol_exits_2() {
    let dir = TempDir::new().unwrap();
    let run = skspline(&dir, r#"{"dim": 1, "B": [[0.2]]}"#, &["symbol"]);
    assert_eq!(run.code, 2, "{}", run.stderr);
    assert!(run.out.join("symbol.csv").exists());
}

#[test]
fn fundamental_default_and_coarse_grid() {
    let dir = TempDir::new().unwrap();
    let run = skspline(&dir, r#"{"dim": 1}"#, &["fundamental"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(value(&run.stdout, "cardinality_residual") <= 1e-7);
    let table = skspline::CoefficientTable::from_json(&fs::read_to_string(run.out.join("coefficients.json")).unwrap()).unwrap();
    assert_eq!(table.n, 64);

    let run = skspline(&dir, r#"{"dim": 1, "N": 8}"#, &["fundamental"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("reconstruction"), "{}", run.stderr);
}

#[test]
fn fundamental_hexagonal_plane() {
    let dir = TempDir::new().unwrap();
    let run = skspline(
        &dir,
        r#"{"dim": 2, "A": [[1.0, 0.5], [0.0, 0.8660254037844386]], "fundamental": {"points": 9}}"#,
        &["fundamental"],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (header, rows) = read_csv(&run.out.join("fundamental.csv"));
    assert_eq!(header, ["x_1", "x_2", "value"]);
    assert_eq!(rows.len(), 81);
    let spline = FundamentalSpline::build(&Lattice::hexagonal(), Arc::new(GaussianKernel::isotropic(2)), 64).unwrap();
    for r in rows {
        assert_eq!(r.len(), 3);
        assert!((spline.eval(&r[..2]).unwrap() - r[2]).abs() <= 1e-15);
    }
}

fn write_samples(dir: &TempDir, radius: i64, f: impl Fn(i64) -> f64) -> PathBuf {
    let path = dir.path().join("samples.csv");
    let mut text = String::from("s_1,value\n");
    for s in -radius..=radius {
        text.push_str(&format!("{s},{:e}\n", f(s)));
    }
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn interpolating_a_delta_gives_the_fundamental_spline() {
    let dir = TempDir::new().unwrap();
    let samples = write_samples(&dir, 10, |s| if s == 0 { 1.0 } else { 0.0 });
    let run = skspline(&dir, r#"{"dim": 1}"#, &["interpolate", "--samples", samples.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (_, rows) = read_csv(&run.out.join("interpolant.csv"));
    assert_eq!(rows.len(), 41);
    let spline = FundamentalSpline::build(&Lattice::identity(1), Arc::new(GaussianKernel::isotropic(1)), 64).unwrap();
    for r in rows {
        assert!((spline.eval(&r[..1]).unwrap() - r[1]).abs() <= 1e-14, "{r:?}");
    }
}

#[test]
fn interpolating_a_bump() {
    let dir = TempDir::new().unwrap();
    let samples = write_samples(&dir, 16, |s| (-(s as f64).powi(2) / 8.0).exp());
    let run = skspline(&dir, r#"{"dim": 1}"#, &["interpolate", "--samples", samples.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(value(&run.stdout, "interior_residual") <= 1e-6);
}

#[test]
fn missing_sample_row_names_the_index() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("samples.csv");
    fs::write(&path, "s_1,value\n-2,0\n-1,0\n0,1\n2,0\n").unwrap();
    let run = skspline(&dir, r#"{"dim": 1}"#, &["interpolate", "--samples", path.to_str().unwrap()]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("missing sample index [1]"), "{}", run.stderr);
}

#[test]
fn verify_passes_on_defaults() {
    let dir = TempDir::new().unwrap();
    for cfg in [r#"{"dim": 1}"#, r#"{"dim": 2}"#] {
        let start = std::time::Instant::now();
        let run = skspline(&dir, cfg, &["verify", "--quiet"]);
        assert_eq!(run.code, 0, "{cfg}: {}", run.stderr);
        assert!(start.elapsed().as_secs() < 60);
        assert!(run.stdout.is_empty());
        let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.out.join("verify.json")).unwrap()).unwrap();
        for (name, check) in report.as_object().unwrap() {
            assert_eq!(check["pass"], true, "{name}");
        }
    }
}

#[test]
fn verify_catches_the_wrong_transform_constant() {
    let dir = TempDir::new().unwrap();
    let run = skspline(&dir, r#"{"dim": 1, "fault": "fourier_constant"}"#, &["verify"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("plancherel") && run.stderr.contains("poisson"), "{}", run.stderr);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["plancherel"]["pass"], false);
    assert_eq!(report["poisson"]["pass"], false);
}

#[test]
fn refine_targets() {
    let dir = TempDir::new().unwrap();
    let errors = |target: &str| {
        let run = skspline(&dir, &format!(r#"{{"dim": 1, "B": [[4.0]], "refine": {{"target": "{target}"}}}}"#), &["refine"]);
        assert_eq!(run.code, 0, "{}", run.stderr);
        let (header, rows) = read_csv(&run.out.join("refine.csv"));
        assert_eq!(header, ["level", "scale", "max_error"]);
        rows.iter().map(|r| r[2]).collect::<Vec<_>>()
    };
    let g = errors("gaussian");
    assert!(g.windows(2).all(|w| w[1] < w[0]), "{g:?}");
    assert!(errors("zero").iter().all(|&e| e == 0.0));
    assert!(errors("kernel_shift").iter().all(|&e| e < 1e-10));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = r#"{"dim": 2, "fundamental": {"points": 11}, "symbol": {"points": 8}}"#;
    for cmd in ["symbol", "fundamental"] {
        assert_eq!(skspline(&a, cfg, &[cmd]).code, 0);
        assert_eq!(skspline(&b, cfg, &[cmd]).code, 0);
    }
    for name in ["symbol.csv", "coefficients.json", "fundamental.csv"] {
        assert_eq!(
            fs::read(a.path().join("out").join(name)).unwrap(),
            fs::read(b.path().join("out").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn usage_errors_exit_1() {
    let out = Command::new(env!("CARGO_BIN_EXE_skspline")).arg("interpolate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_skspline")).args(["symbol", "--config", "/nonexistent.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_skspline")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}
