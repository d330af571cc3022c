use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const EXAMPLE: &str = r#"
bc = "dirichlet"
epsilon = 0.1
T = 1.0
phi = "0"
psi = "sin(x)"
t_slices = [0.25, 0.5, 0.75, 1.0]

[grid]
nx = 64
nt = 64
"#;

fn invheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invheat")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run_with(body: &str, sub: &str, extra: &[&str]) -> (Output, TempDir) {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), body);
    let out = tmp.path().join("out");
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (invheat(&args), tmp)
}

fn read_columns(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn max_abs(rows: &[Vec<f64>], col: usize) -> f64 {
    rows.iter().map(|r| r[col].abs()).fold(0.0, f64::max)
}

#[test]
fn solve_writes_plot_data() {
    let (out, tmp) = run_with(EXAMPLE, "solve", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");

    let (header, slice) = read_columns(&dir.join("u_slice_t0.5.csv"));
    assert_eq!(header, ["x", "u"]);
    assert_eq!(slice.len(), 65);
    assert!((max_abs(&slice, 1) - 0.634136).abs() < 1e-6);

    // 1.1 / (1 - e^{-1.1}) at x = pi/2, which is a node of the 64-interval grid
    let (header, f) = read_columns(&dir.join("f.csv"));
    assert_eq!(header, ["x", "f"]);
    assert!((max_abs(&f, 1) - 1.648857).abs() < 1e-6);
    assert!(f.windows(2).all(|w| w[0][0] < w[1][0]));

    let (header, grid) = read_columns(&dir.join("u_grid.csv"));
    assert_eq!(header, ["x", "t", "u"]);
    assert_eq!(grid.len(), 65 * 65);
    assert!(grid.iter().flatten().all(|v| v.is_finite()));

    for t in ["0.25", "0.75", "1"] {
        assert!(dir.join(format!("u_slice_t{t}.csv")).exists(), "{t}");
    }
    let coef: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("coefficients.json")).unwrap()).unwrap();
    let modes = coef["modes"].as_array().unwrap();
    let active: Vec<_> = modes.iter().filter(|m| m["c"].as_f64().unwrap().abs() > 1e-10).collect();
    assert_eq!(active.len(), 1);
    assert_eq!((active[0]["branch"].as_u64(), active[0]["k"].as_u64()), (Some(2), Some(1)));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert!(report["checks"].as_array().unwrap().iter().any(|c| c["name"] == "compatibility.psi.d0.vanishes"));
}

#[test]
fn csv_values_round_trip_losslessly() {
    let (out, tmp) = run_with(EXAMPLE, "solve", &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(tmp.path().join("out/f.csv")).unwrap();
    for line in text.lines().skip(1) {
        for field in line.split(',') {
            let v: f64 = field.parse().unwrap();
            assert_eq!(v.to_string().parse::<f64>().unwrap(), v);
            assert_eq!(format!("{v:?}"), field, "csv should print the shortest round-trip form");
        }
    }
}

#[test]
fn zero_data_gives_zero_fields() {
    let body = EXAMPLE.replace("\"sin(x)\"", "\"0\"");
    let (out, tmp) = run_with(&body, "solve", &[]);
    assert_eq!(out.status.code(), Some(0));
    for name in ["f.csv", "u_grid.csv", "u_slice_t0.5.csv"] {
        let (header, rows) = read_columns(&tmp.path().join("out").join(name));
        let last = header.len() - 1;
        assert_eq!(max_abs(&rows, last), 0.0, "{name}");
    }
}

#[test]
fn identical_configs_give_identical_artifacts() {
    let (a, ta) = run_with(EXAMPLE, "solve", &[]);
    let (b, tb) = run_with(EXAMPLE, "solve", &[]);
    assert_eq!((a.status.code(), b.status.code()), (Some(0), Some(0)));
    let mut names: Vec<_> = fs::read_dir(ta.path().join("out")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 8);
    for name in names {
        let x = fs::read(ta.path().join("out").join(&name)).unwrap();
        let y = fs::read(tb.path().join("out").join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
    }
    let (a, ta) = run_with(EXAMPLE, "verify", &[]);
    let (b, tb) = run_with(EXAMPLE, "verify", &[]);
    assert_eq!((a.status.code(), b.status.code()), (Some(0), Some(0)));
    for name in ["report.json", "convergence.csv"] {
        assert_eq!(fs::read(ta.path().join("out").join(name)).unwrap(), fs::read(tb.path().join("out").join(name)).unwrap());
    }
}

#[test]
fn verify_accepts_the_example() {
    let (out, tmp) = run_with(EXAMPLE, "verify", &["--nx", "256", "--nt", "512"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    for c in report["checks"].as_array().unwrap() {
        assert_eq!(c["status"], "pass", "{c}");
    }
    assert_eq!(report["spec"]["grid"]["nx"], 256);
    let rt = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "round_trip.error").unwrap();
    assert!(rt["value"].as_f64().unwrap() <= 5e-4);
    let (header, rows) = read_columns_optional(&tmp.path().join("out/convergence.csv"));
    assert_eq!(header, ["nx", "nt", "h", "tau", "error", "order"]);
    assert_eq!(rows.len(), 3);
}

fn read_columns_optional(path: &Path) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader.records().map(|r| r.unwrap().iter().map(|v| v.parse::<f64>().ok()).collect()).collect();
    (header, rows)
}

#[test]
fn incompatible_data_exits_one() {
    let body = EXAMPLE.replace("phi = \"0\"", "phi = \"cos(x)\"");
    let (out, tmp) = run_with(&body, "verify", &[]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    let flagged: Vec<_> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["name"].as_str().unwrap().starts_with("compatibility.phi") && c["status"] == "warn")
        .collect();
    assert!(!flagged.is_empty());
    let (out, _tmp) = run_with(&body, "check", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("compatibility.phi.d0.vanishes"));
}

#[test]
fn usage_errors_exit_two() {
    let (out, _t) = run_with(&EXAMPLE.replace("dirichlet", "robin"), "solve", &[]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    for kind in ["dirichlet", "neumann", "periodic", "antiperiodic"] {
        assert!(msg.contains(kind), "{msg}");
    }
    let (out, _t) = run_with("bc = \"dirichlet\"\nepsilon = [", "verify", &[]);
    assert_eq!(out.status.code(), Some(2));
    let (out, _t) = run_with(EXAMPLE, "verify", &["--tol", "no_such_key=1"]);
    assert_eq!(out.status.code(), Some(2));
    let (out, _t) = run_with(EXAMPLE, "solve", &["--nx", "63"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(invheat(&["solve", "--config", "/nonexistent/run.toml"]).status.code(), Some(2));
    assert_eq!(invheat(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn tightened_tolerance_turns_verify_red() {
    let (out, tmp) = run_with(EXAMPLE, "verify", &["--tol", "round_trip=1e-9"]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    let rt = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "round_trip.error").unwrap();
    assert_eq!(rt["status"], "fail");
    assert_eq!(rt["tol"], 1e-9);
}

#[test]
fn spectrum_subcommand() {
    let out = invheat(&["spectrum", "--bc", "antiperiodic", "--epsilon", "-0.5", "--kmax", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "branch,k,lambda,kernel\n1,0,0.125,sin((k+1/2)x)\n2,0,0.375,cos((k+1/2)x)\n");
    let out = invheat(&["spectrum", "--bc", "neumann", "--epsilon", "0", "--kmax", "0"]);
    assert!(String::from_utf8(out.stdout).unwrap().lines().any(|l| l.starts_with("0,0,0")));
    assert_eq!(invheat(&["spectrum", "--bc", "dirichlet", "--epsilon", "1.5"]).status.code(), Some(2));
}

#[test]
fn committed_example_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/sine_example.toml");
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = invheat(&["check", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}
