//! Command-line front end and the artifact files it writes.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficients::{compatibility_check, ModeCoefficients};
use crate::expr::parse;
use crate::solver::{solve, ConstantMode, ProblemSpec, Route, SeriesSolution, SolveError};
use crate::spectral::{check_epsilon, BcKind, Branch};
use crate::verify::{self, Bound, Check, CheckStatus, ConvergenceRow, Options, Tolerances, VerificationReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Parser)]
#[command(name = "invheat", version, about = "Inverse source problem for the heat equation with involution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconstruct u and f and write CSV/JSON artifacts
    Solve(RunArgs),
    /// Run the full verification suite
    Verify(RunArgs),
    /// Dump eigenvalues and kernels as CSV
    Spectrum(SpectrumArgs),
    /// Check the boundary hypotheses on the data only
    Check(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides output_dir)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Truncation order
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub nt: Option<usize>,
    /// Quadrature nodes
    #[arg(long)]
    pub quad: Option<usize>,
    /// Tolerance override, e.g. --tol pde_residual=1e-5
    #[arg(long = "tol", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub bc: String,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 10)]
    pub kmax: u32,
    /// Directory for spectrum.csv; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (key, value) = s.split_once('=').ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let value: f64 = value.trim().parse().map_err(|_| format!("bad number in '{s}'"))?;
    Ok((key.trim().to_string(), value))
}

fn default_truncation() -> u32 {
    ProblemSpec::DEFAULT_TRUNCATION
}

fn default_quad() -> usize {
    ProblemSpec::DEFAULT_QUAD_NODES
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_nt")]
    pub nt: usize,
}

fn default_nx() -> usize {
    ProblemSpec::DEFAULT_NX
}

fn default_nt() -> usize {
    ProblemSpec::DEFAULT_NT
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx: default_nx(), nt: default_nt() }
    }
}

/// One reproducible run, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub bc: String,
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub final_time: f64,
    pub phi: String,
    pub psi: String,
    #[serde(rename = "N", default = "default_truncation")]
    pub truncation: u32,
    #[serde(default = "default_quad")]
    pub quad_nodes: usize,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub t_slices: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, args: &RunArgs) -> Result<(), CliError> {
        if let Some(n) = args.n {
            self.truncation = n;
        }
        if let Some(nx) = args.nx {
            self.grid.nx = nx;
        }
        if let Some(nt) = args.nt {
            self.grid.nt = nt;
        }
        if let Some(q) = args.quad {
            self.quad_nodes = q;
        }
        if let Some(out) = &args.out {
            self.output_dir = Some(out.clone());
        }
        for (key, value) in &args.tol {
            self.tolerances.set(key, *value).map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Builds and validates the problem, including the slice times.
    pub fn to_spec(&self) -> Result<ProblemSpec, CliError> {
        let kind: BcKind = self.bc.parse().map_err(|e: crate::spectral::UnknownBcKind| CliError::Config(e.to_string()))?;
        let phi = parse(&self.phi).map_err(|e| CliError::Config(format!("phi: {e}")))?;
        let psi = parse(&self.psi).map_err(|e| CliError::Config(format!("psi: {e}")))?;
        let spec = ProblemSpec::new(kind, self.epsilon, self.final_time, phi, psi)
            .with_truncation(self.truncation)
            .with_grid(self.grid.nx, self.grid.nt)
            .with_quad_nodes(self.quad_nodes);
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !self.grid.nx.is_multiple_of(2) {
            return Err(CliError::Config(format!("grid.nx must be even, got {}", self.grid.nx)));
        }
        if let Some(t) = self.t_slices.iter().find(|t| !(0.0..=self.final_time).contains(*t)) {
            return Err(CliError::Config(format!("t_slices entry {t} is outside [0, {}]", self.final_time)));
        }
        Ok(spec)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Solve(args) => {
            let (config, spec) = prepare(args)?;
            cmd_solve(&config, &spec)?;
            Ok(0)
        }
        Command::Verify(args) => {
            let (config, spec) = prepare(args)?;
            Ok(cmd_verify(&config, &spec)?.worst().exit_code())
        }
        Command::Check(args) => {
            let (config, spec) = prepare(args)?;
            let report = cmd_check(&config, &spec);
            let table: String =
                report.checks.iter().map(|c| format!("{:<36} {:>12.3e} {}\n", c.name, c.value, c.status.as_str())).collect();
            write_stdout(&table)?;
            if let Some(dir) = &args.out {
                write_text(dir, "report.json", &report.to_json())?;
            }
            Ok(report.worst().exit_code())
        }
        Command::Spectrum(args) => {
            let kind: BcKind = args.bc.parse().map_err(|e: crate::spectral::UnknownBcKind| CliError::Config(e.to_string()))?;
            let csv = cmd_spectrum(kind, args.epsilon, args.kmax)?;
            match &args.out {
                Some(dir) => write_text(dir, "spectrum.csv", &csv)?,
                None => write_stdout(&csv)?,
            }
            Ok(0)
        }
    }
}

/// A reader that closed the pipe early (`| head`) is not an error.
fn write_stdout(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(io_err(Path::new("<stdout>"))(e)),
        _ => Ok(()),
    }
}

fn prepare(args: &RunArgs) -> Result<(RunConfig, ProblemSpec), CliError> {
    let mut config = RunConfig::load(&args.config)?;
    config.apply(args)?;
    let spec = config.to_spec()?;
    Ok((config, spec))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(io_err(&path))
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    Ok(csv::Writer::from_writer(file))
}

/// Grid abscissae `-π + j·2π/nx`, endpoints exact.
pub fn x_nodes(nx: usize) -> Vec<f64> {
    verify::uniform(-std::f64::consts::PI, std::f64::consts::PI, nx + 1)
}

pub fn slice_file_name(t: f64) -> String {
    format!("u_slice_t{t}.csv")
}

#[derive(Debug, Serialize)]
struct CoefficientEntry {
    branch: u8,
    k: u32,
    lambda: f64,
    kappa: f64,
    denominator: f64,
    c: f64,
    f_coef: f64,
    phi_coef: f64,
    data_phi: f64,
    data_psi: f64,
    d3_phi: f64,
    d3_psi: f64,
}

#[derive(Debug, Serialize)]
struct CoefficientTable {
    bc: BcKind,
    epsilon: f64,
    #[serde(rename = "N")]
    truncation: u32,
    route: Route,
    tail_estimate: f64,
    constant: Option<ConstantMode>,
    modes: Vec<CoefficientEntry>,
}

fn coefficient_table(sol: &SeriesSolution) -> CoefficientTable {
    let modes = sol
        .modes
        .iter()
        .map(|m| {
            let data = sol.coefficients.get(m.mode).copied().unwrap_or(ModeCoefficients {
                mode: m.mode,
                data_phi: f64::NAN,
                data_psi: f64::NAN,
                d3_phi: f64::NAN,
                d3_psi: f64::NAN,
            });
            CoefficientEntry {
                branch: m.mode.branch.index(),
                k: m.mode.k,
                lambda: m.lambda,
                kappa: m.kappa,
                denominator: m.denominator,
                c: m.c,
                f_coef: m.f_coef,
                phi_coef: m.phi_coef,
                data_phi: data.data_phi,
                data_psi: data.data_psi,
                d3_phi: data.d3_phi,
                d3_psi: data.d3_psi,
            }
        })
        .collect();
    CoefficientTable {
        bc: sol.spec.kind,
        epsilon: sol.spec.epsilon,
        truncation: sol.spec.truncation,
        route: sol.route,
        tail_estimate: sol.tail_estimate,
        constant: sol.constant,
        modes,
    }
}

/// Compatibility entries plus the epsilon warning, as report checks.
fn hypothesis_checks(spec: &ProblemSpec, tol: f64) -> Vec<Check> {
    let mut checks = Vec::new();
    if spec.epsilon == 0.0 {
        checks.push(Check {
            name: "epsilon.nonzero".into(),
            status: CheckStatus::Warn,
            value: 0.0,
            tol: 0.0,
            details: "epsilon = 0: classical heat equation, involution term absent".into(),
        });
    }
    for h in compatibility_check(&spec.phi, &spec.psi, spec.kind, tol).entries {
        checks.push(Check::measure(
            format!("compatibility.{}", h.name()),
            h.residual,
            tol,
            Bound::AtMost,
            CheckStatus::Warn,
            format!("{} at x = -pi, pi", h.name()),
        ));
    }
    checks
}

fn light_report(config: &RunConfig, spec: &ProblemSpec, checks: Vec<Check>) -> VerificationReport {
    let options = Options { tolerances: config.tolerances, round_trip: false, ..Options::default() };
    verify::assemble(spec, &options, checks, Vec::new())
}

/// Solves and writes `f.csv`, `u_grid.csv`, the slice files,
/// `coefficients.json` and `report.json` into the output directory.
pub fn cmd_solve(config: &RunConfig, spec: &ProblemSpec) -> Result<SeriesSolution, CliError> {
    let dir = config.output_dir();
    let sol = solve(spec)?;
    let xs = x_nodes(spec.grid_nx);

    let mut w = csv_writer(&dir, "f.csv")?;
    w.write_record(["x", "f"])?;
    for (x, f) in xs.iter().zip(sol.evaluate_f_grid(&xs)?) {
        w.serialize((x, f))?;
    }
    w.flush().map_err(io_err(&dir))?;

    let ts = verify::uniform(0.0, spec.final_time, spec.grid_nt + 1);
    let u = sol.evaluate_u_grid(&xs, &ts)?;
    let mut w = csv_writer(&dir, "u_grid.csv")?;
    w.write_record(["x", "t", "u"])?;
    for (i, t) in ts.iter().enumerate() {
        for (j, x) in xs.iter().enumerate() {
            w.serialize((x, t, u[i * xs.len() + j]))?;
        }
    }
    w.flush().map_err(io_err(&dir))?;

    for &t in &config.t_slices {
        let values = sol.evaluate_u_grid(&xs, &[t])?;
        let mut w = csv_writer(&dir, &slice_file_name(t))?;
        w.write_record(["x", "u"])?;
        for (x, v) in xs.iter().zip(values) {
            w.serialize((x, v))?;
        }
        w.flush().map_err(io_err(&dir))?;
    }

    let table = serde_json::to_string_pretty(&coefficient_table(&sol)).expect("coefficients serialize");
    write_text(&dir, "coefficients.json", &table)?;

    let mut checks = hypothesis_checks(spec, config.tolerances.compatibility);
    checks.push(Check::measure(
        "denominator",
        sol.min_denominator(),
        crate::solver::MIN_DENOMINATOR,
        Bound::AtLeast,
        CheckStatus::Fail,
        "min over modes of 1 - exp(-lambda T)",
    ));
    checks.push(Check {
        name: "tail_estimate".into(),
        status: CheckStatus::Pass,
        value: sol.tail_estimate,
        tol: f64::INFINITY,
        details: format!("bound on sup |u - u_N| for N = {}", spec.truncation),
    });
    write_text(&dir, "report.json", &light_report(config, spec, checks).to_json())?;
    Ok(sol)
}

/// Runs the suite and writes `report.json` and `convergence.csv`.
pub fn cmd_verify(config: &RunConfig, spec: &ProblemSpec) -> Result<VerificationReport, CliError> {
    let dir = config.output_dir();
    let options = Options { tolerances: config.tolerances, ..Options::default() };
    let report = verify::run_suite(spec, &options);
    write_text(&dir, "report.json", &report.to_json())?;
    write_convergence(&dir, &report.convergence)?;
    Ok(report)
}

fn write_convergence(dir: &Path, rows: &[ConvergenceRow]) -> Result<(), CliError> {
    let mut w = csv_writer(dir, "convergence.csv")?;
    w.write_record(["nx", "nt", "h", "tau", "error", "order"])?;
    for r in rows {
        let order = r.order.map(|o| o.to_string()).unwrap_or_default();
        w.write_record([r.nx.to_string(), r.nt.to_string(), r.h.to_string(), r.tau.to_string(), r.error.to_string(), order])?;
    }
    w.flush().map_err(io_err(dir))
}

/// Compatibility-only report.
pub fn cmd_check(config: &RunConfig, spec: &ProblemSpec) -> VerificationReport {
    light_report(config, spec, hypothesis_checks(spec, config.tolerances.compatibility))
}

/// CSV rows `branch,k,lambda,kernel` for all admissible modes with `k <= kmax`.
pub fn cmd_spectrum(kind: BcKind, epsilon: f64, kmax: u32) -> Result<String, CliError> {
    check_epsilon(epsilon).map_err(|e| CliError::Config(e.to_string()))?;
    let scheme = kind.scheme();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["branch", "k", "lambda", "kernel"])?;
    for mode in scheme.modes(kmax) {
        let lambda = scheme.eigenvalue(mode, epsilon).map_err(SolveError::from)?;
        let name = match mode.branch {
            Branch::Constant => "1",
            _ => scheme.kernel_name(mode).map_err(SolveError::from)?,
        };
        w.serialize((mode.branch.index(), mode.k, lambda, name))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
bc = "dirichlet"
epsilon = 0.1
T = 1.0
phi = "0"
psi = "sin(x)"
t_slices = [0.25, 0.5, 0.75, 1.0]
"#;

    #[test]
    fn config_defaults() {
        let c = RunConfig::from_toml(EXAMPLE).unwrap();
        assert_eq!(c.truncation, 64);
        assert_eq!(c.quad_nodes, 512);
        assert_eq!(c.grid, GridConfig { nx: 256, nt: 512 });
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.output_dir(), PathBuf::from("out"));
        c.to_spec().unwrap();
    }

    #[test]
    fn config_errors_are_usage_errors() {
        let robin = EXAMPLE.replace("dirichlet", "robin");
        let err = RunConfig::from_toml(&robin).unwrap().to_spec().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        for kind in ["dirichlet", "neumann", "periodic", "antiperiodic"] {
            assert!(msg.contains(kind), "{msg}");
        }
        assert_eq!(RunConfig::from_toml("bc = [").unwrap_err().exit_code(), 2);
        assert_eq!(RunConfig::from_toml(&format!("{EXAMPLE}\nbogus = 1")).unwrap_err().exit_code(), 2);
        let bad_expr = EXAMPLE.replace("sin(x)", "sin(x");
        assert_eq!(RunConfig::from_toml(&bad_expr).unwrap().to_spec().unwrap_err().exit_code(), 2);
        let bad_slice = EXAMPLE.replace("0.75", "1.5");
        assert_eq!(RunConfig::from_toml(&bad_slice).unwrap().to_spec().unwrap_err().exit_code(), 2);
        let bad_eps = EXAMPLE.replace("0.1", "1.0");
        assert_eq!(RunConfig::from_toml(&bad_eps).unwrap().to_spec().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn tol_flag_syntax() {
        assert_eq!(parse_tol("round_trip=1e-3"), Ok(("round_trip".into(), 1e-3)));
        assert!(parse_tol("round_trip").is_err());
        assert!(parse_tol("round_trip=abc").is_err());
    }

    #[test]
    fn spectrum_rows() {
        let csv = cmd_spectrum(BcKind::Dirichlet, 0.1, 1).unwrap();
        let rows: Vec<Vec<String>> = csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
        assert_eq!(rows.len(), 3);
        let lambda = |i: usize| rows[i][2].parse::<f64>().unwrap();
        assert_eq!((rows[0][0].as_str(), rows[0][1].as_str(), rows[0][3].as_str()), ("1", "0", "cos((k+1/2)x)"));
        assert!((lambda(0) - 0.225).abs() < 1e-15);
        assert!((lambda(1) - 2.025).abs() < 1e-14);
        assert_eq!((rows[2][0].as_str(), rows[2][1].as_str(), rows[2][3].as_str()), ("2", "1", "sin(kx)"));
        assert!((lambda(2) - 1.1).abs() < 1e-15);

        let csv = cmd_spectrum(BcKind::Neumann, 0.0, 0).unwrap();
        assert!(csv.lines().any(|l| l == "0,0,0.0,1"), "{csv}");

        let csv = cmd_spectrum(BcKind::AntiPeriodic, -0.5, 0).unwrap();
        let lambdas: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
        assert_eq!(lambdas, vec![0.125, 0.375]);

        assert_eq!(cmd_spectrum(BcKind::Periodic, 1.0, 2).unwrap_err().exit_code(), 2);
    }
}
