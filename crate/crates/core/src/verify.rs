//! Cross-checks of a problem instance, collected into a JSON report.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficients::compatibility_check;
use crate::forward::{evolve, ForwardError, Grid};
use crate::quadrature::QuadratureRule;
use crate::solver::{solve, solve_with_route, ProblemSpec, Route, SeriesSolution, SolveError};
use crate::spectral::{eigen_residual, BcKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("unknown tolerance key '{0}'")]
    UnknownTolerance(String),
    #[error("tolerance '{key}' must be a non-negative number, got {value}")]
    InvalidTolerance { key: String, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub compatibility: f64,
    pub orthogonality: f64,
    pub eigen_residual: f64,
    pub interpolation: f64,
    pub boundary: f64,
    pub pde_residual: f64,
    pub route_agreement: f64,
    pub round_trip: f64,
    /// Lower bound on the observed refinement order.
    pub convergence_order: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            compatibility: 1e-10,
            orthogonality: 1e-10,
            eigen_residual: 1e-11,
            interpolation: 1e-7,
            boundary: 1e-7,
            pde_residual: 1e-6,
            route_agreement: 1e-9,
            round_trip: 5e-4,
            convergence_order: 1.9,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 9] = [
        "compatibility",
        "orthogonality",
        "eigen_residual",
        "interpolation",
        "boundary",
        "pde_residual",
        "route_agreement",
        "round_trip",
        "convergence_order",
    ];

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "compatibility" => &mut self.compatibility,
            "orthogonality" => &mut self.orthogonality,
            "eigen_residual" => &mut self.eigen_residual,
            "interpolation" => &mut self.interpolation,
            "boundary" => &mut self.boundary,
            "pde_residual" => &mut self.pde_residual,
            "route_agreement" => &mut self.route_agreement,
            "round_trip" => &mut self.round_trip,
            "convergence_order" => &mut self.convergence_order,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<(), VerifyError> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(VerifyError::InvalidTolerance { key: key.to_string(), value });
        }
        let slot = self.slot(key).ok_or_else(|| VerifyError::UnknownTolerance(key.to_string()))?;
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub tolerances: Tolerances,
    /// Largest mode index in the orthogonality and eigen-residual sweeps.
    pub sweep_kmax: u32,
    pub sweep_quad_nodes: usize,
    pub eigen_points: usize,
    pub seed: u64,
    /// Collocation points per axis for the PDE residual.
    pub collocation: usize,
    pub interpolation_points: usize,
    pub round_trip: bool,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            sweep_kmax: 20,
            sweep_quad_nodes: 512,
            eigen_points: 50,
            seed: 0x1e5_2024,
            collocation: 33,
            interpolation_points: 257,
            round_trip: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

impl CheckStatus {
    /// Process exit code for a run whose worst check has this status.
    pub fn exit_code(self) -> u8 {
        match self {
            CheckStatus::Pass => 0,
            CheckStatus::Warn | CheckStatus::Fail => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Warn => "warn",
            CheckStatus::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub value: f64,
    pub tol: f64,
    pub details: String,
}

impl Check {
    /// Pass when `value` satisfies `bound` against `tol`, else `violation`.
    /// NaN never passes.
    pub fn measure(
        name: impl Into<String>,
        value: f64,
        tol: f64,
        bound: Bound,
        violation: CheckStatus,
        details: impl Into<String>,
    ) -> Self {
        let ok = match bound {
            Bound::AtMost => value <= tol,
            Bound::AtLeast => value >= tol,
        };
        Self {
            name: name.into(),
            status: if ok { CheckStatus::Pass } else { violation },
            value,
            tol,
            details: details.into(),
        }
    }

    fn skipped(name: &str, reason: &str) -> Self {
        Self { name: name.to_string(), status: CheckStatus::Fail, value: f64::NAN, tol: f64::NAN, details: reason.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecEcho {
    pub bc: BcKind,
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub final_time: f64,
    pub phi: String,
    pub psi: String,
    #[serde(rename = "N")]
    pub truncation: u32,
    pub quad_nodes: usize,
    pub grid: GridEcho,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridEcho {
    pub nx: usize,
    pub nt: usize,
}

impl From<&ProblemSpec> for SpecEcho {
    fn from(s: &ProblemSpec) -> Self {
        Self {
            bc: s.kind,
            epsilon: s.epsilon,
            final_time: s.final_time,
            phi: s.phi.to_string(),
            psi: s.psi.to_string(),
            truncation: s.truncation,
            quad_nodes: s.quad_nodes,
            grid: GridEcho { nx: s.grid_nx, nt: s.grid_nt },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub route: Route,
    pub seed: u64,
    pub sweep_kmax: u32,
    pub sweep_quad_nodes: usize,
    pub eigen_points: usize,
    pub collocation: usize,
    pub tolerances: Tolerances,
}

/// One refinement level of the forward round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub nt: usize,
    pub h: f64,
    pub tau: f64,
    pub error: f64,
    /// `log2(previous error / error)`; absent on the coarsest level.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub spec: SpecEcho,
    pub provenance: Provenance,
    pub convergence: Vec<ConvergenceRow>,
}

impl VerificationReport {
    pub fn worst(&self) -> CheckStatus {
        self.checks.iter().map(|c| c.status).max().unwrap_or(CheckStatus::Pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Errors below this are rounding noise; a refinement order computed from
/// them is meaningless.
pub const ORDER_NOISE_FLOOR: f64 = 1e-11;

/// Checks that depend on a successful solve, in report order.
const SOLUTION_CHECKS: [&str; 9] = [
    "denominator",
    "interpolation.t0",
    "interpolation.tT",
    "boundary",
    "pde_residual",
    "route_agreement",
    "truncation.n_vs_2n",
    "round_trip.error",
    "round_trip.order",
];

pub fn run_suite(spec: &ProblemSpec, options: &Options) -> VerificationReport {
    let tol = &options.tolerances;
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

    let compat = compatibility_check(&spec.phi, &spec.psi, spec.kind, tol.compatibility);
    for h in &compat.entries {
        checks.push(Check::measure(
            format!("compatibility.{}", h.name()),
            h.residual,
            tol.compatibility,
            Bound::AtMost,
            CheckStatus::Warn,
            format!("{} at x = -pi, pi", h.name()),
        ));
    }

    match orthogonality_sweep(spec.kind, options.sweep_kmax, options.sweep_quad_nodes) {
        Ok((value, worst)) => checks.push(Check::measure(
            "orthogonality",
            value,
            tol.orthogonality,
            Bound::AtMost,
            CheckStatus::Fail,
            format!("max |<X_m, X_n>| over distinct modes with k <= {}, worst pair {worst}", options.sweep_kmax),
        )),
        Err(e) => checks.push(Check::skipped("orthogonality", &e.to_string())),
    }

    let (value, worst) = eigen_residual_sweep(spec.kind, spec.epsilon, options.sweep_kmax, options.eigen_points, options.seed);
    checks.push(Check::measure(
        "eigen_residual",
        value,
        tol.eigen_residual,
        Bound::AtMost,
        CheckStatus::Fail,
        format!("max residual at {} random points, worst mode {worst}", options.eigen_points),
    ));

    let sol = match solve(spec) {
        Ok(sol) => {
            checks.push(Check::measure("solve", 0.0, 0.0, Bound::AtMost, CheckStatus::Fail, "solved"));
            sol
        }
        Err(e) => {
            checks.push(Check::skipped("solve", &e.to_string()));
            checks.extend(SOLUTION_CHECKS.iter().map(|n| Check::skipped(n, "not run: solve failed")));
            return assemble(spec, options, checks, Vec::new());
        }
    };

    let (mut solution_checks, convergence) = solution_checks(&sol, options);
    checks.append(&mut solution_checks);
    assemble(spec, options, checks, convergence)
}

/// Wraps `checks` with the problem echo and provenance block.
pub fn assemble(spec: &ProblemSpec, options: &Options, checks: Vec<Check>, convergence: Vec<ConvergenceRow>) -> VerificationReport {
    VerificationReport {
        checks,
        spec: SpecEcho::from(spec),
        provenance: Provenance {
            tool: "invheat",
            version: env!("CARGO_PKG_VERSION"),
            route: Route::ThirdDerivative,
            seed: options.seed,
            sweep_kmax: options.sweep_kmax,
            sweep_quad_nodes: options.sweep_quad_nodes,
            eigen_points: options.eigen_points,
            collocation: options.collocation,
            tolerances: options.tolerances,
        },
        convergence,
    }
}

fn solution_checks(sol: &SeriesSolution, options: &Options) -> (Vec<Check>, Vec<ConvergenceRow>) {
    let tol = &options.tolerances;
    let spec = &sol.spec;
    let mut checks = Vec::new();
    let fail = |name: &str, e: &dyn std::fmt::Display| Check::skipped(name, &e.to_string());

    checks.push(Check::measure(
        "denominator",
        sol.min_denominator(),
        crate::solver::MIN_DENOMINATOR,
        Bound::AtLeast,
        CheckStatus::Fail,
        "min over modes of 1 - exp(-lambda T)",
    ));

    let xs = uniform(-PI, PI, options.interpolation_points);
    for (name, t, data) in [("interpolation.t0", 0.0, &spec.phi), ("interpolation.tT", spec.final_time, &spec.psi)] {
        checks.push(match interpolation_error(sol, &xs, t, data) {
            Ok(v) => Check::measure(name, v, tol.interpolation, Bound::AtMost, CheckStatus::Fail, format!("max over {} points", xs.len())),
            Err(e) => fail(name, &e),
        });
    }

    checks.push(match boundary_residual(sol) {
        Ok(v) => Check::measure("boundary", v, tol.boundary, Bound::AtMost, CheckStatus::Fail, format!("{} conditions at x = -pi, pi", spec.kind)),
        Err(e) => fail("boundary", &e),
    });

    checks.push(match collocation_residual(sol, options.collocation) {
        Ok(v) => Check::measure(
            "pde_residual",
            v,
            tol.pde_residual,
            Bound::AtMost,
            CheckStatus::Fail,
            format!("{0}x{0} interior collocation points", options.collocation),
        ),
        Err(e) => fail("pde_residual", &e),
    });

    checks.push(match route_discrepancy(sol) {
        Ok(v) => Check::measure(
            "route_agreement",
            v,
            tol.route_agreement,
            Bound::AtMost,
            CheckStatus::Fail,
            "max |C_k| difference between raw and integrated-by-parts coefficients",
        ),
        Err(e) => fail("route_agreement", &e),
    });

    checks.push(match truncation_discrepancy(sol) {
        Ok(v) => Check::measure(
            "truncation.n_vs_2n",
            v,
            sol.tail_estimate,
            Bound::AtMost,
            CheckStatus::Fail,
            format!("max |u_N - u_2N| with N = {}, tolerance is the N tail bound", spec.truncation),
        ),
        Err(e) => fail("truncation.n_vs_2n", &e),
    });

    let mut convergence = Vec::new();
    if options.round_trip {
        match refinement_study(sol, spec.grid_nx, spec.grid_nt) {
            Ok(rows) => {
                let finest = rows.last().expect("at least one level");
                checks.push(Check::measure(
                    "round_trip.error",
                    finest.error,
                    tol.round_trip,
                    Bound::AtMost,
                    CheckStatus::Fail,
                    format!("max |u(T) - psi| at nx = {}, nt = {}", finest.nx, finest.nt),
                ));
                checks.push(order_check(&rows, tol.convergence_order));
                convergence = rows;
            }
            Err(e) => {
                checks.push(fail("round_trip.error", &e));
                checks.push(fail("round_trip.order", &e));
            }
        }
    }
    (checks, convergence)
}

fn order_check(rows: &[ConvergenceRow], min_order: f64) -> Check {
    let finest = rows.last().expect("at least one level");
    if rows.len() < 2 {
        return Check {
            name: "round_trip.order".into(),
            status: CheckStatus::Warn,
            value: f64::NAN,
            tol: min_order,
            details: "grid too small for a refinement study (nx must be divisible by 8)".into(),
        };
    }
    if finest.error < ORDER_NOISE_FLOOR {
        return Check {
            name: "round_trip.order".into(),
            status: CheckStatus::Pass,
            value: f64::NAN,
            tol: min_order,
            details: format!("errors below {ORDER_NOISE_FLOOR:e}, order not resolvable"),
        };
    }
    let order = rows.iter().filter_map(|r| r.order).fold(f64::INFINITY, f64::min);
    Check::measure(
        "round_trip.order",
        order,
        min_order,
        Bound::AtLeast,
        CheckStatus::Fail,
        "min observed order over successive halvings of h and tau",
    )
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

/// Largest `|<X_m, X_n>|` over distinct admissible pairs, and the pair.
pub fn orthogonality_sweep(kind: BcKind, kmax: u32, nodes: usize) -> Result<(f64, String), SolveError> {
    let rule = QuadratureRule::gauss_legendre(nodes)?;
    let scheme = kind.scheme();
    let modes = scheme.modes(kmax);
    let samples: Vec<Vec<f64>> = modes
        .iter()
        .map(|&m| scheme.kernel(m).map(|k| rule.nodes().iter().map(|&x| k.eval(x)).collect()))
        .collect::<Result<_, _>>()?;
    let mut worst = (0.0, String::from("none"));
    for i in 0..modes.len() {
        for j in (i + 1)..modes.len() {
            let v = rule.inner_product(&samples[i], &samples[j]).abs();
            if v > worst.0 || v.is_nan() {
                worst = (v, format!("{} {}", modes[i], modes[j]));
            }
        }
    }
    Ok(worst)
}

/// Largest `|X'' - ε X''(-x) + λX|` at `points` seeded random abscissae.
pub fn eigen_residual_sweep(kind: BcKind, epsilon: f64, kmax: u32, points: usize, seed: u64) -> (f64, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..points).map(|_| rng.random_range(-PI..=PI)).collect();
    let mut worst = (0.0, String::from("none"));
    for mode in kind.scheme().modes(kmax) {
        for &x in &xs {
            let v = eigen_residual(kind, mode, epsilon, x).map_or(f64::INFINITY, f64::abs);
            if v > worst.0 || v.is_nan() {
                worst = (v, mode.to_string());
            }
        }
    }
    worst
}

fn interpolation_error(sol: &SeriesSolution, xs: &[f64], t: f64, data: &crate::expr::Expr) -> Result<f64, SolveError> {
    let u = sol.evaluate_u_grid(xs, &[t])?;
    let mut worst = 0.0f64;
    for (x, v) in xs.iter().zip(u) {
        worst = worst.max((v - data.eval(*x)?).abs());
    }
    Ok(worst)
}

/// Largest violation of the boundary conditions over five time levels.
pub fn boundary_residual(sol: &SeriesSolution) -> Result<f64, SolveError> {
    let mut worst = 0.0f64;
    for t in uniform(0.0, sol.spec.final_time, 5) {
        let (ul, ur) = (sol.evaluate_u(-PI, t)?, sol.evaluate_u(PI, t)?);
        let (dl, dr) = (sol.evaluate_u_x(-PI, t)?, sol.evaluate_u_x(PI, t)?);
        let v = match sol.spec.kind {
            BcKind::Dirichlet => ul.abs().max(ur.abs()),
            BcKind::Neumann => dl.abs().max(dr.abs()),
            BcKind::Periodic => (ul - ur).abs().max((dl - dr).abs()),
            BcKind::AntiPeriodic => (ul + ur).abs().max((dl + dr).abs()),
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

/// Largest `|u_t - u_xx + ε u_xx(-x) - f|` on an `n × n` interior grid.
pub fn collocation_residual(sol: &SeriesSolution, n: usize) -> Result<f64, SolveError> {
    let t_final = sol.spec.final_time;
    let mut worst = 0.0f64;
    for i in 1..=n {
        let x = -PI + 2.0 * PI * i as f64 / (n + 1) as f64;
        for j in 1..=n {
            let t = t_final * j as f64 / (n + 1) as f64;
            worst = worst.max(sol.pde_residual(x, t)?.abs());
        }
    }
    Ok(worst)
}

/// Largest difference of `C_k` between the two coefficient routes.
pub fn route_discrepancy(sol: &SeriesSolution) -> Result<f64, SolveError> {
    let other = solve_with_route(&sol.spec, match sol.route {
        Route::ThirdDerivative => Route::Raw,
        Route::Raw => Route::ThirdDerivative,
    })?;
    let mut worst = 0.0f64;
    for m in &sol.modes {
        let c = other.mode(m.mode).map_or(f64::NAN, |o| o.c);
        worst = worst.max((m.c - c).abs());
    }
    Ok(worst)
}

/// `max |u_N - u_2N|` on a 129 × 9 grid covering the whole domain.
pub fn truncation_discrepancy(sol: &SeriesSolution) -> Result<f64, SolveError> {
    let doubled = solve(&sol.spec.clone().with_truncation(sol.spec.truncation * 2))?;
    let xs = uniform(-PI, PI, 129);
    let ts = uniform(0.0, sol.spec.final_time, 9);
    let a = sol.evaluate_u_grid(&xs, &ts)?;
    let b = doubled.evaluate_u_grid(&xs, &ts)?;
    Ok(a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoundTripError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Forward(#[from] ForwardError),
}

/// Evolves `φ` with the reconstructed source and returns `max_j |u_j(T) - ψ(x_j)|`.
pub fn round_trip_error(sol: &SeriesSolution, nx: usize, nt: usize) -> Result<f64, RoundTripError> {
    let spec = &sol.spec;
    let grid = Grid::new(nx, nt, spec.final_time)?;
    let nodes = grid.nodes();
    let phi: Vec<f64> = nodes.iter().map(|&x| spec.phi.eval(x)).collect::<Result<_, _>>().map_err(SolveError::from)?;
    let psi: Vec<f64> = nodes.iter().map(|&x| spec.psi.eval(x)).collect::<Result<_, _>>().map_err(SolveError::from)?;
    let f = sol.evaluate_f_grid(&nodes)?;
    let end = evolve(&phi, &f, &grid, spec.kind, spec.epsilon)?;
    Ok(end.max_abs_diff(&psi))
}

/// Round trip at `(nx/4, nt/4)`, `(nx/2, nt/2)`, `(nx, nt)`; only the
/// finest level when `nx` is not divisible by 8 or `nt` by 4.
pub fn refinement_study(sol: &SeriesSolution, nx: usize, nt: usize) -> Result<Vec<ConvergenceRow>, RoundTripError> {
    let levels: Vec<(usize, usize)> =
        if nx.is_multiple_of(8) && nt.is_multiple_of(4) { vec![(nx / 4, nt / 4), (nx / 2, nt / 2), (nx, nt)] } else { vec![(nx, nt)] };
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for (lx, lt) in levels {
        let error = round_trip_error(sol, lx, lt)?;
        let order = rows.last().map(|prev| (prev.error / error).log2());
        rows.push(ConvergenceRow {
            nx: lx,
            nt: lt,
            h: 2.0 * PI / lx as f64,
            tau: sol.spec.final_time / lt as f64,
            error,
            order,
        });
    }
    Ok(rows)
}
