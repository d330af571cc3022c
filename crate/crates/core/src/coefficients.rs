//! Fourier and third-derivative coefficients of the data `φ`, `ψ`.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::quadrature::QuadratureRule;
use crate::spectral::{BcKind, Branch, Kernel, ModeId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoefficientError {
    #[error("integrand of {what} is not finite at x = {x}")]
    NonFinite { what: String, x: f64 },
    #[error("evaluating {what}: {source}")]
    Eval {
        what: String,
        #[source]
        source: EvalError,
    },
}

/// Samples `e` at every quadrature node, rejecting non-finite values.
pub(crate) fn sample(e: &Expr, rule: &QuadratureRule, what: &str) -> Result<Vec<f64>, CoefficientError> {
    rule.nodes()
        .iter()
        .map(|&x| {
            let v = e.eval(x).map_err(|source| CoefficientError::Eval { what: what.to_string(), source })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CoefficientError::NonFinite { what: what.to_string(), x })
            }
        })
        .collect()
}

fn kernel_samples(kernel: Kernel, rule: &QuadratureRule) -> Vec<f64> {
    rule.nodes().iter().map(|&x| kernel.eval(x)).collect()
}

fn project(samples: &[f64], kernel: Kernel, rule: &QuadratureRule) -> f64 {
    let ip: f64 = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .zip(samples)
        .map(|((&x, &w), &s)| w * s * kernel.eval(x))
        .sum();
    ip / kernel.norm_constant()
}

/// `(1/π) ∫ f·K` over [-π, π], or `(1/2π) ∫ f` for the unit kernel.
pub fn fourier_coefficient(f: &Expr, kernel: Kernel, rule: &QuadratureRule) -> Result<f64, CoefficientError> {
    let samples = sample(f, rule, "f")?;
    Ok(project(&samples, kernel, rule))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeCoefficients {
    pub mode: ModeId,
    /// Projection of φ on the eigenfunction.
    pub data_phi: f64,
    pub data_psi: f64,
    /// Projection of φ''' on the paired derivative kernel.
    pub d3_phi: f64,
    pub d3_psi: f64,
}

/// All scalar data for one problem instance, ordered as
/// [`ModeScheme::modes`](crate::spectral::ModeScheme::modes) without the
/// constant mode, whose means are kept separately.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub kind: BcKind,
    pub truncation: u32,
    pub modes: Vec<ModeCoefficients>,
    pub phi0: Option<f64>,
    pub psi0: Option<f64>,
    /// `(1/π) ∫ (φ''')²`
    pub phi3_norm_sq: f64,
    pub psi3_norm_sq: f64,
    /// `(1/π) ∫ (φ''' - ψ''')²`
    pub diff3_norm_sq: f64,
}

impl CoefficientSet {
    pub fn get(&self, mode: ModeId) -> Option<&ModeCoefficients> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

pub fn third_derivative_coefficients(
    phi: &Expr,
    psi: &Expr,
    kind: BcKind,
    truncation: u32,
    rule: &QuadratureRule,
) -> Result<CoefficientSet, CoefficientError> {
    let scheme = kind.scheme();
    let phi_s = sample(phi, rule, "phi")?;
    let psi_s = sample(psi, rule, "psi")?;
    let phi3_s = sample(&phi.nth_derivative(3), rule, "phi'''")?;
    let psi3_s = sample(&psi.nth_derivative(3), rule, "psi'''")?;

    let mut modes = Vec::new();
    for mode in scheme.modes(truncation) {
        if mode.branch == Branch::Constant {
            continue;
        }
        let row = scheme.row(mode.branch).expect("trigonometric branch");
        let basis = kernel_samples(row.kernel(mode.k), rule);
        let deriv = kernel_samples(row.deriv_kernel(mode.k), rule);
        modes.push(ModeCoefficients {
            mode,
            data_phi: rule.inner_product(&phi_s, &basis) / PI,
            data_psi: rule.inner_product(&psi_s, &basis) / PI,
            d3_phi: rule.inner_product(&phi3_s, &deriv) / PI,
            d3_psi: rule.inner_product(&psi3_s, &deriv) / PI,
        });
    }

    let (phi0, psi0) = if scheme.constant_mode {
        (Some(rule.integrate_samples(&phi_s) / (2.0 * PI)), Some(rule.integrate_samples(&psi_s) / (2.0 * PI)))
    } else {
        (None, None)
    };
    let diff3: Vec<f64> = phi3_s.iter().zip(&psi3_s).map(|(a, b)| a - b).collect();

    Ok(CoefficientSet {
        kind,
        truncation,
        modes,
        phi0,
        psi0,
        phi3_norm_sq: rule.inner_product(&phi3_s, &phi3_s) / PI,
        psi3_norm_sq: rule.inner_product(&psi3_s, &psi3_s) / PI,
        diff3_norm_sq: rule.inner_product(&diff3, &diff3) / PI,
    })
}

/// How a boundary hypothesis relates the values at `-π` and `π`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `g(±π) = 0`
    Vanishes,
    /// `g(-π) = g(π)`
    Matches,
    /// `g(-π) = -g(π)`
    AntiMatches,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub function: &'static str,
    pub order: usize,
    pub relation: Relation,
    pub residual: f64,
    pub passed: bool,
}

impl Hypothesis {
    pub fn name(&self) -> String {
        let rel = match self.relation {
            Relation::Vanishes => "vanishes",
            Relation::Matches => "periodic",
            Relation::AntiMatches => "antiperiodic",
        };
        format!("{}.d{}.{}", self.function, self.order, rel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatibilityReport {
    pub kind: BcKind,
    pub tolerance: f64,
    pub entries: Vec<Hypothesis>,
}

impl CompatibilityReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|h| h.passed)
    }
}

/// Derivative orders and relation the data must satisfy at `±π`.
pub fn hypotheses(kind: BcKind) -> (&'static [usize], Relation) {
    match kind {
        BcKind::Dirichlet => (&[0, 2], Relation::Vanishes),
        BcKind::Neumann => (&[1], Relation::Vanishes),
        BcKind::Periodic => (&[0, 1, 2], Relation::Matches),
        BcKind::AntiPeriodic => (&[0, 1, 2], Relation::AntiMatches),
    }
}

/// Evaluates the boundary hypotheses for `kind`. Violations and evaluation
/// failures become failed entries, never errors.
pub fn compatibility_check(phi: &Expr, psi: &Expr, kind: BcKind, tol: f64) -> CompatibilityReport {
    let (orders, relation) = hypotheses(kind);
    let mut entries = Vec::new();
    for (name, e) in [("phi", phi), ("psi", psi)] {
        for &order in orders {
            let d = e.nth_derivative(order);
            let residual = match (d.eval(-PI), d.eval(PI)) {
                (Ok(left), Ok(right)) => match relation {
                    Relation::Vanishes => left.abs().max(right.abs()),
                    Relation::Matches => (left - right).abs(),
                    Relation::AntiMatches => (left + right).abs(),
                },
                _ => f64::INFINITY,
            };
            let passed = residual.is_finite() && residual <= tol;
            entries.push(Hypothesis { function: name, order, relation, residual, passed });
        }
    }
    CompatibilityReport { kind, tolerance: tol, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn rule() -> QuadratureRule {
        QuadratureRule::gauss_legendre(512).unwrap()
    }

    // Analytic values: ∫ sin² = π, ∫ sin x sin 2x = 0.
    #[test]
    fn fourier_coefficient_examples() {
        let r = rule();
        let s = parse("sin(x)").unwrap();
        assert!((fourier_coefficient(&s, Kernel::Sin(1.0), &r).unwrap() - 1.0).abs() < 1e-12);
        assert!(fourier_coefficient(&s, Kernel::Sin(2.0), &r).unwrap().abs() < 1e-12);
        let zero = parse("0").unwrap();
        for k in [Kernel::Unit, Kernel::Cos(0.5), Kernel::Sin(3.0)] {
            assert_eq!(fourier_coefficient(&zero, k, &r).unwrap(), 0.0);
        }
        let c = parse("2 + cos(x)").unwrap();
        assert!((fourier_coefficient(&c, Kernel::Unit, &r).unwrap() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn non_finite_integrand_reports_location() {
        let r = QuadratureRule::gauss_legendre(3).unwrap();
        // the middle node of an odd rule is x = 0
        let e = parse("1/x").unwrap();
        let err = fourier_coefficient(&e, Kernel::Unit, &r).unwrap_err();
        assert!(matches!(err, CoefficientError::Eval { source: EvalError::DivisionByZero { x }, .. } if x == 0.0));
        let e = parse("exp(1000*cos(x))").unwrap();
        assert!(matches!(fourier_coefficient(&e, Kernel::Unit, &r), Err(CoefficientError::NonFinite { .. })));
    }

    // ψ''' = -cos x; (1/π)∫ -cos x · cos x = -1 on the paired kernel of (2, 1).
    #[test]
    fn dirichlet_sine_example() {
        let set = third_derivative_coefficients(&parse("0").unwrap(), &parse("sin(x)").unwrap(), BcKind::Dirichlet, 8, &rule())
            .unwrap();
        let m = set.get(ModeId::second(1)).unwrap();
        assert!((m.d3_psi + 1.0).abs() < 1e-12);
        assert!((m.data_psi - 1.0).abs() < 1e-12);
        for c in &set.modes {
            assert_eq!(c.d3_phi, 0.0);
            assert_eq!(c.data_phi, 0.0);
            if c.mode.branch == Branch::First {
                assert!(c.d3_psi.abs() < 1e-13, "{:?}", c);
            }
        }
        assert_eq!(set.phi0, None);
        assert_eq!(set.modes.len(), 9 + 8);
    }

    #[test]
    fn quadrature_doubling_is_stable() {
        let phi = parse("sin(x)*exp(cos(x))").unwrap();
        let psi = parse("cos(x/2)*exp(cos(x))").unwrap();
        let a = third_derivative_coefficients(&phi, &psi, BcKind::Dirichlet, 32, &rule()).unwrap();
        let b = third_derivative_coefficients(&phi, &psi, BcKind::Dirichlet, 32, &QuadratureRule::gauss_legendre(1024).unwrap())
            .unwrap();
        for (p, q) in a.modes.iter().zip(&b.modes) {
            for (u, v) in [(p.data_phi, q.data_phi), (p.data_psi, q.data_psi), (p.d3_phi, q.d3_phi), (p.d3_psi, q.d3_psi)] {
                assert!((u - v).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn bessel_bound_holds() {
        let phi = parse("x^5 - 10*pi^2/3*x^3 + 7*pi^4/3*x").unwrap();
        let psi = parse("exp(sin(x))").unwrap();
        for kind in BcKind::ALL {
            let set = third_derivative_coefficients(&phi, &psi, kind, 64, &rule()).unwrap();
            for branch in [Branch::First, Branch::Second] {
                let s_phi: f64 = set.modes.iter().filter(|m| m.mode.branch == branch).map(|m| m.d3_phi.powi(2)).sum();
                let s_psi: f64 = set.modes.iter().filter(|m| m.mode.branch == branch).map(|m| m.d3_psi.powi(2)).sum();
                assert!(s_phi <= set.phi3_norm_sq + 1e-8, "{kind}");
                assert!(s_psi <= set.psi3_norm_sq + 1e-8, "{kind}");
            }
        }
    }

    #[test]
    fn compatibility_examples() {
        let zero = parse("0").unwrap();
        let sin = parse("sin(x)").unwrap();
        let rep = compatibility_check(&zero, &sin, BcKind::Dirichlet, 1e-10);
        assert!(rep.all_passed());
        assert_eq!(rep.entries.len(), 4);

        let rep = compatibility_check(&parse("cos(x)").unwrap(), &sin, BcKind::Dirichlet, 1e-10);
        let order0 = rep.entries.iter().find(|h| h.function == "phi" && h.order == 0).unwrap();
        assert!(!order0.passed);
        assert!((order0.residual - 1.0).abs() < 1e-15);

        let rep = compatibility_check(&sin, &sin, BcKind::Periodic, 1e-10);
        assert!(rep.all_passed());
        assert_eq!(rep.entries.iter().filter(|h| h.function == "phi").map(|h| h.order).collect::<Vec<_>>(), vec![0, 1, 2]);

        let rep = compatibility_check(&parse("x").unwrap(), &zero, BcKind::Neumann, 1e-10);
        assert!(!rep.all_passed());
        assert_eq!(rep.entries.len(), 2);

        let rep = compatibility_check(&parse("cos(x/2)").unwrap(), &parse("sin(1.5*x)").unwrap(), BcKind::AntiPeriodic, 1e-10);
        assert!(rep.all_passed(), "{rep:?}");

        let rep = compatibility_check(&parse("1/(x-pi)").unwrap(), &zero, BcKind::Periodic, 1e-10);
        assert!(rep.entries[0].residual.is_infinite() && !rep.entries[0].passed);
    }
}
