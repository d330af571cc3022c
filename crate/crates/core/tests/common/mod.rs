//! Problem instances shared by the integration tests. Every pair satisfies
//! the boundary hypotheses of its kind and has rapidly decaying spectral
//! coefficients.

#![allow(dead_code)]

use invheat_core::{parse, BcKind, ProblemSpec};

pub struct Instance {
    pub name: &'static str,
    pub kind: BcKind,
    pub epsilon: f64,
    pub final_time: f64,
    pub phi: &'static str,
    pub psi: &'static str,
}

impl Instance {
    pub fn spec(&self) -> ProblemSpec {
        ProblemSpec::new(self.kind, self.epsilon, self.final_time, parse(self.phi).unwrap(), parse(self.psi).unwrap())
    }
}

pub const CORPUS: [Instance; 12] = [
    Instance { name: "dirichlet-a", kind: BcKind::Dirichlet, epsilon: 0.3, final_time: 1.0, phi: "sin(x)*exp(cos(x))", psi: "cos(x/2)*exp(cos(x))" },
    Instance { name: "dirichlet-b", kind: BcKind::Dirichlet, epsilon: -0.6, final_time: 0.5, phi: "0", psi: "sin(x)*exp(cos(x))" },
    Instance { name: "dirichlet-c", kind: BcKind::Dirichlet, epsilon: 0.8, final_time: 2.0, phi: "cos(1.5*x)", psi: "sin(2*x) + cos(x/2)*exp(cos(x))" },
    Instance { name: "neumann-a", kind: BcKind::Neumann, epsilon: 0.5, final_time: 1.0, phi: "exp(cos(x))", psi: "cos(x)" },
    Instance { name: "neumann-b", kind: BcKind::Neumann, epsilon: -0.4, final_time: 1.5, phi: "sin(x/2)", psi: "1 + cos(2*x)" },
    Instance { name: "neumann-c", kind: BcKind::Neumann, epsilon: 0.9, final_time: 1.0, phi: "0", psi: "exp(cos(x)) + sin(1.5*x)" },
    Instance { name: "periodic-a", kind: BcKind::Periodic, epsilon: 0.2, final_time: 1.0, phi: "exp(sin(x))", psi: "1 + cos(x)" },
    Instance { name: "periodic-b", kind: BcKind::Periodic, epsilon: -0.9, final_time: 0.7, phi: "cos(2*x) + sin(x)", psi: "exp(cos(x))" },
    Instance { name: "periodic-c", kind: BcKind::Periodic, epsilon: 0.6, final_time: 1.2, phi: "0", psi: "exp(sin(x))*cos(x)" },
    Instance { name: "antiperiodic-a", kind: BcKind::AntiPeriodic, epsilon: 0.4, final_time: 1.0, phi: "cos(x/2)", psi: "sin(x/2)*exp(cos(x))" },
    Instance { name: "antiperiodic-b", kind: BcKind::AntiPeriodic, epsilon: -0.7, final_time: 1.0, phi: "sin(1.5*x)", psi: "cos(x/2)*exp(cos(x))" },
    Instance { name: "antiperiodic-c", kind: BcKind::AntiPeriodic, epsilon: 0.95, final_time: 0.3, phi: "cos(x/2)*exp(sin(x))", psi: "0" },
];

/// Dirichlet-compatible polynomial with only algebraically decaying
/// coefficients (`p = p'' = 0` at `±π`).
pub const POLYNOMIAL: &str = "x^5 - 10*pi^2/3*x^3 + 7*pi^4/3*x";
