//! Eigenpairs of `X''(x) - ε X''(-x) + λ X(x) = 0` on [-π, π] under the four
//! boundary-condition families.
//!
//! Every eigenfunction is a single trigonometric kernel `cos(κx)` or `sin(κx)`
//! with `κ = k` or `κ = k + 1/2`, or the constant `1`. Even kernels have
//! `X''(-x) = X''(x)` and scale with `1 - ε`; odd kernels flip sign and scale
//! with `1 + ε`. Kernels are kept unnormalised; `∫ X² = π` for trigonometric
//! modes and `2π` for the constant mode.
//!
//! The per-kind data lives in [`SCHEMES`]. Besides the eigenfunction it records
//! the kernel used for the third-derivative coefficients. Integrating
//! `∫ φ X` by parts three times, with the boundary terms removed by the
//! compatibility conditions, gives
//!
//! ```text
//! ∫ φ cos(κx) dx =  κ⁻³ ∫ φ''' sin(κx) dx
//! ∫ φ sin(κx) dx = -κ⁻³ ∫ φ''' cos(κx) dx
//! ```
//!
//! so each mode pairs with the opposite kernel at the same frequency, with the
//! sign stored in [`BranchRow::deriv_sign`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Dirichlet,
    Neumann,
    Periodic,
    #[serde(rename = "antiperiodic")]
    AntiPeriodic,
}

impl BcKind {
    pub const ALL: [BcKind; 4] = [BcKind::Dirichlet, BcKind::Neumann, BcKind::Periodic, BcKind::AntiPeriodic];

    pub fn name(self) -> &'static str {
        match self {
            BcKind::Dirichlet => "dirichlet",
            BcKind::Neumann => "neumann",
            BcKind::Periodic => "periodic",
            BcKind::AntiPeriodic => "antiperiodic",
        }
    }

    pub fn scheme(self) -> &'static ModeScheme {
        &SCHEMES[self as usize]
    }

    pub fn has_constant_mode(self) -> bool {
        self.scheme().constant_mode
    }
}

impl fmt::Display for BcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown boundary condition `{0}`; expected one of dirichlet, neumann, periodic, antiperiodic")]
pub struct UnknownBcKind(pub String);

impl FromStr for BcKind {
    type Err = UnknownBcKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(BcKind::Dirichlet),
            "neumann" => Ok(BcKind::Neumann),
            "periodic" => Ok(BcKind::Periodic),
            "antiperiodic" | "anti-periodic" | "anti_periodic" => Ok(BcKind::AntiPeriodic),
            _ => Err(UnknownBcKind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    Constant,
    First,
    Second,
}

impl Branch {
    /// 1 and 2 for the trigonometric branches, 0 for the constant mode.
    pub fn index(self) -> u8 {
        match self {
            Branch::Constant => 0,
            Branch::First => 1,
            Branch::Second => 2,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            0 => Some(Branch::Constant),
            1 => Some(Branch::First),
            2 => Some(Branch::Second),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeId {
    pub branch: Branch,
    pub k: u32,
}

impl ModeId {
    pub const CONSTANT: ModeId = ModeId { branch: Branch::Constant, k: 0 };

    pub fn first(k: u32) -> Self {
        ModeId { branch: Branch::First, k }
    }

    pub fn second(k: u32) -> Self {
        ModeId { branch: Branch::Second, k }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.branch.index(), self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Harmonic {
    /// κ = k
    Integer,
    /// κ = k + 1/2
    HalfInteger,
}

impl Harmonic {
    pub fn frequency(self, k: u32) -> f64 {
        match self {
            Harmonic::Integer => f64::from(k),
            Harmonic::HalfInteger => f64::from(k) + 0.5,
        }
    }
}

/// A concrete basis function: `1`, `cos(ωx)` or `sin(ωx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Unit,
    Cos(f64),
    Sin(f64),
}

impl Kernel {
    pub fn trig(wave: Wave, omega: f64) -> Self {
        match wave {
            Wave::Cos => Kernel::Cos(omega),
            Wave::Sin => Kernel::Sin(omega),
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Kernel::Unit => 1.0,
            Kernel::Cos(w) => (w * x).cos(),
            Kernel::Sin(w) => (w * x).sin(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Kernel::Unit => 0.0,
            Kernel::Cos(w) => -w * (w * x).sin(),
            Kernel::Sin(w) => w * (w * x).cos(),
        }
    }

    pub fn second_derivative(self, x: f64) -> f64 {
        match self {
            Kernel::Unit => 0.0,
            Kernel::Cos(w) => -w * w * (w * x).cos(),
            Kernel::Sin(w) => -w * w * (w * x).sin(),
        }
    }

    /// `∫_{-π}^{π} X² dx`.
    pub fn norm_constant(self) -> f64 {
        match self {
            Kernel::Unit => 2.0 * PI,
            _ => PI,
        }
    }
}

/// One eigenvalue family of a [`ModeScheme`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRow {
    pub wave: Wave,
    pub harmonic: Harmonic,
    /// λ = (1 + eigen_sign·ε) κ²
    pub eigen_sign: f64,
    pub k_min: u32,
    /// Kernel of the third-derivative coefficient paired with this mode.
    pub deriv_wave: Wave,
    /// `raw coefficient = deriv_sign · d3 coefficient / κ³`
    pub deriv_sign: f64,
    /// Subscript the published formulas use for this mode's d3 coefficient.
    pub d3_label: u8,
}

impl BranchRow {
    pub fn kernel(&self, k: u32) -> Kernel {
        Kernel::trig(self.wave, self.harmonic.frequency(k))
    }

    pub fn deriv_kernel(&self, k: u32) -> Kernel {
        Kernel::trig(self.deriv_wave, self.harmonic.frequency(k))
    }

    pub fn kernel_name(&self) -> &'static str {
        wave_name(self.wave, self.harmonic)
    }

    pub fn deriv_kernel_name(&self) -> &'static str {
        wave_name(self.deriv_wave, self.harmonic)
    }
}

fn wave_name(wave: Wave, harmonic: Harmonic) -> &'static str {
    match (wave, harmonic) {
        (Wave::Cos, Harmonic::Integer) => "cos(kx)",
        (Wave::Sin, Harmonic::Integer) => "sin(kx)",
        (Wave::Cos, Harmonic::HalfInteger) => "cos((k+1/2)x)",
        (Wave::Sin, Harmonic::HalfInteger) => "sin((k+1/2)x)",
    }
}

/// Spectral data for one boundary-condition kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeScheme {
    pub kind: BcKind,
    pub first: BranchRow,
    pub second: BranchRow,
    pub constant_mode: bool,
}

const fn row(
    wave: Wave,
    harmonic: Harmonic,
    eigen_sign: f64,
    k_min: u32,
    deriv_wave: Wave,
    deriv_sign: f64,
    d3_label: u8,
) -> BranchRow {
    BranchRow { wave, harmonic, eigen_sign, k_min, deriv_wave, deriv_sign, d3_label }
}

use Harmonic::{HalfInteger as Half, Integer as Int};
use Wave::{Cos, Sin};

/// Indexed by `BcKind as usize`.
pub static SCHEMES: [ModeScheme; 4] = [
    ModeScheme {
        kind: BcKind::Dirichlet,
        first: row(Cos, Half, -1.0, 0, Sin, 1.0, 2),
        second: row(Sin, Int, 1.0, 1, Cos, -1.0, 1),
        constant_mode: false,
    },
    ModeScheme {
        kind: BcKind::Neumann,
        first: row(Cos, Int, -1.0, 1, Sin, 1.0, 2),
        second: row(Sin, Half, 1.0, 0, Cos, -1.0, 1),
        constant_mode: true,
    },
    ModeScheme {
        kind: BcKind::Periodic,
        first: row(Cos, Int, -1.0, 1, Sin, 1.0, 2),
        second: row(Sin, Int, 1.0, 1, Cos, -1.0, 1),
        constant_mode: true,
    },
    ModeScheme {
        kind: BcKind::AntiPeriodic,
        first: row(Sin, Half, 1.0, 0, Cos, -1.0, 1),
        second: row(Cos, Half, -1.0, 0, Sin, 1.0, 2),
        constant_mode: false,
    },
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("mode {mode} is not admissible for {kind} conditions")]
    InadmissibleMode { kind: BcKind, mode: ModeId },
    #[error("|epsilon| must be below 1, got {0}")]
    EpsilonOutOfRange(f64),
}

pub fn check_epsilon(epsilon: f64) -> Result<(), SpectralError> {
    if epsilon.is_finite() && epsilon.abs() < 1.0 {
        Ok(())
    } else {
        Err(SpectralError::EpsilonOutOfRange(epsilon))
    }
}

impl ModeScheme {
    pub fn row(&self, branch: Branch) -> Option<&BranchRow> {
        match branch {
            Branch::First => Some(&self.first),
            Branch::Second => Some(&self.second),
            Branch::Constant => None,
        }
    }

    pub fn is_admissible(&self, mode: ModeId) -> bool {
        match mode.branch {
            Branch::Constant => self.constant_mode && mode.k == 0,
            b => self.row(b).is_some_and(|r| mode.k >= r.k_min),
        }
    }

    fn admissible_row(&self, mode: ModeId) -> Result<Option<&BranchRow>, SpectralError> {
        if !self.is_admissible(mode) {
            return Err(SpectralError::InadmissibleMode { kind: self.kind, mode });
        }
        Ok(self.row(mode.branch))
    }

    /// All admissible modes with `k <= kmax`: the constant mode first, then
    /// branch 1 and branch 2 in increasing `k`.
    pub fn modes(&self, kmax: u32) -> Vec<ModeId> {
        let mut out = Vec::new();
        if self.constant_mode {
            out.push(ModeId::CONSTANT);
        }
        for (branch, row) in [(Branch::First, &self.first), (Branch::Second, &self.second)] {
            out.extend((row.k_min..=kmax).map(|k| ModeId { branch, k }));
        }
        out
    }

    pub fn frequency(&self, mode: ModeId) -> Result<f64, SpectralError> {
        Ok(match self.admissible_row(mode)? {
            Some(r) => r.harmonic.frequency(mode.k),
            None => 0.0,
        })
    }

    pub fn eigenvalue(&self, mode: ModeId, epsilon: f64) -> Result<f64, SpectralError> {
        check_epsilon(epsilon)?;
        Ok(match self.admissible_row(mode)? {
            Some(r) => {
                let kappa = r.harmonic.frequency(mode.k);
                (1.0 + r.eigen_sign * epsilon) * kappa * kappa
            }
            None => 0.0,
        })
    }

    pub fn kernel(&self, mode: ModeId) -> Result<Kernel, SpectralError> {
        Ok(match self.admissible_row(mode)? {
            Some(r) => r.kernel(mode.k),
            None => Kernel::Unit,
        })
    }

    /// Kernel of the third-derivative coefficient for `mode`; `None` for the
    /// constant mode, which is carried by its mean instead.
    pub fn deriv_kernel(&self, mode: ModeId) -> Result<Option<Kernel>, SpectralError> {
        Ok(self.admissible_row(mode)?.map(|r| r.deriv_kernel(mode.k)))
    }

    pub fn norm_constant(&self, mode: ModeId) -> Result<f64, SpectralError> {
        Ok(self.kernel(mode)?.norm_constant())
    }

    pub fn kernel_name(&self, mode: ModeId) -> Result<&'static str, SpectralError> {
        Ok(match self.admissible_row(mode)? {
            Some(r) => r.kernel_name(),
            None => "1",
        })
    }
}

pub fn eigenvalue(kind: BcKind, mode: ModeId, epsilon: f64) -> Result<f64, SpectralError> {
    kind.scheme().eigenvalue(mode, epsilon)
}

/// Unnormalised eigenfunction value at `x`.
pub fn basis_eval(kind: BcKind, mode: ModeId, x: f64) -> Result<f64, SpectralError> {
    Ok(kind.scheme().kernel(mode)?.eval(x))
}

/// `X''(x) - ε X''(-x) + λ X(x)` from the analytic kernel derivatives.
pub fn eigen_residual(kind: BcKind, mode: ModeId, epsilon: f64, x: f64) -> Result<f64, SpectralError> {
    let scheme = kind.scheme();
    let lambda = scheme.eigenvalue(mode, epsilon)?;
    let kernel = scheme.kernel(mode)?;
    Ok(kernel.second_derivative(x) - epsilon * kernel.second_derivative(-x) + lambda * kernel.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureRule;
    use proptest::prelude::*;

    #[test]
    fn eigenvalue_examples() {
        let l = eigenvalue(BcKind::Dirichlet, ModeId::first(0), 0.1).unwrap();
        assert!((l - 0.225).abs() < 1e-15);
        assert_eq!(eigenvalue(BcKind::Dirichlet, ModeId::second(1), 0.0).unwrap(), 1.0);
        assert_eq!(eigenvalue(BcKind::Periodic, ModeId::second(1), 0.5).unwrap(), 1.5);
        assert_eq!(eigenvalue(BcKind::AntiPeriodic, ModeId::first(0), -0.5).unwrap(), 0.125);
        assert_eq!(eigenvalue(BcKind::AntiPeriodic, ModeId::second(0), -0.5).unwrap(), 0.375);
        assert_eq!(eigenvalue(BcKind::Neumann, ModeId::CONSTANT, 0.3).unwrap(), 0.0);
        assert_eq!(eigenvalue(BcKind::Neumann, ModeId::first(2), 0.5).unwrap(), 2.0);
        assert_eq!(eigenvalue(BcKind::Neumann, ModeId::second(0), 0.2).unwrap(), 0.3);
    }

    #[test]
    fn eigenvalue_errors() {
        assert!(matches!(
            eigenvalue(BcKind::Dirichlet, ModeId::second(0), 0.1),
            Err(SpectralError::InadmissibleMode { .. })
        ));
        assert!(eigenvalue(BcKind::Dirichlet, ModeId::CONSTANT, 0.1).is_err());
        assert!(eigenvalue(BcKind::AntiPeriodic, ModeId::CONSTANT, 0.1).is_err());
        assert!(eigenvalue(BcKind::Neumann, ModeId::first(0), 0.1).is_err());
        assert!(eigenvalue(BcKind::Periodic, ModeId::first(0), 0.1).is_err());
        assert!(eigenvalue(BcKind::Periodic, ModeId::second(0), 0.1).is_err());
        assert!(eigenvalue(BcKind::Neumann, ModeId::second(0), 0.1).is_ok());
        assert_eq!(
            eigenvalue(BcKind::Periodic, ModeId::first(1), 1.0),
            Err(SpectralError::EpsilonOutOfRange(1.0))
        );
        assert!(eigenvalue(BcKind::Periodic, ModeId::first(1), f64::NAN).is_err());
    }

    #[test]
    fn basis_examples() {
        assert_eq!(basis_eval(BcKind::Dirichlet, ModeId::first(0), 0.0).unwrap(), 1.0);
        assert_eq!(basis_eval(BcKind::AntiPeriodic, ModeId::first(0), PI).unwrap(), 1.0);
        for x in [-PI, -1.0, 0.0, 2.5] {
            assert_eq!(basis_eval(BcKind::Neumann, ModeId::CONSTANT, x).unwrap(), 1.0);
        }
    }

    #[test]
    fn residual_examples() {
        assert!(eigen_residual(BcKind::Dirichlet, ModeId::first(0), 0.3, 1.0).unwrap().abs() < 1e-12);
        assert!(eigen_residual(BcKind::Periodic, ModeId::second(2), -0.4, 0.7).unwrap().abs() < 1e-12);
        assert_eq!(eigen_residual(BcKind::Neumann, ModeId::CONSTANT, 0.9, 1.3).unwrap(), 0.0);
    }

    #[test]
    fn index_ranges() {
        let counts: Vec<usize> = BcKind::ALL.iter().map(|k| k.scheme().modes(3).len()).collect();
        // dirichlet 4+3, neumann 1+3+4, periodic 1+3+3, antiperiodic 4+4
        assert_eq!(counts, vec![7, 8, 7, 8]);
        for kind in BcKind::ALL {
            assert_eq!(kind.scheme().kind, kind);
        }
    }

    #[test]
    fn norm_constants_match_quadrature() {
        let rule = QuadratureRule::gauss_legendre(512).unwrap();
        for kind in BcKind::ALL {
            let s = kind.scheme();
            for mode in s.modes(20) {
                let k = s.kernel(mode).unwrap();
                let n = rule.integrate(|x| k.eval(x).powi(2));
                assert!((n - s.norm_constant(mode).unwrap()).abs() < 1e-12, "{kind} {mode}");
            }
        }
    }

    #[test]
    fn kernels_satisfy_boundary_conditions() {
        for kind in BcKind::ALL {
            let s = kind.scheme();
            for mode in s.modes(20) {
                let k = s.kernel(mode).unwrap();
                let (a, b) = (k.eval(-PI), k.eval(PI));
                let (da, db) = (k.derivative(-PI), k.derivative(PI));
                let scale = 1.0 + s.frequency(mode).unwrap();
                let tol = 1e-13 * scale;
                match kind {
                    BcKind::Dirichlet => assert!(a.abs() < tol && b.abs() < tol, "{mode}"),
                    BcKind::Neumann => assert!(da.abs() < tol && db.abs() < tol, "{mode}"),
                    BcKind::Periodic => assert!((a - b).abs() < tol && (da - db).abs() < tol),
                    BcKind::AntiPeriodic => assert!((a + b).abs() < tol && (da + db).abs() < tol),
                }
            }
        }
    }

    #[test]
    fn orthogonality_by_quadrature() {
        let rule = QuadratureRule::gauss_legendre(512).unwrap();
        for kind in BcKind::ALL {
            let s = kind.scheme();
            let modes = s.modes(20);
            let samples: Vec<Vec<f64>> = modes
                .iter()
                .map(|&m| {
                    let k = s.kernel(m).unwrap();
                    rule.nodes().iter().map(|&x| k.eval(x)).collect()
                })
                .collect();
            for i in 0..modes.len() {
                for j in 0..i {
                    let ip = rule.inner_product(&samples[i], &samples[j]);
                    assert!(ip.abs() <= 1e-10, "{kind} {} {}: {ip}", modes[i], modes[j]);
                }
            }
        }
    }

    // The stored (deriv_wave, deriv_sign) pairs reproduce the integration by
    // parts identity for a function with vanishing boundary terms.
    #[test]
    fn derivative_kernel_table_matches_integration_by_parts() {
        let rule = QuadratureRule::gauss_legendre(512).unwrap();
        // odd and even smooth functions whose derivatives vanish to high order at ±π
        const S: f64 = 0.2;
        let bump = |x: f64| (-(x * x) / S).exp();
        let bump3 = |x: f64| {
            let s = S;
            let e = (-(x * x) / s).exp();
            e * (-8.0 * x.powi(3) / s.powi(3) + 12.0 * x / s.powi(2))
        };
        let shifted = |x: f64| bump(x - 0.4);
        let shifted3 = |x: f64| bump3(x - 0.4);
        for kind in BcKind::ALL {
            let s = kind.scheme();
            for mode in s.modes(12).into_iter().filter(|m| m.branch != Branch::Constant) {
                let row = s.row(mode.branch).unwrap();
                let kappa = row.harmonic.frequency(mode.k);
                let (x_k, d_k) = (row.kernel(mode.k), row.deriv_kernel(mode.k));
                let raw = rule.integrate(|x| shifted(x) * x_k.eval(x));
                let d3 = rule.integrate(|x| shifted3(x) * d_k.eval(x));
                let rebuilt = row.deriv_sign * d3 / kappa.powi(3);
                assert!((raw - rebuilt).abs() < 1e-10, "{kind} {mode}: {raw} vs {rebuilt}");
            }
        }
    }

    proptest! {
        #[test]
        fn eigen_residual_vanishes(kind_idx in 0usize..4, k in 0u32..=20, eps in -0.99f64..0.99, x in -PI..PI, b in 0u8..3) {
            let kind = BcKind::ALL[kind_idx];
            let mode = ModeId { branch: Branch::from_index(b).unwrap(), k: if b == 0 { 0 } else { k } };
            prop_assume!(kind.scheme().is_admissible(mode));
            let r = eigen_residual(kind, mode, eps, x).unwrap();
            prop_assert!(r.abs() <= 1e-11, "{r}");
        }

        #[test]
        fn eigenvalues_positive_increasing_and_affine(kind_idx in 0usize..4, eps in -0.99f64..0.99) {
            let s = BcKind::ALL[kind_idx].scheme();
            for branch in [Branch::First, Branch::Second] {
                let row = s.row(branch).unwrap();
                let mut prev = 0.0;
                for k in row.k_min..=20 {
                    let mode = ModeId { branch, k };
                    let l = s.eigenvalue(mode, eps).unwrap();
                    prop_assert!(l > prev);
                    prev = l;
                    let l0 = s.eigenvalue(mode, 0.0).unwrap();
                    prop_assert!((l - l0 * (1.0 + row.eigen_sign * eps)).abs() <= 1e-12 * l0);
                }
            }
        }
    }
}
