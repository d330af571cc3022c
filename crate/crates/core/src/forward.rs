//! Crank–Nicolson forward solver for `u_t = u_xx - ε u_xx(-x) + f(x)`.
//!
//! Used only as an independent check of the series reconstruction. The grid
//! has `nx + 1` nodes `x_j = -π + j·h` with `nx` even, so the mirror of node
//! `j` is node `nx - j` exactly. The involution term couples every row to
//! the stencil around its mirror, giving a band plus a reversed band; the
//! system is solved by a dense LU factorisation computed once per run.
//!
//! Boundary handling per kind:
//! * Dirichlet: endpoints pinned to zero, interior nodes are unknowns.
//! * Neumann: all nodes are unknowns, ghost values reflect (`u_{-1} = u_1`).
//! * Periodic / anti-periodic: nodes `0..nx` are unknowns and the stencil
//!   wraps with sign `+1` / `-1`; the stored value at `x = π` is `±u_0`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::spectral::{check_epsilon, BcKind, SpectralError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForwardError {
    #[error("spatial intervals must be even and at least 2, got {0}")]
    BadSpatialGrid(usize),
    #[error("need at least one time step")]
    NoTimeSteps,
    #[error("final time must be positive, got {0}")]
    BadFinalTime(f64),
    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },
    #[error("Crank-Nicolson system is singular")]
    Singular,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub nt: usize,
    pub final_time: f64,
}

impl Grid {
    pub fn new(nx: usize, nt: usize, final_time: f64) -> Result<Self, ForwardError> {
        if nx < 2 || !nx.is_multiple_of(2) {
            return Err(ForwardError::BadSpatialGrid(nx));
        }
        if nt == 0 {
            return Err(ForwardError::NoTimeSteps);
        }
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(ForwardError::BadFinalTime(final_time));
        }
        Ok(Self { nx, nt, final_time })
    }

    pub fn h(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.nx as f64
    }

    pub fn tau(&self) -> f64 {
        self.final_time / self.nt as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.nx {
            std::f64::consts::PI
        } else {
            -std::f64::consts::PI + j as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.nx).map(|j| self.node(j)).collect()
    }

    pub fn mirror(&self, j: usize) -> usize {
        self.nx - j
    }
}

/// Values `u_j` at all `nx + 1` grid nodes at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub values: Vec<f64>,
    pub time: f64,
    pub kind: BcKind,
    pub epsilon: f64,
    /// Formal order of accuracy in `h` and `τ`.
    pub scheme_order: u32,
}

impl DiscreteField {
    /// Trapezoidal mean over [-π, π].
    pub fn mean(&self) -> f64 {
        trapezoid_mean(&self.values)
    }

    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.values.iter().zip(other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

pub fn trapezoid_mean(values: &[f64]) -> f64 {
    let n = values.len() - 1;
    let inner: f64 = values[1..n].iter().sum();
    (inner + 0.5 * (values[0] + values[n])) / n as f64
}

/// Maps full-grid node indices onto the unknown vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    kind: BcKind,
    nx: usize,
}

impl Layout {
    fn unknowns(&self) -> usize {
        match self.kind {
            BcKind::Dirichlet => self.nx - 1,
            BcKind::Neumann => self.nx + 1,
            BcKind::Periodic | BcKind::AntiPeriodic => self.nx,
        }
    }

    fn node_of(&self, row: usize) -> usize {
        match self.kind {
            BcKind::Dirichlet => row + 1,
            _ => row,
        }
    }

    /// Unknown index and sign for a (possibly ghost) node index
    /// `j ∈ [-1, nx + 1]`; `None` for pinned zero values.
    fn resolve(&self, j: isize) -> Option<(usize, f64)> {
        let nx = self.nx as isize;
        match self.kind {
            BcKind::Dirichlet => (j > 0 && j < nx).then(|| ((j - 1) as usize, 1.0)),
            BcKind::Neumann => {
                let r = if j < 0 { -j } else if j > nx { 2 * nx - j } else { j };
                Some((r as usize, 1.0))
            }
            BcKind::Periodic | BcKind::AntiPeriodic => {
                let wraps = j.div_euclid(nx);
                let r = j.rem_euclid(nx);
                let sign = if self.kind == BcKind::AntiPeriodic && wraps % 2 != 0 { -1.0 } else { 1.0 };
                Some((r as usize, sign))
            }
        }
    }

    fn to_unknowns(self, full: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.unknowns(), (0..self.unknowns()).map(|r| full[self.node_of(r)]))
    }

    fn to_full(self, u: &DVector<f64>) -> Vec<f64> {
        let mut full = vec![0.0; self.nx + 1];
        for r in 0..self.unknowns() {
            full[self.node_of(r)] = u[r];
        }
        match self.kind {
            BcKind::Periodic => full[self.nx] = u[0],
            BcKind::AntiPeriodic => full[self.nx] = -u[0],
            _ => {}
        }
        full
    }
}

/// `A = D₂ - ε M D₂`, where `D₂` is the second-difference operator with the
/// boundary closure and `M` maps each node to its mirror.
fn operator_matrix(layout: Layout, epsilon: f64, h: f64) -> DMatrix<f64> {
    let n = layout.unknowns();
    let inv_h2 = 1.0 / (h * h);
    let mut a = DMatrix::zeros(n, n);
    let stencil = |row: usize, centre: usize, weight: f64, a: &mut DMatrix<f64>| {
        for (offset, coef) in [(-1, 1.0), (0, -2.0), (1, 1.0)] {
            if let Some((col, sign)) = layout.resolve(centre as isize + offset) {
                a[(row, col)] += weight * sign * coef * inv_h2;
            }
        }
    };
    for row in 0..n {
        let j = layout.node_of(row);
        stencil(row, j, 1.0, &mut a);
        // node nx (x = π) is a wrapped copy for the periodic kinds; resolve handles the sign
        stencil(row, layout.nx - j, -epsilon, &mut a);
    }
    a
}

/// Crank–Nicolson stepper with the implicit matrix factorised once.
pub struct CrankNicolson {
    layout: Layout,
    explicit: DMatrix<f64>,
    implicit: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    tau: f64,
    epsilon: f64,
}

impl CrankNicolson {
    pub fn new(kind: BcKind, epsilon: f64, h: f64, tau: f64, nx: usize) -> Result<Self, ForwardError> {
        check_epsilon(epsilon)?;
        if nx < 2 || !nx.is_multiple_of(2) {
            return Err(ForwardError::BadSpatialGrid(nx));
        }
        let layout = Layout { kind, nx };
        let a = operator_matrix(layout, epsilon, h);
        let n = layout.unknowns();
        let identity = DMatrix::<f64>::identity(n, n);
        let explicit = &identity + &a * (0.5 * tau);
        let lhs = &identity - &a * (0.5 * tau);
        let implicit = lhs.lu();
        if !implicit.is_invertible() {
            return Err(ForwardError::Singular);
        }
        Ok(Self { layout, explicit, implicit, tau, epsilon })
    }

    /// One step of `(I - τA/2) u⁺ = (I + τA/2) u + τ f`.
    pub fn step(&self, state: &DiscreteField, source: &[f64]) -> Result<DiscreteField, ForwardError> {
        let expected = self.layout.nx + 1;
        for got in [state.values.len(), source.len()] {
            if got != expected {
                return Err(ForwardError::SampleCount { expected, got });
            }
        }
        let f = self.layout.to_unknowns(source);
        let u = self.layout.to_unknowns(&state.values);
        let next = self.advance(&u, &f)?;
        Ok(DiscreteField { values: self.layout.to_full(&next), time: state.time + self.tau, ..state.clone() })
    }

    fn advance(&self, u: &DVector<f64>, f: &DVector<f64>) -> Result<DVector<f64>, ForwardError> {
        let rhs = &self.explicit * u + f * self.tau;
        self.implicit.solve(&rhs).ok_or(ForwardError::Singular)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// One Crank–Nicolson step from `state`.
pub fn step_crank_nicolson(
    state: &DiscreteField,
    source: &[f64],
    epsilon: f64,
    tau: f64,
    h: f64,
    kind: BcKind,
) -> Result<DiscreteField, ForwardError> {
    let nx = state.values.len().saturating_sub(1);
    CrankNicolson::new(kind, epsilon, h, tau, nx)?.step(state, source)
}

/// Integrates from `initial` to `t = grid.final_time` in `grid.nt` steps.
pub fn evolve(initial: &[f64], source: &[f64], grid: &Grid, kind: BcKind, epsilon: f64) -> Result<DiscreteField, ForwardError> {
    evolve_with(initial, source, grid, kind, epsilon, |_| {})
}

/// As [`evolve`], calling `observe` after every step.
pub fn evolve_with(
    initial: &[f64],
    source: &[f64],
    grid: &Grid,
    kind: BcKind,
    epsilon: f64,
    mut observe: impl FnMut(&DiscreteField),
) -> Result<DiscreteField, ForwardError> {
    let expected = grid.nx + 1;
    for got in [initial.len(), source.len()] {
        if got != expected {
            return Err(ForwardError::SampleCount { expected, got });
        }
    }
    let stepper = CrankNicolson::new(kind, epsilon, grid.h(), grid.tau(), grid.nx)?;
    let layout = stepper.layout;
    let f = layout.to_unknowns(source);
    let mut u = layout.to_unknowns(initial);
    let mut field = DiscreteField { values: layout.to_full(&u), time: 0.0, kind, epsilon, scheme_order: 2 };
    for n in 1..=grid.nt {
        u = stepper.advance(&u, &f)?;
        field.values = layout.to_full(&u);
        field.time = n as f64 * grid.tau();
        observe(&field);
    }
    Ok(field)
}
