//! Spectral solver for the inverse source problem of the heat equation with
//! involution,
//!
//! ```text
//! u_t(x,t) - u_xx(x,t) + ε u_xx(-x,t) = f(x),   -π < x < π,  0 < t < T,
//! u(x,0) = φ(x),  u(x,T) = ψ(x),
//! ```
//!
//! under Dirichlet, Neumann, periodic or anti-periodic boundary conditions.
//! Given `φ` and `ψ` the solver reconstructs both `u` and the unknown source
//! `f` as eigenfunction series, and a Crank–Nicolson forward solver checks
//! each reconstruction independently.

pub mod cli;
pub mod coefficients;
pub mod expr;
pub mod forward;
pub mod quadrature;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use coefficients::{compatibility_check, third_derivative_coefficients, CoefficientSet, CompatibilityReport};
pub use expr::{parse, Expr};
pub use quadrature::QuadratureRule;
pub use solver::{solve, solve_with_route, ProblemSpec, Route, SeriesSolution, SolveError};
pub use spectral::{basis_eval, eigen_residual, eigenvalue, BcKind, Branch, ModeId};
