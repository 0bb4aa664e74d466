//! Solvability checks and potential reconstruction for gradient systems on
//! Riemannian manifolds and corank-one sub-Riemannian structures.

pub mod exec;
pub mod expr;
pub mod ode;
pub mod quadrature;
pub mod report;
pub mod sampling;
pub mod geometry;
pub mod riemann_poincare;
pub mod subriemann;
pub mod saint_venant;
pub mod cli;
