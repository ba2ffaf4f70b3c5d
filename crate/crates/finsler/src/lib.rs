//! Numerical engine for (alpha, beta)-type Finsler metrics.
//!
//! The engine evaluates every curvature object of the theory along two
//! independent paths — truncated-Taylor (jet) differentiation of the
//! definitions, and the closed-form coefficient apparatus of the
//! (alpha, beta) calculus — classifies metrics against the reducibility
//! hierarchy, and checks the Berwald-or-C-reducible consistency statement
//! on a validated metric catalog.

pub mod alphabeta;
pub mod classify;
pub mod error;
pub mod expr;
pub mod jet;
pub mod linalg;
pub mod metric;
pub mod phi;
pub mod riemann;
pub mod tensors;
pub mod volume;
pub mod zoo;

pub use error::FinslerError;
