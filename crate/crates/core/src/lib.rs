//! Tree search as regularized policy optimization.
//!
//! AlphaZero's PUCT rule and prior-weighted UCT both track the solution of a
//! regularized policy problem,
//!
//! ```text
//! π̄ = argmax_{y ∈ simplex}  qᵀy − λ_N · D_f(π_θ, y)
//! ```
//!
//! This crate computes π̄ exactly, runs tree search with either classic rule
//! or by sampling π̄, composes searches into tabular acting/learning agents,
//! and hosts the desk-scale experiments driven by the `regmcts` CLI.
//!
//! ```
//! use regmcts_core::simplex::ActionDistribution;
//! use regmcts_core::solver::{solve_pibar, Multiplier};
//!
//! let prior = ActionDistribution::uniform(2);
//! let lambda = Multiplier::fixed(1.0, 2).unwrap();
//! let pibar = solve_pibar(&[1.0, 0.0], &prior, &lambda).unwrap();
//! assert!((pibar[0] - 0.5f64.sqrt()).abs() < 1e-9);
//! ```

pub mod agent;
pub mod env;
pub mod error;
pub mod experiments;
pub mod search;
pub mod simplex;
pub mod solver;

pub use error::{Error, Result};
