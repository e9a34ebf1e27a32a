//! Multistage stochastic integer programs at desk scale: exact arithmetic,
//! block-structure validation, Graver bases, the multiset machinery behind
//! the Graver norm bounds, and small solvers and experiments.

pub mod arith;
pub mod error;
pub mod graver;
pub mod instances;
pub mod multisets;
pub mod multistage;
pub mod solver;

pub use error::{Budget, Error, Result};
