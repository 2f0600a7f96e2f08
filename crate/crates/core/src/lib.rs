//! Discrete constrained Lagrangian mechanics on Lie groupoids.
//!
//! Systems are a groupoid model, a basis of algebroid sections, a discrete
//! Lagrangian and constraint functions. The solver advances points
//! `(g, lambda)` of the Lagrangian submanifold by matching discrete Legendre
//! transforms.

pub mod del;
pub mod error;
pub mod field;
pub mod groupoid;
pub mod lie;
pub mod linalg;
pub mod newton;
pub mod systems;
pub mod verification;

pub use error::{Error, Result};
