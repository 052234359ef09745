//! Finite-difference solvers for the complex Monge-Ampere equation on
//! domains in R^{2n} (n = 1, 2) carrying an almost complex structure.

pub mod disks;
pub mod domain;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod maximal;
pub mod operator;
pub mod par;
pub mod solver;

pub use error::{Error, Result};
