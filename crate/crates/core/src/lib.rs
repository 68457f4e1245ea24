//! q-Laplace solutions of singularly perturbed q-difference-differential
//! Cauchy problems, with tools to check their flatness and q-Gevrey
//! asymptotics numerically.

pub mod cli;
pub mod covering;
pub mod error;
pub mod qgeometry;
pub mod problem;
pub mod qlaplace;
pub mod solution;
pub mod theta;

pub use error::{Error, Result};
