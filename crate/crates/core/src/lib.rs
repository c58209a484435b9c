//! Lattice-point counting for systems of shifted homogeneous polynomial
//! inequalities `|f_k(x + mu*1) - tau_k| < eta`, together with the circle-method
//! objects that describe the count: Taylor shift tables, Vandermonde direction
//! families, rational approximation certificates, Weyl sums, Freeman kernels,
//! the real density and the arc dissection.

pub mod cli;
pub mod counting;
pub mod density;
pub mod dioph;
pub mod dissection;
pub mod error;
pub mod exact;
pub mod expsums;
pub mod forms;
pub mod kernels;
pub mod quadrature;
pub mod real;
pub mod shift;
pub mod vandermonde;

pub use error::{Error, Result};
