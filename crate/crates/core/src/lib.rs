//! Sup-functionals of fractional Brownian motion and their Hurst-parameter
//! derivatives at `H = 1/2`: exact integral formulas, closed forms, and a
//! Monte Carlo oracle on the Paley-Wiener-Zygmund field.

pub mod bessel_bridge;
pub mod densities;
pub mod error;
pub mod functionals;
pub mod pwz_sim;
pub mod quadrature;
pub mod specfun;
pub mod validation;

pub use error::{Error, Result};
