//! Reference computations that follow routes independent of the library
//! under test: direct quadrature of the singular integral, damped Newton on
//! the discrete nonlinear system, and truncated power-series composition for
//! higher-order ε-derivatives.

pub mod bump;
pub mod fixtures;
pub mod newton;
pub mod quadrature;
pub mod series;

pub use bump::CosFourBump;
pub use newton::{damped_newton, NewtonResult};
