//! Discrete fractional semilinear exterior problems in one dimension:
//! `(−Δ)^s u + a(x, u) = 0` in `Ω`, `u = f` outside, together with the
//! Dirichlet-to-Neumann data they generate and the inverse procedures that
//! recover `a`, an interior obstacle, or the field itself from that data.
//!
//! Numerical types are generic over [`Scalar`] (implemented for `f32` and
//! `f64`); the `*F64` aliases below fix double precision.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
pub mod coeff;
pub mod dnmap;
pub mod error;
pub mod field;
pub mod forward;
pub mod grid;
pub mod linalg;
pub mod operator;
pub mod profile;
pub mod reconstruct;
pub mod scalar;
pub mod single_shot;

pub use coeff::CoefficientField;
pub use error::{Error, Result};
pub use field::FieldVector;
pub use grid::{snap_interval, Grid, IndexRange};
pub use operator::{cns_constant, FractionalOrder, NonlocalOperator};
pub use profile::Profile;
pub use scalar::Scalar;

pub type GridF64 = Grid<f64>;
pub type FieldF64 = FieldVector<f64>;
pub type CoefficientsF64 = CoefficientField<f64>;
pub type OperatorF64 = NonlocalOperator<f64>;
pub type GridF32 = Grid<f32>;
pub type OperatorF32 = NonlocalOperator<f32>;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
