//! Inverse pipeline: ε-derivatives of DN data, the linearization ladder,
//! recovery of `a_1..a_K`, the obstacle variant and the Runge controller.

mod coefficients;
mod linearized;
mod obstacle;
mod panel;
mod runge;
mod sensitivity;

pub use coefficients::{
    ak_system, coefficient_errors, recover_ak, recover_ak_from_data, recover_coefficients, recover_q, recover_q_from_data,
    relative_stencil_noise, AkRecovery, QRecovery, RecoveryOptions,
};
pub use linearized::{solve_linearized, LinearizationModel};
pub use obstacle::{recover_obstacle_and_coeffs, ObstacleOptions};
pub use panel::{eps_derivative, stencil_error_estimate, stencil_weights, validate_epsilons, validate_inputs, EpsilonPanel};
pub use runge::{runge_control, RungeControl};
pub use sensitivity::{adjoint_jacobian, adjoint_rows, direct_jacobian};

use crate::coeff::CoefficientField;
use crate::error::Result;
use crate::grid::{Grid, IndexRange};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Recovered coefficients with fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport<T> {
    /// `coefficients[k-1]` holds `â_k` on the `omega` nodes.
    pub coefficients: Vec<Vec<T>>,
    /// Relative data misfit per order.
    pub misfits: Vec<T>,
    /// Regularization weight used per order (`λ` for `k = 1`, `α` after).
    pub regularization: Vec<T>,
    /// Relative L² errors per order against a known truth.
    pub relative_errors: Option<Vec<T>>,
    pub stagnated: bool,
    pub gn_iterations: usize,
    /// Obstacle used for the fit (detected or supplied).
    pub obstacle: Option<IndexRange>,
}

impl<T: Scalar> ReconstructionReport<T> {
    pub fn new(coeff: &CoefficientField<T>, misfits: Vec<T>, regularization: Vec<T>, stagnated: bool, gn_iterations: usize) -> Self {
        let omega = coeff.omega();
        Self {
            coefficients: (1..=coeff.degree()).map(|k| coeff.order(k).restrict(omega)).collect(),
            misfits,
            regularization,
            relative_errors: None,
            stagnated,
            gn_iterations,
            obstacle: None,
        }
    }

    pub fn attach_errors(&mut self, grid: &Grid<T>, recovered: &CoefficientField<T>, truth: &CoefficientField<T>) {
        self.relative_errors = Some(coefficient_errors(grid, recovered, truth));
    }

    /// The recovered coefficients as a field on `grid`.
    pub fn field(&self, grid: &Grid<T>) -> Result<CoefficientField<T>> {
        CoefficientField::new(grid, self.coefficients.clone())
    }
}
