//! Obstacle detection from first-order data followed by coefficient
//! recovery on the remaining free nodes.

use super::coefficients::{recover_coefficients, RecoveryOptions};
use super::panel::{eps_derivative, EpsilonPanel};
use super::ReconstructionReport;
use crate::coeff::CoefficientField;
use crate::error::Result;
use crate::field::FieldVector;
use crate::grid::IndexRange;
use crate::operator::NonlocalOperator;
use crate::scalar::Scalar;
use crate::single_shot::{detect_obstacle, FieldRecoveryOptions, SingleMeasurement, DEFAULT_TAU};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleOptions<T> {
    /// Relative threshold below which `|û⁽¹⁾|` counts as zero.
    pub tau: T,
    pub field: FieldRecoveryOptions<T>,
}

impl<T: Scalar> Default for ObstacleOptions<T> {
    fn default() -> Self {
        Self { tau: T::lit(DEFAULT_TAU), field: FieldRecoveryOptions::default() }
    }
}

/// Recovers `û⁽¹⁾` in `omega` for the summed panel input, thresholds it to
/// `D̂`, then refits `â_1..â_K` with `u = 0` imposed on `D̂`. The operator must
/// carry no obstacle of its own.
pub fn recover_obstacle_and_coeffs<T: Scalar>(
    op: &NonlocalOperator<T>,
    panel: &EpsilonPanel<T>,
    degree: usize,
    opts: &RecoveryOptions<T>,
    obstacle_opts: &ObstacleOptions<T>,
    truth: Option<&CoefficientField<T>>,
) -> Result<(Option<IndexRange>, ReconstructionReport<T>)> {
    let plain = op.with_obstacle(None)?;
    let grid = plain.grid();
    let mut input = FieldVector::zeros(grid.n_nodes());
    let mut flux = vec![T::zero(); grid.w2().len()];
    for p in 0..panel.n_inputs() {
        input.axpy(T::one(), &panel.inputs()[p]);
        for (acc, d) in flux.iter_mut().zip(eps_derivative(panel, p, 1)?) {
            *acc += d;
        }
    }
    let m = SingleMeasurement::new(grid, input, flux)?;
    let (detected, _) = detect_obstacle(&plain, &m, &obstacle_opts.field, obstacle_opts.tau)?;
    // The refit needs `D̂` strictly inside `omega`: a full-omega report means
    // nothing was resolved, and a run reaching `∂Ω` loses its end node.
    let omega = grid.omega();
    let obstacle = detected.filter(|d| *d != omega).and_then(|d| {
        let (start, end) = (d.start.max(omega.start + 1), d.end.min(omega.end - 1));
        (start < end).then(|| IndexRange::new(start, end))
    });
    let fit_op = plain.with_obstacle(obstacle)?;
    let mut report = recover_coefficients(&fit_op, panel, degree, opts, truth)?;
    report.obstacle = obstacle;
    Ok((obstacle, report))
}
