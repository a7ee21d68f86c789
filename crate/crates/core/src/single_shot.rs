//! Recovery from a single exterior measurement: the interior field, the
//! nonlinearity along it, and an obstacle read off the field's zero set.

use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::grid::{Grid, IndexRange};
use crate::linalg::{nonnegative_least_squares, tikhonov, Penalty};
use crate::operator::NonlocalOperator;
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};

/// One input `f` (supported in `w1`) and its flux on `w2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleMeasurement<T> {
    input: FieldVector<T>,
    flux: Vec<T>,
}

impl<T: Scalar> SingleMeasurement<T> {
    pub fn new(grid: &Grid<T>, input: FieldVector<T>, flux: Vec<T>) -> Result<Self> {
        if input.len() != grid.n_nodes() {
            return Err(Error::Dimension("input must span the grid".into()));
        }
        if flux.len() != grid.w2().len() {
            return Err(Error::Dimension(format!("flux has {} values, w2 has {} nodes", flux.len(), grid.w2().len())));
        }
        if !input.is_nontrivial() {
            return Err(Error::Precondition("single-measurement recovery needs a nonzero input".into()));
        }
        if let Some(i) = (0..input.len()).find(|&i| !grid.w1().contains(i) && input[i] != T::zero()) {
            return Err(Error::Precondition(format!("input is nonzero at node {i} outside w1")));
        }
        if !input.is_finite() || flux.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("measurement must be finite".into()));
        }
        Ok(Self { input, flux })
    }

    pub fn input(&self) -> &FieldVector<T> {
        &self.input
    }

    pub fn flux(&self) -> &[T] {
        &self.flux
    }
}

/// Regularization for [`recover_field`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRecoveryOptions<T> {
    /// Fixed weight; `None` selects one by the discrepancy principle, with
    /// the attainable residual standing in for the noise level when the
    /// latter is below what the solve can reach.
    pub alpha: Option<T>,
    /// Weight of the second-difference block of the penalty.
    pub smoothness: T,
    /// Relative noise level assumed by the discrepancy principle (floored at `1e-10`).
    pub noise_level: T,
    /// Largest condition number accepted with `alpha = 0`.
    pub condition_cap: T,
    /// Constrain `û ≥ 0` when the input is nonnegative, as the maximum
    /// principle guarantees for the true field.
    pub nonnegative: bool,
}

impl<T: Scalar> Default for FieldRecoveryOptions<T> {
    fn default() -> Self {
        Self { alpha: None, smoothness: T::one(), noise_level: T::zero(), condition_cap: T::lit(1e12), nonnegative: true }
    }
}

/// Output of [`recover_field`]: `û` on `omega` glued to the known input.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRecovery<T> {
    pub field: FieldVector<T>,
    /// `‖K û − d̃‖₂`.
    pub residual: T,
    /// Residual relative to `‖d̃‖₂`.
    pub relative_residual: T,
    /// Weight actually used, in units where `σ_max(K) = 1`.
    pub alpha: T,
}

const NOISE_FLOOR: f64 = 1e-10;

/// When the noise target is out of reach, the largest weight whose residual
/// is within this factor of the attainable floor is used.
const FLOOR_FACTOR: f64 = 2.0;

/// Weights tried by the discrepancy principle, largest first.
fn alpha_ladder<T: Scalar>() -> impl Iterator<Item = T> {
    (0..=24).map(|k| T::lit(10f64.powi(-k)))
}

/// `K = A[w2, omega]` and `d̃ = d − A[w2, ext] f`.
pub fn field_system<T: Scalar>(op: &NonlocalOperator<T>, m: &SingleMeasurement<T>) -> (DMatrix<T>, DVector<T>) {
    let grid = op.grid();
    let (w2, omega) = (grid.w2(), grid.omega());
    let k = DMatrix::from_fn(w2.len(), omega.len(), |r, c| op.entry(w2.start + r, omega.start + c));
    let exterior = op.apply_rows(&m.input, w2);
    let d = DVector::from_iterator(w2.len(), m.flux.iter().zip(&exterior).map(|(&d, &e)| d - e));
    (k, d)
}

/// Tikhonov inversion of the exterior flux for the interior values, with a
/// second-difference prior.
pub fn recover_field<T: Scalar>(
    op: &NonlocalOperator<T>,
    m: &SingleMeasurement<T>,
    opts: &FieldRecoveryOptions<T>,
) -> Result<FieldRecovery<T>> {
    let grid = op.grid();
    if m.input.len() != grid.n_nodes() || m.flux.len() != grid.w2().len() {
        return Err(Error::Dimension("measurement does not match the operator's grid".into()));
    }
    let omega = grid.omega();
    let (k, d) = field_system(op, m);
    let scale = k.clone().svd(false, false).singular_values.max();
    let ks = &k / scale;
    let ds = &d / scale;
    let nodes: Vec<usize> = omega.iter().collect();
    let mut penalty = Penalty::SecondDifference.matrix::<T>(&nodes) * opts.smoothness.sqrt();
    if opts.smoothness == T::zero() {
        penalty = DMatrix::identity(nodes.len(), nodes.len());
    }
    let dnorm = d.norm();
    let positive = opts.nonnegative && m.input.iter().all(|&v| v >= T::zero());
    let evaluate = |alpha: T| -> Result<(DVector<T>, T)> {
        let x = if positive && alpha > T::zero() {
            let rows = ks.nrows() + penalty.nrows();
            let mut stacked = DMatrix::zeros(rows, ks.ncols());
            stacked.view_mut((0, 0), ks.shape()).copy_from(&ks);
            stacked.view_mut((ks.nrows(), 0), penalty.shape()).copy_from(&(&penalty * alpha.sqrt()));
            let mut rhs = DVector::zeros(rows);
            rhs.rows_mut(0, ds.len()).copy_from(&ds);
            nonnegative_least_squares(&stacked, &rhs, T::from_usize_lossy(rows) * <T as Scalar>::epsilon())?
        } else {
            tikhonov(&ks, &ds, alpha, &penalty, None, opts.condition_cap)?
        };
        let r = (&k * &x - &d).norm();
        Ok((x, r))
    };
    let (x, residual, alpha) = match opts.alpha {
        Some(a) => {
            let (x, r) = evaluate(a)?;
            (x, r, a)
        }
        None => {
            let target = opts.noise_level.max(T::lit(NOISE_FLOOR)) * dnorm;
            let mut trail: Vec<(DVector<T>, T, T)> = Vec::new();
            let mut reached = None;
            for a in alpha_ladder::<T>() {
                let (x, r) = evaluate(a)?;
                if r <= target {
                    reached = Some((x, r, a));
                    break;
                }
                // The exact residual is monotone in α; a rise means the solve
                // has hit its rounding floor and smaller weights only fit noise.
                if trail.last().is_some_and(|last| r >= last.1) {
                    break;
                }
                trail.push((x, r, a));
            }
            match reached {
                Some(hit) => hit,
                None => {
                    let floor = trail.last().expect("ladder is nonempty").1;
                    let pick = trail.iter().position(|t| t.1 <= T::lit(FLOOR_FACTOR) * floor).expect("floor is attained");
                    trail.swap_remove(pick)
                }
            }
        }
    };
    let mut field = m.input.clone();
    for (c, i) in omega.iter().enumerate() {
        field[i] = x[c];
    }
    let relative_residual = if dnorm > T::zero() { residual / dnorm } else { residual };
    Ok(FieldRecovery { field, residual, relative_residual, alpha })
}

/// `a(x, û(x))` read off the equation: `−(A û)` on the free nodes of `omega`,
/// zero elsewhere.
pub fn recover_a_along_solution<T: Scalar>(op: &NonlocalOperator<T>, u: &FieldVector<T>) -> FieldVector<T> {
    let au = op.apply(u);
    let mut out = FieldVector::zeros(u.len());
    for i in op.grid().unknowns() {
        out[i] = -au[i];
    }
    out
}

/// Default relative threshold for obstacle detection.
pub const DEFAULT_TAU: f64 = 0.05;

/// Largest run of `omega` nodes with `|u| < τ max_omega |u|`, leftmost on
/// ties. A field that is small everywhere (or zero) reports all of `omega`.
pub fn threshold_interval<T: Scalar>(u: &FieldVector<T>, omega: IndexRange, tau: T) -> Option<IndexRange> {
    let top = u.max_norm_on(omega.iter());
    let below: Vec<bool> = omega.iter().map(|i| !(u[i].abs() >= tau * top) || top == T::zero()).collect();
    if below.iter().all(|&b| b) {
        return Some(omega);
    }
    let mut best: Option<IndexRange> = None;
    let mut c = 0;
    while c < below.len() {
        if !below[c] {
            c += 1;
            continue;
        }
        let start = c;
        while c < below.len() && below[c] {
            c += 1;
        }
        let run = IndexRange::new(omega.start + start, omega.start + c);
        if best.is_none_or(|b| run.len() > b.len()) {
            best = Some(run);
        }
    }
    best
}

/// Obstacle estimate from one measurement: [`recover_field`] followed by
/// [`threshold_interval`].
pub fn detect_obstacle<T: Scalar>(
    op: &NonlocalOperator<T>,
    m: &SingleMeasurement<T>,
    opts: &FieldRecoveryOptions<T>,
    tau: T,
) -> Result<(Option<IndexRange>, FieldRecovery<T>)> {
    let rec = recover_field(op, m, opts)?;
    Ok((threshold_interval(&rec.field, op.grid().omega(), tau), rec))
}
