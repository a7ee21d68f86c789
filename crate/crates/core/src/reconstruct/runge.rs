//! Regularized exterior control approximating a target field in `omega`.

use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::forward::InteriorSolver;
use crate::linalg::tikhonov;
use crate::operator::NonlocalOperator;
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct RungeControl<T> {
    /// `f̂`, supported in `w1`.
    pub control: FieldVector<T>,
    /// The solution driven by `f̂`.
    pub state: FieldVector<T>,
    /// Discrete `L²` distance `‖v_f̂ − g‖` over the free nodes.
    pub residual: T,
    /// Discrete `L²` norm of the target over the same nodes.
    pub target_norm: T,
}

/// Minimizes `‖v_f − g‖² + λ ‖f‖²` (discrete `L²` norms) over `f` supported
/// in `w1`, where `v_f` solves `((−Δ)^s + q) v = 0` with exterior data `f`.
pub fn runge_control<T: Scalar>(
    op: &NonlocalOperator<T>,
    potential: &FieldVector<T>,
    target: &FieldVector<T>,
    lambda: T,
) -> Result<RungeControl<T>> {
    let grid = op.grid();
    if target.len() != grid.n_nodes() {
        return Err(Error::Dimension("target must span the grid".into()));
    }
    if !(lambda > T::zero()) {
        return Err(Error::Precondition("the control weight must be positive".into()));
    }
    let solver = InteriorSolver::new(op, potential)?;
    let free = solver.unknowns().to_vec();
    let w1 = grid.w1();
    let n = grid.n_nodes();
    let mut basis = DMatrix::zeros(free.len(), w1.len());
    for (c, j) in w1.iter().enumerate() {
        let mut e = FieldVector::zeros(n);
        e[j] = T::one();
        let v = solver.solve(&FieldVector::zeros(n), &e)?;
        for (r, &i) in free.iter().enumerate() {
            basis[(r, c)] = v[i];
        }
    }
    let g = DVector::from_iterator(free.len(), free.iter().map(|&i| target[i]));
    let coef = tikhonov(&basis, &g, lambda, &DMatrix::identity(w1.len(), w1.len()), None, T::lit(f64::INFINITY))?;
    let mut control = FieldVector::zeros(n);
    for (c, j) in w1.iter().enumerate() {
        control[j] = coef[c];
    }
    let state = solver.solve(&FieldVector::zeros(n), &control)?;
    let h = grid.spacing();
    let residual = (free.iter().fold(T::zero(), |a, &i| a + (state[i] - target[i]).powi(2)) * h).sqrt();
    let target_norm = (g.norm_squared() * h).sqrt();
    Ok(RungeControl { control, state, residual, target_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::operator::FractionalOrder;

    fn setup() -> (NonlocalOperator<f64>, FieldVector<f64>) {
        let g = Grid::from_physical(4.0, 65, (-1.0, 1.0), (1.25, 3.0), (-3.0, -1.25), None).unwrap();
        let op = NonlocalOperator::assemble(&g, FractionalOrder::new(0.5).unwrap()).unwrap();
        let q = FieldVector::supported_on(&g, g.omega(), |x| 1.0 + x * x);
        (op, q)
    }

    #[test]
    fn target_in_range_is_reached() {
        let (op, q) = setup();
        let g = op.grid();
        let f = FieldVector::supported_on(g, g.w1(), |x| (x - 1.25) * (3.0 - x));
        let target = InteriorSolver::new(&op, &q).unwrap().solve(&FieldVector::zeros(g.n_nodes()), &f).unwrap();
        let coarse = runge_control(&op, &q, &target, 1e-4).unwrap();
        let fine = runge_control(&op, &q, &target, 1e-10).unwrap();
        assert!(fine.residual < coarse.residual);
        assert!(fine.residual / fine.target_norm < 1e-3);
    }

    #[test]
    fn residual_monotone_in_weight() {
        let (op, q) = setup();
        let ones = FieldVector::supported_on(op.grid(), op.grid().omega(), |_| 1.0);
        let r: Vec<f64> = [1e-2, 1e-4, 1e-6].iter().map(|&l| runge_control(&op, &q, &ones, l).unwrap().residual).collect();
        assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
        let ctrl = runge_control(&op, &q, &ones, 1e-6).unwrap();
        assert!((0..ones.len()).filter(|&i| !op.grid().w1().contains(i)).all(|i| ctrl.control[i] == 0.0));
    }

    #[test]
    fn nonpositive_weight_rejected() {
        let (op, q) = setup();
        let t = FieldVector::zeros(op.grid().n_nodes());
        assert!(runge_control(&op, &q, &t, 0.0).is_err());
    }
}
