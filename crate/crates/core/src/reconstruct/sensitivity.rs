//! Flux sensitivities with respect to interior sources.
//!
//! For a zero-exterior field `w = L⁻¹ g` (with `L = A_II + diag(q)`), the
//! flux on `w2` is `Σ_i v⁰_j(i) (−g_i)`, where `v⁰_j` solves the homogeneous
//! problem with exterior data `e_j`. The rows `v⁰_j` restricted to the free
//! nodes are collected once per potential.

use crate::error::Result;
use crate::field::FieldVector;
use crate::forward::InteriorSolver;
use crate::scalar::Scalar;
use nalgebra::DMatrix;

/// `|w2| × |free nodes|` matrix with rows `v⁰_j` on the free nodes.
pub fn adjoint_rows<T: Scalar>(solver: &InteriorSolver<T>) -> Result<DMatrix<T>> {
    let op = solver.operator();
    let w2 = op.grid().w2();
    let unknowns = solver.unknowns();
    let n = op.grid().n_nodes();
    let mut rows = DMatrix::zeros(w2.len(), unknowns.len());
    for (r, j) in w2.iter().enumerate() {
        let mut eta = FieldVector::zeros(n);
        eta[j] = T::one();
        let v0 = solver.solve(&FieldVector::zeros(n), &eta)?;
        for (c, &i) in unknowns.iter().enumerate() {
            rows[(r, c)] = v0[i];
        }
    }
    Ok(rows)
}

/// `∂ flux / ∂ q` for the field `u`, one column per free node, assembled by
/// solving `L w = −e_i u_i` for every column.
pub fn direct_jacobian<T: Scalar>(solver: &InteriorSolver<T>, u: &FieldVector<T>) -> Result<DMatrix<T>> {
    let op = solver.operator();
    let w2 = op.grid().w2();
    let unknowns = solver.unknowns();
    let m = unknowns.len();
    let rhs = DMatrix::from_fn(m, m, |r, c| if r == c { -u[unknowns[c]] } else { T::zero() });
    let w = solver.solve_block(&rhs)?;
    let a = op.matrix();
    let a_w2 = DMatrix::from_fn(w2.len(), m, |r, c| a[(w2.start + r, unknowns[c])]);
    Ok(a_w2 * w)
}

/// Same matrix as [`direct_jacobian`] through the adjoint rows:
/// `J = V⁰ diag(u)`.
pub fn adjoint_jacobian<T: Scalar>(rows: &DMatrix<T>, unknowns: &[usize], u: &FieldVector<T>) -> DMatrix<T> {
    let mut j = rows.clone();
    for (c, &i) in unknowns.iter().enumerate() {
        j.column_mut(c).scale_mut(u[i]);
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::operator::{FractionalOrder, NonlocalOperator};

    #[test]
    fn adjoint_and_direct_agree() {
        let g = Grid::from_physical(4.0, 65, (-1.0, 1.0), (1.5, 2.0), (-2.0, -1.2), None).unwrap();
        let op = NonlocalOperator::assemble(&g, FractionalOrder::new(0.4).unwrap()).unwrap();
        let q = FieldVector::supported_on(&g, g.omega(), |x| 1.0 + x * x);
        let solver = InteriorSolver::new(&op, &q).unwrap();
        let f = FieldVector::supported_on(&g, g.w1(), |_| 1.0);
        let u = solver.solve(&FieldVector::zeros(65), &f).unwrap();
        let d = direct_jacobian(&solver, &u).unwrap();
        let a = adjoint_jacobian(&adjoint_rows(&solver).unwrap(), solver.unknowns(), &u);
        assert!((&d - &a).amax() < 1e-12 * d.amax());
    }
}
