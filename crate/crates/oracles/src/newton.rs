//! Damped Newton iteration on the discrete semilinear system.

use calderon::{CoefficientField, FieldVector, NonlocalOperator};
use nalgebra::{DMatrix, DVector};

/// Outcome of [`damped_newton`].
#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub solution: FieldVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `(A u)_i + a(x_i, u_i) = 0` on the free nodes with `u = f` outside,
/// by Newton steps on the full residual with step halving.
pub fn damped_newton(
    op: &NonlocalOperator<f64>,
    coeff: &CoefficientField<f64>,
    exterior: &FieldVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Option<NewtonResult> {
    let free = op.grid().unknowns();
    let a = op.matrix();
    let residual = |u: &FieldVector<f64>| -> DVector<f64> {
        let au = op.apply(u);
        DVector::from_iterator(free.len(), free.iter().map(|&i| au[i] + coeff.value_at(i, u[i])))
    };
    let mut u = exterior.clone();
    let mut r = residual(&u);
    for it in 0..max_iter {
        let norm = r.amax();
        if norm <= tol {
            return Some(NewtonResult { solution: u, residual: norm, iterations: it });
        }
        let jac = DMatrix::from_fn(free.len(), free.len(), |p, c| {
            let v = a[(free[p], free[c])];
            if p == c {
                v + coeff.deriv_at(free[p], u[free[p]], 1)
            } else {
                v
            }
        });
        let step = jac.lu().solve(&(-&r))?;
        let mut t = 1.0;
        loop {
            let mut trial = u.clone();
            for (k, &i) in free.iter().enumerate() {
                trial[i] += t * step[k];
            }
            let tr = residual(&trial);
            if tr.amax() < norm || t < 1e-6 {
                u = trial;
                r = tr;
                break;
            }
            t *= 0.5;
        }
    }
    let norm = r.amax();
    (norm <= tol).then_some(NewtonResult { solution: u, residual: norm, iterations: max_iter })
}
