//! Linear and semilinear exterior-value solvers.
//!
//! The semilinear solve follows the fixed-point construction: with
//! `u0` the solution of the linearized problem, `v = u - u0` is the fixed
//! point of `v ↦ L⁻¹ G(v)`, where `L = (-Δ)^s + a_1` with zero exterior data
//! and `G(φ) = a_1 (u0 + φ) - a(x, u0 + φ)`.

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::grid::IndexRange;
use crate::operator::NonlocalOperator;
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector, Dyn, LU};

/// Factorized interior block `A_II + diag(q_I)` over the free nodes
/// (`omega` minus the obstacle).
#[derive(Debug, Clone)]
pub struct InteriorSolver<T: Scalar> {
    op: NonlocalOperator<T>,
    unknowns: Vec<usize>,
    potential: FieldVector<T>,
    lu: LU<T, Dyn, Dyn>,
}

impl<T: Scalar> InteriorSolver<T> {
    pub fn new(op: &NonlocalOperator<T>, potential: &FieldVector<T>) -> Result<Self> {
        let grid = op.grid();
        if potential.len() != grid.n_nodes() {
            return Err(Error::Dimension(format!(
                "potential has {} entries, grid has {} nodes",
                potential.len(),
                grid.n_nodes()
            )));
        }
        let unknowns = grid.unknowns();
        if let Some(&i) = unknowns.iter().find(|&&i| !(potential[i] >= T::zero())) {
            return Err(Error::Precondition(format!("potential must be nonnegative, q = {} at node {i}", potential[i])));
        }
        let m = unknowns.len();
        let a = op.matrix();
        let block = DMatrix::from_fn(m, m, |r, c| {
            let v = a[(unknowns[r], unknowns[c])];
            if r == c {
                v + potential[unknowns[r]]
            } else {
                v
            }
        });
        let lu = block.lu();
        if !lu.is_invertible() {
            return Err(Error::IllPosedDiscretization);
        }
        Ok(Self { op: op.clone(), unknowns, potential: potential.clone(), lu })
    }

    pub fn operator(&self) -> &NonlocalOperator<T> {
        &self.op
    }

    pub fn unknowns(&self) -> &[usize] {
        &self.unknowns
    }

    pub fn potential(&self) -> &FieldVector<T> {
        &self.potential
    }

    /// Solves `(A u)_i + q_i u_i = source_i` on the free nodes with
    /// `u = exterior` off `omega` and `u = 0` on the obstacle.
    pub fn solve(&self, source: &FieldVector<T>, exterior: &FieldVector<T>) -> Result<FieldVector<T>> {
        let grid = self.op.grid();
        let n = grid.n_nodes();
        if source.len() != n || exterior.len() != n {
            return Err(Error::Dimension("source and exterior data must span the grid".into()));
        }
        let omega = grid.omega();
        if let Some(i) = omega.iter().find(|&i| exterior[i] != T::zero()) {
            return Err(Error::Precondition(format!("exterior data must vanish on omega, nonzero at node {i}")));
        }
        let a = self.op.matrix();
        let exterior_nodes: Vec<usize> = (0..n).filter(|&i| !omega.contains(i) && exterior[i] != T::zero()).collect();
        let rhs = DVector::from_iterator(
            self.unknowns.len(),
            self.unknowns.iter().map(|&i| {
                exterior_nodes.iter().fold(source[i], |acc, &k| acc - a[(i, k)] * exterior[k])
            }),
        );
        let sol = self.lu.solve(&rhs).ok_or(Error::IllPosedDiscretization)?;
        let mut u = exterior.clone();
        for (r, &i) in self.unknowns.iter().enumerate() {
            u[i] = sol[r];
        }
        if !u.is_finite() {
            return Err(Error::IllPosedDiscretization);
        }
        Ok(u)
    }

    /// `L⁻¹ g`: zero exterior (and obstacle) data.
    pub fn solve_zero_exterior(&self, source: &FieldVector<T>) -> Result<FieldVector<T>> {
        self.solve(source, &FieldVector::zeros(source.len()))
    }

    /// Solves against a block of right-hand sides given on the free nodes.
    pub fn solve_block(&self, rhs: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.lu.solve(rhs).ok_or(Error::IllPosedDiscretization)
    }
}

/// `((-Δ)^s + q) u = F` in `omega` (minus obstacle), `u = f` outside.
#[derive(Debug, Clone)]
pub struct LinearProblem<'a, T: Scalar> {
    pub operator: &'a NonlocalOperator<T>,
    pub potential: FieldVector<T>,
    pub source: FieldVector<T>,
    pub exterior: FieldVector<T>,
}

impl<'a, T: Scalar> LinearProblem<'a, T> {
    /// Homogeneous equation with exterior data `f`.
    pub fn homogeneous(operator: &'a NonlocalOperator<T>, potential: FieldVector<T>, exterior: FieldVector<T>) -> Self {
        let n = exterior.len();
        Self { operator, potential, source: FieldVector::zeros(n), exterior }
    }
}

pub fn solve_linear<T: Scalar>(p: &LinearProblem<'_, T>) -> Result<FieldVector<T>> {
    InteriorSolver::new(p.operator, &p.potential)?.solve(&p.source, &p.exterior)
}

/// `‖u‖_∞(omega) / (‖f‖_∞ + ‖F‖_∞)`; zero for zero data and a zero solution.
pub fn linf_bound_check<T: Scalar>(p: &LinearProblem<'_, T>, u: &FieldVector<T>) -> Result<T> {
    let omega = p.operator.grid().omega();
    let top = u.max_norm_on(omega.iter());
    let data = p.exterior.max_norm() + p.source.max_norm_on(omega.iter());
    if data == T::zero() {
        if top == T::zero() {
            Ok(T::zero())
        } else {
            Err(Error::Precondition("nonzero solution for zero data".into()))
        }
    } else {
        Ok(top / data)
    }
}

/// Stopping rules for the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    /// Absolute max-norm tolerance on successive corrector updates.
    pub tol: T,
    pub max_iter: usize,
    /// Optional a priori bound on `‖f‖_∞`; `None` relies on divergence detection.
    pub max_data_norm: Option<T>,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-13), max_iter: 200, max_data_norm: None }
    }
}

impl<T: Scalar> SolveOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// `1e-2 · min(1, 1/‖a_2‖_∞)`: a conservative admissible data size.
pub fn default_admissibility<T: Scalar>(coeff: &CoefficientField<T>) -> T {
    let a2 = coeff.max_abs_order(2);
    let scale = if a2 > T::one() { T::one() / a2 } else { T::one() };
    T::lit(1e-2) * scale
}

#[derive(Debug, Clone)]
pub struct SemilinearSolveReport<T> {
    pub solution: FieldVector<T>,
    /// Solution of the linearized problem with the same exterior data.
    pub u0: FieldVector<T>,
    pub iterations: usize,
    /// `‖v_{m+1} - v_m‖_∞` per iteration.
    pub contraction_history: Vec<T>,
    pub converged: bool,
    /// Max-norm of `(A u)_i + a(x_i, u_i)` over the free nodes.
    pub residual: T,
}

impl<T: Scalar> SemilinearSolveReport<T> {
    /// Geometric-mean ratio of successive updates, ignoring updates already at
    /// the roundoff floor. `None` with fewer than two usable updates.
    pub fn fitted_ratio(&self) -> Option<T> {
        let floor = T::lit(1e3) * <T as Scalar>::epsilon() * self.solution.max_norm();
        let usable: Vec<T> = self.contraction_history.iter().copied().take_while(|&d| d > floor).collect();
        if usable.len() < 2 {
            return None;
        }
        let steps = usable.len() - 1;
        let log_ratio = (usable[steps] / usable[0]).ln() / T::from_usize_lossy(steps);
        Some(log_ratio.exp())
    }
}

/// Nonlinear residual `(A u)_i + a(x_i, u_i)` on the free nodes.
pub fn nonlinear_residual<T: Scalar>(op: &NonlocalOperator<T>, coeff: &CoefficientField<T>, u: &FieldVector<T>) -> FieldVector<T> {
    let au = op.apply(u);
    let mut r = FieldVector::zeros(u.len());
    for i in op.grid().unknowns() {
        r[i] = au[i] + coeff.value_at(i, u[i]);
    }
    r
}

/// Semilinear exterior problem on the grid's free nodes (respecting any
/// obstacle the operator's grid carries).
pub fn solve_semilinear<T: Scalar>(
    op: &NonlocalOperator<T>,
    coeff: &CoefficientField<T>,
    exterior: &FieldVector<T>,
    opts: &SolveOptions<T>,
) -> Result<SemilinearSolveReport<T>> {
    if coeff.omega() != op.grid().omega() {
        return Err(Error::Dimension("coefficient field and operator disagree on omega".into()));
    }
    if !exterior.is_finite() {
        return Err(Error::Precondition("exterior data must be finite".into()));
    }
    let data = exterior.max_norm();
    if let Some(limit) = opts.max_data_norm {
        if data > limit {
            return Err(Error::NoContraction(format!("‖f‖_∞ = {data:e} exceeds admissible {limit:e}")));
        }
    }
    let solver = InteriorSolver::new(op, coeff.potential())?;
    let u0 = solver.solve(&FieldVector::zeros(exterior.len()), exterior)?;
    let unknowns = solver.unknowns().to_vec();
    let a1 = coeff.potential();

    let mut v = FieldVector::zeros(exterior.len());
    let mut history = Vec::new();
    let mut converged = false;
    let mut u = u0.clone();
    for _ in 0..opts.max_iter {
        let mut g = FieldVector::zeros(exterior.len());
        for &i in &unknowns {
            let ui = u0[i] + v[i];
            g[i] = a1[i] * ui - coeff.value_at(i, ui);
        }
        let next = solver.solve_zero_exterior(&g)?;
        let delta = next.sub(&v).max_norm();
        history.push(delta);
        v = next;
        u = u0.clone();
        u.axpy(T::one(), &v);
        if !delta.is_finite() || !u.is_finite() {
            return Err(Error::NoContraction("iterates became non-finite".into()));
        }
        // Past a generous multiple of the linear solution the iteration has left
        // the contraction ball.
        if delta > T::lit(1e6) * (u0.max_norm() + T::lit(1e-300)) {
            return Err(Error::NoContraction(format!("update norm {delta:e} diverging")));
        }
        let floor = T::lit(16.0) * <T as Scalar>::epsilon() * u.max_norm();
        if delta <= opts.tol || delta <= floor {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoContraction(format!(
            "no convergence in {} iterations (last update {:e})",
            opts.max_iter,
            history.last().copied().unwrap_or_else(T::zero)
        )));
    }
    let residual = nonlinear_residual(op, coeff, &u).max_norm();
    Ok(SemilinearSolveReport {
        solution: u,
        u0,
        iterations: history.len(),
        contraction_history: history,
        converged,
        residual,
    })
}

/// Semilinear problem with `u = 0` forced on `obstacle` (`None` is the plain
/// problem).
pub fn solve_semilinear_obstacle<T: Scalar>(
    op: &NonlocalOperator<T>,
    coeff: &CoefficientField<T>,
    exterior: &FieldVector<T>,
    obstacle: Option<IndexRange>,
    opts: &SolveOptions<T>,
) -> Result<SemilinearSolveReport<T>> {
    let op = op.with_obstacle(obstacle)?;
    solve_semilinear(&op, coeff, exterior, opts)
}
