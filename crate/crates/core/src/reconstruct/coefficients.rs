//! Gauss–Newton recovery of `a_1` and sequential linear recovery of `a_k`.

use super::linearized::LinearizationModel;
use super::panel::{eps_derivative, stencil_error_estimate, EpsilonPanel};
use super::sensitivity::{adjoint_jacobian, adjoint_rows, direct_jacobian};
use super::ReconstructionReport;
use crate::bell::bell_remainder;
use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::forward::InteriorSolver;
use crate::grid::Grid;
use crate::linalg::{tikhonov, Penalty};
use crate::operator::NonlocalOperator;
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};

/// Regularization and iteration controls shared by the recoveries.
///
/// Data are scaled by their stacked 2-norm, so `lambda` and `alpha` weigh a
/// relative misfit against the penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryOptions<T> {
    /// Weight for the `a_1` fit; `None` walks down a decade ladder until the
    /// misfit reaches the noise level.
    pub lambda: Option<T>,
    /// Weight for each `a_k` fit (`k ≥ 2`); `None` uses the discrepancy principle.
    pub alpha: Option<T>,
    pub penalty: Penalty,
    pub gn_iters: usize,
    /// Relative data noise; stencil-error estimates raise it where larger.
    pub noise_level: T,
    /// Largest condition number accepted for an unregularized solve.
    pub condition_cap: T,
}

impl<T: Scalar> Default for RecoveryOptions<T> {
    fn default() -> Self {
        Self {
            lambda: None,
            alpha: None,
            penalty: Penalty::SecondDifference,
            gn_iters: 30,
            noise_level: T::zero(),
            condition_cap: T::lit(1e12),
        }
    }
}

const NOISE_FLOOR: f64 = 1e-10;

fn ladder<T: Scalar>() -> impl Iterator<Item = T> {
    (2..=20).map(|k| T::lit(10f64.powi(-k)))
}

/// Result of [`recover_q`].
#[derive(Debug, Clone, PartialEq)]
pub struct QRecovery<T> {
    /// `â_1` over the whole grid, zero off the free nodes.
    pub q: FieldVector<T>,
    /// Relative data misfit `‖F(q) − d‖ / ‖d‖` at the returned iterate.
    pub misfit: T,
    pub lambda: T,
    pub iterations: usize,
    /// Misfit per accepted iterate, starting from the initial guess.
    pub history: Vec<T>,
    pub stagnated: bool,
}

fn stack_norm<T: Scalar>(data: &[Vec<T>]) -> T {
    data.iter().flatten().fold(T::zero(), |a, &v| a + v * v).sqrt()
}

fn check_data<T: Scalar>(op: &NonlocalOperator<T>, inputs: &[FieldVector<T>], data: &[Vec<T>]) -> Result<()> {
    let grid = op.grid();
    if inputs.is_empty() || inputs.len() != data.len() {
        return Err(Error::Dimension("need one data vector per input".into()));
    }
    if inputs.iter().any(|f| f.len() != grid.n_nodes()) || data.iter().any(|d| d.len() != grid.w2().len()) {
        return Err(Error::Dimension("inputs must span the grid and data must cover w2".into()));
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("data must be finite".into()));
    }
    Ok(())
}

struct Evaluation<T: Scalar> {
    residual: DVector<T>,
    fields: Vec<FieldVector<T>>,
    solver: InteriorSolver<T>,
}

fn evaluate_q<T: Scalar>(
    op: &NonlocalOperator<T>,
    q: &FieldVector<T>,
    inputs: &[FieldVector<T>],
    data: &[Vec<T>],
    scale: T,
) -> Result<Evaluation<T>> {
    let solver = InteriorSolver::new(op, q)?;
    let w2 = op.grid().w2();
    let mut residual = DVector::zeros(w2.len() * inputs.len());
    let mut fields = Vec::with_capacity(inputs.len());
    for (p, f) in inputs.iter().enumerate() {
        let u = solver.solve(&FieldVector::zeros(f.len()), f)?;
        let flux = op.apply_rows(&u, w2);
        for (j, (&pred, &d)) in flux.iter().zip(&data[p]).enumerate() {
            residual[p * w2.len() + j] = (pred - d) / scale;
        }
        fields.push(u);
    }
    Ok(Evaluation { residual, fields, solver })
}

/// Minimizes `Σ_p ‖F(q; f_p) − d_p‖² + λ ‖P q‖²` over `q ≥ 0` on the free
/// nodes with projected Gauss–Newton steps and backtracking. The Jacobian
/// columns come from the sensitivity solves `L w = −e_i u_i`.
pub fn recover_q_from_data<T: Scalar>(
    op: &NonlocalOperator<T>,
    inputs: &[FieldVector<T>],
    data: &[Vec<T>],
    opts: &RecoveryOptions<T>,
    initial: Option<&FieldVector<T>>,
) -> Result<QRecovery<T>> {
    check_data(op, inputs, data)?;
    let scale = stack_norm(data);
    let n = op.grid().n_nodes();
    let unknowns = op.grid().unknowns();
    let mut q0 = FieldVector::zeros(n);
    if let Some(init) = initial {
        for &i in &unknowns {
            q0[i] = init[i].max(T::zero());
        }
    }
    if scale == T::zero() {
        return Ok(QRecovery { q: q0, misfit: T::zero(), lambda: T::zero(), iterations: 0, history: vec![T::zero()], stagnated: false });
    }
    match opts.lambda {
        Some(lambda) => gauss_newton(op, inputs, data, scale, lambda, opts, q0),
        None => {
            let target = opts.noise_level.max(T::lit(NOISE_FLOOR));
            let mut last: Option<QRecovery<T>> = None;
            for lambda in ladder::<T>() {
                let start = last.as_ref().map_or_else(|| q0.clone(), |r| r.q.clone());
                let rec = gauss_newton(op, inputs, data, scale, lambda, opts, start)?;
                let done = rec.misfit <= target;
                last = Some(rec);
                if done {
                    break;
                }
            }
            Ok(last.expect("ladder is nonempty"))
        }
    }
}

fn gauss_newton<T: Scalar>(
    op: &NonlocalOperator<T>,
    inputs: &[FieldVector<T>],
    data: &[Vec<T>],
    scale: T,
    lambda: T,
    opts: &RecoveryOptions<T>,
    q0: FieldVector<T>,
) -> Result<QRecovery<T>> {
    let unknowns = op.grid().unknowns();
    let m = unknowns.len();
    let w2 = op.grid().w2().len();
    let pen = opts.penalty.matrix::<T>(&unknowns);
    let root = lambda.sqrt();
    let objective = |ev: &Evaluation<T>, q: &FieldVector<T>| {
        let qv = DVector::from_iterator(m, unknowns.iter().map(|&i| q[i]));
        ev.residual.norm_squared() + lambda * (&pen * qv).norm_squared()
    };
    let mut q = q0;
    let mut ev = evaluate_q(op, &q, inputs, data, scale)?;
    let mut obj = objective(&ev, &q);
    let mut history = vec![ev.residual.norm()];
    // A trace of damping relative to the largest Jacobian column keeps the
    // step defined on columns frozen at the bound.
    let damping = T::lit(1e-14);
    let mut stalls = 0;
    let mut stagnated = false;
    let mut iterations = 0;
    while iterations < opts.gn_iters {
        iterations += 1;
        let rows = w2 * inputs.len();
        let mut stacked = DMatrix::zeros(rows + pen.nrows(), m);
        for (p, u) in ev.fields.iter().enumerate() {
            let jp = direct_jacobian(&ev.solver, u)? / scale;
            stacked.view_mut((p * w2, 0), (w2, m)).copy_from(&jp);
        }
        let jscale = stacked.rows(0, rows).column_iter().fold(T::zero(), |a, c| a.max(c.norm()));
        stacked.view_mut((rows, 0), (pen.nrows(), m)).copy_from(&(&pen * root));
        let qv = DVector::from_iterator(m, unknowns.iter().map(|&i| q[i]));
        let mut rhs = DVector::zeros(rows + pen.nrows());
        rhs.rows_mut(0, rows).copy_from(&(-&ev.residual));
        rhs.rows_mut(rows, pen.nrows()).copy_from(&(-(&pen * qv) * root));
        // Nodes held at the bound by a gradient pointing outwards stay fixed.
        let grad = -stacked.transpose() * &rhs;
        for (c, &i) in unknowns.iter().enumerate() {
            if q[i] <= T::zero() && grad[c] > T::zero() {
                stacked.column_mut(c).fill(T::zero());
            }
        }
        let mu = damping * jscale * jscale;
        let mut step = tikhonov(&stacked, &rhs, mu, &DMatrix::identity(m, m), None, opts.condition_cap)?;
        // Nodes the step would push below zero are pinned to the bound and the
        // rest of the step is re-solved around them, until no node crosses.
        let mut pinned: Vec<usize> = Vec::new();
        loop {
            let crossing: Vec<usize> =
                (0..m).filter(|&c| !pinned.contains(&c) && q[unknowns[c]] + step[c] < T::zero()).collect();
            if crossing.is_empty() {
                break;
            }
            for &c in &crossing {
                rhs -= stacked.column(c) * (-q[unknowns[c]]);
                stacked.column_mut(c).fill(T::zero());
            }
            pinned.extend(crossing);
            step = tikhonov(&stacked, &rhs, mu, &DMatrix::identity(m, m), None, opts.condition_cap)?;
            for &c in &pinned {
                step[c] = -q[unknowns[c]];
            }
        }
        let mut accepted = None;
        let mut t = T::one();
        for _ in 0..12 {
            let mut trial = q.clone();
            for (c, &i) in unknowns.iter().enumerate() {
                trial[i] = (q[i] + t * step[c]).max(T::zero());
            }
            let tev = evaluate_q(op, &trial, inputs, data, scale)?;
            let tobj = objective(&tev, &trial);
            if tobj < obj {
                accepted = Some((trial, tev, tobj));
                break;
            }
            t *= T::lit(0.5);
        }
        let Some((trial, tev, tobj)) = accepted else {
            stalls += 1;
            if stalls >= 3 {
                stagnated = true;
                break;
            }
            continue;
        };
        stalls = 0;
        let relative_drop = (obj - tobj) / obj;
        q = trial;
        ev = tev;
        obj = tobj;
        history.push(ev.residual.norm());
        if relative_drop < T::lit(1e-9) {
            break;
        }
    }
    let misfit = ev.residual.norm();
    Ok(QRecovery { q, misfit, lambda, iterations, history, stagnated })
}

/// [`recover_q_from_data`] on the first ε-derivatives of a panel.
pub fn recover_q<T: Scalar>(op: &NonlocalOperator<T>, panel: &EpsilonPanel<T>, opts: &RecoveryOptions<T>) -> Result<QRecovery<T>> {
    let data = (0..panel.n_inputs()).map(|p| eps_derivative(panel, p, 1)).collect::<Result<Vec<_>>>()?;
    let mut opts = *opts;
    opts.noise_level = opts.noise_level.max(relative_stencil_noise(panel, 1)?);
    recover_q_from_data(op, panel.inputs(), &data, &opts, None)
}

/// Result of [`recover_ak`].
#[derive(Debug, Clone, PartialEq)]
pub struct AkRecovery<T> {
    /// `â_k` over the whole grid, zero off the free nodes.
    pub values: FieldVector<T>,
    /// Relative misfit of the affine model at `â_k`.
    pub misfit: T,
    pub alpha: T,
}

/// Linear least-squares system `K a_k ≈ b` for order `k`: rows are `v⁰_j`
/// weighted by `(u⁽¹⁾)ᵏ`, and `b` is the data minus the remainder's flux.
pub fn ak_system<T: Scalar>(
    op: &NonlocalOperator<T>,
    lower: &CoefficientField<T>,
    order: usize,
    inputs: &[FieldVector<T>],
    data: &[Vec<T>],
) -> Result<(DMatrix<T>, DVector<T>)> {
    if order < 2 {
        return Err(Error::Precondition("the affine recovery starts at order 2".into()));
    }
    check_data(op, inputs, data)?;
    let mut coeff = lower.with_degree(order);
    coeff.set_order(order, FieldVector::zeros(op.grid().n_nodes()));
    let model = LinearizationModel::new(op, &coeff)?;
    let rows = adjoint_rows(model.solver())?;
    let unknowns = model.solver().unknowns().to_vec();
    let (w2, m) = (rows.nrows(), unknowns.len());
    let mut k = DMatrix::zeros(w2 * inputs.len(), m);
    let mut b = DVector::zeros(w2 * inputs.len());
    for (p, f) in inputs.iter().enumerate() {
        let fields = model.fields(f, order - 1)?;
        let remainder = bell_remainder(order, &coeff, &fields);
        let rvec = DVector::from_iterator(m, unknowns.iter().map(|&i| remainder[i]));
        let pow = FieldVector(fields[0].iter().map(|&v| v.powi(order as i32)).collect());
        k.view_mut((p * w2, 0), (w2, m)).copy_from(&adjoint_jacobian(&rows, &unknowns, &pow));
        let shift = &rows * rvec;
        for j in 0..w2 {
            b[p * w2 + j] = data[p][j] - shift[j];
        }
    }
    Ok((k, b))
}

/// Tikhonov solve of [`ak_system`].
pub fn recover_ak_from_data<T: Scalar>(
    op: &NonlocalOperator<T>,
    lower: &CoefficientField<T>,
    order: usize,
    inputs: &[FieldVector<T>],
    data: &[Vec<T>],
    opts: &RecoveryOptions<T>,
) -> Result<AkRecovery<T>> {
    let (k, b) = ak_system(op, lower, order, inputs, data)?;
    let unknowns = op.grid().unknowns();
    let n = op.grid().n_nodes();
    let scale = stack_norm(data).max(b.norm());
    if scale == T::zero() {
        return Ok(AkRecovery { values: FieldVector::zeros(n), misfit: T::zero(), alpha: T::zero() });
    }
    let (ks, bs) = (&k / scale, &b / scale);
    let pen = opts.penalty.matrix::<T>(&unknowns);
    let solve = |alpha: T| -> Result<(DVector<T>, T)> {
        let x = tikhonov(&ks, &bs, alpha, &pen, None, opts.condition_cap)?;
        let r = (&ks * &x - &bs).norm();
        Ok((x, r))
    };
    let (x, misfit, alpha) = match opts.alpha {
        Some(a) => {
            let (x, r) = solve(a)?;
            (x, r, a)
        }
        None => {
            let target = opts.noise_level.max(T::lit(NOISE_FLOOR));
            let mut chosen = None;
            for a in ladder::<T>() {
                let (x, r) = solve(a)?;
                let done = r <= target;
                chosen = Some((x, r, a));
                if done {
                    break;
                }
            }
            chosen.expect("ladder is nonempty")
        }
    };
    let mut values = FieldVector::zeros(n);
    for (c, &i) in unknowns.iter().enumerate() {
        values[i] = x[c];
    }
    Ok(AkRecovery { values, misfit, alpha })
}

/// Relative size of the Richardson stencil-error estimate over all inputs.
pub fn relative_stencil_noise<T: Scalar>(panel: &EpsilonPanel<T>, order: usize) -> Result<T> {
    let mut err = T::zero();
    let mut size = T::zero();
    for p in 0..panel.n_inputs() {
        let d = eps_derivative(panel, p, order)?;
        let e = stencil_error_estimate(panel, p, order)?;
        err += e.iter().fold(T::zero(), |a, &v| a + v * v);
        size += d.iter().fold(T::zero(), |a, &v| a + v * v);
    }
    Ok(if size > T::zero() { (err / size).sqrt() } else { T::zero() })
}

/// `â_k` from the `k`-th ε-derivatives, given `â_1..â_{k−1}` in `lower`.
pub fn recover_ak<T: Scalar>(
    op: &NonlocalOperator<T>,
    lower: &CoefficientField<T>,
    order: usize,
    panel: &EpsilonPanel<T>,
    opts: &RecoveryOptions<T>,
) -> Result<AkRecovery<T>> {
    let data = (0..panel.n_inputs()).map(|p| eps_derivative(panel, p, order)).collect::<Result<Vec<_>>>()?;
    let mut opts = *opts;
    opts.noise_level = opts.noise_level.max(relative_stencil_noise(panel, order)?);
    recover_ak_from_data(op, lower, order, panel.inputs(), &data, &opts)
}

/// Full ladder: `â_1` by Gauss–Newton, then `â_2..â_K` in sequence. When
/// `truth` is given, relative L² errors over the free nodes are reported.
pub fn recover_coefficients<T: Scalar>(
    op: &NonlocalOperator<T>,
    panel: &EpsilonPanel<T>,
    degree: usize,
    opts: &RecoveryOptions<T>,
    truth: Option<&CoefficientField<T>>,
) -> Result<ReconstructionReport<T>> {
    if degree == 0 {
        return Err(Error::Precondition("degree must be at least 1".into()));
    }
    let qrec = recover_q(op, panel, opts)?;
    let grid = op.grid();
    let omega = grid.omega();
    let mut coeff = CoefficientField::new(grid, vec![qrec.q.restrict(omega)])?;
    let mut misfits = vec![qrec.misfit];
    let mut regularization = vec![qrec.lambda];
    for k in 2..=degree {
        // Misfit left at lower orders enters the order-k data as model error.
        let mut opts = *opts;
        opts.noise_level = misfits.iter().fold(opts.noise_level, |a, &m| a.max(m));
        let rec = recover_ak(op, &coeff, k, panel, &opts)?;
        coeff.set_order(k, rec.values);
        misfits.push(rec.misfit);
        regularization.push(rec.alpha);
    }
    let mut report = ReconstructionReport::new(&coeff, misfits, regularization, qrec.stagnated, qrec.iterations);
    if let Some(t) = truth {
        report.attach_errors(grid, &coeff, t);
    }
    Ok(report)
}

/// Relative L² errors of each order over the free nodes of `grid`.
pub fn coefficient_errors<T: Scalar>(
    grid: &Grid<T>,
    recovered: &CoefficientField<T>,
    truth: &CoefficientField<T>,
) -> Vec<T> {
    let free = grid.unknowns();
    (1..=recovered.degree())
        .map(|k| {
            let (a, b) = (recovered.order(k), truth.order(k));
            let num = free.iter().fold(T::zero(), |s, &i| s + (a[i] - b[i]).powi(2));
            let den = free.iter().fold(T::zero(), |s, &i| s + b[i].powi(2));
            if den > T::zero() {
                (num / den).sqrt()
            } else {
                num.sqrt()
            }
        })
        .collect()
}
