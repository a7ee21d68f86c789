//! Tikhonov-regularized dense least squares.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Regularization operator for penalized least squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    /// `‖x‖²`
    #[default]
    Identity,
    /// `‖D₂ x‖²`, second differences within each contiguous run of nodes.
    SecondDifference,
}

impl Penalty {
    /// Penalty matrix over the given (sorted) node indices, scaled by `scale`
    /// per row for second differences.
    pub fn matrix<T: Scalar>(self, nodes: &[usize]) -> DMatrix<T> {
        let n = nodes.len();
        match self {
            Penalty::Identity => DMatrix::identity(n, n),
            Penalty::SecondDifference => {
                let mut rows: Vec<(usize, usize, usize)> = Vec::new();
                for c in 1..n.saturating_sub(1) {
                    if nodes[c] == nodes[c - 1] + 1 && nodes[c + 1] == nodes[c] + 1 {
                        rows.push((c - 1, c, c + 1));
                    }
                }
                let mut m = DMatrix::zeros(rows.len(), n);
                for (r, &(a, b, c)) in rows.iter().enumerate() {
                    m[(r, a)] = T::one();
                    m[(r, b)] = T::lit(-2.0);
                    m[(r, c)] = T::one();
                }
                m
            }
        }
    }
}

/// Ratio of extreme singular values; infinite for a rank-deficient matrix.
pub fn condition_number<T: Scalar>(k: &DMatrix<T>) -> T {
    let sv = k.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(T::zero(), |m, &v| m.max(v));
    let min = sv.iter().fold(max, |m, &v| m.min(v));
    if min == T::zero() {
        T::lit(f64::INFINITY)
    } else {
        max / min
    }
}

/// Minimizes `‖K x − b‖² + α ‖P (x − x₀)‖²` through an SVD of the stacked
/// system. With `α = 0` the plain least-squares problem is solved, refusing
/// when `cond(K)` exceeds `condition_cap`.
pub fn tikhonov<T: Scalar>(
    k: &DMatrix<T>,
    b: &DVector<T>,
    alpha: T,
    penalty: &DMatrix<T>,
    prior: Option<&DVector<T>>,
    condition_cap: T,
) -> Result<DVector<T>> {
    let (m, n) = k.shape();
    if b.len() != m || penalty.ncols() != n {
        return Err(Error::Dimension("least-squares blocks do not conform".into()));
    }
    if alpha < T::zero() {
        return Err(Error::Precondition("regularization weight must be nonnegative".into()));
    }
    if alpha == T::zero() {
        let cond = condition_number(k);
        if !(cond <= condition_cap) {
            return Err(Error::RankDeficient { condition: cond.to_f64_lossy() });
        }
        let svd = k.clone().svd(true, true);
        return svd.solve(b, T::zero()).map_err(|e| Error::Precondition(e.to_string()));
    }
    let p = penalty.nrows();
    let root = alpha.sqrt();
    let mut stacked = DMatrix::zeros(m + p, n);
    stacked.view_mut((0, 0), (m, n)).copy_from(k);
    stacked.view_mut((m, 0), (p, n)).copy_from(&(penalty * root));
    let mut rhs = DVector::zeros(m + p);
    rhs.rows_mut(0, m).copy_from(b);
    if let Some(x0) = prior {
        rhs.rows_mut(m, p).copy_from(&(penalty * x0 * root));
    }
    let svd = stacked.svd(true, true);
    let tiny = svd.singular_values.max() * T::from_usize_lossy(m + p) * <T as Scalar>::epsilon();
    svd.solve(&rhs, tiny).map_err(|e| Error::Precondition(e.to_string()))
}

/// Minimizes `‖K x − b‖` subject to `x ≥ 0` by the Lawson–Hanson active-set
/// method. Passive-set subproblems are solved through an SVD cut at `rcond`
/// relative to the largest singular value.
pub fn nonnegative_least_squares<T: Scalar>(k: &DMatrix<T>, b: &DVector<T>, rcond: T) -> Result<DVector<T>> {
    let (m, n) = k.shape();
    if b.len() != m {
        return Err(Error::Dimension("least-squares blocks do not conform".into()));
    }
    let scale = k.column_iter().fold(T::zero(), |a, c| a.max(c.norm()));
    let tol = T::lit(10.0) * <T as Scalar>::epsilon() * T::from_usize_lossy(m.max(n)) * scale * b.norm();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let solve_passive = |passive: &[bool]| -> Result<DVector<T>> {
        let cols: Vec<usize> = (0..n).filter(|&c| passive[c]).collect();
        let sub = DMatrix::from_fn(m, cols.len(), |r, c| k[(r, cols[c])]);
        let svd = sub.svd(true, true);
        let cut = svd.singular_values.max() * rcond;
        let z = svd.solve(b, cut).map_err(|e| Error::Precondition(e.to_string()))?;
        let mut full = DVector::zeros(n);
        for (i, &c) in cols.iter().enumerate() {
            full[c] = z[i];
        }
        Ok(full)
    };
    for _ in 0..3 * n + 10 {
        let w = k.transpose() * (b - k * &x);
        let Some(j) = (0..n).filter(|&c| !passive[c] && w[c] > tol).max_by(|&a, &c| w[a].partial_cmp(&w[c]).expect("finite gradient")) else {
            break;
        };
        passive[j] = true;
        loop {
            let z = solve_passive(&passive)?;
            if (0..n).all(|c| !passive[c] || z[c] > T::zero()) {
                x = z;
                break;
            }
            let mut step = T::one();
            for c in (0..n).filter(|&c| passive[c] && z[c] <= T::zero()) {
                let denom = x[c] - z[c];
                if denom > T::zero() {
                    step = step.min(x[c] / denom);
                }
            }
            for c in 0..n {
                let xc = x[c];
                x[c] = xc + step * (z[c] - xc);
                if passive[c] && x[c] <= T::zero() {
                    x[c] = T::zero();
                    passive[c] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    Ok(x)
}
