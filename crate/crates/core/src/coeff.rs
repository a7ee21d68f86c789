//! Truncated Taylor representation `a(x, z) = sum_{k=1..K} a_k(x) z^k / k!`.

use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::grid::{Grid, IndexRange};
use crate::scalar::Scalar;

/// Node-sampled Taylor coefficients `a_1..a_K` of the nonlinearity.
///
/// There is no `k = 0` term, so `a(x, 0) = 0` holds structurally. Each stored
/// array spans the whole grid and is zero off `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField<T> {
    omega: IndexRange,
    coeffs: Vec<FieldVector<T>>,
}

impl<T: Scalar> CoefficientField<T> {
    /// `per_order[k-1]` holds `a_k` on the nodes of `omega`, in index order.
    pub fn new(grid: &Grid<T>, per_order: Vec<Vec<T>>) -> Result<Self> {
        let omega = grid.omega();
        if per_order.is_empty() {
            return Err(Error::InvalidCoefficient("degree K must be at least 1".into()));
        }
        let mut problems = Vec::new();
        let mut coeffs = Vec::with_capacity(per_order.len());
        for (k, vals) in per_order.into_iter().enumerate() {
            if vals.len() != omega.len() {
                problems.push(format!("a_{} has {} values, omega has {} nodes", k + 1, vals.len(), omega.len()));
                continue;
            }
            if vals.iter().any(|v| !v.is_finite()) {
                problems.push(format!("a_{} has non-finite values", k + 1));
            }
            let mut full = FieldVector::zeros(grid.n_nodes());
            full[omega.start..omega.end].copy_from_slice(&vals);
            coeffs.push(full);
        }
        if let Some(a1) = coeffs.first() {
            if let Some(i) = omega.iter().find(|&i| a1[i] < T::zero()) {
                problems.push(format!(
                    "a_1 = d_z a(x,0) must be nonnegative; a_1 = {} at node {i}",
                    a1[i]
                ));
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidCoefficient(problems.join("; ")));
        }
        Ok(Self { omega, coeffs })
    }

    /// Builds `a_k(x) = profile_k(x)` on `omega` for every order.
    pub fn from_profiles(grid: &Grid<T>, profiles: &[&dyn Fn(T) -> T]) -> Result<Self> {
        let omega = grid.omega();
        let per_order = profiles
            .iter()
            .map(|p| omega.iter().map(|i| p(grid.x(i))).collect())
            .collect();
        Self::new(grid, per_order)
    }

    /// The linear coefficient `a(x, z) = q(x) z`.
    pub fn linear(grid: &Grid<T>, q: &[T]) -> Result<Self> {
        let omega = grid.omega();
        Self::new(grid, vec![q[omega.start..omega.end].to_vec()])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn omega(&self) -> IndexRange {
        self.omega
    }

    /// `a_k` on every node (zero off `omega`); zero field when `k > K`.
    pub fn order(&self, k: usize) -> FieldVector<T> {
        assert!(k >= 1, "Taylor orders start at 1");
        match self.coeffs.get(k - 1) {
            Some(c) => c.clone(),
            None => FieldVector::zeros(self.coeffs[0].len()),
        }
    }

    pub fn order_ref(&self, k: usize) -> Option<&FieldVector<T>> {
        k.checked_sub(1).and_then(|i| self.coeffs.get(i))
    }

    /// `a_1 = d_z a(x, 0)`, the linear potential.
    pub fn potential(&self) -> &FieldVector<T> {
        &self.coeffs[0]
    }

    /// Copy truncated or zero-padded to degree `k`.
    pub fn with_degree(&self, k: usize) -> Self {
        let n = self.coeffs[0].len();
        let coeffs = (1..=k.max(1))
            .map(|j| self.coeffs.get(j - 1).cloned().unwrap_or_else(|| FieldVector::zeros(n)))
            .collect();
        Self { omega: self.omega, coeffs }
    }

    /// Replaces (or appends) order `k`; orders between are zero-filled.
    pub fn set_order(&mut self, k: usize, values: FieldVector<T>) {
        let n = self.coeffs[0].len();
        while self.coeffs.len() < k {
            self.coeffs.push(FieldVector::zeros(n));
        }
        self.coeffs[k - 1] = values;
    }

    /// `a(x_i, z)` at a single node.
    pub fn value_at(&self, i: usize, z: T) -> T {
        self.deriv_at(i, z, 0)
    }

    /// `d_z^m a(x_i, z) = sum_{k>=m} a_k(x_i) z^{k-m} / (k-m)!` at a single node.
    pub fn deriv_at(&self, i: usize, z: T, m: usize) -> T {
        let top = self.coeffs.len();
        if m > top || !self.omega.contains(i) {
            return T::zero();
        }
        // Horner on the shifted series; for m = 0 the constant term is zero.
        let lowest = m.max(1);
        let mut acc = self.coeffs[top - 1][i];
        for k in (lowest..top).rev() {
            acc = self.coeffs[k - 1][i] + acc * z / T::from_usize_lossy(k + 1 - m);
        }
        if m == 0 {
            acc * z
        } else {
            acc
        }
    }

    /// Pointwise `a(x, z(x))`, supported on `omega`.
    pub fn eval(&self, z: &FieldVector<T>) -> FieldVector<T> {
        self.eval_deriv(z, 0)
    }

    /// Pointwise `d_z^m a(x, z(x))`, supported on `omega`.
    pub fn eval_deriv(&self, z: &FieldVector<T>, m: usize) -> FieldVector<T> {
        let mut out = FieldVector::zeros(z.len());
        for i in self.omega.iter() {
            out[i] = self.deriv_at(i, z[i], m);
        }
        out
    }

    /// Largest `|a_k|` over `omega`.
    pub fn max_abs_order(&self, k: usize) -> T {
        self.order_ref(k).map_or(T::zero(), |c| c.max_norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid<f64> {
        Grid::from_physical(4.0, 33, (-1.0, 1.0), (1.5, 2.5), (-2.5, -1.5), None).unwrap()
    }

    fn constant(g: &Grid<f64>, c: f64) -> Vec<f64> {
        vec![c; g.omega().len()]
    }

    #[test]
    fn zero_argument_gives_zero() {
        let g = grid();
        let c = CoefficientField::new(&g, vec![constant(&g, 1.0), constant(&g, -3.0), constant(&g, 5.0)]).unwrap();
        let z = FieldVector::zeros(g.n_nodes());
        assert!(c.eval(&z).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_case_is_potential_times_argument() {
        let g = grid();
        let q: Vec<f64> = g.omega().iter().map(|i| 1.0 + g.x(i).powi(2)).collect();
        let c = CoefficientField::new(&g, vec![q.clone()]).unwrap();
        let z = FieldVector::from_fn(&g, |x| x.sin());
        let out = c.eval(&z);
        for (j, i) in g.omega().iter().enumerate() {
            assert!((out[i] - q[j] * z[i]).abs() < 1e-15);
        }
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn quadratic_taylor_convention() {
        let g = grid();
        let c = CoefficientField::new(&g, vec![constant(&g, 0.0), constant(&g, 2.0)]).unwrap();
        let z = FieldVector::from(vec![3.0; g.n_nodes()]);
        let out = c.eval(&z);
        for i in g.omega().iter() {
            assert_eq!(out[i], 9.0);
        }
        let d1 = c.eval_deriv(&z, 1);
        for i in g.omega().iter() {
            assert_eq!(d1[i], 6.0);
        }
    }

    #[test]
    fn derivative_at_zero_is_taylor_coefficient() {
        let g = grid();
        let c = CoefficientField::new(&g, vec![constant(&g, 0.5), constant(&g, 2.0), constant(&g, -7.0)]).unwrap();
        let zero = FieldVector::zeros(g.n_nodes());
        let z = FieldVector::from_fn(&g, |x| 0.3 * x);
        let i = g.omega().start + 3;
        assert_eq!(c.eval_deriv(&zero, 1)[i], 0.5);
        assert_eq!(c.eval_deriv(&zero, 2)[i], 2.0);
        assert_eq!(c.eval_deriv(&z, 3)[i], -7.0);
        assert!(c.eval_deriv(&z, 4).iter().all(|&v| v == 0.0));
        // a_1 + a_2 z + a_3 z^2/2
        let zi = z[i];
        assert!((c.eval_deriv(&z, 1)[i] - (0.5 + 2.0 * zi - 3.5 * zi * zi)).abs() < 1e-15);
    }

    #[test]
    fn negative_potential_rejected() {
        let g = grid();
        let err = CoefficientField::new(&g, vec![constant(&g, -1.0)]).unwrap_err();
        assert!(err.to_string().contains("nonnegative"));
        assert!(CoefficientField::<f64>::new(&g, vec![]).is_err());
    }
}
