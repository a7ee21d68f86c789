use crate::grid::{Grid, IndexRange};
use crate::scalar::{max_abs, Scalar};
use serde::{Deserialize, Serialize};
use std::ops::{Deref, DerefMut};

/// Real values of a function on every grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldVector<T>(pub Vec<T>);

impl<T: Scalar> FieldVector<T> {
    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn from_fn(grid: &Grid<T>, f: impl Fn(T) -> T) -> Self {
        Self(grid.coordinates().into_iter().map(f).collect())
    }

    /// `f` evaluated on the nodes of `range`, zero elsewhere.
    pub fn supported_on(grid: &Grid<T>, range: IndexRange, f: impl Fn(T) -> T) -> Self {
        let mut v = Self::zeros(grid.n_nodes());
        for i in range.iter() {
            v.0[i] = f(grid.x(i));
        }
        v
    }

    pub fn max_norm(&self) -> T {
        max_abs(&self.0)
    }

    /// Max-norm over a subset of indices.
    pub fn max_norm_on(&self, idx: impl IntoIterator<Item = usize>) -> T {
        idx.into_iter().fold(T::zero(), |m, i| m.max(self.0[i].abs()))
    }

    /// Values restricted to `range`, in index order.
    pub fn restrict(&self, range: IndexRange) -> Vec<T> {
        self.0[range.start..range.end].to_vec()
    }

    pub fn scaled(&self, a: T) -> Self {
        Self(self.0.iter().map(|&v| v * a).collect())
    }

    pub fn axpy(&mut self, a: T, x: &FieldVector<T>) {
        for (y, &xv) in self.0.iter_mut().zip(&x.0) {
            *y += a * xv;
        }
    }

    pub fn sub(&self, other: &FieldVector<T>) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| a - b).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// True when some entry is nonzero.
    pub fn is_nontrivial(&self) -> bool {
        self.0.iter().any(|v| *v != T::zero())
    }

    /// `h * sum(v_i^2)` over `range`, square-rooted: the discrete L² norm.
    pub fn l2_norm_on(&self, range: IndexRange, h: T) -> T {
        (range.iter().fold(T::zero(), |acc, i| acc + self.0[i] * self.0[i]) * h).sqrt()
    }
}

impl<T> Deref for FieldVector<T> {
    type Target = Vec<T>;
    fn deref(&self) -> &Vec<T> {
        &self.0
    }
}

impl<T> DerefMut for FieldVector<T> {
    fn deref_mut(&mut self) -> &mut Vec<T> {
        &mut self.0
    }
}

impl<T> From<Vec<T>> for FieldVector<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

/// Relative discrete L² error of `approx` against `truth` on `range`.
pub fn relative_l2_error<T: Scalar>(approx: &[T], truth: &[T], range: IndexRange) -> T {
    let (num, den) = range.iter().fold((T::zero(), T::zero()), |(n, d), i| {
        let e = approx[i] - truth[i];
        (n + e * e, d + truth[i] * truth[i])
    });
    if den == T::zero() {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}
