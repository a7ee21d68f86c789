//! Dense discretization of the 1D fractional Laplacian.
//!
//! For a node `x_i` the operator is written in symmetric-difference form
//!
//! ```text
//! (-Δ)^s u(x_i) = c_{1,s} ∫_0^∞ (2u(x_i) - u(x_i + y) - u(x_i - y)) y^{-1-2s} dy
//! ```
//!
//! Nodal values are extended by zero beyond the box. On `[0, R_i]`, with
//! `R_i = J_i h` the distance past which both shifted arguments vanish, the
//! ratio `w(y) / y^2` is interpolated piecewise linearly on the nodes `y = jh`
//! (its value at `y = 0` taken from the centred second difference) and
//! integrated exactly against `y^{1-2s}`. The remaining half line carries the
//! constant `2u(x_i)` and is integrated in closed form:
//! `u(x_i) c_{1,s} R_i^{-2s} / s`.
//!
//! The resulting matrix is symmetric Toeplitz off the diagonal with strictly
//! negative off-diagonal entries, since every interpolation weight is positive.

use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::grid::{Grid, IndexRange};
use crate::scalar::Scalar;
use nalgebra::DMatrix;
use std::sync::Arc;

/// Fractional order `s`, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOrder<T>(T);

impl<T: Scalar> FractionalOrder<T> {
    pub fn new(s: T) -> Result<Self> {
        if s > T::zero() && s < T::one() {
            Ok(Self(s))
        } else {
            Err(Error::InvalidOrder(s.to_f64_lossy()))
        }
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// `c_{n,s} = Γ(n/2 + s) 4^s / (|Γ(-s)| π^{n/2})`.
///
/// Uses `|Γ(-s)| = Γ(1 - s) / s`, valid on `(0, 1)`.
pub fn cns_constant(n: usize, s: f64) -> Result<f64> {
    use statrs::function::gamma::ln_gamma;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidOrder(s));
    }
    if n == 0 {
        return Err(Error::Precondition("dimension must be at least 1".into()));
    }
    let nf = n as f64;
    let ln = ln_gamma(nf / 2.0 + s) + s * 4f64.ln() + s.ln() - ln_gamma(1.0 - s) - nf / 2.0 * std::f64::consts::PI.ln();
    Ok(ln.exp())
}

/// Assembled operator matrix together with the data it was built from.
#[derive(Debug, Clone)]
pub struct NonlocalOperator<T> {
    order: FractionalOrder<T>,
    grid: Grid<T>,
    cns: T,
    matrix: Arc<DMatrix<T>>,
    tail: Arc<Vec<T>>,
}

impl<T: Scalar> NonlocalOperator<T> {
    /// Assembles the operator on `grid` with the exact constant `c_{1,s}`.
    pub fn assemble(grid: &Grid<T>, order: FractionalOrder<T>) -> Result<Self> {
        let cns = T::lit(cns_constant(1, order.value().to_f64_lossy())?);
        Self::assemble_with_constant(grid, order, cns)
    }

    /// Assembly with an explicit normalization constant in place of `c_{1,s}`.
    pub fn assemble_with_constant(grid: &Grid<T>, order: FractionalOrder<T>, cns: T) -> Result<Self> {
        let (weights, tail) = unit_weights(grid, order.value());
        let n = grid.n_nodes();
        let mut matrix = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = tail[i];
            let span = reach(i, n);
            for j in 1..span {
                diag += T::lit(2.0) * weights.full[j];
            }
            diag += T::lit(2.0) * weights.half(span);
            matrix[(i, i)] = cns * diag;
            for k in 0..i {
                let v = -cns * weights.full[i - k];
                matrix[(i, k)] = v;
                matrix[(k, i)] = v;
            }
        }
        let tail = tail.into_iter().map(|t| cns * t).collect();
        Ok(Self { order, grid: grid.clone(), cns, matrix: Arc::new(matrix), tail: Arc::new(tail) })
    }

    pub fn order(&self) -> FractionalOrder<T> {
        self.order
    }

    pub fn s(&self) -> T {
        self.order.value()
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn cns(&self) -> T {
        self.cns
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    /// Analytic far-field contribution `c R_i^{-2s} / s` per node.
    pub fn tail(&self) -> &[T] {
        &self.tail
    }

    pub fn entry(&self, i: usize, k: usize) -> T {
        self.matrix[(i, k)]
    }

    /// `A u` on every node.
    pub fn apply(&self, u: &FieldVector<T>) -> FieldVector<T> {
        let n = self.grid.n_nodes();
        assert_eq!(u.len(), n, "field length must match the grid");
        let mut out = vec![T::zero(); n];
        for k in 0..n {
            let uk = u[k];
            if uk == T::zero() {
                continue;
            }
            let col = self.matrix.column(k);
            for (o, &a) in out.iter_mut().zip(col.iter()) {
                *o += a * uk;
            }
        }
        FieldVector(out)
    }

    /// `(A u)_i` for the rows in `rows`.
    pub fn apply_rows(&self, u: &FieldVector<T>, rows: IndexRange) -> Vec<T> {
        rows.iter()
            .map(|i| self.matrix.row(i).iter().zip(u.iter()).fold(T::zero(), |acc, (&a, &v)| acc + a * v))
            .collect()
    }

    /// Shares the matrix with a grid that has the same nodes but a different
    /// obstacle or different windows.
    pub fn with_grid(&self, grid: Grid<T>) -> Result<Self> {
        if !self.grid.same_nodes(&grid) {
            return Err(Error::Dimension("replacement grid has different nodes".into()));
        }
        Ok(Self { grid, ..self.clone() })
    }

    pub fn with_obstacle(&self, obstacle: Option<IndexRange>) -> Result<Self> {
        self.with_grid(self.grid.with_obstacle(obstacle)?)
    }
}

/// Number of hat nodes `J_i` for node `i`: both `i ± J_i` fall off the grid.
fn reach(i: usize, n: usize) -> usize {
    i.max(n - 1 - i) + 1
}

/// Interpolation weights for unit constant, including the `h^{-2s}` scaling.
struct UnitWeights<T> {
    /// `full[j]`, `j >= 1`: weight of `w_j` when its hat lies fully inside `[0, R_i]`.
    full: Vec<T>,
    /// `half[j]`: weight of `w_j = 2u_i` for the final half hat at `j = J_i`.
    half: Vec<T>,
}

impl<T: Scalar> UnitWeights<T> {
    fn half(&self, j: usize) -> T {
        self.half[j]
    }
}

/// Computes the `c`-free weights and tails. The antiderivative
/// `F(t) = t^{p+2} / ((p+1)(p+2))`, `p = 1 - 2s`, turns each hat moment into a
/// second difference that is evaluated with `expm1`/`ln_1p` to avoid
/// cancellation at large `j`.
fn unit_weights<T: Scalar>(grid: &Grid<T>, s: T) -> (UnitWeights<T>, Vec<T>) {
    let n = grid.n_nodes();
    let h = grid.spacing().to_f64_lossy();
    let s64 = s.to_f64_lossy();
    let p = 1.0 - 2.0 * s64;
    let scale = h.powf(-2.0 * s64);
    let denom = (p + 1.0) * (p + 2.0);
    let max_j = n; // J_i <= n

    // Full hat moment ∫ φ_j(t) t^p dt = F(j+1) - 2F(j) + F(j-1).
    let hat = |j: f64| -> f64 {
        if j < 2.0 {
            // j = 1: F(0) = 0, no cancellation concerns.
            (2f64.powf(p + 2.0) - 2.0) / denom
        } else {
            let a = (p + 2.0) * (1.0 / j).ln_1p();
            let b = (p + 2.0) * (-1.0 / j).ln_1p();
            j.powf(p + 2.0) / denom * (a.exp_m1() + b.exp_m1())
        }
    };
    // Rising half hat on [j-1, j]: F'(j) - (F(j) - F(j-1)).
    let rising = |j: f64| -> f64 {
        let fprime = j.powf(p + 1.0) / (p + 1.0);
        let diff = if j < 2.0 {
            1.0 / denom
        } else {
            -j.powf(p + 2.0) / denom * ((p + 2.0) * (-1.0 / j).ln_1p()).exp_m1()
        };
        fprime - diff
    };
    // Falling half hat at 0: ∫_0^1 (1 - t) t^p dt.
    let origin = 1.0 / denom;

    let mut full = vec![T::zero(); max_j + 1];
    let mut half = vec![T::zero(); max_j + 1];
    for j in 1..=max_j {
        let jf = j as f64;
        let mut wf = hat(jf) / (jf * jf);
        if j == 1 {
            wf += origin;
        }
        full[j] = T::lit(wf * scale);
        let mut wh = rising(jf) / (jf * jf);
        if j == 1 {
            // J_i = 1 cannot happen for n >= 5, kept for completeness.
            wh += origin;
        }
        half[j] = T::lit(wh * scale);
    }
    let tail = (0..n)
        .map(|i| {
            let r = reach(i, n) as f64 * h;
            T::lit(r.powf(-2.0 * s64) / s64)
        })
        .collect();
    (UnitWeights { full, half }, tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid<f64> {
        Grid::from_physical(4.0, n, (-1.0, 1.0), (1.5, 2.0), (-2.0, -1.5), None).unwrap()
    }

    #[test]
    fn cns_half_is_one_over_pi() {
        let c = cns_constant(1, 0.5).unwrap();
        assert!((c - std::f64::consts::FRAC_1_PI).abs() < 1e-15);
    }

    #[test]
    fn cns_vanishes_at_zero_order_limit() {
        assert!(cns_constant(1, 1e-8).unwrap() < 1e-7);
        assert!(cns_constant(1, 0.0).is_err());
        assert!(cns_constant(1, 1.0).is_err());
        assert!(FractionalOrder::new(1.0f64).is_err());
        assert!(FractionalOrder::new(0.0f64).is_err());
    }

    #[test]
    fn symmetric_with_sign_pattern() {
        for s in [0.25, 0.5, 0.75] {
            let g = grid(65);
            let op = NonlocalOperator::assemble(&g, FractionalOrder::new(s).unwrap()).unwrap();
            let a = op.matrix();
            for i in 0..65 {
                assert!(a[(i, i)] > 0.0);
                for k in 0..65 {
                    assert_eq!(a[(i, k)], a[(k, i)]);
                    if i != k {
                        assert!(a[(i, k)] < 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let g = grid(33);
        let op = NonlocalOperator::assemble(&g, FractionalOrder::new(0.3).unwrap()).unwrap();
        assert!(op.apply(&FieldVector::zeros(33)).iter().all(|&v| v == 0.0));
    }

    /// Composite Simpson on a smooth integrand.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut acc = f(a) + f(b);
        for k in 1..m {
            acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn constant_at_centre_node_is_tail_plus_final_ramp() {
        for s in [0.25, 0.5, 0.75] {
            let g = grid(129);
            let h = g.spacing();
            let op = NonlocalOperator::assemble(&g, FractionalOrder::new(s).unwrap()).unwrap();
            let ones = FieldVector::from(vec![1.0; 129]);
            let au = op.apply(&ones);
            let c = cns_constant(1, s).unwrap();
            // Centre node: every symmetric difference vanishes up to J = 65,
            // where the zero extension starts on both sides at once.
            let j = 65.0;
            let r = j * h;
            let ramp = simpson(|t| 2.0 * (t - (j - 1.0)) * t.powf(1.0 - 2.0 * s) / (j * j), j - 1.0, j, 2000);
            let expect = c * (r.powf(-2.0 * s) / s + h.powf(-2.0 * s) * ramp);
            assert!(((au[64] - expect) / expect).abs() < 1e-12, "s={s}: {} vs {expect}", au[64]);
            assert!((op.tail()[64] - c * r.powf(-2.0 * s) / s).abs() < 1e-15);
            assert!(au.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn doubling_constant_doubles_action() {
        let g = grid(33);
        let s = FractionalOrder::new(0.4).unwrap();
        let op = NonlocalOperator::assemble(&g, s).unwrap();
        let op2 = NonlocalOperator::assemble_with_constant(&g, s, 2.0 * op.cns()).unwrap();
        let u = FieldVector::from_fn(&g, |x| (-(x * x)).exp());
        let a = op.apply(&u);
        let b = op2.apply(&u);
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((2.0 * x - y).abs() <= 1e-13 * y.abs().max(1.0));
        }
    }

    #[test]
    fn f32_assembly_matches_f64() {
        let g64 = grid(33);
        let g32 = Grid::<f32>::from_physical(4.0, 33, (-1.0, 1.0), (1.5, 2.0), (-2.0, -1.5), None).unwrap();
        let a64 = NonlocalOperator::assemble(&g64, FractionalOrder::new(0.5).unwrap()).unwrap();
        let a32 = NonlocalOperator::assemble(&g32, FractionalOrder::new(0.5f32).unwrap()).unwrap();
        for i in 0..33 {
            for k in 0..33 {
                let r = (a32.entry(i, k) as f64 - a64.entry(i, k)).abs() / a64.entry(i, i);
                assert!(r < 1e-6);
            }
        }
    }
}
