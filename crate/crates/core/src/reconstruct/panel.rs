//! Amplitude panels of DN data and their ε-derivatives at zero.

use crate::coeff::CoefficientField;
use crate::dnmap::DnSample;
use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::forward::SolveOptions;
use crate::grid::Grid;
use crate::operator::NonlocalOperator;
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};

/// Nonnegative inputs supported in `w1`, a symmetric amplitude list, and the
/// flux sample for every (input, amplitude) pair.
#[derive(Debug, Clone)]
pub struct EpsilonPanel<T> {
    inputs: Vec<FieldVector<T>>,
    epsilons: Vec<T>,
    /// `samples[p][m]` belongs to input `p` at amplitude `epsilons[m]`.
    samples: Vec<Vec<DnSample<T>>>,
}

/// Checks the panel input requirements: every input is `>= 0`, not
/// identically zero, and vanishes off `w1`.
pub fn validate_inputs<T: Scalar>(grid: &Grid<T>, inputs: &[FieldVector<T>]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Precondition("panel needs at least one input".into()));
    }
    for (p, f) in inputs.iter().enumerate() {
        if f.len() != grid.n_nodes() {
            return Err(Error::Dimension(format!("input {p} does not span the grid")));
        }
        if let Some(i) = (0..f.len()).find(|&i| f[i] < T::zero()) {
            return Err(Error::Precondition(format!("input {p} is negative at node {i}; panel inputs must be >= 0")));
        }
        if !f.is_nontrivial() {
            return Err(Error::Precondition(format!("input {p} vanishes identically")));
        }
        if let Some(i) = (0..f.len()).find(|&i| !grid.w1().contains(i) && f[i] != T::zero()) {
            return Err(Error::Precondition(format!("input {p} is nonzero at node {i} outside w1")));
        }
    }
    Ok(())
}

/// Checks that the amplitudes are distinct and symmetric about zero.
pub fn validate_epsilons<T: Scalar>(eps: &[T]) -> Result<()> {
    if eps.len() < 2 {
        return Err(Error::Precondition("need at least two amplitudes".into()));
    }
    let scale = eps.iter().fold(T::zero(), |m, e| m.max(e.abs()));
    let tol = scale * T::lit(1e-12);
    for (a, &x) in eps.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::Precondition("amplitudes must be finite".into()));
        }
        if !eps.iter().any(|&y| (x + y).abs() <= tol) {
            return Err(Error::Precondition(format!("amplitude list not symmetric about 0: {x} has no mirror")));
        }
        if eps.iter().skip(a + 1).any(|&y| (x - y).abs() <= tol) {
            return Err(Error::Precondition(format!("amplitude {x} is repeated")));
        }
    }
    Ok(())
}

impl<T: Scalar> EpsilonPanel<T> {
    /// Assembles a panel from already measured samples.
    pub fn from_samples(
        grid: &Grid<T>,
        inputs: Vec<FieldVector<T>>,
        epsilons: Vec<T>,
        samples: Vec<Vec<DnSample<T>>>,
    ) -> Result<Self> {
        validate_inputs(grid, &inputs)?;
        validate_epsilons(&epsilons)?;
        if samples.len() != inputs.len() || samples.iter().any(|row| row.len() != epsilons.len()) {
            return Err(Error::Dimension("sample table must be inputs × amplitudes".into()));
        }
        let w2 = grid.w2().len();
        if samples.iter().flatten().any(|s| s.flux.len() != w2 || s.flux.iter().any(|v| !v.is_finite())) {
            return Err(Error::Precondition("flux samples must be finite and cover w2".into()));
        }
        Ok(Self { inputs, epsilons, samples })
    }

    /// Runs the forward problem for every (input, amplitude) pair.
    pub fn measure(
        op: &NonlocalOperator<T>,
        coeff: &CoefficientField<T>,
        inputs: Vec<FieldVector<T>>,
        epsilons: Vec<T>,
        opts: &SolveOptions<T>,
    ) -> Result<Self> {
        validate_inputs(op.grid(), &inputs)?;
        validate_epsilons(&epsilons)?;
        let samples = inputs
            .iter()
            .enumerate()
            .map(|(p, f)| {
                epsilons
                    .iter()
                    .map(|&e| DnSample::measure(op, coeff, f, p, e, opts))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { inputs, epsilons, samples })
    }

    pub fn inputs(&self) -> &[FieldVector<T>] {
        &self.inputs
    }

    pub fn epsilons(&self) -> &[T] {
        &self.epsilons
    }

    pub fn samples(&self) -> &[Vec<DnSample<T>>] {
        &self.samples
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    /// Keeps only the listed inputs.
    pub fn select_inputs(&self, keep: &[usize]) -> Self {
        Self {
            inputs: keep.iter().map(|&p| self.inputs[p].clone()).collect(),
            epsilons: self.epsilons.clone(),
            samples: keep.iter().map(|&p| self.samples[p].clone()).collect(),
        }
    }

    /// Highest Taylor order the amplitude list supports.
    pub fn max_supported_order(&self) -> usize {
        max_order_for(self.epsilons.len())
    }
}

/// Largest `k` with `M >= 2⌈k/2⌉ + 1`.
fn max_order_for(points: usize) -> usize {
    if points == 0 {
        0
    } else {
        points - 1
    }
}

fn required_points(order: usize) -> usize {
    2 * order.div_ceil(2) + 1
}

/// Weights `w` with `Σ_m w_m g(ε_m) ≈ g⁽ᵏ⁾(0)`, exact for polynomials of degree
/// `< M`, built on the amplitudes rescaled to `[-1, 1]`.
pub fn stencil_weights<T: Scalar>(eps: &[T], order: usize) -> Result<Vec<T>> {
    let m = eps.len();
    if m < required_points(order) || order >= m {
        return Err(Error::StencilUnderdetermined { points: m, order });
    }
    let scale = eps.iter().fold(T::zero(), |a, e| a.max(e.abs()));
    let t: Vec<T> = eps.iter().map(|&e| e / scale).collect();
    let v = DMatrix::from_fn(m, m, |j, c| t[c].powi(j as i32));
    let mut rhs = DVector::zeros(m);
    rhs[order] = (1..=order).fold(T::one(), |acc, j| acc * T::from_usize_lossy(j));
    let w = v.lu().solve(&rhs).ok_or(Error::Precondition("amplitudes must be distinct".into()))?;
    let norm = scale.powi(order as i32);
    Ok(w.iter().map(|&x| x / norm).collect())
}

fn apply_stencil<T: Scalar>(samples: &[&DnSample<T>], weights: &[T]) -> Vec<T> {
    let len = samples[0].flux.len();
    (0..len)
        .map(|j| samples.iter().zip(weights).fold(T::zero(), |acc, (s, &w)| acc + w * s.flux[j]))
        .collect()
}

/// `∂_ε^k Λ(ε f_p)|_{ε=0}` on the `w2` nodes.
pub fn eps_derivative<T: Scalar>(panel: &EpsilonPanel<T>, input: usize, order: usize) -> Result<Vec<T>> {
    if input >= panel.inputs.len() {
        return Err(Error::Precondition(format!("panel has no input {input}")));
    }
    let w = stencil_weights(&panel.epsilons, order)?;
    let row: Vec<&DnSample<T>> = panel.samples[input].iter().collect();
    Ok(apply_stencil(&row, &w))
}

/// Difference between the full stencil and the one without the outermost
/// amplitude pair: a Richardson-style estimate of the stencil error. Zero
/// when the reduced stencil is underdetermined.
pub fn stencil_error_estimate<T: Scalar>(panel: &EpsilonPanel<T>, input: usize, order: usize) -> Result<Vec<T>> {
    let full = eps_derivative(panel, input, order)?;
    let top = panel.epsilons.iter().fold(T::zero(), |a, e| a.max(e.abs()));
    let keep: Vec<usize> = (0..panel.epsilons.len())
        .filter(|&m| panel.epsilons[m].abs() < top * (T::one() - T::lit(1e-12)))
        .collect();
    let reduced_eps: Vec<T> = keep.iter().map(|&m| panel.epsilons[m]).collect();
    let Ok(w) = stencil_weights(&reduced_eps, order) else {
        return Ok(vec![T::zero(); full.len()]);
    };
    let row: Vec<&DnSample<T>> = keep.iter().map(|&m| &panel.samples[input][m]).collect();
    let reduced = apply_stencil(&row, &w);
    Ok(full.iter().zip(&reduced).map(|(&a, &b)| (a - b).abs()).collect())
}
