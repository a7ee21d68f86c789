//! Higher-order linearizations `u⁽ᵏ⁾ = ∂_ε^k u(ε f)|_{ε=0}`.

use crate::bell::bell_remainder;
use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::forward::InteriorSolver;
use crate::operator::NonlocalOperator;
use crate::scalar::Scalar;

/// Factorized `(-Δ)^s + a_1` together with the (possibly partial)
/// coefficient field feeding the higher-order sources.
#[derive(Debug, Clone)]
pub struct LinearizationModel<T: Scalar> {
    solver: InteriorSolver<T>,
    coeff: CoefficientField<T>,
}

impl<T: Scalar> LinearizationModel<T> {
    pub fn new(op: &NonlocalOperator<T>, coeff: &CoefficientField<T>) -> Result<Self> {
        Ok(Self { solver: InteriorSolver::new(op, coeff.potential())?, coeff: coeff.clone() })
    }

    pub fn solver(&self) -> &InteriorSolver<T> {
        &self.solver
    }

    pub fn coeff(&self) -> &CoefficientField<T> {
        &self.coeff
    }

    /// Source of the order-`k` equation: `-R_{k-1} - a_k (u⁽¹⁾)ᵏ` on the free nodes.
    pub fn source(&self, order: usize, lower: &[FieldVector<T>]) -> FieldVector<T> {
        let mut src = bell_remainder(order, &self.coeff, lower);
        let u1 = &lower[0];
        let ak = self.coeff.order(order);
        for i in self.solver.unknowns() {
            src[*i] = -(src[*i] + ak[*i] * u1[*i].powi(order as i32));
        }
        for i in 0..src.len() {
            if !self.solver.unknowns().contains(&i) {
                src[i] = T::zero();
            }
        }
        src
    }

    /// `u⁽ᵏ⁾` given `lower = [u⁽¹⁾, …, u⁽ᵏ⁻¹⁾]`. Order 1 uses `input` as exterior data;
    /// higher orders have zero exterior data.
    pub fn field(&self, order: usize, input: &FieldVector<T>, lower: &[FieldVector<T>]) -> Result<FieldVector<T>> {
        match order {
            0 => Err(Error::Precondition("linearization orders start at 1".into())),
            1 => self.solver.solve(&FieldVector::zeros(input.len()), input),
            k => {
                if lower.len() < k - 1 {
                    return Err(Error::Precondition(format!("order {k} needs {} lower fields", k - 1)));
                }
                self.solver.solve_zero_exterior(&self.source(k, &lower[..k - 1]))
            }
        }
    }

    /// `[u⁽¹⁾, …, u⁽ᴷ⁾]` for one input.
    pub fn fields(&self, input: &FieldVector<T>, max_order: usize) -> Result<Vec<FieldVector<T>>> {
        let mut out: Vec<FieldVector<T>> = Vec::with_capacity(max_order);
        for k in 1..=max_order {
            let next = self.field(k, input, &out)?;
            out.push(next);
        }
        Ok(out)
    }

    /// Flux of a field on `w2`.
    pub fn flux(&self, field: &FieldVector<T>) -> Vec<T> {
        let op = self.solver.operator();
        op.apply_rows(field, op.grid().w2())
    }
}

/// One-shot `u⁽ᵏ⁾` for a coefficient estimate.
pub fn solve_linearized<T: Scalar>(
    op: &NonlocalOperator<T>,
    coeff: &CoefficientField<T>,
    order: usize,
    input: &FieldVector<T>,
    lower: &[FieldVector<T>],
) -> Result<FieldVector<T>> {
    LinearizationModel::new(op, coeff)?.field(order, input, lower)
}
