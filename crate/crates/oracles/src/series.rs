//! Truncated power series in ε over an exact field.
//!
//! `∂_ε^N a(Σ_k ε^k u_k / k!)` at `ε = 0` is `N!` times the `ε^N` coefficient
//! of the composed series, which is computed here by plain series
//! multiplication, with no reference to Bell polynomials.

use num_traits::{FromPrimitive, Num};

/// Coefficients `c_0..c_N` of a series truncated after `ε^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T>(pub Vec<T>);

impl<T: Num + Clone> Series<T> {
    pub fn mul(&self, other: &Series<T>) -> Series<T> {
        let n = self.0.len();
        let mut out = vec![T::zero(); n];
        for i in 0..n {
            for j in 0..n - i {
                out[i + j] = out[i + j].clone() + self.0[i].clone() * other.0[j].clone();
            }
        }
        Series(out)
    }
}

fn factorial<T: Num + Clone + FromPrimitive>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::from_usize(k).expect("factorial fits"))
}

/// `∂_ε^N a(x, u(ε))|_{ε=0}` for `a(z) = Σ_m a_m z^m / m!` (slice index
/// `m - 1`) and `u(ε) = Σ_k u_k ε^k / k!` (slice index `k - 1`).
pub fn composition_derivative<T: Num + Clone + FromPrimitive>(order: usize, a: &[T], u: &[T]) -> T {
    let mut useries = vec![T::zero(); order + 1];
    for k in 1..=order.min(u.len()) {
        useries[k] = u[k - 1].clone() / factorial::<T>(k);
    }
    let base = Series(useries);
    let mut power = Series({
        let mut one = vec![T::zero(); order + 1];
        one[0] = T::one();
        one
    });
    let mut total = T::zero();
    for m in 1..=order.min(a.len()) {
        power = power.mul(&base);
        total = total + a[m - 1].clone() * power.0[order].clone() / factorial::<T>(m);
    }
    total * factorial::<T>(order)
}

/// The composed derivative minus its `m = 1` and `m = N` terms.
pub fn remainder<T: Num + Clone + FromPrimitive>(order: usize, a: &[T], u: &[T]) -> T {
    let full = composition_derivative(order, a, u);
    if order < 2 {
        return T::zero();
    }
    let first = a.first().cloned().unwrap_or_else(T::zero) * u.get(order - 1).cloned().unwrap_or_else(T::zero);
    let mut top = a.get(order - 1).cloned().unwrap_or_else(T::zero);
    for _ in 0..order {
        top = top * u[0].clone();
    }
    full - first - top
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn r(v: i64) -> Ratio<i64> {
        Ratio::from_integer(v)
    }

    #[test]
    fn low_order_compositions() {
        // a(z) = z^2 (a_2 = 2), u = ε u1: d²/dε² (ε u1)^2 = 2 u1^2.
        assert_eq!(composition_derivative(2, &[r(0), r(2)], &[r(3)]), r(18));
        // a(z) = q z: the derivative is q u_N.
        assert_eq!(composition_derivative(3, &[r(5)], &[r(1), r(2), r(7)]), r(35));
        // Third derivative of a_2 u^2 / 2 is 3 a_2 u1 u2.
        assert_eq!(remainder(3, &[r(0), r(4)], &[r(2), r(5)]), r(120));
    }
}
