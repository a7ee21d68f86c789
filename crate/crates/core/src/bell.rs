//! Partial Bell polynomials and the remainder of the N-th linearization.
//!
//! With `u(ε) = Σ_k ε^k u⁽ᵏ⁾ / k!`, Faà di Bruno gives
//! `∂_ε^N a(x, u(ε))|_{ε=0} = Σ_{m=1}^{N} a_m B_{N,m}(u⁽¹⁾, …, u⁽ᴺ⁻ᵐ⁺¹⁾)`.
//! The remainder drops the `m = 1` term (`a_1 u⁽ᴺ⁾`, moved into the operator)
//! and the `m = N` term (`a_N (u⁽¹⁾)ᴺ`, the unknown being recovered).

use crate::coeff::CoefficientField;
use crate::field::FieldVector;
use crate::scalar::Scalar;
use num_traits::Num;

/// `n` as an element of a generic ring, by binary expansion of `1`.
fn ring_count<T: Num + Clone>(mut n: u64) -> T {
    let mut acc = T::zero();
    let mut pow = T::one();
    while n > 0 {
        if n & 1 == 1 {
            acc = acc + pow.clone();
        }
        pow = pow.clone() + pow;
        n >>= 1;
    }
    acc
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Table `B[n][k]` of partial Bell polynomials for `0 <= k <= n <= order`,
/// evaluated at `x[0] = x_1, x[1] = x_2, …`. Missing arguments count as zero.
pub fn partial_bell_table<T: Num + Clone>(order: usize, x: &[T]) -> Vec<Vec<T>> {
    let mut b = vec![vec![T::zero(); order + 1]; order + 1];
    b[0][0] = T::one();
    for n in 1..=order {
        for k in 1..=n {
            let mut acc = T::zero();
            for i in 1..=(n - k + 1) {
                let Some(xi) = x.get(i - 1) else { break };
                let term = b[n - i][k - 1].clone();
                acc = acc + ring_count::<T>(binomial((n - 1) as u64, (i - 1) as u64)) * xi.clone() * term;
            }
            b[n][k] = acc;
        }
    }
    b
}

/// `B_{n,k}(x_1, …, x_{n-k+1})`.
pub fn partial_bell<T: Num + Clone>(n: usize, k: usize, x: &[T]) -> T {
    if k > n {
        return T::zero();
    }
    partial_bell_table(n, x)[n][k].clone()
}

/// Pointwise remainder `Σ_{m=2}^{N-1} a_m B_{N,m}(u⁽¹⁾, …)`.
///
/// `a[m-1]` is `a_m` (entries past `N - 1` are ignored), `u[k-1]` is `u⁽ᵏ⁾`.
/// Orders `N < 3` have no interior terms.
pub fn bell_remainder_scalar<T: Num + Clone>(order: usize, a: &[T], u: &[T]) -> T {
    if order < 3 {
        return T::zero();
    }
    let table = partial_bell_table(order, u);
    (2..order).fold(T::zero(), |acc, m| match a.get(m - 1) {
        Some(am) => acc + am.clone() * table[order][m].clone(),
        None => acc,
    })
}

/// Full `∂_ε^N a(x, u(ε))|_{ε=0} = Σ_{m=1}^{N} a_m B_{N,m}` at one point.
pub fn composition_derivative_scalar<T: Num + Clone>(order: usize, a: &[T], u: &[T]) -> T {
    let table = partial_bell_table(order, u);
    (1..=order).fold(T::zero(), |acc, m| match a.get(m - 1) {
        Some(am) => acc + am.clone() * table[order][m].clone(),
        None => acc,
    })
}

/// Remainder field `R_{N-1}` on `omega`, from the coefficient field and the
/// lower linearization fields `fields[k-1] = u⁽ᵏ⁾`.
pub fn bell_remainder<T: Scalar>(order: usize, coeff: &CoefficientField<T>, fields: &[FieldVector<T>]) -> FieldVector<T> {
    let n = fields.first().map_or(0, |f| f.len());
    let mut out = FieldVector::zeros(n);
    if order < 3 {
        return out;
    }
    let mut a = Vec::with_capacity(order);
    let mut u = Vec::with_capacity(order);
    for i in coeff.omega().iter() {
        a.clear();
        u.clear();
        a.extend((1..order).map(|m| coeff.order_ref(m).map_or(T::zero(), |c| c[i])));
        u.extend(fields.iter().take(order - 1).map(|f| f[i]));
        out[i] = bell_remainder_scalar(order, &a, &u);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_tables() {
        let x = [2i64, 3, 5, 7];
        // B_{2,1} = x2, B_{2,2} = x1^2, B_{3,2} = 3 x1 x2, B_{4,2} = 4 x1 x3 + 3 x2^2
        assert_eq!(partial_bell(2, 1, &x), 3);
        assert_eq!(partial_bell(2, 2, &x), 4);
        assert_eq!(partial_bell(3, 2, &x), 3 * 2 * 3);
        assert_eq!(partial_bell(4, 2, &x), 4 * 2 * 5 + 3 * 9);
        assert_eq!(partial_bell(4, 3, &x), 6 * 4 * 3);
        assert_eq!(partial_bell(4, 4, &x), 16);
    }

    #[test]
    fn remainder_vanishes_below_third_order() {
        assert_eq!(bell_remainder_scalar(2, &[1i64, 2, 3], &[4, 5]), 0);
        assert_eq!(bell_remainder_scalar(1, &[1i64], &[4]), 0);
    }

    #[test]
    fn third_and_fourth_order_remainders() {
        let (a2, a3) = (5i64, 7i64);
        let (u1, u2, u3) = (2i64, 3i64, 11i64);
        assert_eq!(bell_remainder_scalar(3, &[1, a2], &[u1, u2]), a2 * 3 * u1 * u2);
        assert_eq!(
            bell_remainder_scalar(4, &[1, a2, a3], &[u1, u2, u3]),
            a2 * (4 * u1 * u3 + 3 * u2 * u2) + a3 * 6 * u1 * u1 * u2
        );
    }
}
