// Expected values below are written term by term, factors as they appear.
#![allow(clippy::identity_op, clippy::neg_multiply)]

use calderon::bell::{bell_remainder, bell_remainder_scalar, composition_derivative_scalar, partial_bell};
use calderon::reconstruct::{eps_derivative, stencil_error_estimate, stencil_weights, LinearizationModel};
use calderon::linalg::condition_number;
use calderon::{CoefficientField, FieldVector};
use nalgebra::DMatrix;
use calderon_oracles::{fixtures, series};
use num_rational::Ratio;
use proptest::prelude::*;

type Q = Ratio<i64>;

fn ints(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&x| Q::from_integer(x)).collect()
}

#[test]
fn remainder_known_low_orders() {
    let a = ints(&[7, 2, 3, 5]);
    let u = ints(&[2, -1, 4, 3]);
    assert_eq!(bell_remainder_scalar(2, &a, &u), Q::from_integer(0));
    // N = 3: a_2 · 3 u⁽¹⁾ u⁽²⁾.
    assert_eq!(bell_remainder_scalar(3, &a, &u), Q::from_integer(2 * 3 * 2 * -1));
    // N = 4: a_2 (4 u⁽¹⁾u⁽³⁾ + 3 (u⁽²⁾)²) + a_3 · 6 (u⁽¹⁾)² u⁽²⁾.
    let expect = 2 * (4 * 2 * 4 + 3 * 1) + 3 * 6 * 4 * -1;
    assert_eq!(bell_remainder_scalar(4, &a, &u), Q::from_integer(expect));
}

proptest! {
    #[test]
    fn remainder_matches_series_oracle(
        order in 1usize..=5,
        a in prop::collection::vec(-6i64..=6, 5),
        u in prop::collection::vec(-4i64..=4, 5),
    ) {
        let (a, u) = (ints(&a), ints(&u));
        prop_assert_eq!(bell_remainder_scalar(order, &a, &u), series::remainder(order, &a, &u));
        prop_assert_eq!(composition_derivative_scalar(order, &a, &u), series::composition_derivative(order, &a, &u));
    }

    #[test]
    fn bell_rows_count_set_partitions(n in 1usize..=7) {
        // With every argument equal to 1, B_{n,k} is the Stirling number S(n, k).
        let ones = vec![1u64; n];
        let total: u64 = (1..=n).map(|k| partial_bell(n, k, &ones)).sum();
        let bell_numbers = [1u64, 1, 2, 5, 15, 52, 203, 877];
        prop_assert_eq!(total, bell_numbers[n]);
    }

    #[test]
    fn homogeneity_in_the_first_argument(n in 1usize..=5, k in 1usize..=5, c in -3i64..=3) {
        // B_{n,k}(c x_1, c² x_2, …) = cⁿ B_{n,k}(x_1, x_2, …).
        let x = ints(&[2, -1, 3, 1, -2]);
        let scaled: Vec<Q> = x.iter().enumerate().map(|(i, v)| v * Q::from_integer(c.pow(i as u32 + 1))).collect();
        prop_assert_eq!(partial_bell(n, k, &scaled), partial_bell(n, k, &x) * Q::from_integer(c.pow(n as u32)));
    }
}

#[test]
fn field_remainder_is_nodewise() {
    let g = fixtures::recovery_grid(65, None);
    let truth = fixtures::truth(&g, 3);
    let fields: Vec<FieldVector<f64>> =
        (1..=3).map(|k| FieldVector::from_fn(&g, |x| (k as f64 * x).sin() + 0.5)).collect();
    let r = bell_remainder(4, &truth, &fields);
    for i in 0..g.n_nodes() {
        if g.omega().contains(i) {
            let a: Vec<f64> = (1..=3).map(|k| truth.order(k)[i]).collect();
            let u: Vec<f64> = fields.iter().map(|f| f[i]).collect();
            assert_eq!(r[i], bell_remainder_scalar(4, &a, &u));
        } else {
            assert_eq!(r[i], 0.0);
        }
    }
}

#[test]
fn stencil_derivatives_match_linearized_fluxes() {
    let g = fixtures::recovery_grid(129, None);
    let op = fixtures::operator(&g, 0.5);
    let truth: CoefficientField<f64> = fixtures::truth(&g, 3);
    let panel = fixtures::panel(&op, &truth, 2);
    let model = LinearizationModel::new(&op, &truth).unwrap();
    // Each flux sample is accurate to about cond(L) ulps of its size.
    let free = g.unknowns();
    let q = truth.potential();
    let interior = DMatrix::from_fn(free.len(), free.len(), |r, c| {
        op.matrix()[(free[r], free[c])] + if r == c { q[free[r]] } else { 0.0 }
    });
    let sample_error = condition_number(&interior) * f64::EPSILON;
    for p in 0..panel.n_inputs() {
        let fields = model.fields(&panel.inputs()[p], 3).unwrap();
        for k in 1..=3 {
            let measured = eps_derivative(&panel, p, k).unwrap();
            let estimate = stencil_error_estimate(&panel, p, k).unwrap();
            let exact = model.flux(&fields[k - 1]);
            let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let gap = measured.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            // Truncation (Richardson estimate) plus propagated sample error.
            let weights = stencil_weights(panel.epsilons(), k).unwrap();
            let rounding = weights.iter().zip(&panel.samples()[p]).fold(0.0f64, |acc, (w, sample)| {
                acc + w.abs() * sample.flux.iter().fold(0.0f64, |m, v| m.max(v.abs())) * sample_error
            });
            let bound = 2.0 * estimate.iter().fold(0.0f64, |m, v| m.max(v.abs())) + rounding;
            assert!(gap <= bound, "input {p}, order {k}: gap {gap:e}, bound {bound:e}, scale {scale:e}");
        }
    }
}
