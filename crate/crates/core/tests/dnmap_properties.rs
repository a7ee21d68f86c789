use calderon::dnmap::{dn_flux, dn_pairing, duality_pair, flux_pairing};
use calderon::forward::SolveOptions;
use calderon::reconstruct::solve_linearized;
use calderon::{CoefficientField, FieldVector, Grid};
use calderon_oracles::fixtures;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exterior_random(rng: &mut ChaCha8Rng, g: &Grid<f64>, scale: f64) -> FieldVector<f64> {
    let mut v = FieldVector::zeros(g.n_nodes());
    for i in 1..g.n_nodes() - 1 {
        if g.is_exterior(i) {
            v[i] = scale * (2.0 * rng.random::<f64>() - 1.0);
        }
    }
    v
}

fn w1_random(rng: &mut ChaCha8Rng, g: &Grid<f64>, scale: f64) -> FieldVector<f64> {
    let mut v = FieldVector::zeros(g.n_nodes());
    for i in g.w1().iter() {
        v[i] = scale * rng.random::<f64>();
    }
    v
}

#[test]
fn energy_form_equals_flux_sum() {
    let g = fixtures::recovery_grid(129, None);
    let op = fixtures::operator(&g, 0.5);
    let truth = fixtures::truth(&g, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for pair in 0..50 {
        let f = w1_random(&mut rng, &g, 1e-2);
        let phi = exterior_random(&mut rng, &g, 1.0);
        let (energy, flux) = duality_pair(&op, &truth, &f, &phi, &SolveOptions::default()).unwrap();
        let rel = (energy - flux).abs() / energy.abs().max(flux.abs());
        assert!(rel <= 1e-10, "pair {pair}: {energy} vs {flux}");
    }
}

#[test]
fn zero_inputs_give_zero() {
    let g = fixtures::recovery_grid(65, None);
    let op = fixtures::operator(&g, 0.5);
    let truth = fixtures::truth(&g, 2);
    let zero = FieldVector::zeros(g.n_nodes());
    assert!(dn_flux(&op, &truth, &zero, &SolveOptions::default()).unwrap().flux.iter().all(|&v| v == 0.0));
    let f = fixtures::panel_inputs(&g, 1)[0].scaled(1e-2);
    assert_eq!(dn_pairing(&op, &truth, &f, &zero, &SolveOptions::default()).unwrap(), 0.0);
}

#[test]
fn test_function_inside_omega_rejected() {
    let g = fixtures::recovery_grid(65, None);
    let op = fixtures::operator(&g, 0.5);
    let truth = fixtures::truth(&g, 1);
    let f = fixtures::panel_inputs(&g, 1)[0].clone();
    let mut phi = FieldVector::zeros(g.n_nodes());
    phi[g.omega().start + 3] = 1.0;
    assert!(dn_pairing(&op, &truth, &f, &phi, &SolveOptions::default()).is_err());
}

#[test]
fn linear_case_superposes_and_is_symmetric() {
    let g = fixtures::recovery_grid(129, None);
    let op = fixtures::operator(&g, 0.5);
    let q = fixtures::truth(&g, 1);
    let opts = SolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (f1, f2) = (w1_random(&mut rng, &g, 1.0), w1_random(&mut rng, &g, 1.0));
    let mut sum = f1.clone();
    sum.axpy(-2.5, &f2);
    let (d1, d2, ds) = (
        dn_flux(&op, &q, &f1, &opts).unwrap().flux,
        dn_flux(&op, &q, &f2, &opts).unwrap().flux,
        dn_flux(&op, &q, &sum, &opts).unwrap().flux,
    );
    let scale = ds.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for j in 0..ds.len() {
        assert!((ds[j] - d1[j] + 2.5 * d2[j]).abs() <= 1e-12 * scale);
    }
    // Both functions live in the exterior, so each can play input or test function.
    let phi = FieldVector::supported_on(&g, g.w2(), |x| (x + 2.0).cos());
    let a = dn_pairing(&op, &q, &f1, &phi, &opts).unwrap();
    let b = dn_pairing(&op, &q, &phi, &f1, &opts).unwrap();
    assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()), "{a} vs {b}");
}

#[test]
fn flux_ignores_window_padding() {
    let narrow = Grid::from_physical(4.0, 129, (-1.0, 1.0), (1.5, 2.5), (-3.0, -1.25), None).unwrap();
    let wide = Grid::from_physical(4.0, 129, (-1.0, 1.0), (1.25, 3.0), (-3.0, -1.25), None).unwrap();
    let truth = fixtures::truth(&narrow, 2);
    let f = FieldVector::supported_on(&narrow, narrow.w1(), |x| 1e-2 * (std::f64::consts::PI * (x - 1.5)).sin().powi(2));
    let a = dn_flux(&fixtures::operator(&narrow, 0.5), &truth, &f, &SolveOptions::default()).unwrap().flux;
    let truth_wide = CoefficientField::new(&wide, (1..=2).map(|k| truth.order(k).restrict(wide.omega())).collect()).unwrap();
    let b = dn_flux(&fixtures::operator(&wide, 0.5), &truth_wide, &f, &SolveOptions::default()).unwrap().flux;
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-12 * scale));
}

#[test]
fn scaled_flux_tends_to_linearized_flux() {
    let g = fixtures::recovery_grid(129, None);
    let op = fixtures::operator(&g, 0.5);
    let truth = fixtures::truth(&g, 2);
    let f = &fixtures::panel_inputs(&g, 4)[2];
    let u1 = solve_linearized(&op, &truth, 1, f, &[]).unwrap();
    let limit = op.apply_rows(&u1, g.w2());
    let gaps: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&e| {
            let d = dn_flux(&op, &truth, &f.scaled(e), &SolveOptions::default()).unwrap().flux;
            d.iter().zip(&limit).fold(0.0f64, |m, (x, y)| m.max((x / e - y).abs()))
        })
        .collect();
    assert!(gaps[1] < 0.2 * gaps[0] && gaps[2] < 0.2 * gaps[1], "{gaps:?}");
    let phi = FieldVector::supported_on(&g, g.w2(), |_| 1.0);
    assert!(flux_pairing(&op, &u1, &phi) < 0.0);
}
