use calderon::field::relative_l2_error;
use calderon::forward::{solve_semilinear, SolveOptions};
use calderon::single_shot::{
    detect_obstacle, field_system, recover_a_along_solution, recover_field, threshold_interval, FieldRecoveryOptions,
    SingleMeasurement, DEFAULT_TAU,
};
use calderon::{CoefficientField, FieldVector, IndexRange};
use calderon_oracles::fixtures;
use nalgebra::DVector;

const TOL: f64 = 1e-13;

fn opts() -> SolveOptions<f64> {
    SolveOptions::with_tol(TOL)
}

#[test]
fn coefficient_read_back_along_exact_solution() {
    let g = fixtures::single_shot_grid(65, None);
    let op = fixtures::operator(&g, 0.5);
    let truth = fixtures::truth(&g, 2);
    let u = solve_semilinear(&op, &truth, &fixtures::single_shot_input(&g), &opts()).unwrap().solution;
    let read = recover_a_along_solution(&op, &u);
    let exact = truth.eval(&u);
    let gap = g.omega().iter().fold(0.0f64, |m, i| m.max((read[i] - exact[i]).abs()));
    assert!(gap <= 10.0 * TOL, "{gap:e}");
}

#[test]
fn linear_read_back_divides_to_potential() {
    let g = fixtures::single_shot_grid(65, None);
    let op = fixtures::operator(&g, 0.5);
    let q = fixtures::truth(&g, 1);
    let u = solve_semilinear(&op, &q, &fixtures::single_shot_input(&g), &opts()).unwrap().solution;
    let read = recover_a_along_solution(&op, &u);
    for i in g.omega().iter().filter(|&i| u[i].abs() > 1e-8) {
        let qi = q.potential()[i];
        assert!((read[i] / u[i] - qi).abs() <= 1e-6 * (1.0 + qi), "node {i}");
    }
}

#[test]
fn zero_field_reads_pure_exterior_influence() {
    let g = fixtures::single_shot_grid(65, None);
    let op = fixtures::operator(&g, 0.5);
    let f = fixtures::single_shot_input(&g);
    let read = recover_a_along_solution(&op, &f);
    let af = op.apply(&f);
    assert!(g.omega().iter().all(|i| read[i] == -af[i]));
    assert_eq!(recover_a_along_solution(&op, &FieldVector::zeros(g.n_nodes())).max_norm(), 0.0);
}

#[test]
fn field_recovered_from_oversampled_flux() {
    let g = fixtures::single_shot_grid(65, None);
    assert!(g.w2().len() >= 2 * (g.omega().len() - 2));
    let op = fixtures::operator(&g, 0.5);
    let truth = fixtures::truth(&g, 2);
    let f = fixtures::single_shot_input(&g);
    let u = solve_semilinear(&op, &truth, &f, &opts()).unwrap().solution;
    let m = SingleMeasurement::new(&g, f, op.apply_rows(&u, g.w2())).unwrap();
    let rec = recover_field(&op, &m, &FieldRecoveryOptions::default()).unwrap();
    let err = relative_l2_error(&rec.field, &u, g.omega());
    assert!(rec.residual <= 1e-8, "residual {:e}", rec.residual);
    // Recorded 4.2% with the sign constraint.
    assert!(err <= 0.10, "field error {err}");
    let (k, d) = field_system(&op, &m);
    let x = DVector::from_iterator(k.ncols(), g.omega().iter().map(|i| rec.field[i]));
    assert!(((&k * x - d).norm() - rec.residual).abs() <= 1e-12);
}

#[test]
fn zero_interior_flux_gives_zero_field_and_full_obstacle() {
    let g = fixtures::single_shot_grid(65, None);
    let op = fixtures::operator(&g, 0.5);
    let f = fixtures::single_shot_input(&g);
    let m = SingleMeasurement::new(&g, f.clone(), op.apply_rows(&f, g.w2())).unwrap();
    let (d, rec) = detect_obstacle(&op, &m, &FieldRecoveryOptions::default(), DEFAULT_TAU).unwrap();
    assert!(rec.field.max_norm_on(g.omega().iter()) <= 1e-10);
    assert_eq!(d, Some(g.omega()));
}

#[test]
fn eight_cell_obstacle_located() {
    for center in [-0.125, 0.0, 0.125] {
        let g = fixtures::single_shot_grid(65, Some((center - 0.5, center + 0.5)));
        let truth_d = g.obstacle().unwrap();
        assert_eq!(truth_d.len(), 9);
        let op = fixtures::operator(&g, 0.5);
        let truth = fixtures::truth(&g, 2);
        let f = fixtures::single_shot_input(&g);
        let u = solve_semilinear(&op, &truth, &f, &opts()).unwrap().solution;
        let plain = op.with_obstacle(None).unwrap();
        let m = SingleMeasurement::new(plain.grid(), f, op.apply_rows(&u, g.w2())).unwrap();
        let (d, _) = detect_obstacle(&plain, &m, &FieldRecoveryOptions::default(), DEFAULT_TAU).unwrap();
        let d = d.expect("obstacle found");
        assert!(d.start.abs_diff(truth_d.start) <= 3 && d.end.abs_diff(truth_d.end) <= 3, "{d:?} vs {truth_d:?}");
    }
}

#[test]
fn no_false_positives_on_random_configurations() {
    let mut hits = Vec::new();
    for (trial, case) in fixtures::random_cases(7, 20).into_iter().enumerate() {
        let op = fixtures::operator(&case.grid, case.s);
        let u = solve_semilinear(&op, &case.coeff, &case.input, &opts()).unwrap().solution;
        let m = SingleMeasurement::new(&case.grid, case.input.clone(), op.apply_rows(&u, case.grid.w2())).unwrap();
        let (d, _) = detect_obstacle(&op, &m, &FieldRecoveryOptions::default(), DEFAULT_TAU).unwrap();
        if d.is_some() {
            hits.push(trial);
        }
    }
    assert!(hits.is_empty(), "false positives in trials {hits:?}");
}

#[test]
fn detection_grows_with_threshold_on_fixtures() {
    let g = fixtures::single_shot_grid(65, Some((-0.5, 0.5)));
    let op = fixtures::operator(&g, 0.5);
    let truth = fixtures::truth(&g, 2);
    let f = fixtures::single_shot_input(&g);
    let u = solve_semilinear(&op, &truth, &f, &opts()).unwrap().solution;
    let plain = op.with_obstacle(None).unwrap();
    let m = SingleMeasurement::new(plain.grid(), f, op.apply_rows(&u, g.w2())).unwrap();
    let rec = recover_field(&plain, &m, &FieldRecoveryOptions::default()).unwrap();
    let mut previous: Option<IndexRange> = None;
    for tau in [0.01, 0.02, 0.05, 0.1, 0.2, 0.3] {
        let d = threshold_interval(&rec.field, g.omega(), tau);
        if let Some(p) = previous {
            let d = d.expect("detections never disappear as τ grows");
            assert!(p.is_subset_of(&d), "τ = {tau}: {p:?} ⊄ {d:?}");
        }
        previous = previous.or(d).and(d);
    }
}

#[test]
fn rank_deficient_unregularized_solve_refused() {
    let g = fixtures::single_shot_grid(65, None);
    let op = fixtures::operator(&g, 0.5);
    let f = fixtures::single_shot_input(&g);
    let m = SingleMeasurement::new(&g, f.clone(), op.apply_rows(&f, g.w2())).unwrap();
    let opts = FieldRecoveryOptions { alpha: Some(0.0), nonnegative: false, ..FieldRecoveryOptions::default() };
    assert!(recover_field(&op, &m, &opts).is_err());
    let bad = CoefficientField::new(&g, vec![vec![-1.0; g.omega().len()]]);
    assert!(bad.is_err());
}
