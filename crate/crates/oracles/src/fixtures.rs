//! Synthetic setups shared by the test suites.

use calderon::forward::SolveOptions;
use calderon::reconstruct::EpsilonPanel;
use calderon::{CoefficientField, FieldVector, FractionalOrder, Grid, IndexRange, NonlocalOperator, Profile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bump(center: f64, width: f64, height: f64) -> Profile {
    Profile::Bump { center, width, height }
}

/// Ground-truth coefficient bumps `a_1, a_2, a_3`.
pub fn truth_profiles() -> [Profile; 3] {
    [bump(0.1, 0.7, 2.0), bump(-0.2, 0.6, 3.0), bump(0.3, 0.6, 4.0)]
}

/// Box `[-4, 4]`, `Ω = (-1, 1)`, inputs on `(1.25, 3)`, flux on `(-3, -1.25)`.
pub fn recovery_grid(n_nodes: usize, obstacle: Option<(f64, f64)>) -> Grid<f64> {
    Grid::from_physical(4.0, n_nodes, (-1.0, 1.0), (1.25, 3.0), (-3.0, -1.25), obstacle).expect("fixture grid")
}

pub fn operator(grid: &Grid<f64>, s: f64) -> NonlocalOperator<f64> {
    NonlocalOperator::assemble(grid, FractionalOrder::new(s).expect("order in (0,1)")).expect("assembly")
}

/// First `degree` truth coefficients on `grid`.
pub fn truth(grid: &Grid<f64>, degree: usize) -> CoefficientField<f64> {
    let omega = grid.omega();
    let per_order = truth_profiles()[..degree].iter().map(|p| p.sample(grid, omega).expect("analytic")).collect();
    CoefficientField::new(grid, per_order).expect("valid truth")
}

/// `count` nonnegative bumps of half-width 0.5 centred evenly across `w1`.
pub fn panel_inputs(grid: &Grid<f64>, count: usize) -> Vec<FieldVector<f64>> {
    let w1 = grid.w1();
    let (a, b) = (grid.x(w1.start), grid.x(w1.end - 1));
    (0..count)
        .map(|j| {
            let c = a + (b - a) * (j as f64 + 0.5) / count as f64;
            bump(c, 0.5, 1.0).field_on(grid, w1).expect("analytic")
        })
        .collect()
}

/// Seven amplitudes `±k·ε_max/3` and zero.
pub fn amplitudes(eps_max: f64) -> Vec<f64> {
    (-3..=3).map(|k| eps_max * k as f64 / 3.0).collect()
}

/// Panel of `P` inputs at the default amplitudes for the given truth.
pub fn panel(op: &NonlocalOperator<f64>, truth: &CoefficientField<f64>, inputs: usize) -> EpsilonPanel<f64> {
    EpsilonPanel::measure(op, truth, panel_inputs(op.grid(), inputs), amplitudes(1e-2), &SolveOptions::default())
        .expect("panel solves")
}

/// Obstacle of `cells` cells (even) centred on node `center`.
pub fn obstacle_cells(center: usize, cells: usize) -> IndexRange {
    IndexRange::new(center - cells / 2, center + cells / 2 + 1)
}

/// Box `[-4, 4]` with `Ω = (-0.75, 0.75)` and wide windows `(1, 3.875)`,
/// `(-3.875, -1)`: at 65 nodes, 13 unknowns against 24 flux rows.
pub fn single_shot_grid(n_nodes: usize, obstacle: Option<(f64, f64)>) -> Grid<f64> {
    Grid::from_physical(4.0, n_nodes, (-0.75, 0.75), (1.0, 3.875), (-3.875, -1.0), obstacle).expect("fixture grid")
}

/// Input `0.1·bump(2.2, 1)` on `w1`.
pub fn single_shot_input(grid: &Grid<f64>) -> FieldVector<f64> {
    bump(2.2, 1.0, 0.1).field_on(grid, grid.w1()).expect("analytic")
}

/// One randomized no-obstacle configuration for the false-positive sweep.
#[derive(Debug, Clone)]
pub struct RandomCase {
    pub s: f64,
    pub grid: Grid<f64>,
    pub coeff: CoefficientField<f64>,
    pub input: FieldVector<f64>,
}

/// `count` configurations drawn from `seed`: `n ∈ {65, 129}` alternating,
/// `s ∈ [0.2, 0.8)`, bump coefficients `a_1 ≥ 0`, `a_2` of either sign, and a
/// positive bump input of random position, width and amplitude.
pub fn random_cases(seed: u64, count: usize) -> Vec<RandomCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|trial| {
            let s = rng.random_range(0.2..0.8);
            let grid = single_shot_grid(if trial % 2 == 0 { 65 } else { 129 }, None);
            let (qc, qh) = (rng.random_range(-0.5..0.5), rng.random_range(0.0..5.0));
            let (ac, ah) = (rng.random_range(-0.5..0.5), rng.random_range(-5.0..5.0));
            let omega = grid.omega();
            let coeff = CoefficientField::new(
                &grid,
                vec![
                    bump(qc, 0.6, qh).sample(&grid, omega).expect("analytic"),
                    bump(ac, 0.6, ah).sample(&grid, omega).expect("analytic"),
                ],
            )
            .expect("nonnegative potential");
            let (fc, fw, fa) = (rng.random_range(1.5..3.0), rng.random_range(0.3..0.9), rng.random_range(1e-3..1e-1));
            let input = bump(fc, fw, fa).field_on(&grid, grid.w1()).expect("analytic");
            RandomCase { s, grid, coeff, input }
        })
        .collect()
}

/// Recovery box with windows widened to `(1.125, 3.875)` and
/// `(-3.875, -1.125)`: at 129 nodes, 45 flux rows against 33 unknowns, so the
/// single-measurement field inversion is oversampled.
pub fn obstacle_grid(n_nodes: usize, obstacle: Option<(f64, f64)>) -> Grid<f64> {
    Grid::from_physical(4.0, n_nodes, (-1.0, 1.0), (1.125, 3.875), (-3.875, -1.125), obstacle).expect("fixture grid")
}

/// Random smooth target on `omega`: `Σ_{k<6} (a_k cos(kπt) + b_k sin(kπt))`
/// with `t` the rescaled coordinate in `[-1, 1]` and coefficients drawn
/// uniformly from `[-1, 1] / (1 + k)`.
pub fn random_smooth_target(grid: &Grid<f64>, seed: u64) -> FieldVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64)> =
        (0..6).map(|k| (rng.random_range(-1.0..1.0) / (1.0 + k as f64), rng.random_range(-1.0..1.0) / (1.0 + k as f64))).collect();
    let omega = grid.omega();
    let (a, b) = (grid.x(omega.start), grid.x(omega.end - 1));
    FieldVector::supported_on(grid, omega, |x| {
        let t = 2.0 * (x - a) / (b - a) - 1.0;
        modes.iter().enumerate().fold(0.0, |acc, (k, &(c, s))| {
            let w = std::f64::consts::PI * k as f64 * t;
            acc + c * w.cos() + s * w.sin()
        })
    })
}

/// Potential `1 + x²` on `omega` for the approximation experiments.
pub fn runge_potential(grid: &Grid<f64>) -> FieldVector<f64> {
    FieldVector::supported_on(grid, grid.omega(), |x| 1.0 + x * x)
}
