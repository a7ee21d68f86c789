//! Structural invariants run by `verify` on the configured problem.

use crate::config::ExperimentConfig;
use calderon::bell::bell_remainder_scalar;
use calderon::dnmap::duality_pair;
use calderon::forward::{solve_linear, solve_semilinear, LinearProblem};
use calderon::linalg::condition_number;
use calderon::reconstruct::{
    eps_derivative, runge_control, stencil_error_estimate, stencil_weights, EpsilonPanel, LinearizationModel,
};
use calderon::single_shot::{recover_a_along_solution, recover_field, SingleMeasurement};
use calderon::{CoefficientField, FieldVector, Grid, IndexRange, NonlocalOperator};
use calderon_oracles::{damped_newton, series};
use nalgebra::DMatrix;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }

    fn errored(name: &str, e: impl std::fmt::Display) -> Self {
        Self::new(name, false, format!("error: {e}"))
    }
}

/// Everything the checks share, built once from the configuration.
pub struct Problem {
    pub config: ExperimentConfig,
    pub grid: Grid<f64>,
    pub op: NonlocalOperator<f64>,
    pub coeff: CoefficientField<f64>,
    pub input: FieldVector<f64>,
}

impl Problem {
    pub fn new(config: &ExperimentConfig) -> calderon::Result<Self> {
        let grid = config.grid()?;
        let op = config.operator()?;
        let coeff = config.coefficients(&grid)?;
        let input = config.input(&grid)?;
        Ok(Self { config: config.clone(), grid, op, coeff, input })
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(stream);
        rng
    }
}

fn random_on(rng: &mut ChaCha8Rng, n: usize, nodes: impl Iterator<Item = usize>, lo: f64, hi: f64) -> FieldVector<f64> {
    let mut v = FieldVector::zeros(n);
    for i in nodes {
        v[i] = rng.random_range(lo..hi);
    }
    v
}

/// Random nonnegative `q`, `F`, `f` give `u ≥ -1e-12` everywhere and a
/// positive minimum over the free nodes.
pub fn maximum_principle(p: &Problem, draws: usize) -> CheckResult {
    let name = "maximum_principle";
    let mut rng = p.rng(1);
    let n = p.grid.n_nodes();
    let free = p.grid.unknowns();
    let mut worst_min = f64::INFINITY;
    let mut worst_interior = f64::INFINITY;
    for _ in 0..draws {
        let q = random_on(&mut rng, n, free.iter().copied(), 0.0, 5.0);
        let source = random_on(&mut rng, n, free.iter().copied(), 0.0, 1.0);
        let f = random_on(&mut rng, n, p.grid.w1().iter(), 0.0, 1.0);
        let problem = LinearProblem { operator: &p.op, potential: q, source, exterior: f };
        match solve_linear(&problem) {
            Ok(u) => {
                worst_min = u.iter().fold(worst_min, |m, &v| m.min(v));
                worst_interior = free.iter().fold(worst_interior, |m, &i| m.min(u[i]));
            }
            Err(e) => return CheckResult::errored(name, e),
        }
    }
    let passed = worst_min >= -1e-12 && worst_interior > 0.0;
    CheckResult::new(name, passed, format!("{draws} draws: min u = {worst_min:e}, min over free nodes = {worst_interior:e}"))
}

/// The fixed-point solve of the configured input converges, contracts and
/// leaves a small residual.
pub fn contraction(p: &Problem) -> CheckResult {
    let name = "contraction";
    let opts = p.config.solve_options(&p.coeff);
    match solve_semilinear(&p.op, &p.coeff, &p.input, &opts) {
        Ok(rep) => {
            let ratio = rep.fitted_ratio();
            let residual_ok = rep.residual <= 1e-10_f64.max(10.0 * opts.tol);
            let passed = rep.converged && residual_ok && ratio.is_none_or(|r| r < 1.0);
            CheckResult::new(
                name,
                passed,
                format!("{} iterations, residual {:e}, fitted ratio {:?}", rep.iterations, rep.residual, ratio),
            )
        }
        Err(e) => CheckResult::errored(name, e),
    }
}

/// The contraction solution agrees with damped Newton on the same system.
pub fn newton_agreement(p: &Problem) -> CheckResult {
    let name = "newton_agreement";
    let opts = p.config.solve_options(&p.coeff);
    let u = match solve_semilinear(&p.op, &p.coeff, &p.input, &opts) {
        Ok(rep) => rep.solution,
        Err(e) => return CheckResult::errored(name, e),
    };
    match damped_newton(&p.op, &p.coeff, &p.input, 1e-14, 50) {
        Some(newton) => {
            let gap = u.sub(&newton.solution).max_norm();
            CheckResult::new(name, gap <= 1e-8, format!("max-norm gap {gap:e}"))
        }
        None => CheckResult::new(name, false, "Newton oracle did not converge".into()),
    }
}

/// Energy pairing against flux sum for random exterior pairs.
pub fn duality(p: &Problem, pairs: usize) -> CheckResult {
    let name = "duality";
    let mut rng = p.rng(2);
    let n = p.grid.n_nodes();
    let scale = p.input.max_norm();
    let exterior: Vec<usize> = (1..n - 1).filter(|&i| p.grid.is_exterior(i)).collect();
    let opts = p.config.solve_options(&p.coeff);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let f = random_on(&mut rng, n, p.grid.w1().iter(), 0.0, scale);
        let phi = random_on(&mut rng, n, exterior.iter().copied(), -1.0, 1.0);
        match duality_pair(&p.op, &p.coeff, &f, &phi, &opts) {
            Ok((e, s)) => worst = worst.max((e - s).abs() / e.abs().max(s.abs()).max(f64::MIN_POSITIVE)),
            Err(e) => return CheckResult::errored(name, e),
        }
    }
    CheckResult::new(name, worst <= 1e-10, format!("{pairs} pairs, worst relative gap {worst:e}"))
}

/// Bell remainders against plain power-series composition in exact rationals.
pub fn bell_exactness(p: &Problem, cases: usize) -> CheckResult {
    let mut rng = p.rng(3);
    let mut mismatches = 0;
    for c in 0..cases {
        let order = 1 + c % 5;
        let a: Vec<Ratio<i64>> = (0..5).map(|_| Ratio::from_integer(rng.random_range(-6..=6))).collect();
        let u: Vec<Ratio<i64>> = (0..5).map(|_| Ratio::from_integer(rng.random_range(-4..=4))).collect();
        if bell_remainder_scalar(order, &a, &u) != series::remainder(order, &a, &u) {
            mismatches += 1;
        }
    }
    CheckResult::new("bell_exactness", mismatches == 0, format!("{mismatches} mismatches in {cases} rational cases, N ≤ 5"))
}

/// Largest gap between ε-stencil derivatives of measured flux and the flux of
/// the solved linearizations, against truncation plus propagated sample error.
pub fn linearization_gaps(
    op: &NonlocalOperator<f64>,
    coeff: &CoefficientField<f64>,
    panel: &EpsilonPanel<f64>,
    max_order: usize,
) -> calderon::Result<Vec<(usize, f64, f64)>> {
    let grid = op.grid();
    let model = LinearizationModel::new(op, coeff)?;
    let free = grid.unknowns();
    let q = coeff.potential();
    let interior = DMatrix::from_fn(free.len(), free.len(), |r, c| {
        op.matrix()[(free[r], free[c])] + if r == c { q[free[r]] } else { 0.0 }
    });
    let sample_error = condition_number(&interior) * f64::EPSILON;
    let mut out = Vec::new();
    for k in 1..=max_order {
        let weights = stencil_weights(panel.epsilons(), k)?;
        let (mut gap, mut bound) = (0.0f64, 0.0f64);
        for p in 0..panel.n_inputs() {
            let fields = model.fields(&panel.inputs()[p], k)?;
            let exact = model.flux(&fields[k - 1]);
            let measured = eps_derivative(panel, p, k)?;
            let estimate = stencil_error_estimate(panel, p, k)?;
            let rounding = weights.iter().zip(&panel.samples()[p]).fold(0.0f64, |acc, (w, s)| {
                acc + w.abs() * s.flux.iter().fold(0.0f64, |m, v| m.max(v.abs())) * sample_error
            });
            let g = measured.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let b = 2.0 * estimate.iter().fold(0.0f64, |m, v| m.max(v.abs())) + rounding;
            // Compare per input; report the input closest to violating.
            if gap == 0.0 || g / b > gap / bound {
                gap = g;
                bound = b;
            }
        }
        out.push((k, gap, bound));
    }
    Ok(out)
}

pub fn linearization_consistency(p: &Problem) -> CheckResult {
    let name = "linearization_consistency";
    let inputs = match p.config.panel_inputs(&p.grid) {
        Ok(v) => v,
        Err(e) => return CheckResult::errored(name, e),
    };
    let opts = p.config.solve_options(&p.coeff);
    let panel = match EpsilonPanel::measure(&p.op, &p.coeff, inputs, p.config.panel.epsilons.clone(), &opts) {
        Ok(panel) => panel,
        Err(e) => return CheckResult::errored(name, e),
    };
    let max_order = p.coeff.degree().clamp(1, 3).min(panel.max_supported_order());
    match linearization_gaps(&p.op, &p.coeff, &panel, max_order) {
        Ok(gaps) => {
            let passed = gaps.iter().all(|&(_, g, b)| g <= b);
            let detail = gaps.iter().map(|(k, g, b)| format!("k={k}: gap {g:e} vs {b:e}")).collect::<Vec<_>>().join("; ");
            CheckResult::new(name, passed, detail)
        }
        Err(e) => CheckResult::errored(name, e),
    }
}

/// Field recovery from one measurement fits its own data.
pub fn single_shot_fit(p: &Problem) -> CheckResult {
    let name = "single_shot_fit";
    let opts = p.config.solve_options(&p.coeff);
    let result = (|| {
        let u = solve_semilinear(&p.op, &p.coeff, &p.input, &opts)?.solution;
        let plain = p.op.with_obstacle(None)?;
        let m = SingleMeasurement::new(plain.grid(), p.input.clone(), p.op.apply_rows(&u, p.grid.w2()))?;
        recover_field(&plain, &m, &p.config.field_options())
    })();
    match result {
        Ok(rec) => CheckResult::new(name, rec.residual <= 1e-8, format!("data residual {:e}, α = {:e}", rec.residual, rec.alpha)),
        Err(e) => CheckResult::errored(name, e),
    }
}

/// Reading `a(x, u)` back from the equation along an exact solution.
pub fn equation_identity(p: &Problem) -> CheckResult {
    let name = "equation_identity";
    let opts = p.config.solve_options(&p.coeff);
    match solve_semilinear(&p.op, &p.coeff, &p.input, &opts) {
        Ok(rep) => {
            let read = recover_a_along_solution(&p.op, &rep.solution);
            let exact = p.coeff.eval(&rep.solution);
            let gap = p.grid.unknowns().iter().fold(0.0f64, |m, &i| m.max((read[i] - exact[i]).abs()));
            let tol = 10.0 * opts.tol.max(rep.residual);
            CheckResult::new(name, gap <= tol, format!("max gap {gap:e} against {tol:e}"))
        }
        Err(e) => CheckResult::errored(name, e),
    }
}

/// The approximation residual falls strictly as the control weight shrinks.
pub fn runge_monotone(p: &Problem) -> CheckResult {
    let name = "runge_monotone";
    let result = (|| {
        let target = p.config.runge.target.field_on(&p.grid, p.grid.omega())?;
        let mut lambdas = p.config.runge.lambdas.clone();
        lambdas.sort_by(|a, b| b.total_cmp(a));
        lambdas.dedup();
        lambdas
            .iter()
            .map(|&l| runge_control(&p.op, p.coeff.potential(), &target, l).map(|r| r.residual))
            .collect::<calderon::Result<Vec<f64>>>()
    })();
    match result {
        Ok(r) => {
            let passed = r.windows(2).all(|w| w[1] < w[0]);
            CheckResult::new(name, passed, format!("residuals {r:?}"))
        }
        Err(e) => CheckResult::errored(name, e),
    }
}

/// Two in-process renderings of the forward artifacts are byte-identical.
pub fn determinism(config: &ExperimentConfig) -> CheckResult {
    let name = "determinism";
    let bytes = config.to_json().into_bytes();
    let render = || crate::run::run(crate::run::Command::Forward, config, &bytes).map(|o| o.artifacts.files);
    match (render(), render()) {
        (Ok(a), Ok(b)) => CheckResult::new(name, a == b, format!("{} files compared", a.len())),
        (Err(e), _) | (_, Err(e)) => CheckResult::errored(name, e),
    }
}

/// The full `verify` suite.
pub fn verify_suite(config: &ExperimentConfig) -> Vec<CheckResult> {
    let p = match Problem::new(config) {
        Ok(p) => p,
        Err(e) => return vec![CheckResult::errored("setup", e)],
    };
    vec![
        maximum_principle(&p, 20),
        contraction(&p),
        newton_agreement(&p),
        duality(&p, 10),
        bell_exactness(&p, 50),
        linearization_consistency(&p),
        single_shot_fit(&p),
        equation_identity(&p),
        runge_monotone(&p),
        determinism(config),
    ]
}

/// Node range helper for reports: physical end points of a snapped interval.
pub fn physical(grid: &Grid<f64>, r: IndexRange) -> (f64, f64) {
    (grid.x(r.start), grid.x(r.end - 1))
}
