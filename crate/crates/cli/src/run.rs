//! Subcommand pipelines and their exit codes.

use crate::checks::{self, physical, CheckResult};
use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{field_csv, flux_csv, json, Manifest, RunArtifacts};
use calderon::dnmap::{flux_pairing, DnSample};
use calderon::forward::solve_semilinear;
use calderon::reconstruct::{
    eps_derivative, recover_coefficients, recover_obstacle_and_coeffs, runge_control, stencil_error_estimate,
    EpsilonPanel, ReconstructionReport,
};
use calderon::single_shot::{detect_obstacle, recover_a_along_solution, SingleMeasurement};
use calderon::{Error, Grid, IndexRange, NonlocalOperator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::io;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Forward,
    Dnmap,
    Panel,
    RecoverCoeff,
    RecoverObstacle,
    RecoverSingle,
    Runge,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::Dnmap => "dnmap",
            Command::Panel => "panel",
            Command::RecoverCoeff => "recover-coeff",
            Command::RecoverObstacle => "recover-obstacle",
            Command::RecoverSingle => "recover-single",
            Command::Runge => "runge",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write outputs: {0}")]
    Write(#[source] io::Error),
    #[error(transparent)]
    Library(#[from] Error),
    #[error("{} invariant check(s) failed: {}", .0.len(), .0.join(", "))]
    Invariants(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Read { .. } => 2,
            CliError::Library(e) => match e {
                Error::NoContraction(_) => 3,
                Error::RankDeficient { .. } | Error::IllPosedDiscretization => 4,
                _ => 2,
            },
            CliError::Invariants(_) | CliError::Write(_) => 1,
        }
    }
}

/// Artifacts of one run plus the names of any failed checks (`verify` only).
#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifacts: RunArtifacts,
    pub failures: Vec<String>,
}

struct Stopwatch {
    start: Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self { start: Instant::now() }
    }

    fn lap(&mut self, manifest: &mut Manifest, stage: &str) {
        let now = Instant::now();
        manifest.timings_ms.insert(stage.to_string(), (now - self.start).as_secs_f64() * 1e3);
        self.start = now;
    }
}

/// Executes `command` on `config`; `config_bytes` are hashed into the manifest.
pub fn run(command: Command, config: &ExperimentConfig, config_bytes: &[u8]) -> Result<Outcome, CliError> {
    config.validate()?;
    let mut artifacts = RunArtifacts::new(Manifest::new(command.name(), config_bytes));
    let mut clock = Stopwatch::start();
    let grid = config.grid()?;
    let op = NonlocalOperator::assemble(&grid, calderon::FractionalOrder::new(config.s)?)?;
    clock.lap(&mut artifacts.manifest, "assemble");
    let mut failures = Vec::new();
    match command {
        Command::Forward => forward(config, &op, &mut artifacts)?,
        Command::Dnmap => dnmap(config, &op, &mut artifacts)?,
        Command::Panel => panel(config, &op, &mut artifacts)?,
        Command::RecoverCoeff => recover_coeff(config, &op, &mut artifacts)?,
        Command::RecoverObstacle => recover_obstacle(config, &op, &mut artifacts)?,
        Command::RecoverSingle => recover_single(config, &op, &mut artifacts)?,
        Command::Runge => runge(config, &op, &mut artifacts)?,
        Command::Verify => {
            let results = checks::verify_suite(config);
            failures = results.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect();
            artifacts.add("report.json", json(&VerifyReport { passed: failures.is_empty(), checks: results }));
        }
    }
    clock.lap(&mut artifacts.manifest, command.name());
    Ok(Outcome { artifacts, failures })
}

#[derive(Serialize)]
struct VerifyReport {
    passed: bool,
    checks: Vec<CheckResult>,
}

#[derive(Serialize)]
struct ForwardReport {
    iterations: usize,
    converged: bool,
    residual: f64,
    fitted_ratio: Option<f64>,
    contraction_history: Vec<f64>,
    max_u_omega: f64,
    max_linear_deviation: f64,
}

fn forward(config: &ExperimentConfig, op: &NonlocalOperator<f64>, out: &mut RunArtifacts) -> Result<(), CliError> {
    let grid = op.grid();
    let coeff = config.coefficients(grid)?;
    let f = config.input(grid)?;
    let rep = solve_semilinear(op, &coeff, &f, &config.solve_options(&coeff))?;
    let sample = DnSample::from_solution(op, &rep.solution, 0, 1.0);
    let report = ForwardReport {
        iterations: rep.iterations,
        converged: rep.converged,
        residual: rep.residual,
        fitted_ratio: rep.fitted_ratio(),
        max_u_omega: rep.solution.max_norm_on(grid.omega().iter()),
        max_linear_deviation: rep.solution.sub(&rep.u0).max_norm(),
        contraction_history: rep.contraction_history,
    };
    out.add("u.csv", field_csv(grid, &rep.solution));
    out.add("flux.csv", flux_csv(grid, [&sample]));
    out.add("report.json", json(&report));
    Ok(())
}

#[derive(Serialize)]
struct DnEntry {
    input_id: usize,
    epsilon: f64,
    max_flux: f64,
    /// `⟨Λ(εf), εf⟩` over the input's own support.
    self_pairing: f64,
}

fn dnmap(config: &ExperimentConfig, op: &NonlocalOperator<f64>, out: &mut RunArtifacts) -> Result<(), CliError> {
    let grid = op.grid();
    let coeff = config.coefficients(grid)?;
    let opts = config.solve_options(&coeff);
    let epsilon = config.panel.epsilons.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let mut samples = Vec::new();
    let mut entries = Vec::new();
    for (p, f) in config.panel_inputs(grid)?.iter().enumerate() {
        let scaled = f.scaled(epsilon);
        let u = solve_semilinear(op, &coeff, &scaled, &opts)?.solution;
        let sample = DnSample::from_solution(op, &u, p, epsilon);
        entries.push(DnEntry {
            input_id: p,
            epsilon,
            max_flux: sample.flux.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            self_pairing: flux_pairing(op, &u, &scaled),
        });
        samples.push(sample);
    }
    out.add("flux.csv", flux_csv(grid, &samples));
    out.add("report.json", json(&entries));
    Ok(())
}

fn measure_panel(config: &ExperimentConfig, op: &NonlocalOperator<f64>) -> Result<EpsilonPanel<f64>, CliError> {
    let grid = op.grid();
    let coeff = config.coefficients(grid)?;
    let inputs = config.panel_inputs(grid)?;
    let panel = EpsilonPanel::measure(op, &coeff, inputs, config.panel.epsilons.clone(), &config.solve_options(&coeff))?;
    Ok(add_noise(grid, panel, config.regularization.noise, config.seed)?)
}

/// Adds `noise · ‖d‖_∞ · N(0, 1)` to every flux value of every sample.
fn add_noise(grid: &Grid<f64>, panel: EpsilonPanel<f64>, noise: f64, seed: u64) -> calderon::Result<EpsilonPanel<f64>> {
    if noise == 0.0 {
        return Ok(panel);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = panel.samples().to_vec();
    for sample in samples.iter_mut().flatten() {
        let scale = noise * sample.flux.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for v in sample.flux.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += scale * z;
        }
    }
    EpsilonPanel::from_samples(grid, panel.inputs().to_vec(), panel.epsilons().to_vec(), samples)
}

#[derive(Serialize)]
struct OrderSummary {
    order: usize,
    /// Largest `|∂_ε^k Λ|` over inputs and `w2` nodes.
    max_derivative: f64,
    /// Largest Richardson estimate of the stencil error.
    max_stencil_error: f64,
}

fn panel(config: &ExperimentConfig, op: &NonlocalOperator<f64>, out: &mut RunArtifacts) -> Result<(), CliError> {
    let panel = measure_panel(config, op)?;
    let top = config.coefficients.degree.min(panel.max_supported_order());
    let mut summary = Vec::new();
    for k in 1..=top {
        let (mut d, mut e) = (0.0f64, 0.0f64);
        for p in 0..panel.n_inputs() {
            d = eps_derivative(&panel, p, k)?.iter().fold(d, |m, v| m.max(v.abs()));
            e = stencil_error_estimate(&panel, p, k)?.iter().fold(e, |m, v| m.max(v.abs()));
        }
        summary.push(OrderSummary { order: k, max_derivative: d, max_stencil_error: e });
    }
    out.add("flux.csv", flux_csv(op.grid(), panel.samples().iter().flatten()));
    out.add("report.json", json(&summary));
    Ok(())
}

#[derive(Serialize)]
struct CoefficientReport {
    /// Coordinates of the `omega` nodes the coefficient arrays refer to.
    x: Vec<f64>,
    #[serde(flatten)]
    report: ReconstructionReport<f64>,
}

fn omega_coordinates(grid: &Grid<f64>) -> Vec<f64> {
    grid.omega().iter().map(|i| grid.x(i)).collect()
}

fn recover_coeff(config: &ExperimentConfig, op: &NonlocalOperator<f64>, out: &mut RunArtifacts) -> Result<(), CliError> {
    let grid = op.grid();
    let truth = config.coefficients(grid)?;
    let panel = measure_panel(config, op)?;
    let mut report =
        recover_coefficients(op, &panel, config.coefficients.degree, &config.recovery_options(), Some(&truth))?;
    report.obstacle = grid.obstacle();
    out.add("flux.csv", flux_csv(grid, panel.samples().iter().flatten()));
    out.add("report.json", json(&CoefficientReport { x: omega_coordinates(grid), report }));
    Ok(())
}

#[derive(Serialize)]
struct ObstacleReport {
    x: Vec<f64>,
    true_obstacle: Option<IndexRange>,
    true_obstacle_x: Option<(f64, f64)>,
    detected_x: Option<(f64, f64)>,
    /// Node offsets `(start, end)` of the detected run from the true one.
    endpoint_offsets: Option<(i64, i64)>,
    #[serde(flatten)]
    report: ReconstructionReport<f64>,
}

fn recover_obstacle(config: &ExperimentConfig, op: &NonlocalOperator<f64>, out: &mut RunArtifacts) -> Result<(), CliError> {
    let grid = op.grid();
    let truth = config.coefficients(grid)?;
    let panel = measure_panel(config, op)?;
    let (detected, report) = recover_obstacle_and_coeffs(
        op,
        &panel,
        config.coefficients.degree,
        &config.recovery_options(),
        &config.obstacle_options(),
        Some(&truth),
    )?;
    let true_obstacle = grid.obstacle();
    let offsets = true_obstacle
        .zip(detected)
        .map(|(t, d)| (d.start as i64 - t.start as i64, d.end as i64 - t.end as i64));
    let summary = ObstacleReport {
        x: omega_coordinates(grid),
        true_obstacle,
        true_obstacle_x: true_obstacle.map(|r| physical(grid, r)),
        detected_x: detected.map(|r| physical(grid, r)),
        endpoint_offsets: offsets,
        report,
    };
    out.add("flux.csv", flux_csv(grid, panel.samples().iter().flatten()));
    out.add("report.json", json(&summary));
    Ok(())
}

#[derive(Serialize)]
struct SingleReport {
    x: Vec<f64>,
    alpha: f64,
    residual: f64,
    relative_residual: f64,
    /// Max-norm error of `û` on `omega` against the forward solution.
    field_error: f64,
    /// `a(x, û(x))` on `omega`, zero on a known obstacle.
    a_along_field: Vec<f64>,
    detected: Option<IndexRange>,
    detected_x: Option<(f64, f64)>,
}

fn recover_single(config: &ExperimentConfig, op: &NonlocalOperator<f64>, out: &mut RunArtifacts) -> Result<(), CliError> {
    let grid = op.grid();
    let coeff = config.coefficients(grid)?;
    let f = config.input(grid)?;
    let u = solve_semilinear(op, &coeff, &f, &config.solve_options(&coeff))?.solution;
    let mut flux = op.apply_rows(&u, grid.w2());
    if config.regularization.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let scale = config.regularization.noise * flux.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for v in flux.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += scale * z;
        }
    }
    let plain = op.with_obstacle(None)?;
    let m = SingleMeasurement::new(plain.grid(), f, flux.clone())?;
    let (detected, rec) = detect_obstacle(&plain, &m, &config.field_options(), config.regularization.tau)?;
    let omega = grid.omega();
    let read = recover_a_along_solution(op, &rec.field);
    let report = SingleReport {
        x: omega_coordinates(grid),
        alpha: rec.alpha,
        residual: rec.residual,
        relative_residual: rec.relative_residual,
        field_error: rec.field.sub(&u).max_norm_on(omega.iter()),
        a_along_field: read.restrict(omega),
        detected,
        detected_x: detected.map(|r| physical(grid, r)),
    };
    let sample = DnSample { flux, ..DnSample::from_solution(op, &u, 0, 1.0) };
    out.add("u.csv", field_csv(grid, &rec.field));
    out.add("flux.csv", flux_csv(grid, [&sample]));
    out.add("report.json", json(&report));
    Ok(())
}

#[derive(Serialize)]
struct RungeReport {
    lambdas: Vec<f64>,
    residuals: Vec<f64>,
    relative_residuals: Vec<f64>,
    target_norm: f64,
    strictly_decreasing: bool,
    /// Control for the smallest weight, on the `w1` nodes.
    control: Vec<f64>,
}

fn runge(config: &ExperimentConfig, op: &NonlocalOperator<f64>, out: &mut RunArtifacts) -> Result<(), CliError> {
    let grid = op.grid();
    let coeff = config.coefficients(grid)?;
    let target = config.runge.target.field_on(grid, grid.omega())?;
    let mut lambdas = config.runge.lambdas.clone();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    lambdas.dedup();
    let mut residuals = Vec::new();
    let mut last = None;
    for &l in &lambdas {
        let c = runge_control(op, coeff.potential(), &target, l)?;
        residuals.push(c.residual);
        last = Some(c);
    }
    let last = last.expect("validated configs carry at least one weight");
    let report = RungeReport {
        relative_residuals: residuals.iter().map(|r| r / last.target_norm).collect(),
        strictly_decreasing: residuals.windows(2).all(|w| w[1] < w[0]),
        target_norm: last.target_norm,
        control: last.control.restrict(grid.w1()),
        lambdas,
        residuals,
    };
    out.add("u.csv", field_csv(grid, &last.state));
    out.add("report.json", json(&report));
    Ok(())
}
