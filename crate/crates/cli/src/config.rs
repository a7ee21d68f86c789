//! Experiment configuration: JSON schema, validation and the library objects
//! it describes.

use calderon::forward::{SolveOptions, default_admissibility};
use calderon::reconstruct::{validate_epsilons, ObstacleOptions, RecoveryOptions};
use calderon::single_shot::{FieldRecoveryOptions, DEFAULT_TAU};
use calderon::{snap_interval, CoefficientField, FieldVector, FractionalOrder, Grid, IndexRange, NonlocalOperator, Profile};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub s: f64,
    /// Half width of the computational box `[-L, L]`.
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n_nodes: usize,
    pub omega: (f64, f64),
    pub w1: (f64, f64),
    pub w2: (f64, f64),
    #[serde(default)]
    pub obstacle: Option<(f64, f64)>,
    pub coefficients: CoefficientSpec,
    /// Exterior datum for `forward`, `dnmap` and `recover-single`; the first
    /// panel input when absent.
    #[serde(default)]
    pub input: Option<Profile>,
    #[serde(default)]
    pub panel: PanelSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub regularization: RegularizationSpec,
    #[serde(default)]
    pub runge: RungeSpec,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// `a_k` for `k = 1..=degree`, each sampled on the `omega` nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub degree: usize,
    pub profiles: Vec<Profile>,
}

/// Input profiles restricted to `w1`; an empty list means four unit bumps
/// spread evenly across the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelSpec {
    #[serde(default)]
    pub inputs: Vec<Profile>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
}

impl Default for PanelSpec {
    fn default() -> Self {
        Self { inputs: Vec::new(), epsilons: default_epsilons() }
    }
}

fn default_epsilons() -> Vec<f64> {
    (-3..=3).map(|k| 1e-2 * k as f64 / 3.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
    /// Enforce the default admissible data size before iterating.
    #[serde(default)]
    pub enforce_admissibility: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { tol: 1e-13, max_iter: 200, enforce_admissibility: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationSpec {
    /// Gauss–Newton weight for `a_1`; the decade ladder when absent.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Weight for `a_k`, `k ≥ 2`; the discrepancy rule when absent.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Weight for the single-measurement field inversion.
    #[serde(default)]
    pub field_alpha: Option<f64>,
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Relative Gaussian noise added to synthetic flux data (seeded).
    #[serde(default)]
    pub noise: f64,
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

impl Default for RegularizationSpec {
    fn default() -> Self {
        Self { lambda: None, alpha: None, field_alpha: None, tau: DEFAULT_TAU, noise: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RungeSpec {
    pub target: Profile,
    pub lambdas: Vec<f64>,
}

impl Default for RungeSpec {
    fn default() -> Self {
        Self { target: Profile::Constant { value: 1.0 }, lambdas: vec![1e-2, 1e-4, 1e-6] }
    }
}

/// One offending setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

/// Every violation found while reading a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration ({} problem", self.violations.len())?;
        if self.violations.len() != 1 {
            write!(f, "s")?;
        }
        write!(f, ")")?;
        for v in &self.violations {
            write!(f, "\n  {}: {}", v.path, v.message)?;
        }
        Ok(())
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation { path: path.into(), message: message.into() });
    }
}

/// Parses and validates a JSON configuration. Syntax and type errors stop at
/// the first problem; semantic checks report every violation.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError { violations: vec![Violation { path, message: e.into_inner().to_string() }] }
    })?;
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    /// The smallest useful setup: `s = 1/2`, 129 nodes on `[-4, 4]`,
    /// `Ω = (-1, 1)`, `a_1 ≡ 1`.
    pub fn minimal() -> Self {
        Self {
            s: 0.5,
            half_width: 4.0,
            n_nodes: 129,
            omega: (-1.0, 1.0),
            w1: (1.5, 2.0),
            w2: (-2.0, -1.5),
            obstacle: None,
            coefficients: CoefficientSpec { degree: 1, profiles: vec![Profile::Constant { value: 1.0 }] },
            input: Some(Profile::Bump { center: 1.75, width: 0.25, height: 1e-3 }),
            panel: PanelSpec::default(),
            solver: SolverSpec::default(),
            regularization: RegularizationSpec::default(),
            runge: RungeSpec::default(),
            seed: 0,
            output_dir: default_output_dir(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut c = Collector(Vec::new());
        if !(self.s > 0.0 && self.s < 1.0) {
            c.push("s", format!("fractional order must lie in (0, 1), got {}", self.s));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            c.push("L", format!("half width must be positive and finite, got {}", self.half_width));
        }
        if self.n_nodes < 5 || self.n_nodes.is_multiple_of(2) {
            c.push("n_nodes", format!("must be odd and at least 5, got {}", self.n_nodes));
        }
        let box_ok = self.half_width > 0.0 && self.half_width.is_finite() && self.n_nodes >= 5 && !self.n_nodes.is_multiple_of(2);
        let snapped = |name: &str, r: (f64, f64), c: &mut Collector| -> Option<IndexRange> {
            if !(r.0 < r.1) || !r.0.is_finite() || !r.1.is_finite() {
                c.push(name, format!("interval ({}, {}) must be finite and increasing", r.0, r.1));
                return None;
            }
            if box_ok && !(r.0 > -self.half_width && r.1 < self.half_width) {
                c.push(name, format!("interval ({}, {}) must lie inside the open box (-L, L)", r.0, r.1));
                return None;
            }
            if !box_ok {
                return None;
            }
            let range = snap_interval(self.half_width, self.n_nodes, r).ok()?;
            if range.start == 0 || range.end == self.n_nodes {
                c.push(name, "snaps onto the box boundary; shrink it or refine the mesh");
                return None;
            }
            Some(range)
        };
        let omega = snapped("omega", self.omega, &mut c);
        let w1 = snapped("w1", self.w1, &mut c);
        let w2 = snapped("w2", self.w2, &mut c);
        let obstacle = self.obstacle.and_then(|d| snapped("obstacle", d, &mut c));
        if let Some(om) = omega {
            for (name, w) in [("w1", w1), ("w2", w2)] {
                if let Some(w) = w {
                    if w.intersects(&om) {
                        c.push(name, "window overlaps omega after snapping; it must lie in the exterior (W ⋐ Ω_e)");
                    }
                }
            }
            if let Some(d) = obstacle {
                if !d.strictly_inside(&om) {
                    c.push("obstacle", "obstacle must lie strictly inside omega (D ⋐ Ω)");
                }
            }
        }
        self.validate_coefficients(omega, &mut c);
        self.validate_inputs(w1, &mut c);
        if let Err(e) = validate_epsilons(&self.panel.epsilons) {
            c.push("panel.epsilons", e.to_string());
        } else if self.panel.epsilons.len() < 2 * self.coefficients.degree + 1 {
            c.push(
                "panel.epsilons",
                format!("{} amplitudes cannot resolve derivatives up to order {}", self.panel.epsilons.len(), self.coefficients.degree),
            );
        }
        if !(self.solver.tol > 0.0) {
            c.push("solver.tol", "tolerance must be positive");
        }
        if self.solver.max_iter == 0 {
            c.push("solver.max_iter", "need at least one iteration");
        }
        for (name, v) in [
            ("regularization.lambda", self.regularization.lambda),
            ("regularization.alpha", self.regularization.alpha),
            ("regularization.field_alpha", self.regularization.field_alpha),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    c.push(name, "weight must be finite and nonnegative");
                }
            }
        }
        if !(self.regularization.tau > 0.0 && self.regularization.tau < 1.0) {
            c.push("regularization.tau", "threshold must lie in (0, 1)");
        }
        if !(self.regularization.noise >= 0.0 && self.regularization.noise.is_finite()) {
            c.push("regularization.noise", "noise level must be finite and nonnegative");
        }
        if self.runge.lambdas.is_empty() || self.runge.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            c.push("runge.lambdas", "need at least one positive weight");
        }
        if c.0.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { violations: c.0 })
        }
    }

    fn validate_coefficients(&self, omega: Option<IndexRange>, c: &mut Collector) {
        let spec = &self.coefficients;
        if spec.degree == 0 {
            c.push("coefficients.degree", "degree must be at least 1");
        }
        if spec.profiles.len() != spec.degree {
            c.push("coefficients.profiles", format!("expected {} profiles, found {}", spec.degree, spec.profiles.len()));
        }
        let Some(omega) = omega else { return };
        let Ok(grid) = self.plain_grid() else { return };
        for (k, p) in spec.profiles.iter().enumerate() {
            let path = format!("coefficients.profiles[{k}]");
            match p.sample(&grid, omega) {
                Err(e) => c.push(path, e.to_string()),
                Ok(v) if k == 0 && v.iter().any(|&q| q < 0.0) => {
                    c.push(path, "a_1 must be nonnegative: the condition ∂_z a(x, 0) ≥ 0 fails")
                }
                Ok(_) => {}
            }
        }
    }

    fn validate_inputs(&self, w1: Option<IndexRange>, c: &mut Collector) {
        let Some(w1) = w1 else { return };
        let Ok(grid) = self.plain_grid() else { return };
        let named = self.input.iter().map(|p| ("input".to_string(), p));
        let panel = self.panel.inputs.iter().enumerate().map(|(k, p)| (format!("panel.inputs[{k}]"), p));
        for (path, p) in named.chain(panel) {
            match p.sample(&grid, w1) {
                Err(e) => c.push(path, e.to_string()),
                Ok(v) if v.iter().any(|&x| x < 0.0) => c.push(path, "inputs must be nonnegative on w1"),
                Ok(v) if v.iter().all(|&x| x == 0.0) => c.push(path, "input vanishes on w1"),
                Ok(_) => {}
            }
        }
    }

    fn plain_grid(&self) -> calderon::Result<Grid<f64>> {
        Grid::from_physical(self.half_width, self.n_nodes, self.omega, self.w1, self.w2, None)
    }

    /// The grid with the configured obstacle (if any).
    pub fn grid(&self) -> calderon::Result<Grid<f64>> {
        Grid::from_physical(self.half_width, self.n_nodes, self.omega, self.w1, self.w2, self.obstacle)
    }

    pub fn operator(&self) -> calderon::Result<NonlocalOperator<f64>> {
        NonlocalOperator::assemble(&self.grid()?, FractionalOrder::new(self.s)?)
    }

    pub fn coefficients(&self, grid: &Grid<f64>) -> calderon::Result<CoefficientField<f64>> {
        let omega = grid.omega();
        let per_order = self.coefficients.profiles.iter().map(|p| p.sample(grid, omega)).collect::<calderon::Result<_>>()?;
        CoefficientField::new(grid, per_order)
    }

    pub fn panel_inputs(&self, grid: &Grid<f64>) -> calderon::Result<Vec<FieldVector<f64>>> {
        if self.panel.inputs.is_empty() {
            return Ok(default_inputs(grid));
        }
        self.panel.inputs.iter().map(|p| p.field_on(grid, grid.w1())).collect()
    }

    /// The forward/single-shot exterior datum.
    pub fn input(&self, grid: &Grid<f64>) -> calderon::Result<FieldVector<f64>> {
        match &self.input {
            Some(p) => p.field_on(grid, grid.w1()),
            None => Ok(self.panel_inputs(grid)?.swap_remove(0)),
        }
    }

    pub fn solve_options(&self, coeff: &CoefficientField<f64>) -> SolveOptions<f64> {
        SolveOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            max_data_norm: self.solver.enforce_admissibility.then(|| default_admissibility(coeff)),
        }
    }

    pub fn recovery_options(&self) -> RecoveryOptions<f64> {
        RecoveryOptions {
            lambda: self.regularization.lambda,
            alpha: self.regularization.alpha,
            noise_level: self.regularization.noise,
            ..RecoveryOptions::default()
        }
    }

    pub fn field_options(&self) -> FieldRecoveryOptions<f64> {
        FieldRecoveryOptions {
            alpha: self.regularization.field_alpha,
            noise_level: self.regularization.noise,
            ..FieldRecoveryOptions::default()
        }
    }

    pub fn obstacle_options(&self) -> ObstacleOptions<f64> {
        ObstacleOptions { tau: self.regularization.tau, field: self.field_options() }
    }
}

/// Four unit `cos⁴` bumps of half width `|w1|/4` centred evenly across `w1`.
pub fn default_inputs(grid: &Grid<f64>) -> Vec<FieldVector<f64>> {
    let w1 = grid.w1();
    let (a, b) = (grid.x(w1.start), grid.x(w1.end - 1));
    (0..4)
        .map(|j| {
            let center = a + (b - a) * (j as f64 + 0.5) / 4.0;
            Profile::Bump { center, width: (b - a) / 4.0, height: 1.0 }
                .field_on(grid, w1)
                .expect("bump profiles are always valid")
        })
        .collect()
}
