//! Equilibrium surfaces by volume-constrained gradient descent.
//!
//! Three settings share one engine: a surface spanning a fixed boundary with constant
//! mean curvature, a capillary drop whose boundary slides on a sphere, and a drop whose
//! mean curvature follows `H = κ z + μ`. The energy is
//! `area(S) − cos γ · area(Ω) − 2κ ∫_W z dV` at fixed volume; its critical points have
//! `H = κ z + λ/2` and meet the sphere at angle `γ`.

mod drivers;
mod flow;
mod functional;
mod remesh;
mod sparse;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{AngleStats, CapillaryParams, Side, Target};
use crate::geom::{MeshError, Sphere};

pub use drivers::{
    energy, energy_gradient, energy_with_region, flow_step, solve, solve_capillary, solve_dirichlet_cmc,
    solve_prescribed_height_curvature, MultiplierState, StepDiagnostics,
};
pub use sparse::{pcg, CgInfo, CsrMatrix};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("boundary vertex {vertex} is {distance:e} away from the sphere")]
    BoundaryOffSphere { vertex: usize, distance: f64 },
    #[error("line search collapsed at iteration {iteration}")]
    StepCollapse { iteration: usize },
    #[error("surface keeps crossing the sphere (iteration {iteration}, {vertices} vertices re-projected)")]
    SideViolation { iteration: usize, vertices: usize },
    #[error("surface degenerates at iteration {iteration}: min triangle quality {quality:e}")]
    PinchDetected { iteration: usize, quality: f64 },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    DirichletCmc,
    Capillary,
    PrescribedHeightCurvature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub mode: SolveMode,
    pub params: CapillaryParams,
    pub substrate: Sphere,
    pub max_iterations: usize,
    /// Step length in units of the preconditioned direction (1 is a Newton-like step).
    pub initial_step: f64,
    pub backtracking: f64,
    /// Stop when the constrained gradient norm falls below this fraction of the area.
    pub gradient_tol: f64,
    /// Absolute tolerance on the mean curvature deviation; `None` uses
    /// `1e-3 · (|H_mean| + 1/ρ)`.
    pub h_tol: Option<f64>,
    /// Tolerance on the contact angle deviation (radians).
    pub angle_tol: f64,
    /// Remesh every this many steps when triangle quality has degraded (0 disables).
    pub remesh_every: usize,
    /// Triangle quality below which the surface counts as pinched.
    pub quality_floor: f64,
    /// Outer iterations when a curvature target is met by adjusting the volume.
    pub max_outer_iterations: usize,
    /// Keep per-iteration diagnostics in the report.
    pub record_diagnostics: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            mode: SolveMode::Capillary,
            params: CapillaryParams::constant(std::f64::consts::FRAC_PI_2, Side::Interior, Target::Volume(1.0)),
            substrate: Sphere::unit(),
            max_iterations: 2000,
            initial_step: 1.0,
            backtracking: 0.5,
            gradient_tol: 1e-8,
            h_tol: None,
            angle_tol: 1f64.to_radians(),
            remesh_every: 25,
            quality_floor: 1e-3,
            max_outer_iterations: 30,
            record_diagnostics: true,
        }
    }
}

impl SolveConfig {
    pub fn new(mode: SolveMode, params: CapillaryParams, substrate: Sphere) -> Self {
        Self { mode, params, substrate, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.into()));
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.initial_step > 0.0) || !(self.backtracking > 0.0 && self.backtracking < 1.0) {
            return bad("initial_step must be positive and backtracking in (0, 1)");
        }
        if !(self.gradient_tol > 0.0) || !(self.angle_tol > 0.0) || self.h_tol.is_some_and(|t| !(t > 0.0)) {
            return bad("tolerances must be positive");
        }
        if !(self.quality_floor > 0.0) {
            return bad("quality_floor must be positive");
        }
        if !(self.substrate.radius > 0.0) {
            return bad("substrate radius must be positive");
        }
        self.params.validate().map_err(|e| SolverError::InvalidConfig(e.to_string()))
    }
}

/// One line of the per-iteration log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub iteration: usize,
    pub energy: f64,
    pub volume: f64,
    /// `λ/2`, the mean curvature carried by the volume constraint.
    pub multiplier: f64,
    #[serde(rename = "maxHdev")]
    pub max_h_dev: f64,
    #[serde(rename = "maxAngleDev")]
    pub max_angle_dev: Option<f64>,
    pub step: f64,
    pub remeshed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    /// No further descent is possible at round-off level.
    Stationary,
    GradientTolerance,
    MaxIterations,
    StepCollapse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub mode: SolveMode,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub final_energy: f64,
    /// Mean of the interior variational mean curvature.
    pub h_mean: f64,
    /// `max |H − H_mean|`, or `max |H − (κ z + μ)|` for the height law.
    pub h_max_deviation: f64,
    pub h_tolerance: f64,
    /// `λ/2` at the end of the solve.
    pub multiplier: f64,
    /// `μ` of the achieved law `H = κ z + μ` (prescribed mode).
    pub mu: Option<f64>,
    pub volume: f64,
    pub target_volume: f64,
    /// Largest relative volume error after any accepted step.
    pub max_volume_drift: f64,
    pub contact_angle: Option<AngleStats>,
    pub multiplier_history: Vec<f64>,
    pub energy_history: Vec<f64>,
    pub remeshes: usize,
    pub outer_iterations: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl SolveReport {
    /// Diagnostics as JSON lines.
    pub fn diagnostics_jsonl(&self) -> String {
        let mut s = String::new();
        for d in &self.diagnostics {
            s.push_str(&serde_json::to_string(d).expect("diagnostic serializes"));
            s.push('\n');
        }
        s
    }
}
