use serde::{Deserialize, Serialize};

use super::flow::{Flow, FlowSettings};
use super::functional::{Functional, Support};
use super::remesh::{delaunay_flips, smooth_tangential};
use super::{Diagnostic, SolveConfig, SolveMode, SolveReport, SolverError, Termination};
use crate::analytic::{contact_angle_tol, AngleStats, Side, Target};
use crate::geom::{ClosedRegion, Sphere, TriMesh, Vec3};

/// Largest relative volume change applied in one step.
const VOLUME_RAMP: f64 = 0.03;

fn settings(cfg: &SolveConfig) -> FlowSettings {
    FlowSettings {
        initial_step: cfg.initial_step,
        backtracking: cfg.backtracking,
        max_step: 2.0 * cfg.initial_step,
        side_patience: 20,
    }
}

fn loops_of(mesh: &TriMesh) -> Vec<Vec<usize>> {
    mesh.boundary_loops().into_iter().map(|l| l.vertices).collect()
}

/// Checks that every boundary vertex is within `1e-6 ρ` of the sphere and snaps it onto it.
fn snap_boundary(mesh: &TriMesh, sphere: &Sphere) -> Result<TriMesh, SolverError> {
    let tol = 1e-6 * sphere.radius;
    let mut out = mesh.clone();
    let boundary = mesh.boundary_mask();
    for (i, p) in out.vertices_mut().iter_mut().enumerate() {
        if boundary[i] {
            let d = sphere.signed_distance(p);
            if d.abs() > tol {
                return Err(SolverError::BoundaryOffSphere { vertex: i, distance: d.abs() });
            }
            *p = sphere.project(p);
        }
    }
    Ok(out)
}

fn sphere_functional(mesh: &TriMesh, sphere: Sphere, side: Side, gamma: f64, kappa: f64) -> Functional {
    Functional { support: Support::Sphere { sphere, side }, cos_gamma: gamma.cos(), kappa, loops: loops_of(mesh) }
}

fn boundary_centroid(mesh: &TriMesh) -> Vec3 {
    let b = mesh.boundary_mask();
    let pts: Vec<Vec3> = mesh.vertices().iter().zip(&b).filter(|x| *x.1).map(|x| *x.0).collect();
    if pts.is_empty() {
        mesh.vertices().iter().sum::<Vec3>() / mesh.vertex_count().max(1) as f64
    } else {
        pts.iter().sum::<Vec3>() / pts.len() as f64
    }
}

/// `area(S) − cos γ · area(Ω)` where `Ω` is the wetted region on the sphere bounded by the
/// boundary of `mesh` (wound out of the drop). A mesh without boundary has no wetted term.
pub fn energy(mesh: &TriMesh, sphere: &Sphere, side: Side, gamma: f64) -> Result<f64, SolverError> {
    let mesh = snap_boundary(mesh, sphere)?;
    let f = sphere_functional(&mesh, *sphere, side, gamma, 0.0);
    Ok(f.energy(&f.values(&mesh)))
}

/// Gradient of [`energy`] with respect to every vertex position.
pub fn energy_gradient(mesh: &TriMesh, sphere: &Sphere, side: Side, gamma: f64) -> Result<Vec<Vec3>, SolverError> {
    snap_boundary(mesh, sphere)?;
    Ok(sphere_functional(mesh, *sphere, side, gamma, 0.0).gradients(mesh).energy)
}

/// Same energy with the wetted area read from a closure's patch faces.
pub fn energy_with_region(mesh: &TriMesh, region: &ClosedRegion, gamma: f64) -> f64 {
    mesh.surface_area() - gamma.cos() * region.patch_area()
}

/// Multiplier state carried between calls of [`flow_step`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MultiplierState {
    /// Volume to hold; the current volume when `None`.
    pub target_volume: Option<f64>,
    /// `λ/2` of the last step.
    pub multiplier: f64,
    /// Accepted step length of the last step (0 for the configured initial step).
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub energy_before: f64,
    pub energy_after: f64,
    pub volume: f64,
    pub multiplier: f64,
    pub step: f64,
    pub max_displacement: f64,
    pub stationary: bool,
}

fn functional_for(mesh: &TriMesh, cfg: &SolveConfig) -> Functional {
    match cfg.mode {
        SolveMode::DirichletCmc => Functional {
            support: Support::Pinned { origin: boundary_centroid(mesh) },
            cos_gamma: 0.0,
            kappa: 0.0,
            loops: loops_of(mesh),
        },
        SolveMode::Capillary => sphere_functional(mesh, cfg.substrate, cfg.params.side, cfg.params.gamma, 0.0),
        SolveMode::PrescribedHeightCurvature => {
            sphere_functional(mesh, cfg.substrate, cfg.params.side, cfg.params.gamma, cfg.params.kappa)
        }
    }
}

/// One projected descent step followed by volume re-projection. Boundary vertices are
/// pinned in Dirichlet mode and slide on the sphere otherwise.
pub fn flow_step(
    mesh: &TriMesh,
    config: &SolveConfig,
    state: &mut MultiplierState,
) -> Result<(TriMesh, StepDiagnostics), SolverError> {
    config.validate()?;
    let mesh = match config.mode {
        SolveMode::DirichletCmc => mesh.clone(),
        _ => snap_boundary(mesh, &config.substrate)?,
    };
    let func = functional_for(&mesh, config);
    let target = state.target_volume.unwrap_or_else(|| func.values(&mesh).volume);
    let mut flow = Flow::new(func, mesh, target, settings(config));
    if state.step > 0.0 {
        flow.step = state.step;
    }
    let before = flow.energy;
    let out = flow.step()?;
    state.multiplier = flow.lambda / 2.0;
    state.step = flow.step;
    let diag = StepDiagnostics {
        energy_before: before,
        energy_after: flow.energy,
        volume: flow.values.volume,
        multiplier: flow.lambda / 2.0,
        step: out.step,
        max_displacement: out.max_displacement,
        stationary: out.stationary,
    };
    Ok((flow.mesh, diag))
}

struct Measure {
    h_mean: f64,
    h_dev: f64,
    h_tol: f64,
    angle: Option<AngleStats>,
}

struct Ctx<'a> {
    cfg: &'a SolveConfig,
    mode: SolveMode,
    rho: f64,
}

impl Ctx<'_> {
    fn measure(&self, flow: &Flow, with_angle: bool) -> Measure {
        let hv = flow.variational_curvature();
        let n = hv.len().max(1) as f64;
        let h_mean = hv.iter().map(|x| x.1).sum::<f64>() / n;
        let h_dev = match self.mode {
            SolveMode::PrescribedHeightCurvature => {
                let mu = flow.lambda / 2.0;
                let k = flow.func.kappa;
                let v = flow.mesh.vertices();
                hv.iter().map(|&(i, h)| (h - (k * v[i].z + mu)).abs()).fold(0.0, f64::max)
            }
            _ => hv.iter().map(|x| (x.1 - h_mean).abs()).fold(0.0, f64::max),
        };
        let h_tol = self.cfg.h_tol.unwrap_or(1e-3 * (h_mean.abs() + 1.0 / self.rho));
        let angle = (with_angle && self.mode != SolveMode::DirichletCmc)
            .then(|| contact_angle_tol(&flow.mesh, &self.cfg.substrate, 1e-8 * self.rho).ok())
            .flatten()
            .map(|a| a.overall);
        Measure { h_mean, h_dev, h_tol, angle }
    }

    fn angle_ok(&self, m: &Measure) -> bool {
        self.mode == SolveMode::DirichletCmc || m.angle.is_some_and(|a| a.max_deviation <= self.cfg.angle_tol)
    }
}

#[derive(Default)]
struct Log {
    iterations: usize,
    remeshes: usize,
    max_drift: f64,
    energy: Vec<f64>,
    multiplier: Vec<f64>,
    diagnostics: Vec<Diagnostic>,
}

fn remesh(flow: &mut Flow) -> Result<(), SolverError> {
    let n = flow.mesh.vertex_count();
    let interior: Vec<bool> = (0..n).map(|i| flow.is_interior(i)).collect();
    let slide: Vec<Option<(usize, usize)>> = (0..n).map(|i| flow.boundary_neighbors(i)).collect();
    let sphere = match flow.func.support {
        Support::Sphere { sphere, .. } => Some(sphere),
        Support::Pinned { .. } => None,
    };
    let (m, _) = delaunay_flips(&flow.mesh, 0.1);
    let m = smooth_tangential(&m, &interior, &slide, sphere, 0.5);
    flow.mesh = m;
    flow.refresh();
    flow.enforce_volume()
}

/// Runs the flow at fixed volume until the tolerances are met or no progress is possible.
fn run_inner(flow: &mut Flow, ctx: &Ctx, log: &mut Log) -> Result<(Termination, Measure), SolverError> {
    let cfg = ctx.cfg;
    let q0 = flow.mesh.min_triangle_quality();
    let goal = flow.target_volume;
    // large volume changes are applied gradually so the flow can keep the mesh smooth
    let ramp = |flow: &mut Flow| -> Result<bool, SolverError> {
        let cur = flow.values.volume;
        let max_change = VOLUME_RAMP * goal.abs();
        let next = if (goal - cur).abs() <= max_change { goal } else { cur + max_change.copysign(goal - cur) };
        flow.target_volume = next;
        flow.enforce_volume()?;
        Ok(next == goal)
    };
    let mut at_goal = ramp(flow)?;
    let mut termination = Termination::MaxIterations;
    for it in 0..cfg.max_iterations {
        if !at_goal {
            at_goal = ramp(flow)?;
        }
        let before = flow.energy;
        let outcome = match flow.step() {
            Ok(o) => o,
            Err(SolverError::StepCollapse { .. }) => {
                termination = Termination::StepCollapse;
                break;
            }
            Err(e) => return Err(e),
        };
        log.iterations += 1;
        if flow.energy > before {
            return Err(SolverError::StepCollapse { iteration: flow.iteration });
        }
        let drift = ((flow.values.volume - flow.target_volume) / flow.target_volume).abs();
        log.max_drift = log.max_drift.max(drift);
        log.energy.push(flow.energy);
        log.multiplier.push(flow.lambda / 2.0);
        let m = ctx.measure(flow, false);
        let h_ok = m.h_dev <= m.h_tol;
        let m = if h_ok || it % 10 == 0 { ctx.measure(flow, true) } else { m };
        let mut remeshed = false;
        let q = flow.mesh.min_triangle_quality();
        let due = cfg.remesh_every > 0 && (it + 1) % cfg.remesh_every == 0 && !h_ok;
        if cfg.remesh_every > 0 && (q < 0.1 * q0 || (due && (q < 0.5 * q0 || q < 10.0 * cfg.quality_floor))) {
            remesh(flow)?;
            log.remeshes += 1;
            remeshed = true;
            let q = flow.mesh.min_triangle_quality();
            if q < cfg.quality_floor {
                return Err(SolverError::PinchDetected { iteration: flow.iteration, quality: q });
            }
        }
        if cfg.record_diagnostics {
            log.diagnostics.push(Diagnostic {
                iteration: log.iterations,
                energy: flow.energy,
                volume: flow.values.volume,
                multiplier: flow.lambda / 2.0,
                max_h_dev: m.h_dev,
                max_angle_dev: m.angle.map(|a| a.max_deviation),
                step: outcome.step,
                remeshed,
            });
        }
        if !at_goal {
            continue;
        }
        if outcome.stationary {
            termination = Termination::Stationary;
            break;
        }
        if h_ok && ctx.angle_ok(&m) {
            termination = Termination::Converged;
            break;
        }
        if outcome.residual_norm <= cfg.gradient_tol * flow.values.area {
            termination = Termination::GradientTolerance;
            break;
        }
    }
    let m = ctx.measure(flow, true);
    Ok((termination, m))
}

fn finish(flow: &Flow, ctx: &Ctx, log: Log, termination: Termination, m: Measure, outer: usize) -> SolveReport {
    let converged = m.h_dev <= m.h_tol && ctx.angle_ok(&m);
    let termination = if converged { Termination::Converged } else { termination };
    SolveReport {
        mode: ctx.mode,
        converged,
        termination,
        iterations: log.iterations,
        final_energy: flow.energy,
        h_mean: m.h_mean,
        h_max_deviation: m.h_dev,
        h_tolerance: m.h_tol,
        multiplier: flow.lambda / 2.0,
        mu: (ctx.mode == SolveMode::PrescribedHeightCurvature).then_some(flow.lambda / 2.0),
        volume: flow.values.volume,
        target_volume: flow.target_volume,
        max_volume_drift: log.max_drift,
        contact_angle: m.angle,
        multiplier_history: log.multiplier,
        energy_history: log.energy,
        remeshes: log.remeshes,
        outer_iterations: outer,
        diagnostics: log.diagnostics,
    }
}

/// Fixed volume, or a curvature target met by a secant iteration on the volume.
fn drive(func: Functional, mesh: TriMesh, target: Target, ctx: &Ctx) -> Result<(TriMesh, SolveReport), SolverError> {
    let cfg = ctx.cfg;
    let v0 = func.values(&mesh).volume;
    match target {
        Target::Volume(v) => {
            let mut flow = Flow::new(func, mesh, v, settings(cfg));
            let mut log = Log::default();
            let (t, m) = run_inner(&mut flow, ctx, &mut log)?;
            let report = finish(&flow, ctx, log, t, m, 1);
            Ok((flow.mesh, report))
        }
        Target::MeanCurvature(h) => {
            if !(v0 > 0.0) {
                return Err(SolverError::PreconditionFailed(
                    "curvature target needs an initial surface enclosing positive volume".into(),
                ));
            }
            let mut log = Log::default();
            let mut flow = Flow::new(func, mesh, v0, settings(cfg));
            let (mut t, mut m) = run_inner(&mut flow, ctx, &mut log)?;
            let mut prev = (v0, flow.lambda / 2.0 - h);
            let mut v = v0 * if prev.1 > 0.0 { 0.95 } else { 1.05 };
            let mut outer = 1;
            while outer < cfg.max_outer_iterations && (flow.lambda / 2.0 - h).abs() > m.h_tol {
                flow.target_volume = v;
                flow.step = cfg.initial_step;
                let r = run_inner(&mut flow, ctx, &mut log)?;
                t = r.0;
                m = r.1;
                outer += 1;
                let f = flow.lambda / 2.0 - h;
                let slope = (f - prev.1) / (v - prev.0);
                let next = if slope.abs() > 1e-300 { v - f / slope } else { v * 1.05 };
                prev = (v, f);
                v = next.clamp(0.5 * v, 2.0 * v);
            }
            let mut report = finish(&flow, ctx, log, t, m, outer);
            if (flow.lambda / 2.0 - h).abs() > report.h_tolerance {
                report.converged = false;
                report.termination = Termination::MaxIterations;
            }
            Ok((flow.mesh, report))
        }
    }
}

/// Constant mean curvature surface spanning the fixed boundary `gamma_curve`, at the given
/// volume or mean curvature. The volume is measured against the cone from the boundary
/// centroid over the boundary, which for a planar boundary is the volume above its plane.
pub fn solve_dirichlet_cmc(
    gamma_curve: &[Vec3],
    target: Target,
    init: &TriMesh,
    config: &SolveConfig,
) -> Result<(TriMesh, SolveReport), SolverError> {
    let mut cfg = config.clone();
    cfg.mode = SolveMode::DirichletCmc;
    cfg.params.target = target;
    cfg.validate()?;
    init.validate()?;
    let tol = 1e-9 * init.bbox_diagonal().max(1e-300);
    let boundary: Vec<Vec3> = init.boundary_mask().iter().zip(init.vertices()).filter(|x| *x.0).map(|x| *x.1).collect();
    let spans = boundary.len() == gamma_curve.len()
        && boundary.iter().all(|p| gamma_curve.iter().any(|q| (p - q).norm() <= tol))
        && gamma_curve.iter().all(|q| boundary.iter().any(|p| (p - q).norm() <= tol));
    if gamma_curve.is_empty() || !spans {
        return Err(SolverError::PreconditionFailed("init mesh does not span the boundary curve".into()));
    }
    let mut mesh = init.clone();
    let func = functional_for(&mesh, &cfg);
    if func.values(&mesh).volume < 0.0 {
        mesh = mesh.flipped();
    }
    let func = functional_for(&mesh, &cfg);
    let ctx = Ctx { cfg: &cfg, mode: SolveMode::DirichletCmc, rho: cfg.substrate.radius };
    drive(func, mesh, target, &ctx)
}

fn capillary_setup(init: &TriMesh, cfg: &SolveConfig) -> Result<TriMesh, SolverError> {
    cfg.validate()?;
    init.validate()?;
    if init.is_closed() {
        return Err(SolverError::PreconditionFailed("initial surface has no boundary".into()));
    }
    let mesh = snap_boundary(init, &cfg.substrate)?;
    let s = cfg.substrate;
    let interior = cfg.params.side == Side::Interior;
    let boundary = mesh.boundary_mask();
    let wrong = mesh.vertices().iter().zip(&boundary).filter(|(p, b)| {
        let d = s.signed_distance(p);
        !**b && if interior { d > 1e-9 * s.radius } else { d < -1e-9 * s.radius }
    });
    if wrong.count() * 20 > mesh.vertex_count() {
        return Err(SolverError::PreconditionFailed("initial surface is not on the drop's side of the sphere".into()));
    }
    Ok(mesh)
}

/// Capillary drop on the substrate sphere: constant mean curvature, boundary free on the
/// sphere, contact angle emerging from the wetting term. The initial mesh must be wound
/// out of the drop.
pub fn solve_capillary(
    sphere: &Sphere,
    params: &crate::analytic::CapillaryParams,
    init: &TriMesh,
    config: &SolveConfig,
) -> Result<(TriMesh, SolveReport), SolverError> {
    let mut cfg = config.clone();
    cfg.mode = SolveMode::Capillary;
    cfg.params = *params;
    cfg.params.kappa = 0.0;
    cfg.substrate = *sphere;
    let mesh = capillary_setup(init, &cfg)?;
    let func = functional_for(&mesh, &cfg);
    let ctx = Ctx { cfg: &cfg, mode: SolveMode::Capillary, rho: sphere.radius };
    drive(func, mesh, params.target, &ctx)
}

/// Drop whose mean curvature follows `H = κ z + μ`, `κ > 0`, with boundary in the upper
/// open hemisphere. A `Volume` target fixes the volume and reports the resulting `μ`; a
/// `MeanCurvature(μ)` target adjusts the volume until the law holds with that `μ`.
pub fn solve_prescribed_height_curvature(
    sphere: &Sphere,
    params: &crate::analytic::CapillaryParams,
    init: &TriMesh,
    config: &SolveConfig,
) -> Result<(TriMesh, SolveReport), SolverError> {
    if !(params.kappa > 0.0) {
        return Err(SolverError::InvalidConfig(format!("κ = {} must be positive", params.kappa)));
    }
    let mut cfg = config.clone();
    cfg.mode = SolveMode::PrescribedHeightCurvature;
    cfg.params = *params;
    cfg.substrate = *sphere;
    let mesh = capillary_setup(init, &cfg)?;
    let boundary = mesh.boundary_mask();
    let below = mesh.vertices().iter().zip(&boundary).any(|(p, b)| *b && p.z <= sphere.center.z);
    if below {
        return Err(SolverError::PreconditionFailed("boundary not in the upper open hemisphere".into()));
    }
    let func = functional_for(&mesh, &cfg);
    let ctx = Ctx { cfg: &cfg, mode: SolveMode::PrescribedHeightCurvature, rho: sphere.radius };
    drive(func, mesh, params.target, &ctx)
}

/// Dispatches on `config.mode`. Dirichlet solves keep the boundary of `init`.
pub fn solve(init: &TriMesh, config: &SolveConfig) -> Result<(TriMesh, SolveReport), SolverError> {
    match config.mode {
        SolveMode::DirichletCmc => {
            let b = init.boundary_mask();
            let curve: Vec<Vec3> = init.vertices().iter().zip(&b).filter(|x| *x.1).map(|x| *x.0).collect();
            solve_dirichlet_cmc(&curve, config.params.target, init, config)
        }
        SolveMode::Capillary => solve_capillary(&config.substrate, &config.params, init, config),
        SolveMode::PrescribedHeightCurvature => {
            solve_prescribed_height_curvature(&config.substrate, &config.params, init, config)
        }
    }
}
