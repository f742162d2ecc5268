use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use capdrop_core::alexandrov::{sweep, SweepOptions, SweepResult};
use capdrop_core::analytic::{delaunay_profile, revolve, spherical_caps_for_circle_at, CapillaryCap, Side};
use capdrop_core::geom::io::{to_obj, to_ply_binary};
use capdrop_core::geom::{close_with_spherical_patch, io, shapes};
use capdrop_core::solver::{solve, SolveReport};
use capdrop_core::verify::*;
use capdrop_core::{ClosedRegion, Sphere, TriMesh, Vec3};
use serde::Serialize;

use crate::scenario::{MeshFormatSpec, Mode, Scenario, SurfaceSpec, VerifySpec};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    Pass,
    Fail,
    HypothesisUnmet,
    NotConverged,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success | Status::Pass => 0,
            Status::HypothesisUnmet => 2,
            Status::Fail | Status::NotConverged => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub faces: usize,
    pub boundary_loops: usize,
    pub area: f64,
    pub bbox_diagonal: f64,
}

impl MeshSummary {
    fn of(m: &TriMesh) -> Self {
        Self {
            vertices: m.vertex_count(),
            faces: m.face_count(),
            boundary_loops: m.boundary_loops().len(),
            area: m.surface_area(),
            bbox_diagonal: m.bbox_diagonal(),
        }
    }
}

/// Everything a run produced except wall-clock times, so that reruns with the same seed
/// serialize to the same bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    pub mode: Mode,
    pub seed: u64,
    pub sphere: Sphere,
    pub surface: MeshSummary,
    pub solve: Option<SolveReport>,
    pub solved: Option<MeshSummary>,
    pub sweep: Option<SweepResult>,
    pub theorem: Option<TheoremReport>,
    pub status: Status,
    pub files: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub output_dir: PathBuf,
    pub elapsed: Duration,
}

impl RunOutcome {
    pub fn over_budget(&self, scenario: &Scenario) -> bool {
        scenario.time_budget_s.is_some_and(|b| self.elapsed.as_secs_f64() > b)
    }
}

/// Surface described by the scenario, with its seeded perturbation applied.
pub fn build_surface(s: &Scenario) -> Result<TriMesh, CliError> {
    let res = s.resolution;
    let mesh = match &s.surface {
        SurfaceSpec::CapillaryCap { beta, gamma, side } => {
            CapillaryCap::new(s.sphere, *beta, *gamma, *side)?.mesh(res.rings)
        }
        SurfaceSpec::CircleCap { circle_radius, h, large, center, normal } => {
            let (small, big) = spherical_caps_for_circle_at(*center, *normal, *circle_radius, *h)?;
            if *large { big } else { small }.mesh(res.rings)
        }
        SurfaceSpec::Disk { center, normal, radius } => shapes::flat_disk(*center, *normal, *radius, res.rings),
        SurfaceSpec::Delaunay { h, c, s_min, s_max, step, clip } => {
            let mut profile = delaunay_profile(*h, *c, (*s_min, *s_max), *step)?;
            if let Some(clip) = clip {
                profile = profile.clip_to_sphere(clip.center_z, clip.radius)?;
            }
            revolve(&profile, res.angular)
        }
        SurfaceSpec::Mesh { path } => io::read_mesh(path)?,
    };
    Ok(if s.perturbation > 0.0 { shapes::perturb_normal(&mesh, s.perturbation, s.seed, true) } else { mesh })
}

fn region_of(mesh: &TriMesh, s: &Scenario, side: capdrop_core::PatchSide) -> Result<ClosedRegion, CliError> {
    Ok(if mesh.is_closed() {
        ClosedRegion::from_closed_mesh(mesh)?
    } else {
        close_with_spherical_patch(mesh, &s.sphere, side)?
    })
}

fn check(
    v: &VerifySpec,
    mesh: &TriMesh,
    s: &Scenario,
    tol: &VerifyTolerances,
    solve: Option<&SolveReport>,
) -> Result<TheoremReport, CliError> {
    let sphere = &s.sphere;
    let measured_h =
        || mean_curvature_estimate(mesh).ok_or_else(|| CliError::Usage("mesh has no interior vertices".into()));
    let report = match v.theorem {
        TheoremId::T2_3 => {
            check_symmetry_theorem(mesh, sphere, &v.plane.expect("validated"), SymmetryVariant::Exterior, tol)?
        }
        TheoremId::C2_6 if v.circle_side.is_none() => {
            let variant = v.variant.unwrap_or(SymmetryVariant::Ball);
            check_symmetry_theorem(mesh, sphere, &v.plane.expect("validated"), variant, tol)?
        }
        TheoremId::C2_6 => check_corollary_circle(mesh, v.h.map_or_else(measured_h, Ok)?, Side::Interior, tol)?,
        TheoremId::C2_5 => check_corollary_circle(mesh, v.h.map_or_else(measured_h, Ok)?, Side::Exterior, tol)?,
        TheoremId::C2_7 => check_domain_exterior(mesh, sphere, tol)?,
        TheoremId::T3_2 => {
            let gamma = v.gamma.or(s.solve.as_ref().map(|x| x.params.gamma)).expect("validated");
            check_capillary_cap(mesh, sphere, gamma, tol)?
        }
        TheoremId::T3_3 => {
            let mu =
                v.mu.or(solve.and_then(|r| r.mu))
                    .or(s.solve.as_ref().map(|x| x.params.mu))
                    .ok_or_else(|| CliError::Usage("T3.3 needs μ".into()))?;
            check_height_curvature_theorem(mesh, sphere, v.kappa.expect("validated"), mu, tol)?
        }
    };
    Ok(report)
}

fn write(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<String>) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|source| CliError::File { path, source })?;
    files.push(name.to_string());
    Ok(())
}

fn write_mesh(dir: &Path, stem: &str, m: &TriMesh, f: MeshFormatSpec, files: &mut Vec<String>) -> Result<(), CliError> {
    match f {
        MeshFormatSpec::Obj => write(dir, &format!("{stem}.obj"), to_obj(m).as_bytes(), files),
        MeshFormatSpec::Ply => write(dir, &format!("{stem}.ply"), &to_ply_binary(m), files),
    }
}

/// Runs `scenario` in `mode` and writes its artifacts into `out`.
pub fn run_scenario(scenario: &Scenario, mode: Mode, out: &Path) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    fs::create_dir_all(out).map_err(|source| CliError::File { path: out.to_path_buf(), source })?;
    let s = scenario;
    let tol = s.tolerances;
    let mut files = Vec::new();

    let surface = build_surface(s)?;
    eprintln!("[{}] surface: {} vertices, {} faces", s.name, surface.vertex_count(), surface.face_count());
    write_mesh(out, "surface", &surface, s.mesh_format, &mut files)?;
    let mut current = surface.clone();

    let mut solve_report = None;
    let mut solved = None;
    if matches!(mode, Mode::Solve | Mode::Pipeline) {
        if let Some(spec) = &s.solve {
            let cfg = spec.config(s.sphere);
            let (m, mut rep) = solve(&current, &cfg)?;
            eprintln!("[{}] solve: {:?} after {} iterations", s.name, rep.termination, rep.iterations);
            write_mesh(out, "solved", &m, s.mesh_format, &mut files)?;
            write(out, "diagnostics.jsonl", rep.diagnostics_jsonl().as_bytes(), &mut files)?;
            rep.diagnostics.clear();
            solved = Some(MeshSummary::of(&m));
            solve_report = Some(rep);
            current = m;
        }
    }

    let mut sweep_result = None;
    if matches!(mode, Mode::Sweep | Mode::Pipeline) {
        if let Some(spec) = &s.sweep {
            let region = region_of(&current, s, spec.closure)?;
            let gamma: Vec<Vec3> = current.boundary_loops().iter().flat_map(|l| l.positions(&current)).collect();
            let opts = SweepOptions { regime: spec.regime, tol_sym: tol.tol_sym, ..Default::default() };
            let r = sweep(&region, &current, &gamma, &spec.family()?, &opts)?;
            eprintln!("[{}] sweep: symmetric = {}", s.name, r.symmetric);
            sweep_result = Some(r);
        }
    }

    let mut theorem = None;
    if matches!(mode, Mode::Verify | Mode::Pipeline) {
        if let Some(v) = &s.verify {
            let r = check(v, &current, s, &tol, solve_report.as_ref())?;
            eprintln!("[{}] verify {}: {:?}", s.name, serde_json::to_value(r.theorem).expect("id serializes"), r.verdict);
            theorem = Some(r);
        }
    }

    let status = match (&theorem, &solve_report) {
        (Some(t), _) => match t.verdict {
            Verdict::Pass => Status::Pass,
            Verdict::Fail => Status::Fail,
            Verdict::HypothesisUnmet => Status::HypothesisUnmet,
        },
        (None, Some(r)) if !r.converged => Status::NotConverged,
        _ => Status::Success,
    };
    files.push("report.json".into());
    let report = RunReport {
        name: s.name.clone(),
        mode,
        seed: s.seed,
        sphere: s.sphere,
        surface: MeshSummary::of(&surface),
        solve: solve_report,
        solved,
        sweep: sweep_result,
        theorem,
        status,
        files,
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    let path = out.join("report.json");
    fs::write(&path, json).map_err(|source| CliError::File { path, source })?;
    Ok(RunOutcome { report, output_dir: out.to_path_buf(), elapsed: start.elapsed() })
}
