use std::f64::consts::{FRAC_PI_2, PI};

use super::fit::{fit_circle, fit_plane, fit_sphere, horizontal_section_circles};
use super::report::{TheoremId, TheoremReport, VerifyTolerances};
use super::VerifyError;
use crate::alexandrov::{
    check_hypotheses, common_axis_tol, detect_symmetry_plane, reflection_residual, symmetry_planes, AlexandrovError,
    HypothesisOptions, HypothesisReport, PlaneFamily, SideClass, SymmetryOptions,
};
use crate::analytic::{contact_angle_tol, Side};
use crate::geom::{
    close_with_spherical_patch_tol, variational_mean_curvature, vertex_mean_curvature, Containment, ContainmentOracle,
    Line, PatchSide, Plane, Sphere, TriMesh, Vec3,
};

/// Which version of the symmetry statement is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryVariant {
    /// `S − Γ` outside the sphere and `|H| ≥ 1/ρ`.
    Exterior,
    /// `S − Γ` inside the ball.
    Ball,
    /// The enclosed domain lies outside the sphere.
    DomainExterior,
}

fn indexed(h: Vec<Option<f64>>) -> Vec<(usize, f64)> {
    h.into_iter().enumerate().filter_map(|(i, h)| h.map(|h| (i, h))).collect()
}

/// Mean curvature of the sphere through a vertex and its two-ring, from the linear fit
/// `k|q|² = (n + t)·q` in coordinates `q` centred at the vertex (`t ⊥ n`). Exact for
/// samples of a sphere and zero for coplanar samples.
fn local_sphere_curvature(mesh: &TriMesh) -> Vec<Option<f64>> {
    let nbrs = mesh.vertex_neighbors();
    let normals = mesh.vertex_normals();
    let boundary = mesh.boundary_mask();
    let v = mesh.vertices();
    (0..v.len())
        .map(|i| {
            if boundary[i] {
                return None;
            }
            let n = normals[i];
            let (e1, e2) = crate::geom::orthonormal_complement(&n);
            let mut ring: Vec<usize> = nbrs[i].iter().flat_map(|&j| nbrs[j].iter().copied().chain([j])).collect();
            ring.sort_unstable();
            ring.dedup();
            let mut ata = nalgebra::Matrix3::zeros();
            let mut atb = Vec3::zeros();
            for j in ring.into_iter().filter(|&j| j != i) {
                let q = v[j] - v[i];
                let row = Vec3::new(q.norm_squared(), -q.dot(&e1), -q.dot(&e2));
                ata += row * row.transpose();
                atb += row * q.dot(&n);
            }
            let x = ata.cholesky()?.solve(&atb);
            Some(-2.0 * x[0] / (1.0 + x[1] * x[1] + x[2] * x[2]).sqrt())
        })
        .collect()
}

/// Interior mean curvature from three discretisations: the variational ratio (constant at
/// discrete equilibria), the cotangent formula and local sphere fits.
fn curvature_estimators(mesh: &TriMesh) -> [(&'static str, Vec<(usize, f64)>); 3] {
    [
        ("variational", indexed(variational_mean_curvature(mesh))),
        ("cotangent", indexed(vertex_mean_curvature(mesh).h)),
        ("sphere_fit", indexed(local_sphere_curvature(mesh))),
    ]
}

struct CurvatureSummary {
    estimator: &'static str,
    mean: f64,
    median: f64,
    spread: f64,
}

/// The estimator under which the mesh is closest to constant mean curvature.
fn constant_curvature(mesh: &TriMesh) -> Option<CurvatureSummary> {
    curvature_estimators(mesh)
        .into_iter()
        .filter(|e| !e.1.is_empty())
        .map(|(estimator, hs)| {
            let mut h: Vec<f64> = hs.into_iter().map(|x| x.1).collect();
            let mean = h.iter().sum::<f64>() / h.len() as f64;
            let spread = h.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
            h.sort_by(f64::total_cmp);
            CurvatureSummary { estimator, mean, median: h[h.len() / 2], spread }
        })
        .min_by(|a, b| a.spread.total_cmp(&b.spread))
}

/// Median interior mean curvature under the most nearly constant discretisation.
pub fn mean_curvature_estimate(mesh: &TriMesh) -> Option<f64> {
    constant_curvature(mesh).map(|c| c.median)
}

/// Runs the hypothesis checker; a boundary off the sphere is recorded as an unmet
/// hypothesis rather than an error.
fn hypotheses(
    report: &mut TheoremReport,
    mesh: &TriMesh,
    sphere: &Sphere,
    opts: HypothesisOptions,
) -> Result<Option<HypothesisReport>, VerifyError> {
    match check_hypotheses(mesh, sphere, &opts) {
        Ok(h) => {
            report.hypothesis("boundary_on_sphere", true, "");
            report.hypothesis_report = Some(h.clone());
            Ok(Some(h))
        }
        Err(AlexandrovError::BoundaryOffSphere { vertex, distance }) => {
            report.hypothesis("boundary_on_sphere", false, format!("vertex {vertex} is {distance:e} away"));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

/// Whether the domain bounded by `S` and the inner spherical patch avoids the ball: points
/// just inside the patch and the centre must lie outside it.
pub fn domain_outside_ball(mesh: &TriMesh, sphere: &Sphere, boundary_tol: f64) -> Result<bool, VerifyError> {
    let region = close_with_spherical_patch_tol(mesh, sphere, PatchSide::Inner, boundary_tol)?;
    let oracle = ContainmentOracle::new(&region, 1e-9 * sphere.radius);
    let c = sphere.center;
    let mut probes = vec![c];
    let patch = (0..region.surface.face_count()).filter(|&f| region.patch_mask[f]);
    for f in patch.step_by(7) {
        let p = region.surface.face_centroid(f);
        probes.push(c + (p - c) * (1.0 - 1e-3));
    }
    Ok(probes.iter().all(|p| oracle.classify(p) == Containment::Outside))
}

/// Records the side hypotheses shared by the capillary theorems: `S − Γ` in the ball, or
/// `S − Γ` and the domain outside the sphere.
fn side_ball_or_exterior_domain(
    report: &mut TheoremReport,
    mesh: &TriMesh,
    sphere: &Sphere,
    hyp: &HypothesisReport,
    btol: f64,
) -> Result<(), VerifyError> {
    match hyp.side {
        SideClass::Interior => {
            report.hypothesis("side", true, "S − Γ in the ball");
        }
        SideClass::Exterior => {
            let outside = hyp.pole.is_some() && domain_outside_ball(mesh, sphere, btol)?;
            report.hypothesis("side", outside, "S − Γ outside the sphere; domain outside the sphere required");
        }
        SideClass::Mixed => {
            report.hypothesis("side", false, "S − Γ meets both sides of the sphere");
        }
    }
    Ok(())
}

fn polyline_distance(loops: &[Vec<Vec3>], p: &Vec3) -> f64 {
    let mut best = f64::INFINITY;
    for lp in loops {
        for k in 0..lp.len() {
            let (a, b) = (lp[k], lp[(k + 1) % lp.len()]);
            let ab = b - a;
            let s = ((p - a).dot(&ab) / ab.norm_squared().max(1e-300)).clamp(0.0, 1.0);
            best = best.min((a + ab * s - p).norm());
        }
    }
    best
}

/// Symmetry statement: `Γ` in an open hemisphere, symmetric about the vector plane `P`
/// through the pole and separated by it into two graphs, plus the side condition of
/// `variant`; the conclusion is that `P` is a symmetry plane of `S`.
pub fn check_symmetry_theorem(
    mesh: &TriMesh,
    sphere: &Sphere,
    plane: &Plane,
    variant: SymmetryVariant,
    tol: &VerifyTolerances,
) -> Result<TheoremReport, VerifyError> {
    let id = if variant == SymmetryVariant::Exterior { TheoremId::T2_3 } else { TheoremId::C2_6 };
    let mut report = TheoremReport::new(id, *tol);
    let rho = sphere.radius;
    let btol = tol.boundary * rho;
    let tol_sym = tol.tol_sym.unwrap_or(1e-4 * mesh.bbox_diagonal());
    let opts = HypothesisOptions { plane: Some(*plane), boundary_tol: Some(btol), ..Default::default() };
    let Some(hyp) = hypotheses(&mut report, mesh, sphere, opts)? else {
        return Ok(report.finish());
    };
    let loops: Vec<Vec<Vec3>> = mesh.boundary_loops().iter().map(|l| l.positions(mesh)).collect();
    let Some((pole, margin)) = hyp.pole else {
        report.hypothesis("open_hemisphere", false, "Γ is not contained in an open hemisphere");
        return Ok(report.finish());
    };
    report.hypothesis("open_hemisphere", true, format!("pole {pole:?}, margin {margin:.3e}"));
    let through_pole =
        plane.normal.dot(&pole).abs() <= 1e-6 && plane.signed_distance(&sphere.center).abs() <= 1e-6 * rho;
    report.hypothesis("plane_through_pole", through_pole, "P is a vector plane containing the pole");
    let gamma_res =
        loops.iter().flatten().map(|p| polyline_distance(&loops, &plane.reflect_point(p))).fold(0.0, f64::max);
    report.info("gamma_reflection_residual", gamma_res);
    report.hypothesis("gamma_symmetric", gamma_res <= tol_sym, format!("residual {gamma_res:.3e}"));
    let sep = hyp.separation.as_ref().is_some_and(|s| s.passes);
    report.hypothesis("graph_separation", sep, "");
    match variant {
        SymmetryVariant::Exterior => {
            report.hypothesis("side", hyp.side == SideClass::Exterior, format!("{:?}", hyp.side));
            let h = mean_curvature_estimate(mesh).unwrap_or(0.0);
            report.info("mean_curvature", h);
            report.hypothesis(
                "curvature_bound",
                h.abs() * rho >= 1.0 - tol.h_spread,
                format!("|H| ρ = {:.6}", h.abs() * rho),
            );
        }
        SymmetryVariant::Ball => {
            report.hypothesis("side", hyp.side == SideClass::Interior, format!("{:?}", hyp.side));
        }
        SymmetryVariant::DomainExterior => {
            let ok = hyp.side != SideClass::Mixed && domain_outside_ball(mesh, sphere, btol)?;
            report.hypothesis("side", ok, "domain outside the sphere");
        }
    }
    if !report.hypotheses_hold() {
        return Ok(report.finish());
    }

    let axis = Line { point: sphere.center, direction: pole };
    let pencil = PlaneFamily::rotational(axis, Some(plane.normal), -FRAC_PI_2, FRAC_PI_2)?;
    let found = symmetry_planes(mesh, &pencil, &SymmetryOptions { tol_sym: Some(tol_sym), ..Default::default() });
    let best = found.iter().min_by(|a, b| a.0.angle_to(plane).total_cmp(&b.0.angle_to(plane)));
    let (angle, residual) = match best {
        Some((p, r)) => (p.angle_to(plane), *r),
        None => (FRAC_PI_2, reflection_residual(mesh, plane)),
    };
    report.info("symmetry_planes_found", found.len() as f64);
    report.judged("plane_angle", angle, tol.plane_angle);
    report.judged("reflection_residual", residual, tol_sym);
    Ok(report.finish())
}

/// The spherical-cap corollary for a boundary circle of radius `r`: with `r|H| < 1` and
/// `S − Γ` on the given side of one of the two spheres of radius `1/|H|` through `Γ`, the
/// surface is a cap of radius `1/|H|`. `Exterior` is the corollary proper; `Interior` is
/// the ball case of the symmetry corollary.
pub fn check_corollary_circle(
    mesh: &TriMesh,
    h: f64,
    side: Side,
    tol: &VerifyTolerances,
) -> Result<TheoremReport, VerifyError> {
    let id = if side == Side::Exterior { TheoremId::C2_5 } else { TheoremId::C2_6 };
    let mut report = TheoremReport::new(id, *tol);
    let loops = mesh.boundary_loops();
    if !report.hypothesis("single_boundary_curve", loops.len() == 1, format!("{} loops", loops.len())) {
        return Ok(report.finish());
    }
    let gamma = loops[0].positions(mesh);
    let circle = fit_circle(&gamma)?;
    let (c0, r, n) = (circle.center.unwrap(), circle.radius.unwrap(), circle.normal.unwrap());
    report.info("circle_radius", r);
    report.info("circle_rms", circle.rms);
    report.hypothesis("gamma_is_circle", circle.rms <= tol.circle_rms * r, format!("rms {:.3e}", circle.rms));
    if !report.hypothesis("nonzero_curvature", h != 0.0 && h.is_finite(), format!("H = {h}")) {
        return Ok(report.finish());
    }
    let big_r = 1.0 / h.abs();
    let ratio = r * h.abs();
    report.info("r_times_abs_h", ratio);
    if (ratio - 1.0).abs() <= 1e-3 {
        report.hypothesis("radius_bound", false, "r = 1/|H|");
        report.note("r = 1/|H|: the only such surface is a hemisphere of radius 1/|H|, which is not outside the sphere; the case cannot occur");
        return Ok(report.finish());
    }
    if !report.hypothesis("radius_bound", ratio < 1.0, format!("r|H| = {ratio:.6}")) {
        return Ok(report.finish());
    }
    let depth = (big_r * big_r - r * r).sqrt();
    let btol = (tol.boundary * big_r).max(10.0 * circle.max_residual);
    let stol = 10.0 * btol;
    let mut chosen = None;
    for sgn in [1.0, -1.0] {
        let s = Sphere { center: c0 + n * (sgn * depth), radius: big_r };
        let opts = HypothesisOptions { boundary_tol: Some(btol), side_tol: Some(stol), ..Default::default() };
        let Ok(hyp) = check_hypotheses(mesh, &s, &opts) else { continue };
        let (lo, hi) = (hyp.min_signed_distance, hyp.max_signed_distance);
        let ok = match side {
            Side::Exterior => lo >= -stol && hi > stol,
            Side::Interior => hi <= stol && lo < -stol,
        };
        if ok && hyp.pole.is_some() {
            chosen = Some((s, hyp));
            break;
        }
    }
    let detail = match side {
        Side::Exterior => "S − Γ outside a sphere of radius 1/|H| through Γ",
        Side::Interior => "S − Γ inside a ball of radius 1/|H| through Γ",
    };
    let Some((_, hyp)) = chosen else {
        report.hypothesis("side", false, detail);
        return Ok(report.finish());
    };
    report.hypothesis("side", true, detail);
    report.hypothesis_report = Some(hyp);

    let fit = fit_sphere(mesh.vertices(), None)?;
    report.fit = Some(fit);
    let fitted = fit.radius.unwrap();
    report.info("fitted_radius", fitted);
    report.judged("radius_error", (fitted - big_r).abs() / big_r, tol.radius);
    report.judged("sphere_fit_rms", fit.rms, tol.fit_rms * big_r);
    Ok(report.finish())
}

fn disk_type(mesh: &TriMesh) -> bool {
    let loops = mesh.boundary_loops();
    let edges = mesh.vertex_neighbors().iter().map(|n| n.len()).sum::<usize>() / 2;
    loops.len() == 1 && mesh.vertex_count() as i64 - edges as i64 + mesh.face_count() as i64 == 1
}

/// Capillary cap statement: a disk-type capillary surface on the sphere with boundary in
/// an open hemisphere, inside the ball (or outside with its domain outside), is a
/// spherical cap or a planar disk.
pub fn check_capillary_cap(
    mesh: &TriMesh,
    sphere: &Sphere,
    gamma: f64,
    tol: &VerifyTolerances,
) -> Result<TheoremReport, VerifyError> {
    let mut report = TheoremReport::new(TheoremId::T3_2, *tol);
    let rho = sphere.radius;
    let btol = tol.boundary * rho;
    let opts = HypothesisOptions { boundary_tol: Some(btol), ..Default::default() };
    let Some(hyp) = hypotheses(&mut report, mesh, sphere, opts)? else {
        return Ok(report.finish());
    };
    // inside the ball the disk-type classification needs no hemisphere condition
    let hemi = match (hyp.pole.is_some(), hyp.side) {
        (true, _) => (true, "Γ in an open hemisphere"),
        (false, SideClass::Interior) => (true, "Γ not in an open hemisphere; not required inside the ball"),
        (false, _) => (false, "Γ not in an open hemisphere"),
    };
    report.hypothesis("open_hemisphere", hemi.0, hemi.1);
    let disk = disk_type(mesh);
    report.hypothesis("disk_type", disk, "");
    if !disk {
        report.note("surface is not disk-type; this lies outside the statement, which concerns disk-type surfaces");
    }
    side_ball_or_exterior_domain(&mut report, mesh, sphere, &hyp, btol)?;
    measure_capillary(&mut report, mesh, sphere, gamma, tol)?;
    Ok(report.finish())
}

fn measure_capillary(
    report: &mut TheoremReport,
    mesh: &TriMesh,
    sphere: &Sphere,
    gamma: f64,
    tol: &VerifyTolerances,
) -> Result<(), VerifyError> {
    let rho = sphere.radius;
    let angles = contact_angle_tol(mesh, sphere, (tol.boundary * rho).max(1e-9 * rho))?;
    report.info("contact_angle_mean", angles.overall.mean);
    report.judged("contact_angle_error", (angles.overall.mean - gamma).abs(), tol.angle);
    report.judged("contact_angle_spread", angles.overall.max_deviation, tol.angle);
    if let Some(c) = constant_curvature(mesh) {
        report.info("mean_curvature", c.mean);
        report.note(format!("mean curvature from the {} estimator", c.estimator));
        report.judged("mean_curvature_spread", c.spread, tol.h_spread * (c.mean.abs() + 1.0 / rho));
    }
    let sphere_fit = fit_sphere(mesh.vertices(), None);
    let plane_fit = fit_plane(mesh.vertices(), None);
    let s_rms = sphere_fit.as_ref().map_or(f64::MAX, |f| f.rms);
    let p_rms = plane_fit.as_ref().map_or(f64::MAX, |f| f.rms);
    report.info("sphere_fit_rms", s_rms);
    report.info("plane_fit_rms", p_rms);
    report.fit = if p_rms <= s_rms { plane_fit.ok() } else { sphere_fit.ok() };
    report.judged("cap_fit_rms", s_rms.min(p_rms), tol.fit_rms * rho);
    Ok(())
}

/// Domain statement: with `Γ` in an open hemisphere, `|H| ≥ 1/ρ` and `S − Γ` outside the
/// sphere, the enclosed domain lies outside the sphere.
pub fn check_domain_exterior(
    mesh: &TriMesh,
    sphere: &Sphere,
    tol: &VerifyTolerances,
) -> Result<TheoremReport, VerifyError> {
    let mut report = TheoremReport::new(TheoremId::C2_7, *tol);
    let rho = sphere.radius;
    let btol = tol.boundary * rho;
    let opts = HypothesisOptions { boundary_tol: Some(btol), ..Default::default() };
    let Some(hyp) = hypotheses(&mut report, mesh, sphere, opts)? else {
        return Ok(report.finish());
    };
    report.hypothesis("open_hemisphere", hyp.pole.is_some(), "");
    report.hypothesis("side", hyp.side == SideClass::Exterior, format!("{:?}", hyp.side));
    let h = mean_curvature_estimate(mesh).unwrap_or(0.0);
    report.info("mean_curvature", h);
    report.hypothesis("curvature_bound", h.abs() * rho >= 1.0 - tol.h_spread, format!("|H| ρ = {:.6}", h.abs() * rho));
    if !report.hypotheses_hold() {
        return Ok(report.finish());
    }
    let outside = domain_outside_ball(mesh, sphere, btol)?;
    report.judged("ball_inside_domain", if outside { 0.0 } else { 1.0 }, 0.0);
    Ok(report.finish())
}

/// Rotational symmetry statement for `H = κ z + μ`, `κ > 0`: symmetry planes through at
/// least `tol.pencils` horizontal lines, a common axis close to the `z`-axis and
/// horizontal sections that are circles centred on one vertical line. `κ = 0` is checked
/// as a capillary cap with the measured contact angle.
pub fn check_height_curvature_theorem(
    mesh: &TriMesh,
    sphere: &Sphere,
    kappa: f64,
    mu: f64,
    tol: &VerifyTolerances,
) -> Result<TheoremReport, VerifyError> {
    let rho = sphere.radius;
    let btol = tol.boundary * rho;
    if kappa == 0.0 {
        let gamma = contact_angle_tol(mesh, sphere, btol.max(1e-9 * rho))?.overall.mean;
        let mut r = check_capillary_cap(mesh, sphere, gamma, tol)?;
        r.note("κ = 0: constant mean curvature, checked as a capillary cap at the measured contact angle");
        return Ok(r);
    }
    let mut report = TheoremReport::new(TheoremId::T3_3, *tol);
    let opts = HypothesisOptions { boundary_tol: Some(btol), ..Default::default() };
    let Some(hyp) = hypotheses(&mut report, mesh, sphere, opts)? else {
        return Ok(report.finish());
    };
    report.hypothesis("positive_kappa", kappa > 0.0, format!("κ = {kappa}"));
    let b = mesh.boundary_mask();
    let upper = mesh.vertices().iter().zip(&b).filter(|x| *x.1).all(|(p, _)| p.z > sphere.center.z);
    report.hypothesis("upper_hemisphere", upper, "Γ in z > 0");
    side_ball_or_exterior_domain(&mut report, mesh, sphere, &hyp, btol)?;
    let angles = contact_angle_tol(mesh, sphere, btol.max(1e-9 * rho))?;
    report.info("contact_angle_mean", angles.overall.mean);
    report.info("contact_angle_spread", angles.overall.max_deviation);
    report.hypothesis("constant_angle", angles.overall.max_deviation <= tol.angle, "");
    let law = curvature_estimators(mesh)
        .into_iter()
        .filter(|e| !e.1.is_empty())
        .map(|(_, hs)| hs.into_iter().map(|(i, h)| (h - (kappa * mesh.vertices()[i].z + mu)).abs()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min);
    report.info("law_residual", law);
    report.hypothesis("curvature_law", law <= tol.law_residual / rho, format!("max |H − (κz + μ)| = {law:.3e}"));
    // the conclusion is measured even with a hypothesis unmet so the detected axis is recorded

    let tol_sym = tol.tol_sym.unwrap_or(1e-4 * mesh.bbox_diagonal());
    let sym = SymmetryOptions { tol_sym: Some(tol_sym), ..Default::default() };
    let n = tol.pencils.max(2);
    let mut planes = Vec::new();
    let mut worst = 0.0f64;
    for k in 0..n {
        let a = PI * k as f64 / n as f64;
        let line = Line { point: sphere.center, direction: Vec3::new(a.cos(), a.sin(), 0.0) };
        let pencil = PlaneFamily::rotational(line, Some(Vec3::z()), 0.0, PI)?;
        if let Some((p, r)) = detect_symmetry_plane(mesh, &pencil, &sym) {
            planes.push(p);
            worst = worst.max(r);
        }
    }
    report.info("symmetric_pencils", planes.len() as f64);
    report.info("worst_plane_residual", worst);
    report.judged("missing_pencils", (n - planes.len()) as f64, 0.0);
    let axis = (planes.len() >= 2).then(|| common_axis_tol(&planes, tol.plane_angle.sin())).and_then(Result::ok);
    match axis {
        Some(axis) => {
            let angle = axis.angle_to(&Line::z_axis());
            report.axis = Some(axis);
            report.judged("axis_angle", angle, tol.plane_angle);
            report.info("axis_distance_from_center", axis.distance_to(&sphere.center));
        }
        None => {
            report.judged("axis_angle", FRAC_PI_2, tol.plane_angle);
            report.note("no common axis of the detected symmetry planes");
        }
    }
    let (lo, hi) = mesh.bbox();
    let m = tol.sections.max(1);
    let levels: Vec<f64> = (0..m).map(|k| lo.z + (hi.z - lo.z) * (k as f64 + 0.5) / m as f64).collect();
    let sections = horizontal_section_circles(mesh, &levels)?;
    report.info("section_circle_rms", sections.max_circle_rms);
    report.info("section_z_axis_distance", sections.z_axis_distance);
    report.judged("section_collinearity", sections.collinearity, tol.collinearity * rho);
    Ok(report.finish())
}
