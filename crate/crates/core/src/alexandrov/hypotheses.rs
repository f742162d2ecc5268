use serde::{Deserialize, Serialize};

use super::AlexandrovError;
use crate::geom::{close_with_spherical_patch, hemisphere_pole, Bvh, PatchSide, Plane, Sphere, TriMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideClass {
    Interior,
    Exterior,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisOptions {
    /// Plane to test for graph separation.
    pub plane: Option<Plane>,
    /// Number of circles sampled in the separation test.
    pub circles: usize,
    /// Boundary vertices must lie this close to the sphere; `None` means `1e-6 ρ`.
    pub boundary_tol: Option<f64>,
    /// Interior vertices closer than this to the sphere are ignored by the side test;
    /// `None` means `1e-6 ρ`.
    pub side_tol: Option<f64>,
    /// Rays cast through the closure patch in the radial-graph test.
    pub rays: usize,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        Self { plane: None, circles: 256, boundary_tol: None, side_tol: None, rays: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSeparation {
    pub plane: Plane,
    pub passes: bool,
    /// Largest number of crossings of one circle with `Γ⁺` and with `Γ⁻`.
    pub max_plus: usize,
    pub max_minus: usize,
    /// Offset (along `P.normal × pole`) of a failing circle.
    pub witness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGraph {
    pub passes: bool,
    pub rays: usize,
    /// A ray direction meeting `S` other than exactly once, with its hit count.
    pub witness: Option<(Vec3, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// Pole and margin of an open hemisphere containing `Γ`.
    pub pole: Option<(Vec3, f64)>,
    pub side: SideClass,
    /// Signed distance range of the vertices of `S − Γ` to the sphere.
    pub min_signed_distance: f64,
    pub max_signed_distance: f64,
    pub separation: Option<GraphSeparation>,
    pub radial: Option<RadialGraph>,
}

impl HypothesisReport {
    pub fn in_open_hemisphere(&self) -> bool {
        self.pole.is_some()
    }
}

#[cfg(test)]
/// Number of sign changes of `f` along a closed polyline, skipping exact zeros.
fn crossings(points: &[Vec3], f: impl Fn(&Vec3) -> f64) -> usize {
    let s: Vec<f64> = points.iter().map(f).filter(|v| *v != 0.0).collect();
    if s.len() < 2 {
        return 0;
    }
    (0..s.len()).filter(|&i| s[i] * s[(i + 1) % s.len()] < 0.0).count()
}

/// Splits a closed loop at its crossings with `plane` and returns the open arcs on the
/// positive and negative sides, each arc ending at interpolated points on the plane.
fn split_loop(points: &[Vec3], plane: &Plane) -> (Vec<Vec<Vec3>>, Vec<Vec<Vec3>>) {
    let n = points.len();
    let d: Vec<f64> = points.iter().map(|p| plane.signed_distance(p)).collect();
    let Some(start) = (0..n).find(|&i| d[i] != 0.0 && d[(i + n - 1) % n] * d[i] <= 0.0) else {
        // no crossing: the whole loop lies on one side
        let arc: Vec<Vec3> = points.iter().copied().chain(points.first().copied()).collect();
        return if d.iter().any(|&x| x > 0.0) { (vec![arc], vec![]) } else { (vec![], vec![arc]) };
    };
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut arc: Vec<Vec3> = Vec::new();
    let mut sign = d[start].signum();
    let prev = (start + n - 1) % n;
    if d[prev] != 0.0 {
        let w = d[prev] / (d[prev] - d[start]);
        arc.push(points[prev] + (points[start] - points[prev]) * w);
    } else {
        arc.push(points[prev]);
    }
    for k in 0..n {
        let i = (start + k) % n;
        let j = (i + 1) % n;
        if d[i] == 0.0 {
            continue;
        }
        arc.push(points[i]);
        if d[j] * d[i] <= 0.0 {
            let x = if d[j] == 0.0 { points[j] } else { points[i] + (points[j] - points[i]) * (d[i] / (d[i] - d[j])) };
            arc.push(x);
            let done = std::mem::replace(&mut arc, vec![x]);
            if sign > 0.0 {
                plus.push(done);
            } else {
                minus.push(done);
            }
            sign = -sign;
        }
    }
    (plus, minus)
}

fn open_crossings(arcs: &[Vec<Vec3>], f: &impl Fn(&Vec3) -> f64) -> usize {
    arcs.iter()
        .map(|a| {
            let s: Vec<f64> = a.iter().map(f).collect();
            s.windows(2).filter(|w| w[0] * w[1] < 0.0 || (w[1] == 0.0 && w[0] != 0.0)).count()
        })
        .sum()
}

/// Graph-separation test of `Γ` by `plane`: every circle of the sphere cut by a plane
/// orthogonal to `plane` and containing the pole direction meets each side at most once.
fn separation(loops: &[Vec<Vec3>], sphere: &Sphere, pole: &Vec3, plane: &Plane, circles: usize) -> GraphSeparation {
    let l = plane.normal.cross(pole);
    let fail =
        |max_plus, max_minus| GraphSeparation { plane: *plane, passes: false, max_plus, max_minus, witness: None };
    let Some(l) = l.try_normalize(1e-9) else {
        // the pole lies in the normal direction: no circle family
        return fail(usize::MAX, usize::MAX);
    };
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for lp in loops {
        let (p, m) = split_loop(lp, plane);
        plus.extend(p);
        minus.extend(m);
    }
    let rho = sphere.radius;
    let c0 = l.dot(&sphere.center);
    let mut out = GraphSeparation { plane: *plane, passes: true, max_plus: 0, max_minus: 0, witness: None };
    for k in 0..circles {
        let c = c0 - rho + 2.0 * rho * (k as f64 + 0.5) / circles as f64;
        let f = |x: &Vec3| l.dot(x) - c;
        let np = open_crossings(&plus, &f);
        let nm = open_crossings(&minus, &f);
        out.max_plus = out.max_plus.max(np);
        out.max_minus = out.max_minus.max(nm);
        if (np > 1 || nm > 1) && out.passes {
            out.passes = false;
            out.witness = Some(c);
        }
    }
    out
}

/// Rays from the centre through sample points of the inner closure patch must cross `S`
/// exactly once.
fn radial(mesh: &TriMesh, sphere: &Sphere, rays: usize) -> Result<RadialGraph, AlexandrovError> {
    let region = close_with_spherical_patch(mesh, sphere, PatchSide::Inner)?;
    let patch: Vec<usize> = (0..region.surface.face_count()).filter(|&f| region.patch_mask[f]).collect();
    let bvh = Bvh::new(mesh);
    let tol = 1e-9 * sphere.radius;
    let stride = (patch.len() / rays.max(1)).max(1);
    let mut tested = 0;
    for &f in patch.iter().step_by(stride) {
        let dir = region.surface.face_centroid(f) - sphere.center;
        let mut ts: Vec<f64> = Vec::new();
        for h in bvh.ray_hits(&sphere.center, &dir) {
            if ts.last().is_none_or(|&t| h.t - t > tol) {
                ts.push(h.t);
            }
        }
        tested += 1;
        if ts.len() != 1 {
            return Ok(RadialGraph { passes: false, rays: tested, witness: Some((dir.normalize(), ts.len())) });
        }
    }
    Ok(RadialGraph { passes: true, rays: tested, witness: None })
}

/// Checks the geometric hypotheses on a surface `S` whose boundary `Γ` lies on `sphere`:
/// open-hemisphere containment of `Γ`, the side of `S − Γ`, graph separation of `Γ` by
/// `opts.plane`, and the radial-graph property (only when `Γ` lies in a hemisphere).
pub fn check_hypotheses(
    mesh: &TriMesh,
    sphere: &Sphere,
    opts: &HypothesisOptions,
) -> Result<HypothesisReport, AlexandrovError> {
    let rho = sphere.radius;
    let btol = opts.boundary_tol.unwrap_or(1e-6 * rho);
    let stol = opts.side_tol.unwrap_or(1e-6 * rho);
    let loops = mesh.boundary_loops();
    let boundary = mesh.boundary_mask();
    let mut dirs = Vec::new();
    let mut polylines = Vec::new();
    for lp in &loops {
        for &v in &lp.vertices {
            let p = mesh.vertices()[v];
            let d = sphere.signed_distance(&p);
            if d.abs() > btol {
                return Err(AlexandrovError::BoundaryOffSphere { vertex: v, distance: d.abs() });
            }
            dirs.push(p - sphere.center);
        }
        polylines.push(lp.positions(mesh));
    }
    let pole = if dirs.is_empty() { None } else { hemisphere_pole(&dirs, 1e-12) };

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, p) in mesh.vertices().iter().enumerate() {
        if !boundary[i] {
            let d = sphere.signed_distance(p);
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    let side = if hi <= stol {
        SideClass::Interior
    } else if lo >= -stol {
        SideClass::Exterior
    } else {
        SideClass::Mixed
    };

    let separation = match (opts.plane, pole) {
        (Some(plane), Some((w, _))) => Some(separation(&polylines, sphere, &w, &plane, opts.circles)),
        (Some(plane), None) => {
            Some(GraphSeparation { plane, passes: false, max_plus: usize::MAX, max_minus: usize::MAX, witness: None })
        }
        _ => None,
    };
    let radial = if pole.is_some() { Some(radial(mesh, sphere, opts.rays)?) } else { None };
    Ok(HypothesisReport { pole, side, min_signed_distance: lo, max_signed_distance: hi, separation, radial })
}
