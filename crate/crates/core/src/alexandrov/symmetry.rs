use serde::{Deserialize, Serialize};

use super::{AlexandrovError, FamilyKind, PlaneFamily};
use crate::geom::{Bvh, Line, Plane, TriMesh, Vec3};

/// `max_v dist(reflect(v), S)`: the vertex-to-surface Hausdorff distance between `S` and
/// its mirror image (symmetric because the reflection is an isometry).
pub fn reflection_residual(mesh: &TriMesh, plane: &Plane) -> f64 {
    residual_on(&Bvh::new(mesh), mesh.vertices(), plane)
}

fn residual_on(bvh: &Bvh, points: &[Vec3], plane: &Plane) -> f64 {
    points.iter().map(|p| bvh.distance(&plane.reflect_point(p))).fold(0.0, f64::max)
}

/// `min(residual, cap)` with an early exit once the cap is reached.
fn residual_capped(bvh: &Bvh, points: &[Vec3], plane: &Plane, cap: f64) -> f64 {
    let mut r = 0.0f64;
    for p in points {
        r = r.max(bvh.distance_capped(&plane.reflect_point(p), cap));
        if r >= cap {
            break;
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryOptions {
    /// Acceptance threshold; `None` means `1e-4 ×` the bounding-box diagonal.
    pub tol_sym: Option<f64>,
    /// Vertices used while searching (all of them for the final residual).
    pub search_vertices: usize,
    /// Parameter tolerance of the golden-section refinement.
    pub t_tol: f64,
}

impl Default for SymmetryOptions {
    fn default() -> Self {
        Self { tol_sym: None, search_vertices: 1500, t_tol: 1e-13 }
    }
}

fn golden(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Every plane of the pencil that reflects `mesh` onto itself within the tolerance, with
/// its residual, sorted by parameter. Local minima of the sampled residual are refined by
/// golden-section search unless the Lipschitz bound of the residual rules them out.
pub fn symmetry_planes(mesh: &TriMesh, pencil: &PlaneFamily, opts: &SymmetryOptions) -> Vec<(Plane, f64)> {
    let tol = opts.tol_sym.unwrap_or(1e-4 * mesh.bbox_diagonal());
    let bvh = Bvh::new(mesh);
    let stride = (mesh.vertex_count() / opts.search_vertices.max(1)).max(1);
    let subset: Vec<Vec3> = mesh.vertices().iter().step_by(stride).copied().collect();
    let ts: Vec<f64> = pencil.parameters().collect();
    let h = ts[1] - ts[0];
    let n = ts.len();
    // moving the parameter by dt moves every reflected point by at most lip · dt, so
    // values above `cap` cannot lead to a plane within the tolerance
    let lip = match pencil.kind {
        FamilyKind::Translational { .. } => 2.0,
        FamilyKind::Rotational { axis, .. } => 2.0 * subset.iter().map(|p| axis.distance_to(p)).fold(0.0, f64::max),
    };
    let cap = 2.0 * (tol + lip * h);
    let f = |t: f64| residual_capped(&bvh, &subset, &pencil.plane(t), cap);
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let mut found: Vec<(f64, Plane, f64)> = Vec::new();
    for k in 0..n {
        let left = if k > 0 { vals[k - 1] } else { f64::INFINITY };
        let right = if k + 1 < n { vals[k + 1] } else { f64::INFINITY };
        if !(vals[k] <= left && vals[k] <= right) || vals[k] - lip * h > tol {
            continue;
        }
        let a = (ts[k] - h).max(pencil.t_min);
        let b = (ts[k] + h).min(pencil.t_max);
        let (t, _) = golden(&f, a, b, opts.t_tol);
        let plane = pencil.plane(t);
        let r = residual_on(&bvh, mesh.vertices(), &plane);
        let dup = found
            .iter()
            .any(|(_, p, _)| p.angle_to(&plane) < 1e-9 && (p.offset.abs() - plane.offset.abs()).abs() < 1e-9);
        if r <= tol && !dup {
            found.push((t, plane, r));
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    found.into_iter().map(|(_, p, r)| (p, r)).collect()
}

/// The best plane of the pencil, if its residual is within the tolerance.
pub fn detect_symmetry_plane(mesh: &TriMesh, pencil: &PlaneFamily, opts: &SymmetryOptions) -> Option<(Plane, f64)> {
    symmetry_planes(mesh, pencil, opts).into_iter().min_by(|a, b| a.1.total_cmp(&b.1))
}

/// [`common_axis_tol`] with tolerance `1e-8`.
pub fn common_axis(planes: &[Plane]) -> Result<Line, AlexandrovError> {
    common_axis_tol(planes, 1e-8)
}

/// Least-squares line lying in all planes. Accepted when both the direction and the
/// anchor (the point of the line closest to the origin) are within `tol` (per unit
/// length) of every plane.
pub fn common_axis_tol(planes: &[Plane], tol: f64) -> Result<Line, AlexandrovError> {
    if planes.len() < 2 {
        return Err(AlexandrovError::NoCommonLine { misfit: f64::INFINITY });
    }
    let mut m = nalgebra::Matrix3::zeros();
    let mut rhs = Vec3::zeros();
    for p in planes {
        m += p.normal * p.normal.transpose();
        rhs += p.normal * p.offset;
    }
    let eig = m.symmetric_eigen();
    let (k, _) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("three eigenvalues");
    let d: Vec3 = eig.eigenvectors.column(k).into_owned().normalize();
    // anchor: least squares in the plane orthogonal to d
    let anchor = (m + d * d.transpose()).lu().solve(&rhs);
    let Some(x) = anchor else {
        return Err(AlexandrovError::NoCommonLine { misfit: f64::INFINITY });
    };
    let scale = 1.0 + x.norm();
    let misfit =
        planes.iter().map(|p| p.normal.dot(&d).abs().max(p.signed_distance(&x).abs() / scale)).fold(0.0, f64::max);
    if misfit > tol {
        return Err(AlexandrovError::NoCommonLine { misfit });
    }
    Ok(Line { point: x, direction: d })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_of_two_and_three_planes() {
        let x0 = Plane { normal: Vec3::x(), offset: 0.0 };
        let y0 = Plane { normal: Vec3::y(), offset: 0.0 };
        let l = common_axis(&[x0, y0]).unwrap();
        assert!(l.angle_to(&Line::z_axis()) < 1e-12 && l.distance_to(&Vec3::zeros()) < 1e-12);
        let three: Vec<Plane> = [0.0f64, 60.0, 120.0]
            .iter()
            .map(|a| {
                let a = a.to_radians();
                Plane { normal: Vec3::new(a.cos(), a.sin(), 0.0), offset: 0.0 }
            })
            .collect();
        assert!(common_axis(&three).unwrap().angle_to(&Line::z_axis()) < 1e-12);
        let x1 = Plane { normal: Vec3::x(), offset: 1.0 };
        assert!(matches!(common_axis(&[x0, x1]), Err(AlexandrovError::NoCommonLine { .. })));
        assert!(common_axis(&[x0]).is_err());
    }

    #[test]
    fn off_origin_axis() {
        let c = Vec3::new(0.3, -0.2, 0.0);
        let planes: Vec<Plane> = [0.1f64, 1.0, 2.0]
            .iter()
            .map(|&a| Plane::through_point(Vec3::new(a.cos(), a.sin(), 0.0), &c).unwrap())
            .collect();
        let l = common_axis(&planes).unwrap();
        assert!(l.distance_to(&(c + Vec3::z() * 5.0)) < 1e-10);
    }

    #[test]
    fn golden_section_on_a_kink() {
        let (t, v) = golden(&|t: f64| (t - 0.3).abs(), 0.0, 1.0, 1e-12);
        assert!((t - 0.3).abs() < 1e-11 && v < 1e-11);
    }
}
