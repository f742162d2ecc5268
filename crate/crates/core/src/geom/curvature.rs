use rayon::prelude::*;

use super::{TriMesh, Vec3};

/// Cotangents are clamped to this magnitude on near-degenerate triangles.
pub const COT_CLAMP: f64 = 1e6;

/// Per-vertex mean curvature. Boundary vertices carry `None`.
///
/// `vector[i]` is the mean-curvature vector `-ΔX/2` (half the area gradient density),
/// and `h[i]` its signed length along the winding normal. A sphere wound outward,
/// i.e. with the enclosed domain on the side opposite to the winding normal, has
/// `h = +1/R`.
#[derive(Debug, Clone)]
pub struct MeanCurvature {
    pub h: Vec<Option<f64>>,
    pub vector: Vec<Option<Vec3>>,
}

impl MeanCurvature {
    pub fn interior_values(&self) -> Vec<f64> {
        self.h.iter().flatten().copied().collect()
    }
}

fn clamped_cot(u: &Vec3, v: &Vec3) -> f64 {
    let s = u.cross(v).norm();
    let c = u.dot(v);
    if s <= c.abs() / COT_CLAMP {
        return COT_CLAMP.copysign(c);
    }
    (c / s).clamp(-COT_CLAMP, COT_CLAMP)
}

/// Cotangents of the three corner angles of face `f`, indexed by corner.
pub fn cotan_weights(mesh: &TriMesh, f: usize) -> [f64; 3] {
    let p = mesh.face_points(f);
    let mut out = [0.0; 3];
    for k in 0..3 {
        let a = p[k];
        let b = p[(k + 1) % 3];
        let c = p[(k + 2) % 3];
        out[k] = clamped_cot(&(b - a), &(c - a));
    }
    out
}

/// Cotangent-Laplacian mean curvature with mixed Voronoi areas.
pub fn vertex_mean_curvature(mesh: &TriMesh) -> MeanCurvature {
    let n = mesh.vertex_count();
    let mut lap = vec![Vec3::zeros(); n];
    let mut area = vec![0.0; n];
    for f in 0..mesh.face_count() {
        let idx = mesh.faces()[f];
        let p = mesh.face_points(f);
        let cot = cotan_weights(mesh, f);
        let fa = mesh.face_area(f);
        for k in 0..3 {
            let (i, j, l) = (k, (k + 1) % 3, (k + 2) % 3);
            // edge (j, l) is opposite corner k
            let w = 0.5 * cot[i];
            lap[idx[j]] += (p[l] - p[j]) * w;
            lap[idx[l]] += (p[j] - p[l]) * w;
        }
        let obtuse = (0..3).find(|&k| cot[k] < 0.0);
        for k in 0..3 {
            let share = match obtuse {
                None => {
                    let (j, l) = ((k + 1) % 3, (k + 2) % 3);
                    0.125 * ((p[l] - p[k]).norm_squared() * cot[j] + (p[j] - p[k]).norm_squared() * cot[l])
                }
                Some(o) if o == k => 0.5 * fa,
                Some(_) => 0.25 * fa,
            };
            area[idx[k]] += share;
        }
    }
    let boundary = mesh.boundary_mask();
    let normals = mesh.vertex_normals();
    let (h, vector) = (0..n)
        .into_par_iter()
        .map(|i| {
            if boundary[i] || area[i] <= 0.0 {
                return (None, None);
            }
            let hv = -lap[i] / (2.0 * area[i]);
            let sign = if hv.dot(&normals[i]) >= 0.0 { 1.0 } else { -1.0 };
            (Some(sign * hv.norm()), Some(hv))
        })
        .unzip();
    MeanCurvature { h, vector }
}

/// Gradient of total area with respect to every vertex position.
pub fn area_gradient(mesh: &TriMesh) -> Vec<Vec3> {
    let mut g = vec![Vec3::zeros(); mesh.vertex_count()];
    for f in 0..mesh.face_count() {
        let idx = mesh.faces()[f];
        let p = mesh.face_points(f);
        let n = mesh.face_normal(f);
        for k in 0..3 {
            let b = p[(k + 1) % 3];
            let c = p[(k + 2) % 3];
            g[idx[k]] += n.cross(&(c - b)) * 0.5;
        }
    }
    g
}

/// Gradient of the signed cone volume about `origin`. For interior vertices it does not
/// depend on the origin and equals a third of the summed face area vectors.
pub fn volume_gradient(mesh: &TriMesh, origin: &Vec3) -> Vec<Vec3> {
    let mut g = vec![Vec3::zeros(); mesh.vertex_count()];
    for &[a, b, c] in mesh.faces() {
        let (pa, pb, pc) = (mesh.vertices()[a] - origin, mesh.vertices()[b] - origin, mesh.vertices()[c] - origin);
        g[a] += pb.cross(&pc) / 6.0;
        g[b] += pc.cross(&pa) / 6.0;
        g[c] += pa.cross(&pb) / 6.0;
    }
    g
}

/// Mean curvature defined as the ratio of area to volume variation at each interior
/// vertex, `(∇A·∇V) / (2|∇V|²)`. A discrete volume-constrained critical point of
/// area has exactly constant values of this quantity.
pub fn variational_mean_curvature(mesh: &TriMesh) -> Vec<Option<f64>> {
    let ga = area_gradient(mesh);
    let gv = volume_gradient(mesh, &Vec3::zeros());
    let boundary = mesh.boundary_mask();
    (0..mesh.vertex_count())
        .map(|i| {
            let d = gv[i].norm_squared();
            if boundary[i] || d <= 0.0 {
                None
            } else {
                Some(ga[i].dot(&gv[i]) / (2.0 * d))
            }
        })
        .collect()
}
