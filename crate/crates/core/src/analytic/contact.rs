use std::collections::BTreeSet;

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use super::AnalyticError;
use crate::geom::{orthonormal_complement, Sphere, TriMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Largest `|γ_i − mean|`.
    pub max_deviation: f64,
}

impl AngleStats {
    fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let max_deviation = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        Self { mean, min, max, max_deviation }
    }
}

/// Contact angles at boundary vertices, in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactAngles {
    /// `(vertex, γ)` in loop order, loops concatenated.
    pub per_vertex: Vec<(usize, f64)>,
    pub loops: Vec<AngleStats>,
    pub overall: AngleStats,
}

/// Unit normal at vertex `v` from a quadratic height-function fit over its two-ring,
/// oriented like the winding normal.
pub fn surface_normal_at(mesh: &TriMesh, neighbors: &[Vec<usize>], normals: &[Vec3], v: usize) -> Vec3 {
    let p = mesh.vertices()[v];
    let n0 = normals[v];
    let (e1, e2) = orthonormal_complement(&n0);
    let mut ring: BTreeSet<usize> = BTreeSet::new();
    for &a in &neighbors[v] {
        ring.insert(a);
        for &b in &neighbors[a] {
            ring.insert(b);
        }
    }
    ring.remove(&v);
    let pts: Vec<(f64, f64, f64)> = ring
        .iter()
        .map(|&q| {
            let d = mesh.vertices()[q] - p;
            (d.dot(&e1), d.dot(&e2), d.dot(&n0))
        })
        .collect();
    let scale = pts.iter().map(|(u, w, _)| (u * u + w * w).sqrt()).sum::<f64>() / pts.len().max(1) as f64;
    if pts.len() < 5 || scale == 0.0 {
        return n0;
    }
    let mut ata = SMatrix::<f64, 5, 5>::zeros();
    let mut atb = SVector::<f64, 5>::zeros();
    for &(u, w, h) in &pts {
        let (u, w, h) = (u / scale, w / scale, h / scale);
        let row = SVector::<f64, 5>::from([u, w, u * u, u * w, w * w]);
        ata += row * row.transpose();
        atb += row * h;
    }
    let Some(sol) = ata.cholesky().map(|c| c.solve(&atb)) else {
        return n0;
    };
    (n0 - e1 * sol[0] - e2 * sol[1]).normalize()
}

/// Contact angle along every boundary loop with the default tolerance `1e-6·ρ` on the
/// boundary's distance to the sphere.
pub fn contact_angle(mesh: &TriMesh, sphere: &Sphere) -> Result<ContactAngles, AnalyticError> {
    contact_angle_tol(mesh, sphere, 1e-6 * sphere.radius)
}

/// The angle at a boundary vertex is the dihedral angle between the surface and the
/// sphere measured through the drop, the drop lying on the side opposite to the winding
/// normal. With `η` the inward conormal of the surface and `n` its winding normal, it is
/// the first angle `φ ∈ [0, π)` at which `cos φ η − sin φ n` is tangent to the sphere.
pub fn contact_angle_tol(mesh: &TriMesh, sphere: &Sphere, tol: f64) -> Result<ContactAngles, AnalyticError> {
    let loops = mesh.boundary_loops();
    let neighbors = mesh.vertex_neighbors();
    let normals = mesh.vertex_normals();
    let mut per_vertex = Vec::new();
    let mut stats = Vec::new();
    for lp in &loops {
        let n = lp.len();
        let mut vals = Vec::with_capacity(n);
        for j in 0..n {
            let v = lp.vertices[j];
            let p = mesh.vertices()[v];
            let d = sphere.signed_distance(&p);
            if d.abs() > tol {
                return Err(AnalyticError::BoundaryOffSphere { vertex: v, distance: d.abs() });
            }
            let prev = mesh.vertices()[lp.vertices[(j + n - 1) % n]];
            let next = mesh.vertices()[lp.vertices[(j + 1) % n]];
            let ns = surface_normal_at(mesh, &neighbors, &normals, v);
            let t = next - prev;
            let t = (t - ns * t.dot(&ns)).normalize();
            let eta = ns.cross(&t);
            let nsig = sphere.normal_at(&p);
            let mut g = (-nsig.dot(&eta)).atan2(-nsig.dot(&ns));
            if g < 0.0 {
                g += std::f64::consts::PI;
            }
            vals.push(g);
            per_vertex.push((v, g));
        }
        stats.push(AngleStats::of(&vals));
    }
    let all: Vec<f64> = per_vertex.iter().map(|x| x.1).collect();
    Ok(ContactAngles { per_vertex, loops: stats, overall: AngleStats::of(&all) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;
    use std::f64::consts::PI;

    #[test]
    fn equatorial_disk_is_orthogonal() {
        let disk = shapes::flat_disk(Vec3::zeros(), Vec3::z(), 1.0, 12);
        let a = contact_angle(&disk, &Sphere::unit()).unwrap();
        assert!((a.overall.mean - PI / 2.0).abs() < 1e-9);
        assert!(a.overall.max_deviation < 1e-9);
    }

    #[test]
    fn tilted_disk_angle() {
        // drop above the disk: winding normal points down
        let r = 0.8;
        let disk = shapes::flat_disk(Vec3::new(0.0, 0.0, 0.6), -Vec3::z(), r, 16);
        let a = contact_angle_tol(&disk, &Sphere::unit(), 1e-9).unwrap();
        assert!((a.overall.mean - 0.6f64.acos()).abs() < 1e-9, "{}", a.overall.mean);
        let flipped = contact_angle_tol(&disk.flipped(), &Sphere::unit(), 1e-9).unwrap();
        assert!((flipped.overall.mean - (PI - 0.6f64.acos())).abs() < 1e-9);
    }

    #[test]
    fn off_sphere_is_rejected() {
        let disk = shapes::flat_disk(Vec3::zeros(), Vec3::z(), 0.9, 4);
        assert!(matches!(contact_angle(&disk, &Sphere::unit()), Err(AnalyticError::BoundaryOffSphere { .. })));
    }
}
