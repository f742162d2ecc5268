use std::f64::consts::PI;

use super::DelaunayProfile;
use crate::geom::{TriMesh, Vec3};

/// Points `(R sin t, R cos t)` for `t` from `t0` to `t1` in `n` equal steps (meridian of
/// a sphere of radius `R` centred at the origin, polar angle measured from `+z`).
pub fn arc_profile(radius: f64, t0: f64, t1: f64, n: usize) -> Vec<(f64, f64)> {
    (0..=n)
        .map(|i| {
            let t = t0 + (t1 - t0) * i as f64 / n as f64;
            let x = if t.abs() < 1e-300 || (t - PI).abs() < 1e-15 { 0.0 } else { radius * t.sin() };
            (x, radius * t.cos())
        })
        .collect()
}

/// Straight meridian from `(x0, z0)` to `(x1, z1)` in `n` steps.
pub fn segment_profile(x0: f64, z0: f64, x1: f64, z1: f64, n: usize) -> Vec<(f64, f64)> {
    (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            (x0 + (x1 - x0) * s, z0 + (z1 - z0) * s)
        })
        .collect()
}

/// Surface of revolution of the sampled profile `x(s), z(s)` about the `z`-axis.
///
/// Profile points on the axis become single pole vertices. The winding normal is
/// `e_θ × e_s` (outward for a meridian running upward on the right of the axis). Quad
/// diagonals alternate in a checkerboard so that, for even `n_angular`, every plane
/// through the axis and a vertex meridian is an exact mirror symmetry of the mesh.
pub fn revolve_points(profile: &[(f64, f64)], n_angular: usize) -> TriMesh {
    assert!(n_angular >= 3 && profile.len() >= 2);
    let scale = profile.iter().map(|p| p.0.abs().max(p.1.abs())).fold(0.0, f64::max).max(1e-300);
    let on_axis = |x: f64| x.abs() <= 1e-12 * scale;
    let (cos, sin): (Vec<f64>, Vec<f64>) = (0..n_angular)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n_angular as f64;
            (t.cos(), t.sin())
        })
        .unzip();
    let mut verts = Vec::new();
    // ring ids: either a single pole id or n_angular ids
    let mut rings: Vec<Vec<usize>> = Vec::with_capacity(profile.len());
    for &(x, z) in profile {
        if on_axis(x) {
            verts.push(Vec3::new(0.0, 0.0, z));
            rings.push(vec![verts.len() - 1]);
        } else {
            let start = verts.len();
            for j in 0..n_angular {
                verts.push(Vec3::new(x * cos[j], x * sin[j], z));
            }
            rings.push((start..start + n_angular).collect());
        }
    }
    let mut faces = Vec::new();
    for i in 0..profile.len() - 1 {
        let (r0, r1) = (&rings[i], &rings[i + 1]);
        let at = |r: &Vec<usize>, j: usize| if r.len() == 1 { r[0] } else { r[j % n_angular] };
        for j in 0..n_angular {
            let a = at(r0, j);
            let b = at(r0, j + 1);
            let c = at(r1, j);
            let d = at(r1, j + 1);
            if r0.len() == 1 && r1.len() == 1 {
                continue;
            }
            if r0.len() == 1 {
                faces.push([a, d, c]);
            } else if r1.len() == 1 {
                faces.push([a, b, c]);
            } else if (i + j) % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([b, d, c]);
            } else {
                faces.push([a, b, d]);
                faces.push([a, d, c]);
            }
        }
    }
    TriMesh::from_raw(verts, faces)
}

/// Revolves the samples of a Delaunay profile.
pub fn revolve(profile: &DelaunayProfile, n_angular: usize) -> TriMesh {
    let pts: Vec<(f64, f64)> = profile.samples.iter().map(|s| (s.x, s.z)).collect();
    revolve_points(&pts, n_angular)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ClosedRegion;

    #[test]
    fn sphere_of_revolution() {
        // meridian running upward: outward winding
        let m = revolve_points(&arc_profile(1.0, PI, 0.0, 256), 256);
        assert!(m.validate().is_ok());
        assert!(m.is_closed());
        let r = ClosedRegion::from_closed_mesh(&m).unwrap();
        assert!(!r.surface_flipped);
        assert!((r.enclosed_volume() / (4.0 * PI / 3.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn cylinder_area() {
        let m = revolve_points(&segment_profile(1.0, 0.0, 1.0, 1.0, 16), 256);
        assert!((m.surface_area() / (2.0 * PI) - 1.0).abs() < 5e-3);
        assert_eq!(m.boundary_loops().len(), 2);
        assert_eq!(m.vertex_count(), 17 * 256);
    }

    #[test]
    fn rotation_invariance() {
        let n = 32;
        let m = revolve_points(&segment_profile(1.0, 0.0, 2.0, 1.0, 4), n);
        let rot = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), 2.0 * PI / n as f64);
        for v in m.vertices() {
            let w = rot * v;
            let best = m.vertices().iter().map(|u| (u - w).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-12);
        }
    }
}
