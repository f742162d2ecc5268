//! Mesh generators used as test fixtures, initial surfaces and CLI outputs.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::primitives::orthonormal_complement;
use super::{TriMesh, Vec3};

/// Subdivided icosahedron projected onto the sphere of the given radius about the
/// origin, wound outward. Level `k` has `10·4^k + 2` vertices.
pub fn icosphere(subdivisions: u32, radius: f64) -> TriMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriMesh::from_raw(verts.into_iter().map(|v| v * radius).collect(), faces)
}

/// Unit disk in the `xy`-plane made of `rings` concentric rings, ring `k` carrying
/// `6k` vertices; wound with normal `+z`. Returns the mesh and the `(r, θ)` of each vertex.
pub fn disk_rings(rings: usize) -> (TriMesh, Vec<(f64, f64)>) {
    assert!(rings >= 1);
    let mut polar = vec![(0.0, 0.0)];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(polar.len());
        let m = 6 * k;
        for j in 0..m {
            polar.push((k as f64 / rings as f64, 2.0 * PI * j as f64 / m as f64));
        }
    }
    let mut faces = Vec::new();
    for k in 1..=rings {
        let outer = ring_start[k];
        let big_m = 6 * k;
        if k == 1 {
            for j in 0..6 {
                faces.push([0, outer + j, outer + (j + 1) % 6]);
            }
            continue;
        }
        let inner = ring_start[k - 1];
        let m = 6 * (k - 1);
        let (mut i, mut j) = (0usize, 0usize);
        while i < m || j < big_m {
            let advance_inner = if i == m {
                false
            } else if j == big_m {
                true
            } else {
                (i + 1) * big_m < (j + 1) * m
            };
            if advance_inner {
                faces.push([inner + i % m, outer + j % big_m, inner + (i + 1) % m]);
                i += 1;
            } else {
                faces.push([inner + i % m, outer + j % big_m, outer + (j + 1) % big_m]);
                j += 1;
            }
        }
    }
    let verts = polar.iter().map(|&(r, t)| Vec3::new(r * t.cos(), r * t.sin(), 0.0)).collect();
    (TriMesh::from_raw(verts, faces), polar)
}

/// Flat disk of the given radius centred at `center` with normal `normal`.
pub fn flat_disk(center: Vec3, normal: Vec3, radius: f64, rings: usize) -> TriMesh {
    let (mesh, _) = disk_rings(rings);
    let n = normal.normalize();
    let (e1, e2) = orthonormal_complement(&n);
    mesh.map_vertices(|v| center + (e1 * v.x + e2 * v.y) * radius)
}

/// Spherical cap on the sphere `(center, radius)` around the unit `axis`, covering polar
/// angles `[0, polar_max]`, built from [`disk_rings`]. Wound with the outward sphere
/// normal when `polar_max < π`.
pub fn spherical_cap(center: Vec3, radius: f64, axis: Vec3, polar_max: f64, rings: usize) -> TriMesh {
    let (mesh, polar) = disk_rings(rings);
    let a = axis.normalize();
    let (e1, e2) = orthonormal_complement(&a);
    let verts = polar
        .iter()
        .map(|&(r, t)| {
            let phi = r * polar_max;
            center + (e1 * (phi.sin() * t.cos()) + e2 * (phi.sin() * t.sin()) + a * phi.cos()) * radius
        })
        .collect();
    let (_, faces) = mesh.into_parts();
    TriMesh::from_raw(verts, faces)
}

/// Flat `nx × ny` grid of squares covering `[0, sx] × [0, sy]` at `z = 0`, normal `+z`.
pub fn grid(nx: usize, ny: usize, sx: f64, sy: f64) -> TriMesh {
    let mut verts = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            verts.push(Vec3::new(sx * i as f64 / nx as f64, sy * j as f64 / ny as f64, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::from_raw(verts, faces)
}

/// Open cylinder of radius `radius` about the `z`-axis spanning `z ∈ [0, height]`,
/// wound with the outward normal.
pub fn cylinder(radius: f64, height: f64, n_angular: usize, n_axial: usize) -> TriMesh {
    let mut verts = Vec::with_capacity(n_angular * (n_axial + 1));
    for i in 0..=n_axial {
        let z = height * i as f64 / n_axial as f64;
        for j in 0..n_angular {
            let t = 2.0 * PI * j as f64 / n_angular as f64;
            verts.push(Vec3::new(radius * t.cos(), radius * t.sin(), z));
        }
    }
    let id = |i: usize, j: usize| i * n_angular + j % n_angular;
    let mut faces = Vec::new();
    for i in 0..n_axial {
        for j in 0..n_angular {
            faces.push([id(i, j), id(i, j + 1), id(i + 1, j)]);
            faces.push([id(i, j + 1), id(i + 1, j + 1), id(i + 1, j)]);
        }
    }
    TriMesh::from_raw(verts, faces)
}

/// Axis-aligned ellipsoid with semi-axes `(a, b, c)` obtained by scaling an icosphere.
pub fn ellipsoid(subdivisions: u32, a: f64, b: f64, c: f64) -> TriMesh {
    icosphere(subdivisions, 1.0).map_vertices(|v| Vec3::new(a * v.x, b * v.y, c * v.z))
}

/// Moves every vertex (optionally except boundary vertices) along its vertex normal by a
/// uniform random amount in `[-amplitude, amplitude]`. Deterministic for a given seed.
pub fn perturb_normal(mesh: &TriMesh, amplitude: f64, seed: u64, keep_boundary: bool) -> TriMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normals = mesh.vertex_normals();
    let boundary = mesh.boundary_mask();
    let mut out = mesh.clone();
    for (i, v) in out.vertices_mut().iter_mut().enumerate() {
        let s: f64 = rng.random_range(-1.0..=1.0);
        if keep_boundary && boundary[i] {
            continue;
        }
        *v += normals[i] * (s * amplitude);
    }
    out
}

/// Moves every vertex by an independent uniform random vector in the cube `[-a, a]³`.
pub fn perturb_uniform(mesh: &TriMesh, amplitude: f64, seed: u64) -> TriMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = mesh.clone();
    for v in out.vertices_mut() {
        let d = Vec3::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
        *v += d * amplitude;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts_and_orientation() {
        for k in 0..4 {
            let m = icosphere(k, 1.0);
            assert_eq!(m.vertex_count(), 10 * 4usize.pow(k) + 2);
            assert!(m.validate().is_ok());
            assert!(m.signed_cone_volume(&Vec3::zeros()) > 0.0);
        }
    }

    #[test]
    fn disk_rings_is_valid_disk() {
        let (m, _) = disk_rings(7);
        assert!(m.validate().is_ok());
        assert_eq!(m.vertex_count(), 1 + 3 * 7 * 8);
        assert_eq!(m.boundary_loops().len(), 1);
        assert_eq!(m.boundary_loops()[0].len(), 42);
        assert!(m.face_area_vector(0).z > 0.0);
        // total area approaches π from below (inscribed polygon)
        let a = m.surface_area();
        assert!(a < PI && a > 0.97 * PI);
    }

    #[test]
    fn cap_and_cylinder_orientation() {
        let cap = spherical_cap(Vec3::zeros(), 1.0, Vec3::z(), 0.8, 8);
        assert!(cap.validate().is_ok());
        let n = cap.vertex_normals();
        assert!(n[0].z > 0.99);
        let cyl = cylinder(1.0, 1.0, 32, 4);
        assert!(cyl.validate().is_ok());
        assert_eq!(cyl.boundary_loops().len(), 2);
        let nc = cyl.vertex_normals();
        assert!(nc[32].x > 0.99);
    }
}
