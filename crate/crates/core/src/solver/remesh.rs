//! Connectivity and vertex-distribution repair between flow steps.

use std::collections::{HashMap, HashSet};

use crate::geom::{Sphere, TriMesh, Vec3};

fn cot(u: &Vec3, v: &Vec3) -> f64 {
    let s = u.cross(v).norm();
    if s <= 0.0 {
        return f64::INFINITY.copysign(u.dot(v));
    }
    u.dot(v) / s
}

/// Flips interior edges whose opposite angles sum to clearly more than `π`
/// (`cot α + cot β < −margin`). Edges shared by faces bent by more than about 25° are
/// left alone, as are flips that would create an existing edge or a vertex of valence
/// below three. Boundary edges are never touched.
pub(crate) fn delaunay_flips(mesh: &TriMesh, margin: f64) -> (TriMesh, usize) {
    let verts = mesh.vertices().to_vec();
    let mut faces = mesh.faces().to_vec();
    let mut valence = vec![0usize; verts.len()];
    for nb in mesh.vertex_neighbors().iter().enumerate() {
        valence[nb.0] = nb.1.len();
    }
    let mut total = 0;
    for _ in 0..6 {
        let mut he: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
        for (f, t) in faces.iter().enumerate() {
            for k in 0..3 {
                he.insert((t[k], t[(k + 1) % 3]), f);
            }
        }
        let mut created: HashSet<(usize, usize)> = HashSet::new();
        let mut touched = vec![false; faces.len()];
        let mut flips = 0;
        for f1 in 0..faces.len() {
            for k in 0..3 {
                if touched[f1] {
                    break;
                }
                let t1 = faces[f1];
                let (i, j, a) = (t1[k], t1[(k + 1) % 3], t1[(k + 2) % 3]);
                if i > j {
                    continue;
                }
                let Some(&f2) = he.get(&(j, i)) else { continue };
                if touched[f2] {
                    continue;
                }
                let Some(&b) = faces[f2].iter().find(|&&x| x != i && x != j) else { continue };
                let (pi, pj, pa, pb) = (verts[i], verts[j], verts[a], verts[b]);
                if cot(&(pi - pa), &(pj - pa)) + cot(&(pi - pb), &(pj - pb)) >= -margin {
                    continue;
                }
                let key = (a.min(b), a.max(b));
                if he.contains_key(&(a, b)) || he.contains_key(&(b, a)) || created.contains(&key) {
                    continue;
                }
                if valence[i] <= 3 || valence[j] <= 3 {
                    continue;
                }
                let n1 = (pj - pi).cross(&(pa - pi));
                let n2 = (pi - pj).cross(&(pb - pj));
                if n1.normalize().dot(&n2.normalize()) < 0.9 {
                    continue;
                }
                let m1 = (pb - pi).cross(&(pa - pi));
                let m2 = (pj - pb).cross(&(pa - pb));
                let n = n1 + n2;
                if m1.dot(&n) <= 0.0 || m2.dot(&n) <= 0.0 || m1.normalize().dot(&m2.normalize()) < 0.9 {
                    continue;
                }
                faces[f1] = [i, b, a];
                faces[f2] = [b, j, a];
                touched[f1] = true;
                touched[f2] = true;
                created.insert(key);
                valence[i] -= 1;
                valence[j] -= 1;
                valence[a] += 1;
                valence[b] += 1;
                flips += 1;
            }
        }
        total += flips;
        if flips == 0 {
            break;
        }
    }
    (TriMesh::from_raw(verts, faces), total)
}

/// Moves interior vertices toward the centroid of their neighbours within the tangent
/// plane, and free boundary vertices along the boundary toward the midpoint of their loop
/// neighbours (then back onto the sphere).
pub(crate) fn smooth_tangential(
    mesh: &TriMesh,
    interior: &[bool],
    slide: &[Option<(usize, usize)>],
    sphere: Option<Sphere>,
    factor: f64,
) -> TriMesh {
    let nbrs = mesh.vertex_neighbors();
    let normals = mesh.vertex_normals();
    let old = mesh.vertices();
    let mut out = mesh.clone();
    let verts = out.vertices_mut();
    for i in 0..old.len() {
        let p = old[i];
        if interior[i] && !nbrs[i].is_empty() {
            let c = nbrs[i].iter().map(|&j| old[j]).sum::<Vec3>() / nbrs[i].len() as f64;
            let n = normals[i];
            let d = (c - p) * factor;
            verts[i] = p + d - n * n.dot(&d);
        } else if let (Some((prev, next)), Some(s)) = (slide[i], sphere) {
            let Some(t) = (old[next] - old[prev]).try_normalize(1e-300) else { continue };
            let mid = (old[prev] + old[next]) * 0.5;
            verts[i] = s.project(&(p + t * (t.dot(&(mid - p)) * factor)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;

    #[test]
    fn flips_restore_delaunay_on_a_sheared_grid() {
        let g = shapes::grid(8, 8, 1.0, 1.0).map_vertices(|v| Vec3::new(v.x + 0.9 * v.y, v.y, 0.0));
        let (m, flips) = delaunay_flips(&g, 1e-3);
        assert!(flips > 0);
        assert!(m.validate().is_ok());
        assert!((m.surface_area() - g.surface_area()).abs() < 1e-12);
        assert_eq!(m.boundary_edges().len(), g.boundary_edges().len());
        assert!(m.min_triangle_quality() > g.min_triangle_quality());
        let (_, again) = delaunay_flips(&m, 1e-3);
        assert_eq!(again, 0);
    }

    #[test]
    fn smoothing_keeps_a_plane_flat() {
        let g =
            shapes::perturb_uniform(&shapes::grid(6, 6, 1.0, 1.0), 0.02, 1).map_vertices(|v| Vec3::new(v.x, v.y, 0.0));
        let interior: Vec<bool> = g.boundary_mask().iter().map(|b| !b).collect();
        let s = smooth_tangential(&g, &interior, &vec![None; g.vertex_count()], None, 0.5);
        assert!(s.vertices().iter().all(|v| v.z.abs() < 1e-15));
        assert!(s.min_triangle_quality() >= g.min_triangle_quality());
    }
}
