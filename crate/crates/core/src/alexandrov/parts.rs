use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geom::{orthonormal_complement, Bvh, Plane, TriMesh, Vec3};

/// Keeps only the referenced vertices.
fn compact(points: &[Vec3], faces: Vec<[usize; 3]>) -> TriMesh {
    let mut map = vec![usize::MAX; points.len()];
    let mut verts = Vec::new();
    let faces = faces
        .into_iter()
        .map(|f| {
            f.map(|i| {
                if map[i] == usize::MAX {
                    map[i] = verts.len();
                    verts.push(points[i]);
                }
                map[i]
            })
        })
        .collect();
    TriMesh::from_raw(verts, faces)
}

fn fan(poly: &[usize], pts: &[Vec3], out: &mut Vec<[usize; 3]>) {
    match poly.len() {
        3 => out.push([poly[0], poly[1], poly[2]]),
        4 => {
            // shorter diagonal
            if (pts[poly[0]] - pts[poly[2]]).norm() <= (pts[poly[1]] - pts[poly[3]]).norm() {
                out.push([poly[0], poly[1], poly[2]]);
                out.push([poly[0], poly[2], poly[3]]);
            } else {
                out.push([poly[1], poly[2], poly[3]]);
                out.push([poly[1], poly[3], poly[0]]);
            }
        }
        _ => {}
    }
}

/// Splits `mesh` along `plane` into the part with non-positive signed distance and the
/// part with non-negative signed distance. Crossing triangles are cut exactly; the cut
/// vertices are shared (bitwise identical) by both parts. Faces lying in the plane go to
/// the first part.
pub fn half_parts(mesh: &TriMesh, plane: &Plane) -> (TriMesh, TriMesh) {
    let eps = 1e-12 * mesh.bbox_diagonal();
    let verts = mesh.vertices();
    let d: Vec<f64> = verts
        .iter()
        .map(|p| {
            let s = plane.signed_distance(p);
            if s.abs() <= eps {
                0.0
            } else {
                s
            }
        })
        .collect();
    let mut pts = verts.to_vec();
    let mut cut: HashMap<(usize, usize), usize> = HashMap::new();
    let mut minus = Vec::new();
    let mut plus = Vec::new();
    for f in mesh.faces() {
        let s = f.map(|i| d[i]);
        if s.iter().all(|&x| x <= 0.0) {
            minus.push(*f);
            continue;
        }
        if s.iter().all(|&x| x >= 0.0) {
            plus.push(*f);
            continue;
        }
        let mut pm = Vec::with_capacity(4);
        let mut pp = Vec::with_capacity(4);
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if d[a] <= 0.0 {
                pm.push(a);
            }
            if d[a] >= 0.0 {
                pp.push(a);
            }
            if d[a] * d[b] < 0.0 {
                let key = (a.min(b), a.max(b));
                let x = *cut.entry(key).or_insert_with(|| {
                    let (lo, hi) = key;
                    let w = d[lo] / (d[lo] - d[hi]);
                    pts.push(plane.project(&(verts[lo] + (verts[hi] - verts[lo]) * w)));
                    pts.len() - 1
                });
                pm.push(x);
                pp.push(x);
            }
        }
        fan(&pm, &pts, &mut minus);
        fan(&pp, &pts, &mut plus);
    }
    (compact(&pts, minus), compact(&pts, plus))
}

/// Mirror image of the part behind `plane`.
pub fn reflected_part(mesh: &TriMesh, plane: &Plane) -> TriMesh {
    half_parts(mesh, plane).0.reflect(plane)
}

/// Outcome of a graph test. The witness is a line orthogonal to the plane, given by its
/// foot on the plane, together with the heights where it meets the part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTest {
    pub is_graph: bool,
    pub witness: Option<(Vec3, Vec<f64>)>,
    pub lines_tested: usize,
}

/// [`is_graph_over_with`] on a 96 × 96 raster.
pub fn is_graph_over(part: &TriMesh, plane: &Plane) -> GraphTest {
    is_graph_over_with(part, plane, 96)
}

/// Whether every line orthogonal to `plane` meets `part` at most once. Lines are cast
/// through a `resolution²` raster over the projected bounding box and through every face
/// centroid; hits closer than `1e-7 ×` the diagonal count once.
pub fn is_graph_over_with(part: &TriMesh, plane: &Plane, resolution: usize) -> GraphTest {
    if part.face_count() == 0 {
        return GraphTest { is_graph: true, witness: None, lines_tested: 0 };
    }
    let n = plane.normal;
    let (e1, e2) = orthonormal_complement(&n);
    let bvh = Bvh::new(part);
    let tol = 1e-7 * part.bbox_diagonal().max(1e-300);
    let uv: Vec<(f64, f64)> = part.vertices().iter().map(|p| (p.dot(&e1), p.dot(&e2))).collect();
    let (mut lo, mut hi) = ((f64::MAX, f64::MAX), (f64::MIN, f64::MIN));
    for &(u, v) in &uv {
        lo = (lo.0.min(u), lo.1.min(v));
        hi = (hi.0.max(u), hi.1.max(v));
    }
    let foot = |u: f64, v: f64| e1 * u + e2 * v + n * plane.offset;
    let mut feet: Vec<Vec3> = Vec::with_capacity(resolution * resolution + part.face_count());
    for i in 0..resolution {
        for j in 0..resolution {
            let u = lo.0 + (hi.0 - lo.0) * (i as f64 + 0.5) / resolution as f64;
            let v = lo.1 + (hi.1 - lo.1) * (j as f64 + 0.5) / resolution as f64;
            feet.push(foot(u, v));
        }
    }
    for f in 0..part.face_count() {
        feet.push(plane.project(&part.face_centroid(f)));
    }
    let lines_tested = feet.len();
    for o in feet {
        let hits = bvh.line_hits(&o, &n);
        let mut ts: Vec<f64> = Vec::new();
        for h in hits {
            if ts.last().is_none_or(|&t| h.t - t > tol) {
                ts.push(h.t);
            }
        }
        if ts.len() > 1 {
            return GraphTest { is_graph: false, witness: Some((o, ts)), lines_tested };
        }
    }
    GraphTest { is_graph: true, witness: None, lines_tested }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;

    #[test]
    fn equator_cut_gives_equal_halves() {
        let m = shapes::icosphere(3, 1.0).translated(&Vec3::new(0.0, 0.0, 1e-3));
        let p = Plane { normal: Vec3::z(), offset: 1e-3 };
        let (a, b) = half_parts(&m, &p);
        assert!(((a.surface_area() - b.surface_area()) / a.surface_area()).abs() < 1e-6);
        assert!(((a.surface_area() + b.surface_area()) / m.surface_area() - 1.0).abs() < 1e-10);
        assert!(a.validate().is_ok() && b.validate().is_ok());
        // cut curve: a single closed loop in each part, identical point sets
        let la = a.boundary_loops();
        let lb = b.boundary_loops();
        assert_eq!(la.len(), 1);
        assert_eq!(lb.len(), 1);
        let mut ca: Vec<[u64; 3]> =
            la[0].positions(&a).iter().map(|v| [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()]).collect();
        let mut cb: Vec<[u64; 3]> =
            lb[0].positions(&b).iter().map(|v| [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()]).collect();
        ca.sort();
        cb.sort();
        assert_eq!(ca, cb);
        assert!(la[0].positions(&a).iter().all(|v| p.signed_distance(v).abs() < 1e-15));
    }

    #[test]
    fn plane_missing_the_mesh() {
        let m = shapes::icosphere(2, 1.0);
        let (a, b) = half_parts(&m, &Plane { normal: Vec3::z(), offset: -2.0 });
        assert_eq!(a.face_count(), 0);
        assert_eq!(b.face_count(), m.face_count());
        assert_eq!(reflected_part(&m, &Plane { normal: Vec3::z(), offset: -2.0 }).face_count(), 0);
    }

    #[test]
    fn graph_cases() {
        let hemi = shapes::spherical_cap(Vec3::zeros(), 1.0, Vec3::z(), std::f64::consts::FRAC_PI_2, 12);
        let eq = Plane { normal: Vec3::z(), offset: 0.0 };
        assert!(is_graph_over(&hemi, &eq).is_graph);
        let ball = shapes::icosphere(3, 1.0);
        let g = is_graph_over(&ball, &eq);
        assert!(!g.is_graph);
        let (_, ts) = g.witness.unwrap();
        assert_eq!(ts.len(), 2);
        let flat = shapes::grid(5, 5, 1.0, 1.0).translated(&Vec3::new(0.0, 0.0, 0.3));
        assert!(is_graph_over(&flat, &eq).is_graph);
    }
}
