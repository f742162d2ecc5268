use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Plane, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("edge ({0}, {1}) is shared by more than two faces or its boundary is not simple")]
    NonManifold(usize, usize),
    #[error("faces adjacent across edge ({0}, {1}) are oriented inconsistently")]
    InconsistentOrientation(usize, usize),
    #[error("face {0} has zero area")]
    DegenerateFace(usize),
    #[error("operation requires a closed mesh but it has boundary edges")]
    OpenMesh,
    #[error("mesh is already closed; there is no boundary to close")]
    NothingToClose,
    #[error("boundary vertex {vertex} is {distance:.3e} away from the sphere")]
    BoundaryOffSphere { vertex: usize, distance: f64 },
    #[error("boundary loops are not contained in an open hemisphere")]
    LoopsNotInHemisphere,
    #[error("spherical patch for boundary loop {0} folds over itself")]
    SelfIntersectingPatch(usize),
    #[error("complement closure needs exactly one boundary loop, found {0}")]
    ComplementNotDisk(usize),
    #[error("invalid primitive: {0}")]
    InvalidPrimitive(String),
}

/// Oriented triangle mesh. Faces are counter-clockwise with respect to the chosen
/// unit normal; for surfaces bounding a domain `W` the winding normal points out of `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

/// One boundary component, ordered along the face orientation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryLoop {
    pub vertices: Vec<usize>,
}

impl BoundaryLoop {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn positions(&self, mesh: &TriMesh) -> Vec<Vec3> {
        self.vertices.iter().map(|&v| mesh.vertices[v]).collect()
    }

    /// Directed edges `(v_i, v_{i+1})` including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Validating constructor: manifold edges, consistent orientation, no zero-area faces.
pub fn build_mesh(positions: Vec<Vec3>, face_indices: Vec<[usize; 3]>) -> Result<TriMesh, MeshError> {
    TriMesh::new(positions, face_indices)
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mesh = Self { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Skips validation. Used for intermediate pieces (cuts, reflected parts) whose
    /// slivers would fail the zero-area test.
    pub fn from_raw(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Self {
        Self { vertices, faces }
    }

    pub fn empty() -> Self {
        Self { vertices: Vec::new(), faces: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let n = self.vertices.len();
        let diag = self.bbox_diagonal();
        let area_floor = 1e-14 * diag * diag;
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.faces.len());
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(MeshError::IndexOutOfRange { face: fi, index: v, count: n });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[2] == f[0] || self.face_area(fi) <= area_floor {
                return Err(MeshError::DegenerateFace(fi));
            }
            for k in 0..3 {
                let e = (f[k], f[(k + 1) % 3]);
                if directed.insert(e, fi).is_some() {
                    // the same directed edge twice: either a flipped neighbour or a fan of >2 faces
                    let undirected = self.faces.iter().filter(|g| g.contains(&e.0) && g.contains(&e.1)).count();
                    return Err(if undirected > 2 {
                        MeshError::NonManifold(e.0.min(e.1), e.0.max(e.1))
                    } else {
                        MeshError::InconsistentOrientation(e.0.min(e.1), e.0.max(e.1))
                    });
                }
            }
        }
        // boundary must be a disjoint union of simple loops: one outgoing boundary edge per vertex
        let mut out_count: HashMap<usize, usize> = HashMap::new();
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                let c = out_count.entry(a).or_insert(0);
                *c += 1;
                if *c > 1 {
                    return Err(MeshError::NonManifold(a.min(b), a.max(b)));
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertices_mut(&mut self) -> &mut [Vec3] {
        &mut self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Vec3>, Vec<[usize; 3]>) {
        (self.vertices, self.faces)
    }

    pub fn face_points(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// `½ (b − a) × (c − a)`: area times winding normal.
    pub fn face_area_vector(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.face_points(f);
        (b - a).cross(&(c - a)) * 0.5
    }

    pub fn face_area(&self, f: usize) -> f64 {
        self.face_area_vector(f).norm()
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        self.face_area_vector(f).try_normalize(0.0).unwrap_or_else(Vec3::zeros)
    }

    pub fn face_centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.face_points(f);
        (a + b + c) / 3.0
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Signed volume of the cone over the surface with apex `origin`; equals the enclosed
    /// volume for a closed outward-wound surface.
    pub fn signed_cone_volume(&self, origin: &Vec3) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                let (pa, pb, pc) = (self.vertices[a] - origin, self.vertices[b] - origin, self.vertices[c] - origin);
                pa.dot(&pb.cross(&pc))
            })
            .sum::<f64>()
            / 6.0
    }

    /// Area-weighted vertex normals (unit length; zero for isolated vertices).
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::zeros(); self.vertices.len()];
        for f in 0..self.faces.len() {
            let n = self.face_area_vector(f);
            for &v in &self.faces[f] {
                acc[v] += n;
            }
        }
        acc.into_iter().map(|n| n.try_normalize(0.0).unwrap_or_else(Vec3::zeros)).collect()
    }

    pub fn bbox(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        if self.vertices.is_empty() {
            return 0.0;
        }
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }

    /// Directed edge → face map.
    pub(crate) fn half_edges(&self) -> HashMap<(usize, usize), usize> {
        let mut map = HashMap::with_capacity(3 * self.faces.len());
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                map.insert((f[k], f[(k + 1) % 3]), fi);
            }
        }
        map
    }

    /// Directed boundary edges `(a, b)` (no face contains `(b, a)`).
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let he = self.half_edges();
        let mut out: Vec<(usize, usize)> = he.keys().filter(|&&(a, b)| !he.contains_key(&(b, a))).copied().collect();
        out.sort_unstable();
        out
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edges().is_empty()
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for (a, b) in self.boundary_edges() {
            mask[a] = true;
            mask[b] = true;
        }
        mask
    }

    /// Boundary components, each ordered along the face orientation. Loops are sorted
    /// by their smallest vertex index so the output is deterministic.
    pub fn boundary_loops(&self) -> Vec<BoundaryLoop> {
        let edges = self.boundary_edges();
        let next: HashMap<usize, usize> = edges.iter().copied().collect();
        let mut visited: HashMap<usize, bool> = HashMap::new();
        let mut loops = Vec::new();
        for &(start, _) in &edges {
            if visited.contains_key(&start) {
                continue;
            }
            let mut lp = vec![start];
            visited.insert(start, true);
            let mut cur = next[&start];
            while cur != start {
                if visited.insert(cur, true).is_some() {
                    break;
                }
                lp.push(cur);
                match next.get(&cur) {
                    Some(&n) => cur = n,
                    None => break,
                }
            }
            let min_pos = lp.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i).unwrap_or(0);
            lp.rotate_left(min_pos);
            loops.push(BoundaryLoop { vertices: lp });
        }
        loops.sort_by_key(|l| l.vertices[0]);
        loops
    }

    /// Vertex → neighbouring vertices (unordered, deduplicated).
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb: Vec<Vec<usize>> = vec![Vec::new(); self.vertices.len()];
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if !nb[a].contains(&b) {
                    nb[a].push(b);
                }
                if !nb[b].contains(&a) {
                    nb[b].push(a);
                }
            }
        }
        nb
    }

    /// Vertex → incident faces.
    pub fn vertex_faces(&self) -> Vec<Vec<usize>> {
        let mut vf: Vec<Vec<usize>> = vec![Vec::new(); self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                vf[v].push(fi);
            }
        }
        vf
    }

    /// Applies `map` to every vertex; winding is kept.
    pub fn map_vertices(&self, map: impl Fn(&Vec3) -> Vec3) -> TriMesh {
        TriMesh { vertices: self.vertices.iter().map(map).collect(), faces: self.faces.clone() }
    }

    pub fn translated(&self, t: &Vec3) -> TriMesh {
        self.map_vertices(|v| v + t)
    }

    pub fn scaled(&self, s: f64) -> TriMesh {
        self.map_vertices(|v| v * s)
    }

    pub fn rotated(&self, rot: &nalgebra::Rotation3<f64>) -> TriMesh {
        self.map_vertices(|v| rot * v)
    }

    /// Reverses the winding of every face.
    pub fn flipped(&self) -> TriMesh {
        TriMesh { vertices: self.vertices.clone(), faces: self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect() }
    }

    /// Mirror image across `plane`. Winding is reversed so the winding normal of the
    /// image is the reflection of the original winding normal.
    pub fn reflect(&self, plane: &Plane) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| plane.reflect_point(v)).collect(),
            faces: self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect(),
        }
    }

    /// Concatenates meshes without welding vertices.
    pub fn merged(parts: &[&TriMesh]) -> TriMesh {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for p in parts {
            let off = vertices.len();
            vertices.extend_from_slice(&p.vertices);
            faces.extend(p.faces.iter().map(|&[a, b, c]| [a + off, b + off, c + off]));
        }
        TriMesh { vertices, faces }
    }

    /// Keeps the listed faces and drops unreferenced vertices.
    pub fn submesh(&self, face_ids: &[usize]) -> TriMesh {
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        let mut faces = Vec::with_capacity(face_ids.len());
        for &fi in face_ids {
            let mut nf = [0; 3];
            for (k, &v) in self.faces[fi].iter().enumerate() {
                if remap[v] == usize::MAX {
                    remap[v] = vertices.len();
                    vertices.push(self.vertices[v]);
                }
                nf[k] = remap[v];
            }
            faces.push(nf);
        }
        TriMesh { vertices, faces }
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for f in &self.faces {
            for k in 0..3 {
                total += (self.vertices[f[k]] - self.vertices[f[(k + 1) % 3]]).norm();
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }

    /// Smallest `4√3·area / Σ edge²` over all faces (1 for equilateral triangles).
    pub fn min_triangle_quality(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.face_points(f);
                let s = (b - a).norm_squared() + (c - b).norm_squared() + (a - c).norm_squared();
                if s > 0.0 {
                    4.0 * 3f64.sqrt() * self.face_area(f) / s
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;

    fn unit_square() -> TriMesh {
        TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_has_one_loop() {
        let m = build_mesh(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]).unwrap();
        let loops = m.boundary_loops();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].vertices, vec![0, 1, 2]);
    }

    #[test]
    fn opposite_winding_is_rejected() {
        let err =
            build_mesh(vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::new(1.0, 1.0, 0.0)], vec![[0, 1, 2], [1, 2, 3]])
                .unwrap_err();
        assert_eq!(err, MeshError::InconsistentOrientation(1, 2));
    }

    #[test]
    fn three_faces_on_an_edge_is_non_manifold() {
        let err = build_mesh(
            vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z(), Vec3::new(0.0, -1.0, 0.3)],
            vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::NonManifold(0, 1) | MeshError::InconsistentOrientation(0, 1)));
    }

    #[test]
    fn degenerate_and_out_of_range_faces() {
        let pts = vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0];
        assert_eq!(build_mesh(pts.clone(), vec![[0, 1, 2]]).unwrap_err(), MeshError::DegenerateFace(0));
        assert!(matches!(build_mesh(pts, vec![[0, 1, 7]]).unwrap_err(), MeshError::IndexOutOfRange { index: 7, .. }));
    }

    #[test]
    fn square_area_and_scaling() {
        let m = unit_square();
        assert!((m.surface_area() - 1.0).abs() < 1e-15);
        assert!((m.scaled(2.0).surface_area() - 4.0).abs() < 1e-14);
        assert_eq!(m.boundary_loops().len(), 1);
        assert_eq!(m.boundary_loops()[0].len(), 4);
    }

    #[test]
    fn icosphere_is_closed() {
        let m = shapes::icosphere(3, 1.0);
        assert!(m.validate().is_ok());
        assert!(m.boundary_loops().is_empty());
        assert!(m.is_closed());
    }

    #[test]
    fn reflection_involution_and_invariants() {
        let m = shapes::icosphere(2, 1.3).translated(&Vec3::new(0.2, -0.1, 0.4));
        let p = Plane::new(Vec3::new(0.3, 1.0, -0.2), 0.25).unwrap();
        let r = m.reflect(&p);
        let rr = r.reflect(&p);
        for (a, b) in m.vertices().iter().zip(rr.vertices()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(rr.faces(), m.faces());
        assert!((r.surface_area() - m.surface_area()).abs() < 1e-12);
        // reversed winding keeps the outward orientation, so the volume keeps its sign
        let o = Vec3::zeros();
        assert!((r.signed_cone_volume(&o) - m.signed_cone_volume(&o)).abs() < 1e-12);
    }
}
