use serde::{Deserialize, Serialize};

use super::primitives::orthonormal_complement;
use super::{triangle_solid_angle, Bvh, MeshError, Sphere, TriMesh, Vec3};

/// Which of the two spherical domains bounded by the boundary loops closes the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchSide {
    /// The domains `Ω_i` enclosed by each loop inside its own open hemisphere.
    Inner,
    /// `S_ρ − Ω` (single loop only).
    Complement,
}

/// A closed, outward-wound surface made of an input surface plus (optionally) a
/// spherical patch, bounding a domain `W`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClosedRegion {
    pub surface: TriMesh,
    /// Per face: `true` for faces of the spherical patch.
    pub patch_mask: Vec<bool>,
    /// The winding of the input surface was reversed to make the result outward.
    pub surface_flipped: bool,
    pub sphere: Option<Sphere>,
    pub side: Option<PatchSide>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Containment {
    Inside,
    Outside,
    OnBoundary,
}

impl ClosedRegion {
    /// Wraps an already closed mesh. The winding is made outward.
    pub fn from_closed_mesh(mesh: &TriMesh) -> Result<Self, MeshError> {
        if !mesh.is_closed() {
            return Err(MeshError::OpenMesh);
        }
        let mut surface = mesh.clone();
        let flipped = enclosed_volume_of(&surface) < 0.0;
        if flipped {
            surface = surface.flipped();
        }
        Ok(Self {
            patch_mask: vec![false; surface.face_count()],
            surface,
            surface_flipped: flipped,
            sphere: None,
            side: None,
        })
    }

    /// Number of faces contributed by the input surface (they come first).
    pub fn surface_face_count(&self) -> usize {
        self.patch_mask.iter().filter(|&&p| !p).count()
    }

    /// Divergence-theorem volume (positive: the surface is wound outward).
    pub fn enclosed_volume(&self) -> f64 {
        enclosed_volume_of(&self.surface)
    }

    /// Area of the spherical patch measured on the sphere (each patch triangle as a
    /// geodesic triangle), or the flat triangle area when no sphere is attached.
    pub fn patch_area(&self) -> f64 {
        let faces = self.surface.faces();
        let verts = self.surface.vertices();
        faces
            .iter()
            .zip(&self.patch_mask)
            .filter(|(_, &m)| m)
            .map(|(&[a, b, c], _)| match &self.sphere {
                Some(s) => {
                    let r = s.radius;
                    r * r
                        * triangle_solid_angle(&(verts[a] - s.center), &(verts[b] - s.center), &(verts[c] - s.center))
                            .abs()
                }
                None => 0.5 * (verts[b] - verts[a]).cross(&(verts[c] - verts[a])).norm(),
            })
            .sum()
    }

    pub fn default_contain_tol(&self) -> f64 {
        1e-6 * self.surface.bbox_diagonal()
    }
}

/// Volume enclosed by a closed region.
pub fn enclosed_volume(region: &ClosedRegion) -> f64 {
    region.enclosed_volume()
}

fn enclosed_volume_of(mesh: &TriMesh) -> f64 {
    let n = mesh.vertex_count().max(1) as f64;
    let c = mesh.vertices().iter().sum::<Vec3>() / n;
    mesh.signed_cone_volume(&c)
}

/// Pole of an open hemisphere containing all `directions`, with its margin
/// `min_i ⟨w, d̂_i⟩`. Computed as the minimum-norm point of the convex hull of the
/// normalised directions (Wolfe's algorithm); `None` when the origin lies in the hull
/// up to `tol`.
pub fn hemisphere_pole(directions: &[Vec3], tol: f64) -> Option<(Vec3, f64)> {
    let pts: Vec<Vec3> = directions.iter().filter_map(|d| d.try_normalize(0.0)).collect();
    if pts.is_empty() {
        return None;
    }
    let x = min_norm_point(&pts);
    let len = x.norm();
    if len <= tol {
        return None;
    }
    let w = x / len;
    let margin = pts.iter().map(|p| p.dot(&w)).fold(f64::INFINITY, f64::min);
    if margin <= tol {
        None
    } else {
        Some((w, margin))
    }
}

/// Minimum-norm point in the convex hull of `pts` (Wolfe 1976).
pub(crate) fn min_norm_point(pts: &[Vec3]) -> Vec3 {
    let first = (0..pts.len()).min_by(|&a, &b| pts[a].norm_squared().total_cmp(&pts[b].norm_squared())).unwrap();
    let mut set: Vec<usize> = vec![first];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x = pts[first];
    let eps = 1e-13;
    for _major in 0..10 * pts.len() + 100 {
        let (j, val) = pts.iter().enumerate().map(|(j, p)| (j, x.dot(p))).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        if x.norm_squared() <= val + eps * (1.0 + pts[j].norm_squared()) || set.contains(&j) {
            break;
        }
        set.push(j);
        lambda.push(0.0);
        loop {
            let alpha = match affine_minimizer(pts, &set) {
                Some(a) => a,
                None => {
                    // affinely dependent set: drop the newest point and stop
                    set.pop();
                    lambda.pop();
                    break;
                }
            };
            if alpha.iter().all(|&a| a > eps) {
                lambda = alpha;
                x = combine(pts, &set, &lambda);
                break;
            }
            let mut theta = 1.0f64;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= eps {
                    let t = l / (l - a);
                    if t < theta {
                        theta = t;
                    }
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            let mut k = 0;
            while k < set.len() {
                if lambda[k] <= eps {
                    set.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            let s: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= s);
            x = combine(pts, &set, &lambda);
        }
        if set.len() > 4 {
            break;
        }
    }
    x
}

fn combine(pts: &[Vec3], set: &[usize], lambda: &[f64]) -> Vec3 {
    set.iter().zip(lambda).map(|(&i, &l)| pts[i] * l).sum()
}

fn affine_minimizer(pts: &[Vec3], set: &[usize]) -> Option<Vec<f64>> {
    let k = set.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(k + 1, k + 1);
    let mut rhs = nalgebra::DVector::<f64>::zeros(k + 1);
    for a in 0..k {
        for b in 0..k {
            m[(a, b)] = pts[set[a]].dot(&pts[set[b]]);
        }
        m[(a, k)] = 1.0;
        m[(k, a)] = 1.0;
    }
    rhs[k] = 1.0;
    let sol = m.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(sol.iter().take(k).copied().collect())
}

/// Closes `mesh` with spherical patches bounded by its boundary loops, using the
/// default boundary tolerance `1e-6·ρ`.
pub fn close_with_spherical_patch(mesh: &TriMesh, sphere: &Sphere, side: PatchSide) -> Result<ClosedRegion, MeshError> {
    close_with_spherical_patch_tol(mesh, sphere, side, 1e-6 * sphere.radius)
}

/// Builds `S ∪ Ω` (or `S ∪ (S_ρ − Ω)`): each loop is filled by a geodesic fan from the
/// pole of its hemisphere, refined radially until the ring spacing is below the mean
/// boundary edge of `S`. The result is wound outward.
pub fn close_with_spherical_patch_tol(
    mesh: &TriMesh,
    sphere: &Sphere,
    side: PatchSide,
    boundary_tol: f64,
) -> Result<ClosedRegion, MeshError> {
    let loops = mesh.boundary_loops();
    if loops.is_empty() {
        return Err(MeshError::NothingToClose);
    }
    for lp in &loops {
        for &v in &lp.vertices {
            let d = sphere.signed_distance(&mesh.vertices()[v]);
            if d.abs() > boundary_tol {
                return Err(MeshError::BoundaryOffSphere { vertex: v, distance: d.abs() });
            }
        }
    }
    if side == PatchSide::Complement && loops.len() != 1 {
        return Err(MeshError::ComplementNotDisk(loops.len()));
    }
    let mut vertices = mesh.vertices().to_vec();
    let mut faces = mesh.faces().to_vec();
    let mut mask = vec![false; faces.len()];
    let boundary_edge = {
        let edges = mesh.boundary_edges();
        let total: f64 = edges.iter().map(|&(a, b)| (mesh.vertices()[a] - mesh.vertices()[b]).norm()).sum();
        total / edges.len() as f64
    };

    for (li, lp) in loops.iter().enumerate() {
        let dirs: Vec<Vec3> = lp.vertices.iter().map(|&v| mesh.vertices()[v] - sphere.center).collect();
        let (pole, _) = hemisphere_pole(&dirs, 1e-12).ok_or(MeshError::LoopsNotInHemisphere)?;
        let fan_dir = match side {
            PatchSide::Inner => pole,
            PatchSide::Complement => -pole,
        };
        let units: Vec<Vec3> = dirs.iter().map(|d| d.normalize()).collect();
        check_star_shaped(&fan_dir, &units).ok_or(MeshError::SelfIntersectingPatch(li))?;

        let max_angle = units.iter().map(|u| u.dot(&fan_dir).clamp(-1.0, 1.0).acos()).fold(0.0, f64::max);
        let rings = ((sphere.radius * max_angle / boundary_edge).ceil() as usize).max(1);
        let n = lp.len();
        let center_id = vertices.len();
        vertices.push(sphere.center + fan_dir * sphere.radius);
        // ring k (1..rings-1) holds n vertices; ring `rings` is the loop itself
        let mut ring_ids: Vec<Vec<usize>> = Vec::with_capacity(rings);
        for k in 1..rings {
            let s = k as f64 / rings as f64;
            let ids = units
                .iter()
                .map(|u| {
                    vertices.push(sphere.center + slerp(&fan_dir, u, s) * sphere.radius);
                    vertices.len() - 1
                })
                .collect();
            ring_ids.push(ids);
        }
        ring_ids.push(lp.vertices.clone());
        let mut patch: Vec<[usize; 3]> = Vec::new();
        for j in 0..n {
            let j1 = (j + 1) % n;
            patch.push([center_id, ring_ids[0][j1], ring_ids[0][j]]);
        }
        for k in 0..rings - 1 {
            let (inner, outer) = (&ring_ids[k], &ring_ids[k + 1]);
            for j in 0..n {
                let j1 = (j + 1) % n;
                patch.push([inner[j], inner[j1], outer[j1]]);
                patch.push([inner[j], outer[j1], outer[j]]);
            }
        }
        // the loop runs v_j -> v_{j+1} on S, so the patch must contain v_{j+1} -> v_j
        let (a, b) = (lp.vertices[0], lp.vertices[1 % n]);
        let has_reverse = patch.iter().any(|f| (0..3).any(|k| f[k] == b && f[(k + 1) % 3] == a));
        if !has_reverse {
            for f in &mut patch {
                f.swap(1, 2);
            }
        }
        mask.extend(std::iter::repeat_n(true, patch.len()));
        faces.extend(patch);
    }

    let mut surface = TriMesh::from_raw(vertices, faces);
    let flipped = enclosed_volume_of(&surface) < 0.0;
    if flipped {
        surface = surface.flipped();
    }
    Ok(ClosedRegion { surface, patch_mask: mask, surface_flipped: flipped, sphere: Some(*sphere), side: Some(side) })
}

fn slerp(a: &Vec3, b: &Vec3, s: f64) -> Vec3 {
    let cos = a.dot(b).clamp(-1.0, 1.0);
    let omega = cos.acos();
    if omega < 1e-12 {
        return *a;
    }
    let so = omega.sin();
    (a * ((1.0 - s) * omega).sin() + b * (s * omega).sin()) / so
}

/// The loop must wind exactly once, monotonically, around `axis`.
fn check_star_shaped(axis: &Vec3, units: &[Vec3]) -> Option<()> {
    let (e1, e2) = orthonormal_complement(axis);
    let ang: Vec<f64> = units.iter().map(|u| u.dot(&e2).atan2(u.dot(&e1))).collect();
    let n = ang.len();
    let mut total = 0.0;
    let mut sign = 0.0;
    for i in 0..n {
        let mut d = ang[(i + 1) % n] - ang[i];
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        if d == 0.0 {
            return None;
        }
        if sign == 0.0 {
            sign = d.signum();
        } else if d.signum() != sign {
            return None;
        }
        total += d;
    }
    ((total.abs() - 2.0 * std::f64::consts::PI).abs() < 1e-6).then_some(())
}

/// Classifies `point` against the closed region with tolerance `1e-6 × bbox diagonal`.
pub fn signed_containment(region: &ClosedRegion, point: &Vec3) -> Containment {
    signed_containment_tol(region, point, region.default_contain_tol())
}

/// Generalised winding number test; points within `tol` of the surface are on the boundary.
pub fn signed_containment_tol(region: &ClosedRegion, point: &Vec3, tol: f64) -> Containment {
    let m = &region.surface;
    let near = (0..m.face_count()).any(|f| {
        let q = super::bvh::closest_on_triangle(point, &m.face_points(f));
        (q - point).norm() <= tol
    });
    if near {
        return Containment::OnBoundary;
    }
    let w: f64 = (0..m.face_count())
        .map(|f| {
            let [a, b, c] = m.face_points(f);
            triangle_solid_angle(&(a - point), &(b - point), &(c - point))
        })
        .sum::<f64>()
        / (4.0 * std::f64::consts::PI);
    if w > 0.5 {
        Containment::Inside
    } else {
        Containment::Outside
    }
}

/// Accelerated containment queries against one region (ray parity with three fixed
/// directions and a majority vote).
#[derive(Debug, Clone)]
pub struct ContainmentOracle {
    bvh: Bvh,
    pub tol: f64,
}

impl ContainmentOracle {
    pub fn new(region: &ClosedRegion, tol: f64) -> Self {
        Self { bvh: Bvh::new(&region.surface), tol }
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        self.bvh.distance(p)
    }

    pub fn classify(&self, p: &Vec3) -> Containment {
        if self.bvh.distance(p) <= self.tol {
            return Containment::OnBoundary;
        }
        let dirs = [
            Vec3::new(0.5773, 0.5801, 0.5746),
            Vec3::new(-0.3162, 0.8513, -0.4188),
            Vec3::new(0.7069, -0.2236, -0.6711),
        ];
        let votes = dirs.iter().filter(|d| self.bvh.ray_hits(p, d).len() % 2 == 1).count();
        if votes >= 2 {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;
    use std::f64::consts::PI;

    #[test]
    fn icosphere_volume_and_orientation() {
        // an inscribed polyhedron loses ~0.22% of the ball volume at level 4, ~0.05% at 5
        let ball = 4.0 * PI / 3.0;
        let v4 = ClosedRegion::from_closed_mesh(&shapes::icosphere(4, 1.0)).unwrap().enclosed_volume();
        assert!(((v4 - ball) / ball).abs() < 2.5e-3);
        let m = shapes::icosphere(5, 1.0);
        let r = ClosedRegion::from_closed_mesh(&m).unwrap();
        assert!(!r.surface_flipped);
        let v = r.enclosed_volume();
        assert!(((v - ball) / ball).abs() < 1e-3);
        let flipped = TriMesh::from_raw(m.vertices().to_vec(), m.flipped().faces().to_vec());
        assert!((enclosed_volume_of(&flipped) + v).abs() < 1e-12);
        let moved = ClosedRegion::from_closed_mesh(&m.translated(&Vec3::new(3.0, -2.0, 1.0))).unwrap();
        assert!((moved.enclosed_volume() - v).abs() < 1e-12);
    }

    #[test]
    fn open_mesh_is_not_a_region() {
        let cap = shapes::spherical_cap(Vec3::zeros(), 1.0, Vec3::z(), 0.5, 4);
        assert_eq!(ClosedRegion::from_closed_mesh(&cap).unwrap_err(), MeshError::OpenMesh);
        let ico = shapes::icosphere(1, 1.0);
        assert_eq!(
            close_with_spherical_patch(&ico, &Sphere::unit(), PatchSide::Inner).unwrap_err(),
            MeshError::NothingToClose
        );
    }

    #[test]
    fn off_sphere_boundary_rejected() {
        let disk = shapes::flat_disk(Vec3::new(0.0, 0.0, 0.6), Vec3::z(), (0.81f64 - 0.36).sqrt(), 6);
        let err = close_with_spherical_patch(&disk, &Sphere::unit(), PatchSide::Inner).unwrap_err();
        assert!(matches!(err, MeshError::BoundaryOffSphere { distance, .. } if (distance - 0.1).abs() < 0.01));
    }

    #[test]
    fn great_circle_is_not_in_a_hemisphere() {
        let disk = shapes::flat_disk(Vec3::zeros(), Vec3::z(), 1.0, 6);
        let err = close_with_spherical_patch(&disk, &Sphere::unit(), PatchSide::Inner).unwrap_err();
        assert_eq!(err, MeshError::LoopsNotInHemisphere);
    }

    #[test]
    fn min_norm_point_cases() {
        let circle: Vec<Vec3> = (0..64)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 64.0;
                Vec3::new(0.8 * t.cos(), 0.8 * t.sin(), 0.6)
            })
            .collect();
        let (w, margin) = hemisphere_pole(&circle, 1e-12).unwrap();
        assert!((w - Vec3::z()).norm() < 1e-12);
        assert!((margin - 0.6).abs() < 1e-12);
        let equator: Vec<Vec3> = circle.iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect();
        assert!(hemisphere_pole(&equator, 1e-9).is_none());
        let tri = [Vec3::new(1.0, 0.0, 1.0), Vec3::new(-1.0, 0.0, 1.0), Vec3::new(0.0, 3.0, 5.0)];
        let x = min_norm_point(&tri);
        assert!((x - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn containment_of_sphere() {
        let m = shapes::icosphere(3, 1.0);
        let r = ClosedRegion::from_closed_mesh(&m).unwrap();
        assert_eq!(signed_containment(&r, &Vec3::zeros()), Containment::Inside);
        assert_eq!(signed_containment(&r, &Vec3::new(2.0, 0.0, 0.0)), Containment::Outside);
        assert_eq!(signed_containment(&r, &m.vertices()[7]), Containment::OnBoundary);
        let o = ContainmentOracle::new(&r, r.default_contain_tol());
        assert_eq!(o.classify(&Vec3::new(0.1, 0.2, -0.3)), Containment::Inside);
        assert_eq!(o.classify(&Vec3::new(0.1, 1.2, -0.3)), Containment::Outside);
        assert_eq!(o.classify(&m.vertices()[11]), Containment::OnBoundary);
    }
}
