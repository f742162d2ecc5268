use super::{TriMesh, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Self { lo: Vec3::repeat(f64::INFINITY), hi: Vec3::repeat(f64::NEG_INFINITY) }
    }

    fn grow(&mut self, p: &Vec3) {
        self.lo = self.lo.inf(p);
        self.hi = self.hi.sup(p);
    }

    fn union(&mut self, o: &Aabb) {
        self.lo = self.lo.inf(&o.lo);
        self.hi = self.hi.sup(&o.hi);
    }

    fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if p[k] < self.lo[k] {
                self.lo[k] - p[k]
            } else if p[k] > self.hi[k] {
                p[k] - self.hi[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }

    fn hit_by_ray(&self, origin: &Vec3, inv_dir: &Vec3, pad: f64) -> bool {
        let mut tmin = f64::NEG_INFINITY;
        let mut tmax = f64::INFINITY;
        for k in 0..3 {
            let t1 = (self.lo[k] - pad - origin[k]) * inv_dir[k];
            let t2 = (self.hi[k] + pad - origin[k]) * inv_dir[k];
            let (a, b) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            if a.is_nan() || b.is_nan() {
                // origin on a slab face with a zero direction component
                if origin[k] < self.lo[k] - pad || origin[k] > self.hi[k] + pad {
                    return false;
                }
                continue;
            }
            tmin = tmin.max(a);
            tmax = tmax.min(b);
        }
        tmax >= tmin
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Intersection of a line with a triangle.
#[derive(Debug, Clone, Copy)]
pub struct RayHit {
    pub face: usize,
    pub t: f64,
    /// Winding normal of the face dotted with the ray direction.
    pub facing: f64,
}

/// Bounding-volume hierarchy over the faces of a mesh, for ray casting and
/// closest-point queries.
#[derive(Debug, Clone)]
pub struct Bvh {
    tris: Vec<[Vec3; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

impl Bvh {
    pub fn new(mesh: &TriMesh) -> Self {
        let tris: Vec<[Vec3; 3]> = (0..mesh.face_count()).map(|f| mesh.face_points(f)).collect();
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let centroids: Vec<Vec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut nodes = Vec::new();
        let root = if tris.is_empty() {
            None
        } else {
            let n = order.len();
            Some(build(&tris, &centroids, &mut order, 0, n, &mut nodes))
        };
        Self { tris, order, nodes, root }
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    /// All intersections of the full line `origin + t·dir` (any sign of `t`) with the faces.
    pub fn line_hits(&self, origin: &Vec3, dir: &Vec3) -> Vec<RayHit> {
        let mut out = Vec::new();
        let Some(root) = self.root else { return out };
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let scale = self.nodes[root].bounds().hi - self.nodes[root].bounds().lo;
        let pad = 1e-9 * scale.norm();
        let mut stack = vec![root];
        while let Some(ni) = stack.pop() {
            match &self.nodes[ni] {
                Node::Leaf { bounds, start, end } => {
                    if !bounds.hit_by_ray(origin, &inv, pad) {
                        continue;
                    }
                    for &f in &self.order[*start..*end] {
                        if let Some((t, facing)) = intersect(&self.tris[f], origin, dir) {
                            out.push(RayHit { face: f, t, facing });
                        }
                    }
                }
                Node::Inner { bounds, left, right } => {
                    if bounds.hit_by_ray(origin, &inv, pad) {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        out.sort_by(|a, b| a.t.total_cmp(&b.t));
        out
    }

    /// Hits with `t > 0` only.
    pub fn ray_hits(&self, origin: &Vec3, dir: &Vec3) -> Vec<RayHit> {
        self.line_hits(origin, dir).into_iter().filter(|h| h.t > 0.0).collect()
    }

    /// Closest point on the surface to `p`, with its face and distance.
    pub fn closest_point(&self, p: &Vec3) -> Option<(Vec3, usize, f64)> {
        let root = self.root?;
        let mut best = (Vec3::zeros(), usize::MAX, f64::INFINITY);
        let mut stack = vec![root];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds().distance_squared(p) >= best.2 {
                continue;
            }
            match node {
                Node::Leaf { start, end, .. } => {
                    for &f in &self.order[*start..*end] {
                        let q = closest_on_triangle(p, &self.tris[f]);
                        let d = (q - p).norm_squared();
                        if d < best.2 {
                            best = (q, f, d);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().distance_squared(p);
                    let dr = self.nodes[*right].bounds().distance_squared(p);
                    if dl < dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        Some((best.0, best.1, best.2.sqrt()))
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        self.closest_point(p).map_or(f64::INFINITY, |c| c.2)
    }

    /// `min(distance(p), cap)`; subtrees farther than `cap` are never visited.
    pub fn distance_capped(&self, p: &Vec3, cap: f64) -> f64 {
        let Some(root) = self.root else { return cap };
        let mut best = cap * cap;
        let mut stack = vec![root];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds().distance_squared(p) >= best {
                continue;
            }
            match node {
                Node::Leaf { start, end, .. } => {
                    for &f in &self.order[*start..*end] {
                        best = best.min((closest_on_triangle(p, &self.tris[f]) - p).norm_squared());
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*left);
                    stack.push(*right);
                }
            }
        }
        best.sqrt()
    }
}

fn build(
    tris: &[[Vec3; 3]],
    centroids: &[Vec3],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut bounds = Aabb::empty();
    let mut cb = Aabb::empty();
    for &f in &order[start..end] {
        for p in &tris[f] {
            bounds.grow(p);
        }
        cb.grow(&centroids[f]);
    }
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return nodes.len() - 1;
    }
    let ext = cb.hi - cb.lo;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| centroids[a][axis].total_cmp(&centroids[b][axis]));
    let left = build(tris, centroids, order, start, mid, nodes);
    let right = build(tris, centroids, order, mid, end, nodes);
    let mut b = *nodes[left].bounds();
    b.union(nodes[right].bounds());
    nodes.push(Node::Inner { bounds: b, left, right });
    nodes.len() - 1
}

/// Möller–Trumbore with a closed-triangle test (edges included) and no culling.
fn intersect(tri: &[Vec3; 3], origin: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if det.abs() <= 1e-14 * scale {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(&p) * inv;
    let eps = 1e-12;
    if u < -eps || u > 1.0 + eps {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < -eps || u + v > 1.0 + eps {
        return None;
    }
    let t = e2.dot(&q) * inv;
    let facing = e1.cross(&e2).dot(dir);
    Some((t, facing))
}

/// Closest point on a triangle (Ericson, Real-Time Collision Detection).
pub(crate) fn closest_on_triangle(p: &Vec3, tri: &[Vec3; 3]) -> Vec3 {
    let (a, b, c) = (tri[0], tri[1], tri[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;

    #[test]
    fn ray_through_sphere_hits_twice() {
        let m = shapes::icosphere(3, 1.0);
        let bvh = Bvh::new(&m);
        let d = Vec3::new(0.123, 0.456, 1.0).normalize();
        let hits = bvh.line_hits(&Vec3::new(0.01, 0.02, 0.0), &d);
        assert_eq!(hits.len(), 2);
        assert!(hits[0].facing < 0.0 && hits[1].facing > 0.0);
    }

    #[test]
    fn closest_point_agrees_with_brute_force() {
        let m = shapes::perturb_uniform(&shapes::icosphere(2, 1.0), 0.05, 9);
        let bvh = Bvh::new(&m);
        for p in [Vec3::new(0.3, 0.2, 0.1), Vec3::new(2.0, -1.0, 0.5), Vec3::new(0.0, 0.0, 0.97)] {
            let brute = (0..m.face_count())
                .map(|f| (closest_on_triangle(&p, &m.face_points(f)) - p).norm())
                .fold(f64::INFINITY, f64::min);
            assert!((bvh.distance(&p) - brute).abs() < 1e-14);
        }
    }
}
