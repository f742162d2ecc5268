//! Energy terms of a drop and their gradients with respect to vertex positions.
//!
//! With the surface `S` wound out of the drop `W`, the wetted region `Ω` on the sphere is
//! bounded by the geodesic polygon through the boundary vertices. Its solid angle follows
//! from Gauss-Bonnet, so no closing patch is needed. Volume and height moment of `W` are
//! cone integrals from the sphere centre over `S` plus the spherical sector over `Ω`; the
//! flat slivers between boundary chords and geodesic arcs lie in planes through the
//! centre and contribute nothing.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::analytic::Side;
use crate::geom::{area_gradient, Sphere, TriMesh, Vec3};

#[derive(Debug, Clone, Copy)]
pub(crate) enum Support {
    /// Boundary held fixed; volume measured against the cone from `origin` over it.
    Pinned { origin: Vec3 },
    /// Boundary free on the sphere.
    Sphere { sphere: Sphere, side: Side },
}

#[derive(Debug, Clone)]
pub(crate) struct Functional {
    pub support: Support,
    pub cos_gamma: f64,
    pub kappa: f64,
    /// Boundary loops in the orientation induced by the winding.
    pub loops: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Values {
    pub area: f64,
    pub wetted: f64,
    pub volume: f64,
    /// `∫_W z dV`.
    pub moment: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Gradients {
    pub area: Vec<Vec3>,
    pub energy: Vec<Vec3>,
    pub volume: Vec<Vec3>,
}

fn side_sign(side: Side) -> f64 {
    match side {
        Side::Interior => 1.0,
        Side::Exterior => -1.0,
    }
}

fn unit_tangent(base: &Vec3, toward: &Vec3) -> Option<Vec3> {
    let t = toward - base * base.dot(toward);
    let n = t.norm();
    (n > 1e-300).then(|| t / n)
}

/// Area (unit sphere) to the left of the closed geodesic polygon through the unit vectors
/// `dirs`, seen from outside.
pub(crate) fn left_solid_angle(dirs: &[Vec3]) -> f64 {
    let n = dirs.len();
    let mut turning = 0.0;
    for j in 0..n {
        let a = dirs[(j + n - 1) % n];
        let b = dirs[j];
        let c = dirs[(j + 1) % n];
        let (Some(tin), Some(tout)) = (unit_tangent(&b, &a), unit_tangent(&b, &c)) else {
            continue;
        };
        let tin = -tin;
        turning += b.dot(&tin.cross(&tout)).atan2(tin.dot(&tout));
    }
    2.0 * PI - turning
}

struct Edge {
    theta: f64,
    w: Vec3,
    sin: f64,
    cos: f64,
}

fn edge(a: &Vec3, b: &Vec3) -> Edge {
    let u = a.cross(b);
    let sin = u.norm();
    let cos = a.dot(b);
    let w = if sin > 0.0 { u / sin } else { Vec3::zeros() };
    Edge { theta: sin.atan2(cos), w, sin, cos }
}

impl Functional {
    fn sphere(&self) -> Option<(Sphere, f64)> {
        match self.support {
            Support::Sphere { sphere, side } => Some((sphere, side_sign(side))),
            Support::Pinned { .. } => None,
        }
    }

    fn origin(&self) -> Vec3 {
        match self.support {
            Support::Pinned { origin } => origin,
            Support::Sphere { sphere, .. } => sphere.center,
        }
    }

    /// Solid angle of the wetted region and `½ Σ θ w_z` over the loop edges.
    fn loop_terms(&self, verts: &[Vec3], sphere: &Sphere, s: f64) -> (f64, f64) {
        let mut omega = 0.0;
        let mut p = 0.0;
        for lp in &self.loops {
            let dirs: Vec<Vec3> = lp.iter().map(|&v| (verts[v] - sphere.center).normalize()).collect();
            let l = left_solid_angle(&dirs);
            omega += if s > 0.0 { 4.0 * PI - l } else { l };
            let n = dirs.len();
            for j in 0..n {
                let e = edge(&dirs[j], &dirs[(j + 1) % n]);
                p += 0.5 * e.theta * e.w.z;
            }
        }
        (omega, p)
    }

    pub fn values(&self, mesh: &TriMesh) -> Values {
        let o = self.origin();
        let verts = mesh.vertices();
        // fixed chunks summed in order keep the result independent of the thread count
        let partial: Vec<(f64, f64, f64)> = mesh
            .faces()
            .par_chunks(2048)
            .map(|chunk| {
                chunk.iter().fold((0.0, 0.0, 0.0), |acc, &[a, b, c]| {
                    let (pa, pb, pc) = (verts[a], verts[b], verts[c]);
                    let area = 0.5 * (pb - pa).cross(&(pc - pa)).norm();
                    let vol = (pa - o).dot(&(pb - o).cross(&(pc - o))) / 6.0;
                    (acc.0 + area, acc.1 + vol, acc.2 + vol * (o.z + pa.z + pb.z + pc.z) / 4.0)
                })
            })
            .collect();
        let (area, vcone, zcone) = partial.into_iter().fold((0.0, 0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
        let Some((sphere, s)) = self.sphere() else {
            return Values { area, wetted: 0.0, volume: vcone, moment: zcone };
        };
        let rho = sphere.radius;
        let (omega, p) = self.loop_terms(verts, &sphere, s);
        Values {
            area,
            wetted: rho * rho * omega,
            volume: vcone + s * rho.powi(3) * omega / 3.0,
            moment: zcone + s * sphere.center.z * rho.powi(3) * omega / 3.0 - rho.powi(4) * p / 4.0,
        }
    }

    pub fn energy(&self, v: &Values) -> f64 {
        v.area - self.cos_gamma * v.wetted - 2.0 * self.kappa * v.moment
    }

    pub fn gradients(&self, mesh: &TriMesh) -> Gradients {
        let o = self.origin();
        let verts = mesh.vertices();
        let n = mesh.vertex_count();
        let ga = area_gradient(mesh);
        let mut ge = ga.clone();
        let mut gv = vec![Vec3::zeros(); n];
        let two_k = 2.0 * self.kappa;
        for &[a, b, c] in mesh.faces() {
            let (pa, pb, pc) = (verts[a] - o, verts[b] - o, verts[c] - o);
            let (da, db, dc) = (pb.cross(&pc) / 6.0, pc.cross(&pa) / 6.0, pa.cross(&pb) / 6.0);
            gv[a] += da;
            gv[b] += db;
            gv[c] += dc;
            if two_k != 0.0 {
                let vol = pa.dot(&pb.cross(&pc)) / 6.0;
                let zbar = (o.z + verts[a].z + verts[b].z + verts[c].z) / 4.0;
                let ez = Vec3::z() * (vol / 4.0);
                ge[a] -= (da * zbar + ez) * two_k;
                ge[b] -= (db * zbar + ez) * two_k;
                ge[c] -= (dc * zbar + ez) * two_k;
            }
        }
        if let Some((sphere, s)) = self.sphere() {
            let rho = sphere.radius;
            let c = sphere.center;
            // d(omega) = -s d(left area); volume, wetted and moment are affine in omega
            let d_omega = -s;
            let coef_v = s * rho.powi(3) / 3.0 * d_omega;
            let coef_w = rho * rho * d_omega;
            let coef_zo = s * c.z * rho.powi(3) / 3.0 * d_omega;
            let coef_zp = -rho.powi(4) / 4.0;
            for lp in &self.loops {
                let m = lp.len();
                let pos: Vec<Vec3> = lp.iter().map(|&v| verts[v] - c).collect();
                let dirs: Vec<Vec3> = pos.iter().map(|p| p.normalize()).collect();
                for j in 0..m {
                    let (ia, ib) = (j, (j + 1) % m);
                    let (a, b) = (dirs[ia], dirs[ib]);
                    let e = edge(&a, &b);
                    if e.sin <= 0.0 {
                        continue;
                    }
                    let t = (0.5 * e.theta).tan();
                    // left-area gradient on the unit sphere, per endpoint
                    let dl = -e.w * t;
                    // gradient of ½ θ w_z
                    let ga_theta = b.cross(&e.w) * e.cos - b * e.sin;
                    let ga_wz = (b.cross(&Vec3::z()) - b.cross(&e.w) * e.w.z) / e.sin;
                    let gb_theta = -a.cross(&e.w) * e.cos - a * e.sin;
                    let gb_wz = -(a.cross(&Vec3::z()) - a.cross(&e.w) * e.w.z) / e.sin;
                    let dpa = (ga_theta * e.w.z + ga_wz * e.theta) * 0.5;
                    let dpb = (gb_theta * e.w.z + gb_wz * e.theta) * 0.5;
                    for (k, dp) in [(ia, dpa), (ib, dpb)] {
                        let u = dirs[k];
                        let r = pos[k].norm();
                        let proj = |g: Vec3| (g - u * u.dot(&g)) / r;
                        let dl = proj(dl);
                        let dp = proj(dp);
                        let vi = lp[k];
                        gv[vi] += dl * coef_v;
                        let dz = dl * coef_zo + dp * coef_zp;
                        ge[vi] -= dl * (self.cos_gamma * coef_w) + dz * two_k;
                    }
                }
            }
        }
        Gradients { area: ga, energy: ge, volume: gv }
    }
}
