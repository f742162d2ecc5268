use std::f64::consts::PI;

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};

use super::revolve::{arc_profile, revolve_points};
use super::{AnalyticError, Side};
use crate::geom::{shapes, Sphere, TriMesh, Vec3};

/// A spherical cap of radius `1/|H|` spanning a circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalCapSpec {
    pub sphere_center: Vec3,
    pub radius: f64,
    pub circle_center: Vec3,
    pub circle_radius: f64,
    /// Unit normal of the circle plane pointing toward the cap apex.
    pub axis: Vec3,
    pub large: bool,
    /// Distance from the circle plane to the apex.
    pub height: f64,
}

impl SphericalCapSpec {
    /// Polar angle of the boundary circle seen from the sphere center, measured from the apex.
    pub fn polar_max(&self) -> f64 {
        let a = (self.circle_radius / self.radius).clamp(-1.0, 1.0).asin();
        if self.large {
            PI - a
        } else {
            a
        }
    }

    /// Volume between the cap and the flat disk spanning the circle.
    pub fn volume(&self) -> f64 {
        let h = self.height;
        PI * h * h * (3.0 * self.radius - h) / 3.0
    }

    pub fn area(&self) -> f64 {
        2.0 * PI * self.radius * self.height
    }

    pub fn sphere(&self) -> Sphere {
        Sphere { center: self.sphere_center, radius: self.radius }
    }

    /// Mesh built on concentric rings (see [`shapes::disk_rings`]); wound with the outward
    /// normal of the cap sphere.
    pub fn mesh(&self, rings: usize) -> TriMesh {
        shapes::spherical_cap(self.sphere_center, self.radius, self.axis, self.polar_max(), rings)
    }

    /// Surface of revolution about the cap axis with `n_profile` profile segments;
    /// every plane through the axis and a vertex meridian is an exact mirror symmetry.
    pub fn revolved(&self, n_profile: usize, n_angular: usize) -> TriMesh {
        let pts = arc_profile(self.radius, self.polar_max(), 0.0, n_profile);
        let local = revolve_points(&pts, n_angular);
        let rot = rotation_from_z(&self.axis);
        let c = self.sphere_center;
        local.map_vertices(|v| c + rot * v)
    }
}

pub(crate) fn rotation_from_z(axis: &Vec3) -> Rotation3<f64> {
    Rotation3::rotation_between(&Vec3::z(), axis).unwrap_or_else(|| Rotation3::from_axis_angle(&Vec3::x_axis(), PI))
}

/// The two caps of curvature `H` spanning the circle of radius `r` centred at the
/// origin in the plane `z = 0`. Caps bulge toward `+z` for `H > 0` and `−z` for `H < 0`.
pub fn spherical_caps_for_circle(r: f64, h: f64) -> Result<(SphericalCapSpec, SphericalCapSpec), AnalyticError> {
    spherical_caps_for_circle_at(Vec3::zeros(), Vec3::z(), r, h)
}

/// As [`spherical_caps_for_circle`] for a circle with arbitrary centre and unit normal.
pub fn spherical_caps_for_circle_at(
    center: Vec3,
    normal: Vec3,
    r: f64,
    h: f64,
) -> Result<(SphericalCapSpec, SphericalCapSpec), AnalyticError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(AnalyticError::InvalidParameter(format!("circle radius {r}")));
    }
    if h == 0.0 {
        return Err(AnalyticError::ZeroCurvature);
    }
    if h.abs() * r > 1.0 {
        return Err(AnalyticError::CurvatureTooLarge(h.abs() * r));
    }
    let big_r = 1.0 / h.abs();
    let d = (big_r * big_r - r * r).max(0.0).sqrt();
    let axis = normal.normalize() * h.signum();
    let small = SphericalCapSpec {
        sphere_center: center - axis * d,
        radius: big_r,
        circle_center: center,
        circle_radius: r,
        axis,
        large: false,
        height: big_r - d,
    };
    let large = SphericalCapSpec { sphere_center: center + axis * d, large: true, height: big_r + d, ..small };
    Ok((small, large))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapShape {
    Flat,
    Spherical { center: Vec3, radius: f64, apex_dir: Vec3, polar_max: f64 },
}

/// A rotationally symmetric capillary drop on a sphere: the boundary is the circle at
/// polar angle `beta` about the `+z` axis of the substrate, the drop wets the polar cap
/// around `+z` and meets the substrate at contact angle `gamma` measured through the drop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapillaryCap {
    pub substrate: Sphere,
    pub beta: f64,
    pub gamma: f64,
    pub side: Side,
    pub shape: CapShape,
    /// The drop lies inside the cap sphere (convex drop surface).
    pub drop_inside: bool,
}

impl CapillaryCap {
    pub fn new(substrate: Sphere, beta: f64, gamma: f64, side: Side) -> Result<Self, AnalyticError> {
        if !(beta > 0.0 && beta < PI) {
            return Err(AnalyticError::InvalidParameter(format!("boundary polar angle {beta}")));
        }
        if !(0.0..=PI).contains(&gamma) {
            return Err(AnalyticError::InvalidParameter(format!("contact angle {gamma}")));
        }
        let rho = substrate.radius;
        let (n1, tau) = substrate_frame(beta);
        let s = match side {
            Side::Interior => -1.0,
            Side::Exterior => 1.0,
        };
        let eta = tau * gamma.cos() + n1 * (s * gamma.sin());
        let p = Vec3::new(rho * beta.sin(), 0.0, rho * beta.cos());
        let bis = tau * (0.5 * gamma).cos() + n1 * (s * (0.5 * gamma).sin());
        if eta.z.abs() < 1e-14 {
            return Ok(Self { substrate, beta, gamma, side, shape: CapShape::Flat, drop_inside: false });
        }
        // meridian circle through p tangent to eta, centred on the axis
        let zc = p.z + p.x * eta.x / eta.z;
        let c = Vec3::new(0.0, 0.0, zc);
        let radius = (p - c).norm();
        let u = (p - c) / radius;
        // rotation sense from u toward eta in the xz-plane
        let sense = u.x * eta.z - u.z * eta.x;
        let theta_u = u.z.atan2(u.x);
        let angle_to = |target: f64| -> f64 {
            let mut d = (target - theta_u) * sense.signum();
            while d <= 0.0 {
                d += 2.0 * PI;
            }
            while d > 2.0 * PI {
                d -= 2.0 * PI;
            }
            d
        };
        let (up, down) = (angle_to(PI / 2.0), angle_to(-PI / 2.0));
        let (apex_dir, polar_max) = if up < down { (Vec3::z(), up) } else { (-Vec3::z(), down) };
        let q = p + bis * (1e-6 * rho);
        let drop_inside = (q - c).norm() < radius;
        Ok(Self {
            substrate,
            beta,
            gamma,
            side,
            shape: CapShape::Spherical { center: c + substrate.center, radius, apex_dir, polar_max },
            drop_inside,
        })
    }

    pub fn boundary_radius(&self) -> f64 {
        self.substrate.radius * self.beta.sin()
    }

    pub fn cap_sphere(&self) -> Option<Sphere> {
        match self.shape {
            CapShape::Flat => None,
            CapShape::Spherical { center, radius, .. } => Some(Sphere { center, radius }),
        }
    }

    /// Mean curvature with respect to the normal pointing out of the drop.
    pub fn mean_curvature(&self) -> f64 {
        match self.shape {
            CapShape::Flat => 0.0,
            CapShape::Spherical { radius, .. } => {
                if self.drop_inside {
                    1.0 / radius
                } else {
                    -1.0 / radius
                }
            }
        }
    }

    /// Area of the wetted polar cap of the substrate.
    pub fn wetted_area(&self) -> f64 {
        let rho = self.substrate.radius;
        2.0 * PI * rho * rho * (1.0 - self.beta.cos())
    }

    /// Drop volume from the meridian section, `|∮ π x² dz|`.
    pub fn volume(&self) -> f64 {
        let rho = self.substrate.radius;
        let substrate_part = arc_x2dz(rho, 0.0, self.beta);
        let drop_part = match self.shape {
            CapShape::Flat => 0.0,
            CapShape::Spherical { center, radius, apex_dir, polar_max } => {
                let zc = center.z - self.substrate.center.z;
                let p_z = rho * self.beta.cos();
                let theta_p = ((p_z - zc) / radius).clamp(-1.0, 1.0).acos();
                // from p to the apex (polar angle 0 or π about the cap centre)
                let apex_theta = if apex_dir.z > 0.0 { 0.0 } else { PI };
                debug_assert!((polar_max - (theta_p - apex_theta).abs()).abs() < 1e-9);
                arc_x2dz(radius, theta_p, apex_theta)
            }
        };
        // closed curve: p → apex (drop), axis, pole → p (substrate)
        (drop_part + substrate_part).abs()
    }

    /// Mesh on concentric rings, wound with the normal pointing out of the drop.
    pub fn mesh(&self, rings: usize) -> TriMesh {
        let m = match self.shape {
            CapShape::Flat => {
                let rho = self.substrate.radius;
                shapes::flat_disk(
                    self.substrate.center + Vec3::new(0.0, 0.0, rho * self.beta.cos()),
                    Vec3::z(),
                    self.boundary_radius(),
                    rings,
                )
            }
            CapShape::Spherical { center, radius, apex_dir, polar_max } => {
                shapes::spherical_cap(center, radius, apex_dir, polar_max, rings)
            }
        };
        self.orient(self.snap_boundary(m))
    }

    /// Surface of revolution about the `z`-axis, wound with the normal pointing out of the drop.
    pub fn revolved(&self, n_profile: usize, n_angular: usize) -> TriMesh {
        let local = match self.shape {
            CapShape::Flat => {
                let pts: Vec<(f64, f64)> =
                    (0..=n_profile).map(|i| (self.boundary_radius() * i as f64 / n_profile as f64, 0.0)).collect();
                revolve_points(&pts, n_angular)
                    .translated(&Vec3::new(0.0, 0.0, self.substrate.radius * self.beta.cos()))
                    .translated(&self.substrate.center)
            }
            CapShape::Spherical { center, radius, apex_dir, polar_max } => {
                let pts = arc_profile(radius, 0.0, polar_max, n_profile);
                let m = revolve_points(&pts, n_angular);
                let m = if apex_dir.z < 0.0 { m.map_vertices(|v| Vec3::new(v.x, -v.y, -v.z)) } else { m };
                m.translated(&center)
            }
        };
        self.orient(self.snap_boundary(local))
    }

    /// Expected winding normal at the boundary point of azimuth 0.
    fn outward_normal_at_boundary(&self) -> Vec3 {
        let (n1, tau) = substrate_frame(self.beta);
        let s = match self.side {
            Side::Interior => -1.0,
            Side::Exterior => 1.0,
        };
        let g = self.gamma;
        let eta = tau * g.cos() + n1 * (s * g.sin());
        let bis = tau * (0.5 * g).cos() + n1 * (s * (0.5 * g).sin());
        -(bis - eta * bis.dot(&eta)).normalize()
    }

    fn orient(&self, m: TriMesh) -> TriMesh {
        let want = self.outward_normal_at_boundary();
        let rho = self.substrate.radius;
        let p = self.substrate.center + Vec3::new(rho * self.beta.sin(), 0.0, rho * self.beta.cos());
        let f = (0..m.face_count())
            .min_by(|&a, &b| (m.face_centroid(a) - p).norm().total_cmp(&(m.face_centroid(b) - p).norm()))
            .unwrap();
        if m.face_normal(f).dot(&want) < 0.0 {
            m.flipped()
        } else {
            m
        }
    }

    /// Puts boundary vertices exactly (to round-off) on the substrate.
    fn snap_boundary(&self, mut m: TriMesh) -> TriMesh {
        let mask = m.boundary_mask();
        let s = self.substrate;
        for (v, b) in m.vertices_mut().iter_mut().zip(mask) {
            if b {
                *v = s.project(v);
            }
        }
        m
    }
}

/// Outward substrate normal and the meridian tangent pointing toward the `+z` pole at
/// polar angle `beta` (azimuth 0), relative to the substrate centre.
fn substrate_frame(beta: f64) -> (Vec3, Vec3) {
    (Vec3::new(beta.sin(), 0.0, beta.cos()), Vec3::new(-beta.cos(), 0.0, beta.sin()))
}

/// `∫ π x² dz` along the circle of radius `r` (centred on the axis) from polar angle
/// `t1` to `t2`, with `x = r sin θ`, `z = z_c + r cos θ`.
fn arc_x2dz(r: f64, t1: f64, t2: f64) -> f64 {
    let prim = |t: f64| -t.cos() + t.cos().powi(3) / 3.0;
    -PI * r.powi(3) * (prim(t2) - prim(t1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hemispheres_when_hr_is_one() {
        let (s, l) = spherical_caps_for_circle(1.0, 1.0).unwrap();
        assert!((s.height - 1.0).abs() < 1e-15 && (l.height - 1.0).abs() < 1e-15);
        assert!((s.polar_max() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn curvature_half() {
        let (s, l) = spherical_caps_for_circle(1.0, 0.5).unwrap();
        assert!((s.radius - 2.0).abs() < 1e-15);
        assert!((s.height - (2.0 - 3f64.sqrt())).abs() < 1e-14);
        assert!((l.height - (2.0 + 3f64.sqrt())).abs() < 1e-14);
        assert!((s.height + l.height - 2.0 * s.radius).abs() < 1e-14);
        assert_eq!(spherical_caps_for_circle(1.0, 1.5).unwrap_err(), AnalyticError::CurvatureTooLarge(1.5));
        assert_eq!(spherical_caps_for_circle(1.0, 0.0).unwrap_err(), AnalyticError::ZeroCurvature);
    }

    #[test]
    fn flat_drop_volume_is_substrate_cap() {
        let beta = 0.6f64.acos();
        let cap = CapillaryCap::new(Sphere::unit(), beta, beta, Side::Interior).unwrap();
        assert_eq!(cap.shape, CapShape::Flat);
        let h = 0.4;
        assert!((cap.volume() - PI * h * h * (3.0 - h) / 3.0).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_cap_satisfies_two_sphere_relation() {
        let beta = 0.7;
        let cap = CapillaryCap::new(Sphere::unit(), beta, PI / 2.0, Side::Interior).unwrap();
        let s = cap.cap_sphere().unwrap();
        assert!((s.center.norm_squared() - 1.0 - s.radius * s.radius).abs() < 1e-12);
        assert!(cap.drop_inside);
        assert!((s.radius - beta.tan()).abs() < 1e-12);
    }

    #[test]
    fn lens_angle_formula() {
        for &(beta, gamma) in &[(0.5, 1.2), (0.9, 2.4), (0.4, 0.2), (1.2, 3.0)] {
            let cap = CapillaryCap::new(Sphere::unit(), beta, gamma, Side::Interior).unwrap();
            let s = cap.cap_sphere().unwrap();
            let d2 = s.center.norm_squared();
            let cos_lens = (d2 - 1.0 - s.radius * s.radius) / (2.0 * s.radius);
            let expect = if cap.drop_inside { cos_lens } else { -cos_lens };
            assert!((gamma.cos() - expect).abs() < 1e-12, "{beta} {gamma}");
        }
    }
}
