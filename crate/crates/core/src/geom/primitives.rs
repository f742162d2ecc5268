use serde::{Deserialize, Serialize};

use super::{MeshError, Vec3};

const UNIT_TOL: f64 = 1e-12;

/// Round sphere; used both for the substrate and for fitted or analytic caps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Vec3, radius: f64) -> Result<Self, MeshError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(MeshError::InvalidPrimitive(format!("sphere radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn unit() -> Self {
        Self { center: Vec3::zeros(), radius: 1.0 }
    }

    /// `|p - c| - ρ`: negative inside the open ball, positive in the exterior.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        (p - self.center).norm() - self.radius
    }

    /// Outward unit normal at the radial projection of `p`.
    pub fn normal_at(&self, p: &Vec3) -> Vec3 {
        (p - self.center).normalize()
    }

    pub fn project(&self, p: &Vec3) -> Vec3 {
        self.center + self.normal_at(p) * self.radius
    }

    pub fn area(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.radius * self.radius
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.radius.powi(3)
    }
}

/// Oriented plane `{x : n·x = offset}` with unit normal `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    /// Normalises `normal`; fails on a zero vector.
    pub fn new(normal: Vec3, offset: f64) -> Result<Self, MeshError> {
        let len = normal.norm();
        if !(len > 0.0) || !len.is_finite() {
            return Err(MeshError::InvalidPrimitive("plane normal has zero length".into()));
        }
        Ok(Self { normal: normal / len, offset: offset / len })
    }

    pub fn through_point(normal: Vec3, point: &Vec3) -> Result<Self, MeshError> {
        let n = normal
            .try_normalize(0.0)
            .ok_or_else(|| MeshError::InvalidPrimitive("plane normal has zero length".into()))?;
        Ok(Self { normal: n, offset: n.dot(point) })
    }

    pub fn is_valid(&self) -> bool {
        (self.normal.norm() - 1.0).abs() <= UNIT_TOL
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn reflect_point(&self, p: &Vec3) -> Vec3 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    pub fn project(&self, p: &Vec3) -> Vec3 {
        p - self.normal * self.signed_distance(p)
    }

    /// Same point set with the opposite orientation.
    pub fn flipped(&self) -> Self {
        Self { normal: -self.normal, offset: -self.offset }
    }

    /// Unoriented angle between two planes, in `[0, π/2]`.
    pub fn angle_to(&self, other: &Plane) -> f64 {
        self.normal.dot(&other.normal).abs().min(1.0).acos()
    }
}

/// Straight line through `point` along the unit vector `direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub point: Vec3,
    pub direction: Vec3,
}

impl Line {
    pub fn new(point: Vec3, direction: Vec3) -> Result<Self, MeshError> {
        let d = direction
            .try_normalize(0.0)
            .ok_or_else(|| MeshError::InvalidPrimitive("line direction has zero length".into()))?;
        Ok(Self { point, direction: d })
    }

    pub fn z_axis() -> Self {
        Self { point: Vec3::zeros(), direction: Vec3::z() }
    }

    pub fn is_valid(&self) -> bool {
        (self.direction.norm() - 1.0).abs() <= UNIT_TOL
    }

    pub fn distance_to(&self, p: &Vec3) -> f64 {
        let v = p - self.point;
        (v - self.direction * v.dot(&self.direction)).norm()
    }

    /// Unoriented angle between the directions of two lines, in `[0, π/2]`.
    pub fn angle_to(&self, other: &Line) -> f64 {
        self.direction.dot(&other.direction).abs().min(1.0).acos()
    }

    /// Orthonormal pair spanning the plane orthogonal to the line.
    pub fn orthonormal_frame(&self) -> (Vec3, Vec3) {
        orthonormal_complement(&self.direction)
    }
}

/// Two unit vectors completing `d` (assumed unit) to a right-handed frame `(e1, e2, d)`.
pub(crate) fn orthonormal_complement(d: &Vec3) -> (Vec3, Vec3) {
    let helper = if d.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (helper - d * d.dot(&helper)).normalize();
    let e2 = d.cross(&e1);
    (e1, e2)
}
