//! Moving planes on triangle meshes.
//!
//! A plane family is swept across a surface `S` bounding a domain `W`; the part of `S`
//! behind the plane is reflected and tested against `W` and against the graph condition.
//! The first parameter where either test fails is the candidate symmetry plane, which is
//! then judged by its reflection residual.

mod hypotheses;
mod parts;
mod sweep;
mod symmetry;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{orthonormal_complement, Line, MeshError, Plane, Vec3};

pub use hypotheses::{check_hypotheses, GraphSeparation, HypothesisOptions, HypothesisReport, RadialGraph, SideClass};
pub use parts::{half_parts, is_graph_over, is_graph_over_with, reflected_part, GraphTest};
pub use sweep::{
    sweep, BoundaryRegime, ContactClass, ContactEvent, SweepOptions, SweepResult, SweepSample, ViolationKind,
};
pub use symmetry::{
    common_axis, common_axis_tol, detect_symmetry_plane, reflection_residual, symmetry_planes, SymmetryOptions,
};

#[derive(Debug, Error, PartialEq)]
pub enum AlexandrovError {
    #[error("the plane family never touches the surface in [{t_min}, {t_max}]")]
    NoContactInRange { t_min: f64, t_max: f64 },
    #[error("the planes have no common line (worst misfit {misfit:e})")]
    NoCommonLine { misfit: f64 },
    #[error("invalid plane family: {0}")]
    InvalidFamily(String),
    #[error("boundary vertex {vertex} is {distance:e} away from the sphere")]
    BoundaryOffSphere { vertex: usize, distance: f64 },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Planes `{x : u·x = t}`; the part behind the plane is `u·x ≤ t`.
    Translational { direction: Vec3 },
    /// Planes through `axis` with normal `cos t · e1 + sin t · e2`, where
    /// `e2 = e1 × axis.direction`; the part behind the plane has negative signed distance.
    Rotational { axis: Line, e1: Vec3 },
}

/// One-parameter family of planes with a parameter range and a sampling resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFamily {
    pub kind: FamilyKind,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

pub const DEFAULT_SAMPLES: usize = 512;

impl PlaneFamily {
    pub fn translational(direction: Vec3, t_min: f64, t_max: f64) -> Result<Self, AlexandrovError> {
        let u = direction
            .try_normalize(0.0)
            .ok_or_else(|| AlexandrovError::InvalidFamily("zero sweep direction".into()))?;
        Self { kind: FamilyKind::Translational { direction: u }, t_min, t_max, samples: DEFAULT_SAMPLES }.checked()
    }

    /// Pencil about `axis`. `e1` is made orthogonal to the axis; `None` picks one.
    pub fn rotational(axis: Line, e1: Option<Vec3>, t_min: f64, t_max: f64) -> Result<Self, AlexandrovError> {
        let d = axis
            .direction
            .try_normalize(0.0)
            .ok_or_else(|| AlexandrovError::InvalidFamily("zero axis direction".into()))?;
        let e1 = match e1 {
            Some(v) => (v - d * d.dot(&v))
                .try_normalize(1e-12)
                .ok_or_else(|| AlexandrovError::InvalidFamily("reference vector parallel to the axis".into()))?,
            None => orthonormal_complement(&d).0,
        };
        let axis = Line { point: axis.point, direction: d };
        Self { kind: FamilyKind::Rotational { axis, e1 }, t_min, t_max, samples: DEFAULT_SAMPLES }.checked()
    }

    pub fn with_samples(mut self, samples: usize) -> Result<Self, AlexandrovError> {
        self.samples = samples;
        self.checked()
    }

    fn checked(self) -> Result<Self, AlexandrovError> {
        if !(self.t_min.is_finite() && self.t_max.is_finite() && self.t_min < self.t_max) {
            return Err(AlexandrovError::InvalidFamily(format!("empty range [{}, {}]", self.t_min, self.t_max)));
        }
        if self.samples < 2 {
            return Err(AlexandrovError::InvalidFamily("at least two samples are needed".into()));
        }
        match self.kind {
            FamilyKind::Translational { direction } if (direction.norm() - 1.0).abs() > 1e-12 => {
                Err(AlexandrovError::InvalidFamily("direction is not a unit vector".into()))
            }
            FamilyKind::Rotational { axis, e1 }
                if !axis.is_valid() || (e1.norm() - 1.0).abs() > 1e-12 || e1.dot(&axis.direction).abs() > 1e-12 =>
            {
                Err(AlexandrovError::InvalidFamily("pencil frame is not orthonormal".into()))
            }
            _ => Ok(self),
        }
    }

    pub fn is_rotational(&self) -> bool {
        matches!(self.kind, FamilyKind::Rotational { .. })
    }

    pub fn plane(&self, t: f64) -> Plane {
        match self.kind {
            FamilyKind::Translational { direction } => Plane { normal: direction, offset: t },
            FamilyKind::Rotational { axis, e1 } => {
                let e2 = e1.cross(&axis.direction);
                let n = e1 * t.cos() + e2 * t.sin();
                Plane { normal: n, offset: n.dot(&axis.point) }
            }
        }
    }

    pub fn parameters(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.samples;
        (0..n).map(move |k| self.t_min + (self.t_max - self.t_min) * k as f64 / (n - 1) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pencil_about_the_y_axis() {
        let fam =
            PlaneFamily::rotational(Line { point: Vec3::zeros(), direction: Vec3::y() }, Some(Vec3::x()), PI / 2.0, PI)
                .unwrap();
        // Q(t): cos t x + sin t z = 0
        let q = fam.plane(PI / 2.0);
        assert!((q.normal - Vec3::z()).norm() < 1e-15);
        let p = fam.plane(PI);
        assert!((p.normal + Vec3::x()).norm() < 1e-15);
        for t in fam.parameters().take(7) {
            assert!(fam.plane(t).normal.dot(&Vec3::y()).abs() < 1e-15);
        }
    }

    #[test]
    fn bad_families_rejected() {
        assert!(PlaneFamily::translational(Vec3::zeros(), 0.0, 1.0).is_err());
        assert!(PlaneFamily::translational(Vec3::z(), 1.0, 1.0).is_err());
        assert!(PlaneFamily::rotational(Line::z_axis(), Some(Vec3::z()), 0.0, 1.0).is_err());
        assert!(PlaneFamily::translational(Vec3::z(), 0.0, 1.0).unwrap().with_samples(1).is_err());
    }
}
