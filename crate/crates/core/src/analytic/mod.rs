//! Reference surfaces with known geometry: spherical caps spanning a circle, capillary
//! caps on a supporting sphere, Delaunay rotational profiles and their surfaces of
//! revolution, plus contact-angle measurement along a boundary on a sphere.

mod caps;
mod contact;
mod delaunay;
mod revolve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use caps::{spherical_caps_for_circle, spherical_caps_for_circle_at, CapillaryCap, SphericalCapSpec};
pub use contact::{contact_angle, contact_angle_tol, surface_normal_at, AngleStats, ContactAngles};
pub use delaunay::{
    classify, delaunay_profile, delaunay_profile_from_seed, DelaunayClass, DelaunayProfile, IntegratorOptions,
    ProfileSample,
};
pub use revolve::{arc_profile, revolve, revolve_points, segment_profile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("|H|·r = {0} exceeds 1: no cap of that curvature spans the circle")]
    CurvatureTooLarge(f64),
    #[error("zero mean curvature: the spanning surface is a flat disk")]
    ZeroCurvature,
    #[error("profile reached the axis at s = {s} with sin ψ = {sin_psi}")]
    AxisSingularity { s: f64, sin_psi: f64 },
    #[error("no Delaunay profile for H = {h}, c = {c}")]
    NoProfile { h: f64, c: f64 },
    #[error("boundary vertex {vertex} is {distance} away from the sphere")]
    BoundaryOffSphere { vertex: usize, distance: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("profile does not cross the sphere on both sides of its seed")]
    NoSphereCrossing,
}

/// Side of the supporting sphere occupied by the drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `S − Γ` and the drop inside the open ball.
    Interior,
    /// `S − Γ` and the drop outside the closed ball.
    Exterior,
}

/// Quantity held fixed by a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    MeanCurvature(f64),
    Volume(f64),
}

/// Contact angle, curvature-law coefficients, side and target of a capillary problem.
/// The mean curvature law is `H = κ z + μ` (`κ = 0` for constant mean curvature).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapillaryParams {
    pub gamma: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub mu: f64,
    pub side: Side,
    pub target: Target,
}

impl CapillaryParams {
    pub fn constant(gamma: f64, side: Side, target: Target) -> Self {
        Self { gamma, kappa: 0.0, mu: 0.0, side, target }
    }

    pub fn validate(&self) -> Result<(), AnalyticError> {
        if !(0.0..=std::f64::consts::PI).contains(&self.gamma) {
            return Err(AnalyticError::InvalidParameter(format!("contact angle {} outside [0, π]", self.gamma)));
        }
        if !self.kappa.is_finite() || !self.mu.is_finite() {
            return Err(AnalyticError::InvalidParameter("non-finite κ or μ".into()));
        }
        match self.target {
            Target::Volume(v) if !(v.is_finite() && v > 0.0) => {
                Err(AnalyticError::InvalidParameter(format!("volume target {v} must be positive")))
            }
            Target::MeanCurvature(h) if !h.is_finite() => {
                Err(AnalyticError::InvalidParameter("non-finite curvature target".into()))
            }
            _ => Ok(()),
        }
    }
}
