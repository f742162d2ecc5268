use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FitResult;
use crate::alexandrov::HypothesisReport;
use crate::geom::Line;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TheoremId {
    /// Symmetry of a constant mean curvature surface with `S − Γ` outside the sphere.
    #[serde(rename = "T2.3")]
    T2_3,
    /// A surface spanning a circle is a spherical cap.
    #[serde(rename = "C2.5")]
    C2_5,
    /// Symmetry with `S − Γ` in the ball, or with the domain outside it.
    #[serde(rename = "C2.6")]
    C2_6,
    /// The enclosed domain lies outside the sphere.
    #[serde(rename = "C2.7")]
    C2_7,
    /// A capillary surface on a sphere is a spherical cap (or a planar disk).
    #[serde(rename = "T3.2")]
    T3_2,
    /// Height-dependent mean curvature forces rotational symmetry about the `z`-axis.
    #[serde(rename = "T3.3")]
    T3_3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// A hypothesis does not hold, so the conclusion is not judged.
    HypothesisUnmet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

/// A measured quantity. Judged metrics pass when `value ≤ tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub tolerance: Option<f64>,
    pub passed: Option<bool>,
}

/// Tolerances used by the checks. Lengths marked relative are multiplied by the natural
/// length scale of the check (the sphere radius `ρ` or `1/|H|`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyTolerances {
    /// Relative RMS of sphere and plane fits.
    pub fit_rms: f64,
    /// Relative error of a fitted radius.
    pub radius: f64,
    /// Contact angle error and spread, radians.
    pub angle: f64,
    /// Angle between a detected and an expected plane or axis, radians.
    pub plane_angle: f64,
    /// Reflection residual; `None` means `1e-4 ×` bounding-box diagonal.
    pub tol_sym: Option<f64>,
    /// Mean curvature spread relative to `|H_mean| + 1/ρ`.
    pub h_spread: f64,
    /// Pointwise residual of `H = κ z + μ`, in units of `1/ρ`.
    pub law_residual: f64,
    /// Relative collinearity of section-circle centres.
    pub collinearity: f64,
    /// Relative distance of boundary vertices from the sphere.
    pub boundary: f64,
    /// Relative RMS for a boundary curve to count as a circle.
    pub circle_rms: f64,
    /// Pencils about horizontal lines used to detect rotational symmetry.
    pub pencils: usize,
    /// Horizontal sections used for the circle-centre test.
    pub sections: usize,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            fit_rms: 1e-3,
            radius: 0.01,
            angle: 1f64.to_radians(),
            plane_angle: 0.5f64.to_radians(),
            tol_sym: None,
            h_spread: 1e-3,
            law_residual: 2e-3,
            collinearity: 1e-3,
            boundary: 1e-6,
            circle_rms: 1e-3,
            pencils: 8,
            sections: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem: TheoremId,
    pub hypotheses: Vec<HypothesisCheck>,
    pub metrics: BTreeMap<String, Metric>,
    pub verdict: Verdict,
    pub tolerances: VerifyTolerances,
    pub notes: Vec<String>,
    pub hypothesis_report: Option<HypothesisReport>,
    pub fit: Option<FitResult>,
    pub axis: Option<Line>,
}

impl TheoremReport {
    pub(crate) fn new(theorem: TheoremId, tolerances: VerifyTolerances) -> Self {
        Self {
            theorem,
            hypotheses: Vec::new(),
            metrics: BTreeMap::new(),
            verdict: Verdict::Fail,
            tolerances,
            notes: Vec::new(),
            hypothesis_report: None,
            fit: None,
            axis: None,
        }
    }

    pub(crate) fn hypothesis(&mut self, name: &str, holds: bool, detail: impl Into<String>) -> bool {
        self.hypotheses.push(HypothesisCheck { name: name.into(), holds, detail: detail.into() });
        holds
    }

    pub(crate) fn judged(&mut self, name: &str, value: f64, tolerance: f64) -> bool {
        let passed = value <= tolerance;
        self.metrics.insert(name.into(), Metric { value, tolerance: Some(tolerance), passed: Some(passed) });
        passed
    }

    pub(crate) fn info(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.into(), Metric { value, tolerance: None, passed: None });
    }

    pub(crate) fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|h| h.holds)
    }

    /// Sets the verdict from the recorded hypotheses and judged metrics.
    pub(crate) fn finish(mut self) -> Self {
        self.verdict = if !self.hypotheses_hold() {
            Verdict::HypothesisUnmet
        } else if self.metrics.values().all(|m| m.passed != Some(false)) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
