//! Shape fits and theorem-level checks.
//!
//! Every check returns a [`TheoremReport`]: the hypotheses it tested, the measured
//! metrics with their tolerances, and a verdict that keeps "hypothesis unmet" apart from
//! "conclusion fails".

mod checks;
mod fit;
mod report;

use thiserror::Error;

use crate::alexandrov::AlexandrovError;
use crate::analytic::AnalyticError;
use crate::geom::MeshError;

pub use checks::{
    check_capillary_cap, check_corollary_circle, check_domain_exterior, check_height_curvature_theorem,
    check_symmetry_theorem, domain_outside_ball, mean_curvature_estimate, SymmetryVariant,
};
pub use fit::{
    fit_circle, fit_plane, fit_sphere, horizontal_section, horizontal_section_circles, FitModel, FitResult,
    SectionCircle, SectionCircles,
};
pub use report::{HypothesisCheck, Metric, TheoremId, TheoremReport, Verdict, VerifyTolerances};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("none of the {levels} section levels meets the mesh")]
    EmptySection { levels: usize },
    #[error(transparent)]
    Alexandrov(#[from] AlexandrovError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}
