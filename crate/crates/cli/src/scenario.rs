//! Scenario files: JSON, unknown fields rejected.

use std::path::{Path, PathBuf};

use capdrop_core::alexandrov::{BoundaryRegime, PlaneFamily};
use capdrop_core::analytic::{CapillaryParams, Side};
use capdrop_core::solver::{SolveConfig, SolveMode};
use capdrop_core::verify::{SymmetryVariant, TheoremId, VerifyTolerances};
use capdrop_core::{Line, PatchSide, Plane, Sphere, Vec3};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Generate,
    Solve,
    Sweep,
    Verify,
    Pipeline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub mode: Mode,
    #[serde(default = "Sphere::unit")]
    pub sphere: Sphere,
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub resolution: Resolution,
    /// Amplitude of seeded normal noise added to the generated surface (boundary fixed).
    #[serde(default)]
    pub perturbation: f64,
    #[serde(default)]
    pub solve: Option<SolveSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub verify: Option<VerifySpec>,
    #[serde(default)]
    pub tolerances: VerifyTolerances,
    /// Output directory; defaults to `out/<name>`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub mesh_format: MeshFormatSpec,
    #[serde(default)]
    pub seed: u64,
    /// Wall-clock budget in seconds; exceeding it is reported on stderr.
    #[serde(default)]
    pub time_budget_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    /// Rotational capillary drop on the scenario sphere.
    CapillaryCap {
        beta: f64,
        gamma: f64,
        #[serde(default = "interior")]
        side: Side,
    },
    /// Spherical cap of curvature `h` spanning a circle.
    CircleCap {
        circle_radius: f64,
        h: f64,
        #[serde(default)]
        large: bool,
        #[serde(default = "Vec3::zeros")]
        center: Vec3,
        #[serde(default = "Vec3::z")]
        normal: Vec3,
    },
    Disk {
        #[serde(default = "Vec3::zeros")]
        center: Vec3,
        #[serde(default = "Vec3::z")]
        normal: Vec3,
        radius: f64,
    },
    /// Delaunay meridian revolved about `z`, optionally clipped by a sphere centred on the axis.
    Delaunay {
        h: f64,
        c: f64,
        s_min: f64,
        s_max: f64,
        #[serde(default = "default_step")]
        step: f64,
        #[serde(default)]
        clip: Option<ClipSpec>,
    },
    /// OBJ or PLY file, relative to the scenario file.
    Mesh { path: PathBuf },
}

fn interior() -> Side {
    Side::Interior
}

fn default_step() -> f64 {
    0.01
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipSpec {
    pub center_z: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resolution {
    /// Rings of disk-type meshes.
    pub rings: usize,
    /// Meridians of revolved meshes.
    pub angular: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { rings: 24, angular: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshFormatSpec {
    #[default]
    Obj,
    Ply,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    pub mode: SolveMode,
    pub params: CapillaryParams,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub h_tol: Option<f64>,
    #[serde(default)]
    pub remesh_every: Option<usize>,
}

impl SolveSpec {
    pub fn config(&self, sphere: Sphere) -> SolveConfig {
        let mut cfg = SolveConfig::new(self.mode, self.params, sphere);
        if let Some(n) = self.max_iterations {
            cfg.max_iterations = n;
        }
        if let Some(n) = self.remesh_every {
            cfg.remesh_every = n;
        }
        cfg.h_tol = self.h_tol;
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Translational {
        normal: Vec3,
        t_min: f64,
        t_max: f64,
    },
    Rotational {
        #[serde(default = "Vec3::zeros")]
        point: Vec3,
        direction: Vec3,
        #[serde(default)]
        e1: Option<Vec3>,
        t_min: f64,
        t_max: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub family: FamilySpec,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default = "capillary_regime")]
    pub regime: BoundaryRegime,
    /// Spherical patch closing an open surface.
    #[serde(default = "inner")]
    pub closure: PatchSide,
}

fn capillary_regime() -> BoundaryRegime {
    BoundaryRegime::Capillary
}

fn inner() -> PatchSide {
    PatchSide::Inner
}

impl SweepSpec {
    pub fn family(&self) -> Result<PlaneFamily, capdrop_core::alexandrov::AlexandrovError> {
        let fam = match self.family {
            FamilySpec::Translational { normal, t_min, t_max } => PlaneFamily::translational(normal, t_min, t_max)?,
            FamilySpec::Rotational { point, direction, e1, t_min, t_max } => {
                PlaneFamily::rotational(Line { point, direction }, e1, t_min, t_max)?
            }
        };
        match self.samples {
            Some(n) => fam.with_samples(n),
            None => Ok(fam),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    pub theorem: TheoremId,
    /// Contact angle for the capillary-cap check; defaults to the solve's `γ`.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    /// Defaults to the `μ` achieved by a prescribed-curvature solve.
    #[serde(default)]
    pub mu: Option<f64>,
    /// Mean curvature for the circle corollaries; defaults to the measured value.
    #[serde(default)]
    pub h: Option<f64>,
    /// Symmetry plane for the symmetry statements.
    #[serde(default)]
    pub plane: Option<Plane>,
    #[serde(default)]
    pub variant: Option<SymmetryVariant>,
    /// Circle form of C2.6 (`interior`) instead of the symmetry form.
    #[serde(default)]
    pub circle_side: Option<Side>,
}

impl Scenario {
    /// Parses and validates `text`; `path` is used in messages and to resolve relative
    /// input files.
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::ConfigParse {
            path: path.to_path_buf(),
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        s.validate(path)?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })?;
        let mut s = Self::parse(&text, path)?;
        if let SurfaceSpec::Mesh { path: p } = &mut s.surface {
            if p.is_relative() {
                *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
            }
            if !p.exists() {
                return Err(CliError::field(path, "surface.path", format!("{} does not exist", p.display())));
            }
        }
        Ok(s)
    }

    fn validate(&self, path: &Path) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::field(path, field, msg));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad("name", format!("`{}` is not a plain file name", self.name));
        }
        if !(self.sphere.radius > 0.0) {
            return bad("sphere.radius", format!("{} must be positive", self.sphere.radius));
        }
        if !(self.perturbation >= 0.0) {
            return bad("perturbation", format!("{} must be non-negative", self.perturbation));
        }
        if self.resolution.rings < 2 || self.resolution.angular < 3 {
            return bad("resolution", "at least 2 rings and 3 meridians".into());
        }
        let angle = |field: &str, g: f64| {
            if (0.0..=std::f64::consts::PI).contains(&g) {
                Ok(())
            } else {
                bad(field, format!("contact angle {g} outside [0, π]"))
            }
        };
        match self.surface {
            SurfaceSpec::CapillaryCap { beta, gamma, .. } => {
                angle("surface.gamma", gamma)?;
                if !(beta > 0.0 && beta < std::f64::consts::PI) {
                    return bad("surface.beta", format!("{beta} outside (0, π)"));
                }
            }
            SurfaceSpec::CircleCap { circle_radius, h, .. } if !(circle_radius > 0.0) || h * circle_radius > 1.0 => {
                return bad("surface", format!("no cap of curvature {h} spans a circle of radius {circle_radius}"));
            }
            SurfaceSpec::Disk { radius, .. } if !(radius > 0.0) => return bad("surface.radius", format!("{radius}")),
            _ => {}
        }
        if let Some(solve) = &self.solve {
            angle("solve.params.gamma", solve.params.gamma)?;
            if let Err(e) = solve.config(self.sphere).validate() {
                return bad("solve", e.to_string());
            }
        }
        if let Some(sweep) = &self.sweep {
            if let Err(e) = sweep.family() {
                return bad("sweep.family", e.to_string());
            }
        }
        if let Some(v) = &self.verify {
            if let Some(g) = v.gamma {
                angle("verify.gamma", g)?;
            }
            let needs_plane =
                matches!(v.theorem, TheoremId::T2_3) || (v.theorem == TheoremId::C2_6 && v.circle_side.is_none());
            if needs_plane && v.plane.is_none() {
                return bad("verify.plane", "the symmetry statements need a plane".into());
            }
            if v.theorem == TheoremId::T3_3 && v.kappa.is_none() {
                return bad("verify.kappa", "required for T3.3".into());
            }
            if v.theorem == TheoremId::T3_2 && v.gamma.is_none() && self.solve.is_none() {
                return bad("verify.gamma", "required without a solve".into());
            }
        }
        let needs = |field: &str, present: bool, modes: &[Mode]| {
            if modes.contains(&self.mode) && !present {
                bad(field, format!("required in {:?} mode", self.mode))
            } else {
                Ok(())
            }
        };
        needs("solve", self.solve.is_some(), &[Mode::Solve])?;
        needs("sweep", self.sweep.is_some(), &[Mode::Sweep])?;
        needs("verify", self.verify.is_some(), &[Mode::Verify])?;
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| Path::new("out").join(&self.name))
    }
}

/// Applies `--tol.<name> <value>` overrides by field name.
pub fn apply_tolerance_overrides(
    tol: &VerifyTolerances,
    overrides: &[(String, String)],
) -> Result<VerifyTolerances, CliError> {
    let mut value = serde_json::to_value(tol).expect("tolerances serialize");
    let obj = value.as_object_mut().expect("tolerances are an object");
    for (name, raw) in overrides {
        let slot = obj.get_mut(name).ok_or_else(|| CliError::UnknownTolerance(name.clone()))?;
        *slot =
            serde_json::from_str(raw).map_err(|_| CliError::BadTolerance { name: name.clone(), value: raw.clone() })?;
    }
    serde_json::from_value(value).map_err(|e| CliError::BadTolerance {
        name: overrides.iter().map(|o| o.0.as_str()).collect::<Vec<_>>().join(","),
        value: e.to_string(),
    })
}
