use serde::{Deserialize, Serialize};

use super::parts::{half_parts, is_graph_over_with};
use super::symmetry::reflection_residual;
use super::{AlexandrovError, FamilyKind, PlaneFamily};
use crate::geom::{ClosedRegion, Containment, ContainmentOracle, Plane, TriMesh, Vec3};

/// Which boundary behaviour the surface has; decides whether a contact on `Γ` may
/// certify a symmetry plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRegime {
    /// `Γ` is prescribed: a contact on `Γ` never certifies symmetry.
    Fixed,
    /// `Γ` is free on the sphere with a constant contact angle: corner contacts count.
    Capillary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Relative width of the final bisection bracket.
    pub bisection_tol: f64,
    /// Reflected points closer than this to `∂W` count as touching, not exiting;
    /// `None` means `1e-3 ×` the bounding-box diagonal of `S`.
    pub contain_tol: Option<f64>,
    /// Raster size of the graph test.
    pub graph_resolution: usize,
    /// Symmetry acceptance threshold; `None` means `1e-4 ×` the bounding-box diagonal.
    pub tol_sym: Option<f64>,
    pub regime: BoundaryRegime,
    /// Keep one log entry per coarse sample.
    pub log_samples: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            bisection_tol: 1e-9,
            contain_tol: None,
            graph_resolution: 48,
            tol_sym: None,
            regime: BoundaryRegime::Capillary,
            log_samples: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactClass {
    InteriorInterior,
    /// Two boundary points of the reflected part meet away from `Γ`.
    #[serde(rename = "BoundaryBoundaryOffΓ")]
    BoundaryBoundaryOffGamma,
    /// The contact is at a point of `Γ` (a corner contact).
    #[serde(rename = "BoundaryOnΓ")]
    BoundaryOnGamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// A reflected point left `W`.
    ExitsDomain,
    /// The reflected part stopped being a graph over the plane.
    NotAGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub t: f64,
    pub kind: ViolationKind,
    pub class: ContactClass,
    /// Witness on the reflected part.
    pub point: Vec3,
    /// Its preimage on `S`.
    pub preimage: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub t: f64,
    pub reflected_faces: usize,
    pub exits: usize,
    pub graph: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub family: PlaneFamily,
    /// First parameter at which the plane touches `S`.
    pub t_first_contact: f64,
    /// First parameter at which the reflected part leaves `W` or stops being a graph;
    /// `None` if the sweep reaches the end of the range.
    pub t_first_violation: Option<f64>,
    pub contact: Option<ContactEvent>,
    /// Plane at the violation (or at the end of the range) after local refinement of the
    /// reflection residual.
    pub candidate: Plane,
    pub candidate_t: f64,
    pub residual: f64,
    pub tol_sym: f64,
    /// The candidate is accepted as a symmetry plane.
    pub symmetric: bool,
    pub samples: Vec<SweepSample>,
}

impl SweepResult {
    pub fn symmetry_plane(&self) -> Option<Plane> {
        self.symmetric.then_some(self.candidate)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep result serializes")
    }
}

struct Probe {
    reflected_faces: usize,
    exits: usize,
    violation: Option<(ViolationKind, Vec3, Vec3)>,
    graph: bool,
}

struct Sweeper<'a> {
    surface: &'a TriMesh,
    oracle: ContainmentOracle,
    gamma: Vec<Vec3>,
    edge: f64,
    opts: &'a SweepOptions,
}

impl Sweeper<'_> {
    fn probe(&self, plane: &Plane) -> Probe {
        let (minus, _) = half_parts(self.surface, plane);
        let star = minus.reflect(plane);
        let tol = self.oracle.tol;
        let mut exits = 0;
        let mut worst: Option<(f64, Vec3, Vec3)> = None;
        for (q, p) in minus.vertices().iter().zip(star.vertices()) {
            if plane.signed_distance(q).abs() <= tol {
                continue;
            }
            if self.oracle.classify(p) == Containment::Outside {
                exits += 1;
                let d = self.oracle.distance(p);
                if worst.is_none_or(|w| d > w.0) {
                    worst = Some((d, *p, *q));
                }
            }
        }
        let g = is_graph_over_with(&star, plane, self.opts.graph_resolution);
        let violation = if let Some((_, p, q)) = worst {
            Some((ViolationKind::ExitsDomain, p, q))
        } else if !g.is_graph {
            let (foot, ts) = g.witness.clone().expect("failed graph test has a witness");
            let p = foot + plane.normal * ts[ts.len() - 1];
            Some((ViolationKind::NotAGraph, p, plane.reflect_point(&p)))
        } else {
            None
        };
        Probe { reflected_faces: star.face_count(), exits, violation, graph: g.is_graph }
    }

    fn classify(&self, plane: &Plane, p: &Vec3, q: &Vec3) -> ContactClass {
        let near_gamma = |x: &Vec3| self.gamma.iter().any(|g| (g - x).norm() <= 2.0 * self.edge);
        if near_gamma(p) || near_gamma(q) {
            ContactClass::BoundaryOnGamma
        } else if plane.signed_distance(p).abs() <= 2.0 * self.edge {
            ContactClass::BoundaryBoundaryOffGamma
        } else {
            ContactClass::InteriorInterior
        }
    }
}

/// Signed distance of the point of `S` furthest behind the plane at `t` (negative once
/// the plane has reached `S`).
fn lead(surface: &TriMesh, family: &PlaneFamily, t: f64) -> f64 {
    let plane = family.plane(t);
    surface.vertices().iter().map(|p| plane.signed_distance(p)).fold(f64::INFINITY, f64::min)
}

/// Moving-plane sweep of `family` across `surface ⊂ ∂W`. `gamma` holds the boundary
/// curve points of `surface` (empty for a closed surface).
pub fn sweep(
    region: &ClosedRegion,
    surface: &TriMesh,
    gamma: &[Vec3],
    family: &PlaneFamily,
    opts: &SweepOptions,
) -> Result<SweepResult, AlexandrovError> {
    let family = family.checked()?;
    let diag = surface.bbox_diagonal();
    let range = family.t_max - family.t_min;
    let t_eps = opts.bisection_tol * range;
    let contain_tol = opts.contain_tol.unwrap_or(1e-3 * diag);
    let tol_sym = opts.tol_sym.unwrap_or(1e-4 * diag);

    // first contact
    let t1 = match family.kind {
        FamilyKind::Translational { direction } => {
            let h: Vec<f64> = surface.vertices().iter().map(|p| direction.dot(p)).collect();
            let lo = h.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo > family.t_max || hi < family.t_min {
                return Err(AlexandrovError::NoContactInRange { t_min: family.t_min, t_max: family.t_max });
            }
            lo.max(family.t_min)
        }
        FamilyKind::Rotational { .. } => {
            let f = |t: f64| lead(surface, &family, t);
            if f(family.t_min) <= 0.0 {
                family.t_min
            } else {
                let ts: Vec<f64> = family.parameters().collect();
                let k = ts
                    .iter()
                    .position(|&t| f(t) <= 0.0)
                    .ok_or(AlexandrovError::NoContactInRange { t_min: family.t_min, t_max: family.t_max })?;
                let (mut a, mut b) = (ts[k - 1], ts[k]);
                while b - a > t_eps {
                    let m = 0.5 * (a + b);
                    if f(m) <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                b
            }
        }
    };

    let sweeper = Sweeper {
        surface,
        oracle: ContainmentOracle::new(region, contain_tol),
        gamma: gamma.to_vec(),
        edge: surface.mean_edge_length(),
        opts,
    };
    // coarse scan from the first contact
    let n = family.samples;
    let step = (family.t_max - t1) / (n - 1).max(1) as f64;
    let mut samples = Vec::new();
    let mut bracket = None;
    for k in 1..n {
        let t = t1 + step * k as f64;
        let probe = sweeper.probe(&family.plane(t));
        if opts.log_samples {
            samples.push(SweepSample {
                t,
                reflected_faces: probe.reflected_faces,
                exits: probe.exits,
                graph: probe.graph,
            });
        }
        if probe.violation.is_some() {
            bracket = Some((t - step, t, probe));
            break;
        }
    }

    let (t2, contact) = match bracket {
        None => (None, None),
        Some((mut a, mut b, mut at_b)) => {
            while b - a > t_eps {
                let m = 0.5 * (a + b);
                let probe = sweeper.probe(&family.plane(m));
                if probe.violation.is_some() {
                    b = m;
                    at_b = probe;
                } else {
                    a = m;
                }
            }
            let (kind, p, q) = at_b.violation.expect("bracket end violates");
            let plane = family.plane(b);
            let class = sweeper.classify(&plane, &p, &q);
            (Some(b), Some(ContactEvent { t: b, kind, class, point: p, preimage: q }))
        }
    };

    // local refinement of the candidate
    let t_c = t2.unwrap_or(family.t_max);
    let a = (t_c - 2.0 * step).max(t1);
    let b = (t_c + step).min(family.t_max);
    let mut best = (t_c, reflection_residual(surface, &family.plane(t_c)));
    let m = 24;
    for k in 0..=m {
        let t = a + (b - a) * k as f64 / m as f64;
        let r = reflection_residual(surface, &family.plane(t));
        if r < best.1 {
            best = (t, r);
        }
    }
    let h = (b - a) / m as f64;
    let (mut lo, mut hi) = ((best.0 - h).max(a), (best.0 + h).min(b));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-13 * range.max(1.0) {
        let c = hi - phi * (hi - lo);
        let d = lo + phi * (hi - lo);
        if reflection_residual(surface, &family.plane(c)) <= reflection_residual(surface, &family.plane(d)) {
            hi = d;
        } else {
            lo = c;
        }
    }
    let t_ref = 0.5 * (lo + hi);
    let r_ref = reflection_residual(surface, &family.plane(t_ref));
    if r_ref < best.1 {
        best = (t_ref, r_ref);
    }
    let candidate = family.plane(best.0);
    let corner_only = opts.regime == BoundaryRegime::Fixed
        && contact.as_ref().is_some_and(|c| c.class == ContactClass::BoundaryOnGamma);
    let symmetric = best.1 <= tol_sym && !corner_only;
    Ok(SweepResult {
        family,
        t_first_contact: t1,
        t_first_violation: t2,
        contact,
        candidate,
        candidate_t: best.0,
        residual: best.1,
        tol_sym,
        symmetric,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;

    #[test]
    fn sphere_sweep_stops_at_the_equator() {
        let m = shapes::icosphere(3, 1.0);
        let w = ClosedRegion::from_closed_mesh(&m).unwrap();
        let fam = PlaneFamily::translational(Vec3::z(), -1.5, 1.5).unwrap().with_samples(64).unwrap();
        let r = sweep(&w, &m, &[], &fam, &SweepOptions::default()).unwrap();
        assert!((r.t_first_contact + 1.0).abs() < 1e-12);
        let t2 = r.t_first_violation.unwrap();
        assert!(t2.abs() < 0.1, "{t2}");
        assert!(r.symmetric);
        assert!(r.candidate.offset.abs() < 1e-9);
        assert!(r.residual < 1e-9);
    }
}
