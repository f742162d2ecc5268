use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::OnceLock;

use capdrop_core::analytic::*;
use capdrop_core::geom::shapes;
use capdrop_core::solver::*;
use capdrop_core::verify::*;
use capdrop_core::{Line, Plane, Sphere, TriMesh, Vec3};
use nalgebra::Rotation3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn sphere_points(center: Vec3, radius: f64, n: usize) -> Vec<Vec3> {
    // Fibonacci lattice
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * k as f64;
            center + Vec3::new(r * t.cos(), r * t.sin(), z) * radius
        })
        .collect()
}

fn tol() -> VerifyTolerances {
    VerifyTolerances::default()
}

fn hypothesis<'a>(r: &'a TheoremReport, name: &str) -> &'a HypothesisCheck {
    r.hypotheses.iter().find(|h| h.name == name).unwrap_or_else(|| panic!("no hypothesis {name} in {:?}", r.hypotheses))
}

/// Cap of the sphere of radius `1/|h|` over the circle of radius `r` at height `z0`.
fn cap_over_circle(z0: f64, r: f64, h: f64, large: bool) -> TriMesh {
    let (small, big) = spherical_caps_for_circle_at(Vec3::new(0.0, 0.0, z0), Vec3::z(), r, h).unwrap();
    if large { big } else { small }.revolved(48, 96)
}

#[test]
fn fit_sphere_on_exact_samples() {
    let c = Vec3::new(1.0, 0.0, 0.0);
    let f = fit_sphere(&sphere_points(c, 2.0, 200), None).unwrap();
    assert_eq!(f.model, FitModel::Sphere);
    assert!((f.center.unwrap() - c).norm() < 1e-10);
    assert!((f.radius.unwrap() - 2.0).abs() < 1e-10);
    assert!(f.rms < 1e-10 && f.max_residual < 1e-10);
}

#[test]
fn fit_sphere_rms_matches_injected_noise() {
    let c = Vec3::new(1.0, 0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 1e-3).unwrap();
    let mut raw = 0.0;
    let pts: Vec<Vec3> = sphere_points(c, 2.0, 4000)
        .into_iter()
        .map(|p| {
            let e = noise.sample(&mut rng);
            raw += e * e;
            c + (p - c) * ((2.0 + e) / 2.0)
        })
        .collect();
    let raw = (raw / pts.len() as f64).sqrt();
    let f = fit_sphere(&pts, None).unwrap();
    assert!((f.rms - raw).abs() < 0.02 * raw, "{} vs {raw}", f.rms);
    assert!((f.radius.unwrap() - 2.0).abs() < 1e-4);
}

#[test]
fn fit_sphere_rejects_coplanar_points() {
    let pts: Vec<Vec3> = (0..20).map(|k| Vec3::new((k as f64).cos(), (k as f64).sin(), 0.5)).collect();
    assert!(matches!(fit_sphere(&pts, None), Err(VerifyError::DegenerateConfiguration(_))));
    assert!(fit_sphere(&pts[..3], None).is_err());
}

fn vertex_levels(m: &TriMesh, lo: f64, hi: f64) -> Vec<f64> {
    let mut zs: Vec<f64> = m.vertices().iter().map(|p| p.z).filter(|z| *z > lo && *z < hi).collect();
    zs.sort_by(f64::total_cmp);
    zs.dedup();
    zs
}

#[test]
fn sections_of_a_sphere_of_revolution() {
    let m = revolve_points(&arc_profile(1.0, PI - 0.05, 0.05, 40), 64);
    let levels = vertex_levels(&m, -0.9, 0.9);
    assert!(levels.len() > 20);
    let s = horizontal_section_circles(&m, &levels).unwrap();
    assert!(s.skipped.is_empty());
    assert!(s.max_circle_rms < 1e-8, "{}", s.max_circle_rms);
    assert!(s.z_axis_distance < 1e-8 && s.collinearity < 1e-8);
    for sec in &s.sections {
        assert!((sec.fit.radius.unwrap() - (1.0 - sec.z * sec.z).sqrt()).abs() < 1e-8);
    }
}

#[test]
fn sections_follow_a_translated_axis() {
    let shift = Vec3::new(0.3, -0.4, 0.0);
    let m = CapillaryCap::new(Sphere::unit(), 0.8, 2.0, Side::Interior).unwrap().revolved(40, 64).translated(&shift);
    let (lo, hi) = m.bbox();
    let levels: Vec<f64> = (1..10).map(|k| lo.z + (hi.z - lo.z) * k as f64 / 10.0).collect();
    let s = horizontal_section_circles(&m, &levels).unwrap();
    assert!(s.collinearity < 1e-9, "{}", s.collinearity);
    assert!((s.z_axis_distance - shift.norm()).abs() < 1e-9);
    assert!((Vec3::new(s.axis_xy.0, s.axis_xy.1, 0.0) - shift).norm() < 1e-9);
}

#[test]
fn ellipsoid_sections_are_not_circles() {
    let (a, b) = (1.3, 1.0);
    let m = shapes::ellipsoid(4, a, b, 0.8);
    let s = horizontal_section_circles(&m, &[0.0]).unwrap();
    // best circle through an ellipse leaves a residual of order (a − b)/4 relative to its size;
    // require a generous fraction of that gap
    assert!(s.max_circle_rms > 0.25 * (a - b) / 4.0, "{}", s.max_circle_rms);
    assert!(matches!(horizontal_section_circles(&m, &[5.0]), Err(VerifyError::EmptySection { levels: 1 })));
}

#[test]
fn exterior_cap_spanning_a_circle() {
    let (h, r) = (0.9, 0.8);
    let m = cap_over_circle(0.0, r, h, true);
    let rep = check_corollary_circle(&m, h, Side::Exterior, &tol()).unwrap();
    assert_eq!(rep.theorem, TheoremId::C2_5);
    assert_eq!(rep.verdict, Verdict::Pass, "{}", rep.to_json());
    let fitted = rep.metrics["fitted_radius"].value;
    assert!((fitted - 1.0 / 0.9).abs() < 1e-3, "{fitted}");

    let small = cap_over_circle(0.0, r, h, false);
    let rep = check_corollary_circle(&small, h, Side::Exterior, &tol()).unwrap();
    assert_eq!(rep.verdict, Verdict::HypothesisUnmet);
    assert!(!hypothesis(&rep, "side").holds);
    let rep = check_corollary_circle(&small, h, Side::Interior, &tol()).unwrap();
    assert_eq!((rep.theorem, rep.verdict), (TheoremId::C2_6, Verdict::Pass));
}

#[test]
fn hemisphere_case_is_excluded() {
    let m = cap_over_circle(0.0, 0.8, 1.25, false);
    let rep = check_corollary_circle(&m, 1.25, Side::Exterior, &tol()).unwrap();
    assert_eq!(rep.verdict, Verdict::HypothesisUnmet);
    assert!(!hypothesis(&rep, "radius_bound").holds);
    assert!(rep.notes.iter().any(|n| n.contains("only such surface is a hemisphere")));
}

#[test]
fn rotational_drop_is_symmetric_about_planes_through_its_axis() {
    let cap = CapillaryCap::new(Sphere::unit(), 0.8, 2.0, Side::Interior).unwrap();
    let m = cap.revolved(24, 64);
    let p = Plane { normal: Vec3::x(), offset: 0.0 };
    let rep = check_symmetry_theorem(&m, &Sphere::unit(), &p, SymmetryVariant::Ball, &tol()).unwrap();
    assert_eq!((rep.theorem, rep.verdict), (TheoremId::C2_6, Verdict::Pass), "{}", rep.to_json());
    assert!(rep.metrics["plane_angle"].value < 1e-6);
}

#[test]
fn exterior_symmetry_needs_large_curvature() {
    let beta: f64 = 0.6;
    let (z0, r) = (beta.cos(), beta.sin());
    let p = Plane { normal: Vec3::x(), offset: 0.0 };
    // radius 0.8 < ρ: the small cap bulges out of the unit ball
    let m = cap_over_circle(z0, r, 1.25, false);
    let rep = check_symmetry_theorem(&m, &Sphere::unit(), &p, SymmetryVariant::Exterior, &tol()).unwrap();
    assert_eq!((rep.theorem, rep.verdict), (TheoremId::T2_3, Verdict::Pass), "{}", rep.to_json());

    // radius 1.5 > ρ: the large cap is outside the ball but |H| < 1/ρ
    let m = cap_over_circle(z0, r, 1.0 / 1.5, true);
    let rep = check_symmetry_theorem(&m, &Sphere::unit(), &p, SymmetryVariant::Exterior, &tol()).unwrap();
    assert_eq!(rep.verdict, Verdict::HypothesisUnmet, "{}", rep.to_json());
    assert!(hypothesis(&rep, "side").holds);
    assert!(!hypothesis(&rep, "curvature_bound").holds);
    assert!(!rep.metrics.contains_key("plane_angle"));
}

#[test]
fn wavy_boundary_violates_graph_separation() {
    // boundary z = 0.6 + 0.15 cos(3φ) on the sphere, coned to an interior apex
    let n = 96;
    let mut verts = vec![Vec3::new(0.0, 0.0, 0.7)];
    for k in 0..n {
        let phi = TAU * k as f64 / n as f64;
        let z: f64 = 0.6 + 0.15 * (3.0 * phi).cos();
        let r = (1.0 - z * z).sqrt();
        verts.push(Vec3::new(r * phi.cos(), r * phi.sin(), z));
    }
    let faces: Vec<[usize; 3]> = (0..n).map(|k| [0, 1 + k, 1 + (k + 1) % n]).collect();
    let m = TriMesh::new(verts, faces).unwrap();
    let p = Plane { normal: Vec3::y(), offset: 0.0 };
    let rep = check_symmetry_theorem(&m, &Sphere::unit(), &p, SymmetryVariant::Ball, &tol()).unwrap();
    assert_eq!(rep.verdict, Verdict::HypothesisUnmet);
    assert!(!hypothesis(&rep, "graph_separation").holds);
    assert!(!rep.metrics.contains_key("reflection_residual"));
}

#[test]
fn capillary_cap_on_the_sphere() {
    let gamma = 2.0 * PI / 3.0;
    let m = CapillaryCap::new(Sphere::unit(), 0.7, gamma, Side::Interior).unwrap().revolved(40, 96);
    let rep = check_capillary_cap(&m, &Sphere::unit(), gamma, &tol()).unwrap();
    assert_eq!((rep.theorem, rep.verdict), (TheoremId::T3_2, Verdict::Pass), "{}", rep.to_json());
    assert_eq!(rep.fit.unwrap().model, FitModel::Sphere);
    assert!(rep.metrics["contact_angle_error"].value < 1f64.to_radians());
    let rep = check_capillary_cap(&m, &Sphere::unit(), gamma + 0.1, &tol()).unwrap();
    assert_eq!(rep.verdict, Verdict::Fail);
}

#[test]
fn equatorial_disk_is_a_planar_capillary_surface() {
    let m = shapes::flat_disk(Vec3::zeros(), Vec3::z(), 1.0, 24);
    let rep = check_capillary_cap(&m, &Sphere::unit(), FRAC_PI_2, &tol()).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass, "{}", rep.to_json());
    assert_eq!(rep.fit.unwrap().model, FitModel::Plane);
}

#[test]
fn annular_piece_is_outside_the_disk_type_statement() {
    // right circular cylinder inside the unit ball: constant H and constant contact angle
    let a: f64 = 0.6;
    let h = 2.0 * (1.0 - a * a).sqrt();
    let m = shapes::cylinder(a, h, 96, 48).translated(&Vec3::new(0.0, 0.0, -h / 2.0));
    let b = m.boundary_mask();
    assert!(m.vertices().iter().zip(&b).filter(|x| *x.1).all(|(p, _)| (p.norm() - 1.0).abs() < 1e-12));
    let gamma = FRAC_PI_2 + a.acos();
    let rep = check_capillary_cap(&m, &Sphere::unit(), gamma, &tol()).unwrap();
    assert_eq!(rep.verdict, Verdict::HypothesisUnmet, "{}", rep.to_json());
    assert!(!hypothesis(&rep, "disk_type").holds);
    assert!(rep.metrics["contact_angle_spread"].passed.unwrap());
    assert!(rep.metrics["mean_curvature_spread"].passed.unwrap());
    assert!(!rep.metrics["cap_fit_rms"].passed.unwrap());
}

fn solved_drop() -> &'static TriMesh {
    static MESH: OnceLock<TriMesh> = OnceLock::new();
    MESH.get_or_init(|| {
        let sphere = Sphere::unit();
        let params = CapillaryParams {
            gamma: FRAC_PI_2,
            kappa: 0.3,
            mu: 1.2,
            side: Side::Interior,
            target: Target::MeanCurvature(1.2),
        };
        let init = CapillaryCap::new(sphere, 0.6, FRAC_PI_2, Side::Interior).unwrap().mesh(40);
        let init = shapes::perturb_normal(&init, 0.003, 5, true);
        let cfg = SolveConfig::new(SolveMode::PrescribedHeightCurvature, params, sphere);
        solve_prescribed_height_curvature(&sphere, &params, &init, &cfg).unwrap().0
    })
}

#[test]
fn height_dependent_curvature_gives_rotational_symmetry() {
    let rep = check_height_curvature_theorem(solved_drop(), &Sphere::unit(), 0.3, 1.2, &tol()).unwrap();
    assert_eq!((rep.theorem, rep.verdict), (TheoremId::T3_3, Verdict::Pass), "{}", rep.to_json());
    assert!(rep.axis.unwrap().angle_to(&Line::z_axis()) < 0.5f64.to_radians());
}

#[test]
fn tilted_surface_reports_the_tilted_axis() {
    let rot = Rotation3::from_axis_angle(&Vec3::x_axis(), 10f64.to_radians());
    let m = solved_drop().rotated(&rot);
    let rep = check_height_curvature_theorem(&m, &Sphere::unit(), 0.3, 1.2, &tol()).unwrap();
    assert_ne!(rep.verdict, Verdict::Pass);
    assert!(!hypothesis(&rep, "curvature_law").holds);
    assert!(!rep.metrics["axis_angle"].passed.unwrap());
    let axis = rep.axis.expect("detected axis recorded");
    let expected = Line { point: Vec3::zeros(), direction: rot * Vec3::z() };
    assert!(axis.angle_to(&expected) < 0.5f64.to_radians(), "{axis:?}");
}

#[test]
fn zero_kappa_is_a_capillary_cap() {
    let cap = CapillaryCap::new(Sphere::unit(), 0.7, 2.0, Side::Interior).unwrap();
    let m = cap.revolved(40, 96);
    let rep = check_height_curvature_theorem(&m, &Sphere::unit(), 0.0, cap.mean_curvature(), &tol()).unwrap();
    assert_eq!((rep.theorem, rep.verdict), (TheoremId::T3_2, Verdict::Pass), "{}", rep.to_json());
    assert!(rep.notes.iter().any(|n| n.contains("κ = 0")));
}

#[test]
fn domain_exterior_for_an_outward_cap() {
    let beta: f64 = 0.6;
    let m = cap_over_circle(beta.cos(), beta.sin(), 1.25, false);
    let rep = check_domain_exterior(&m, &Sphere::unit(), &tol()).unwrap();
    assert_eq!((rep.theorem, rep.verdict), (TheoremId::C2_7, Verdict::Pass), "{}", rep.to_json());
}

#[test]
fn report_json_has_stable_fields() {
    let m = shapes::flat_disk(Vec3::zeros(), Vec3::z(), 1.0, 12);
    let rep = check_capillary_cap(&m, &Sphere::unit(), FRAC_PI_2, &tol()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(v["theorem"], "T3.2");
    assert_eq!(v["verdict"], "pass");
    assert!(v["hypotheses"].is_array() && v["metrics"].is_object() && v["tolerances"].is_object());
    let back: TheoremReport = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(back.verdict, rep.verdict);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fit_sphere_exact_at_any_scale(
        log_r in -3.0f64..3.0,
        cx in -1.0f64..1.0, cy in -1.0f64..1.0, cz in -1.0f64..1.0,
    ) {
        let r = 10f64.powf(log_r);
        let c = Vec3::new(cx, cy, cz) * 10f64.powf(log_r.clamp(-3.0, 3.0));
        let f = fit_sphere(&sphere_points(c, r, 64), None).unwrap();
        prop_assert!(f.rms < 1e-10 * r.max(1.0), "{} at r = {r}", f.rms);
        prop_assert!((f.radius.unwrap() - r).abs() < 1e-10 * r.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn checks_are_invariant_under_rigid_motions(
        ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0,
        tx in -2.0f64..2.0, ty in -2.0f64..2.0, tz in -2.0f64..2.0,
    ) {
        let rot = Rotation3::new(Vec3::new(ax, ay, az));
        let shift = Vec3::new(tx, ty, tz);
        let motion = |p: &Vec3| rot * p + shift;
        let gamma = 2.0;
        let m = CapillaryCap::new(Sphere::unit(), 0.7, gamma, Side::Interior).unwrap().revolved(24, 48);
        let a = check_capillary_cap(&m, &Sphere::unit(), gamma, &tol()).unwrap();
        let moved = Sphere { center: shift, radius: 1.0 };
        let b = check_capillary_cap(&m.map_vertices(motion), &moved, gamma, &tol()).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        let (fa, fb) = (a.fit.unwrap(), b.fit.unwrap());
        prop_assert!((motion(&fa.center.unwrap()) - fb.center.unwrap()).norm() < 1e-9);
        prop_assert!((fa.radius.unwrap() - fb.radius.unwrap()).abs() < 1e-9);

        let c0 = check_corollary_circle(&cap_over_circle(0.0, 0.8, 0.9, true), 0.9, Side::Exterior, &tol()).unwrap();
        let c1 = check_corollary_circle(&cap_over_circle(0.0, 0.8, 0.9, true).map_vertices(motion), 0.9, Side::Exterior, &tol()).unwrap();
        prop_assert_eq!(c0.verdict, c1.verdict);
        prop_assert!((c0.metrics["fitted_radius"].value - c1.metrics["fitted_radius"].value).abs() < 1e-9);
    }

    #[test]
    fn loosening_tolerances_keeps_a_pass(k in 1.0f64..100.0) {
        let loose = |t: VerifyTolerances| VerifyTolerances {
            fit_rms: t.fit_rms * k,
            radius: t.radius * k,
            angle: t.angle * k,
            plane_angle: t.plane_angle * k,
            tol_sym: Some(1e-4 * 2.0 * k),
            h_spread: t.h_spread * k,
            law_residual: t.law_residual * k,
            collinearity: t.collinearity * k,
            boundary: t.boundary * k,
            circle_rms: t.circle_rms * k,
            ..t
        };
        let strict = VerifyTolerances { tol_sym: Some(2e-4), ..tol() };
        let gamma = 2.0;
        let m = CapillaryCap::new(Sphere::unit(), 0.7, gamma, Side::Interior).unwrap().revolved(24, 48);
        let runs: [&dyn Fn(&VerifyTolerances) -> TheoremReport; 3] = [
            &|t| check_capillary_cap(&m, &Sphere::unit(), gamma, t).unwrap(),
            &|t| check_corollary_circle(&cap_over_circle(0.0, 0.8, 0.9, true), 0.9, Side::Exterior, t).unwrap(),
            &|t| check_symmetry_theorem(&m, &Sphere::unit(), &Plane { normal: Vec3::x(), offset: 0.0 }, SymmetryVariant::Ball, t).unwrap(),
        ];
        for run in runs {
            let a = run(&strict);
            prop_assert_eq!(a.verdict, Verdict::Pass, "{}", a.to_json());
            prop_assert_eq!(run(&loose(strict)).verdict, Verdict::Pass);
        }
    }
}
