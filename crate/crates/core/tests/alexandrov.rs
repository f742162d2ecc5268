use std::f64::consts::{FRAC_PI_2, PI};

use capdrop_core::alexandrov::*;
use capdrop_core::analytic::{CapillaryCap, Side};
use capdrop_core::geom::{close_with_spherical_patch, shapes, Bvh, PatchSide};
use capdrop_core::{ClosedRegion, Line, Plane, Sphere, TriMesh, Vec3};
use proptest::prelude::*;

fn drop_cap(gamma: f64, rings: usize) -> TriMesh {
    CapillaryCap::new(Sphere::unit(), 0.8, gamma, Side::Interior).unwrap().mesh(rings)
}

fn gamma_points(m: &TriMesh) -> Vec<Vec3> {
    m.boundary_loops().iter().flat_map(|l| l.positions(m)).collect()
}

fn y_pencil(t_min: f64, t_max: f64) -> PlaneFamily {
    PlaneFamily::rotational(Line { point: Vec3::zeros(), direction: Vec3::y() }, Some(Vec3::x()), t_min, t_max).unwrap()
}

/// One-sided outward bump on the `+x` side of the cap, near its boundary.
fn bumped(m: &TriMesh, amplitude: f64) -> TriMesh {
    let normals = m.vertex_normals();
    let b = m.boundary_mask();
    let (lo, hi) = m.bbox();
    let centre = Vec3::new(0.6 * hi.x, 0.0, 0.0);
    let width = 0.1 * (hi - lo).norm();
    let mut out = m.clone();
    for (i, p) in out.vertices_mut().iter_mut().enumerate() {
        if b[i] {
            continue;
        }
        let d = Vec3::new(p.x - centre.x, p.y - centre.y, 0.0).norm();
        *p += normals[i] * (amplitude * (-(d / width).powi(2)).exp());
    }
    out
}

#[test]
fn sphere_sweep_certifies_the_equator() {
    let m = shapes::icosphere(3, 1.0);
    let w = ClosedRegion::from_closed_mesh(&m).unwrap();
    let fam = PlaneFamily::translational(Vec3::z(), -1.5, 1.5).unwrap().with_samples(64).unwrap();
    let r = sweep(&w, &m, &[], &fam, &SweepOptions::default()).unwrap();
    assert!(r.t_first_contact <= r.t_first_violation.unwrap());
    let p = r.symmetry_plane().unwrap();
    assert!(p.angle_to(&Plane { normal: Vec3::z(), offset: 0.0 }) < 1e-12);
    assert!(p.offset.abs() < 1e-9);
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert!(json["samples"].as_array().unwrap().len() > 10);
    assert!(json["residual"].as_f64().unwrap() >= 0.0);
}

#[test]
fn closed_symmetric_body_stops_at_its_plane() {
    let m = shapes::ellipsoid(3, 1.3, 1.0, 0.7);
    let w = ClosedRegion::from_closed_mesh(&m).unwrap();
    let fam = PlaneFamily::translational(Vec3::z(), -1.5, 1.5).unwrap().with_samples(64).unwrap();
    let opts = SweepOptions::default();
    let r = sweep(&w, &m, &[], &fam, &opts).unwrap();
    assert!((r.t_first_contact + 0.7).abs() < 1e-12);
    let t2 = r.t_first_violation.unwrap();
    assert!(t2.abs() <= 2.0 * opts.bisection_tol * 3.0, "{t2}");
    assert!(r.symmetric);
}

#[test]
fn cap_drop_pencil_finds_a_plane_through_the_axis() {
    let cap = drop_cap(2.0, 24);
    let w = close_with_spherical_patch(&cap, &Sphere::unit(), PatchSide::Inner).unwrap();
    let fam = y_pencil(FRAC_PI_2, PI + 0.6).with_samples(96).unwrap();
    let r = sweep(&w, &cap, &gamma_points(&cap), &fam, &SweepOptions::default()).unwrap();
    assert!(r.t_first_contact > FRAC_PI_2 && r.t_first_contact < PI);
    let p = r.symmetry_plane().unwrap_or_else(|| panic!("{:?} {}", r.contact, r.residual));
    // contains the drop axis: normal orthogonal to e_z
    assert!(p.normal.z.abs() < 1e-6, "{:?}", p);
    assert!(p.offset.abs() < 1e-12);
}

#[test]
fn bumped_cap_is_not_symmetric() {
    let cap = bumped(&drop_cap(2.0, 24), 0.05 * 0.8);
    let w = close_with_spherical_patch(&cap, &Sphere::unit(), PatchSide::Inner).unwrap();
    let fam = y_pencil(FRAC_PI_2, PI + 0.6).with_samples(96).unwrap();
    let r = sweep(&w, &cap, &gamma_points(&cap), &fam, &SweepOptions::default()).unwrap();
    let c = r.contact.clone().expect("violation");
    assert_eq!(c.kind, ViolationKind::ExitsDomain);
    assert!(r.t_first_violation.unwrap() < PI);
    assert_eq!(c.class, ContactClass::InteriorInterior, "{c:?}");
    assert!(r.residual > r.tol_sym);
    assert!(r.symmetry_plane().is_none());
}

#[test]
fn fixed_boundary_corner_contact_never_certifies() {
    let cap = drop_cap(2.0, 24);
    let w = close_with_spherical_patch(&cap, &Sphere::unit(), PatchSide::Inner).unwrap();
    let fam = PlaneFamily::translational(-Vec3::x(), -1.0, 1.0).unwrap().with_samples(96).unwrap();
    let free = sweep(&w, &cap, &gamma_points(&cap), &fam, &SweepOptions::default()).unwrap();
    let opts = SweepOptions { regime: BoundaryRegime::Fixed, ..Default::default() };
    let fixed = sweep(&w, &cap, &gamma_points(&cap), &fam, &opts).unwrap();
    assert_eq!(free.t_first_violation, fixed.t_first_violation);
    if fixed.contact.as_ref().is_some_and(|c| c.class == ContactClass::BoundaryOnGamma) {
        assert!(!fixed.symmetric);
    } else {
        assert_eq!(free.symmetric, fixed.symmetric);
    }
}

#[test]
fn sweep_errors() {
    let m = shapes::icosphere(2, 1.0);
    let w = ClosedRegion::from_closed_mesh(&m).unwrap();
    let fam = PlaneFamily::translational(Vec3::z(), 2.0, 3.0).unwrap();
    assert!(matches!(
        sweep(&w, &m, &[], &fam, &SweepOptions::default()),
        Err(AlexandrovError::NoContactInRange { .. })
    ));
    let fam = PlaneFamily::translational(Vec3::z(), -1.5, 1.5).unwrap();
    let r = sweep(&w, &m, &[], &fam.with_samples(16).unwrap(), &SweepOptions::default()).unwrap();
    assert!(r.t_first_contact >= fam.t_min);
}

#[test]
fn exact_cap_has_a_plane_in_every_pencil_through_its_axis() {
    let cap = drop_cap(2.0, 24);
    let diag = cap.bbox_diagonal();
    // horizontal line through the axis
    let pencil = PlaneFamily::rotational(Line { point: Vec3::zeros(), direction: Vec3::x() }, None, 0.0, PI).unwrap();
    let (p, r) = detect_symmetry_plane(&cap, &pencil, &SymmetryOptions::default()).unwrap();
    assert!(r < 1e-8, "{r}");
    assert!(p.normal.z.abs() < 1e-9);
    assert!(r <= 1e-4 * diag);
}

#[test]
fn ellipsoid_symmetry() {
    let e = shapes::ellipsoid(3, 1.5, 1.0, 0.6);
    let pencil = PlaneFamily::rotational(Line { point: Vec3::zeros(), direction: Vec3::x() }, None, 0.0, PI).unwrap();
    let planes = symmetry_planes(&e, &pencil, &SymmetryOptions::default());
    assert!(!planes.is_empty());
    for (p, r) in &planes {
        assert!(r < &1e-10);
        assert!(p.normal.y.abs() < 1e-9 || p.normal.z.abs() < 1e-9, "{p:?}");
    }
    let noisy = shapes::perturb_uniform(&e, 0.01 * 1.5, 11);
    assert!(detect_symmetry_plane(&noisy, &pencil, &SymmetryOptions::default()).is_none());
}

#[test]
fn axis_from_detected_planes() {
    let cap = drop_cap(2.0, 24);
    let opts = SymmetryOptions::default();
    let mut planes = Vec::new();
    for dir in [Vec3::x(), Vec3::y()] {
        let pencil = PlaneFamily::rotational(Line { point: Vec3::zeros(), direction: dir }, None, 0.0, PI).unwrap();
        planes.push(detect_symmetry_plane(&cap, &pencil, &opts).unwrap().0);
    }
    let axis = common_axis(&planes).unwrap();
    assert!(axis.angle_to(&Line::z_axis()) < 1e-8);
}

#[test]
fn hypotheses_of_constructed_drops() {
    let s = Sphere::unit();
    let cap = drop_cap(2.0, 16);
    let plane = Plane { normal: Vec3::x(), offset: 0.0 };
    let r = check_hypotheses(&cap, &s, &HypothesisOptions { plane: Some(plane), ..Default::default() }).unwrap();
    assert!((r.pole.unwrap().0 - Vec3::z()).norm() < 1e-9);
    assert_eq!(r.side, SideClass::Interior);
    assert!(r.separation.unwrap().passes);
    assert!(r.radial.unwrap().passes);

    let ext = CapillaryCap::new(s, 0.8, 2.0, Side::Exterior).unwrap().mesh(16);
    let r = check_hypotheses(&ext, &s, &HypothesisOptions::default()).unwrap();
    assert_eq!(r.side, SideClass::Exterior);
    assert!(r.min_signed_distance > 0.0);

    let great = shapes::flat_disk(Vec3::zeros(), Vec3::z(), 1.0, 8);
    assert!(check_hypotheses(&great, &s, &HypothesisOptions::default()).unwrap().pole.is_none());
}

#[test]
fn wavy_boundary_fails_graph_separation() {
    // boundary z = 0.6 + 0.15 cos(3φ) on the sphere, filled by a flat-ish fan
    let n = 96;
    let mut verts = vec![Vec3::new(0.0, 0.0, 0.7)];
    for k in 0..n {
        let phi = std::f64::consts::TAU * k as f64 / n as f64;
        let z: f64 = 0.6 + 0.15 * (3.0 * phi).cos();
        let r = (1.0 - z * z).sqrt();
        verts.push(Vec3::new(r * phi.cos(), r * phi.sin(), z));
    }
    let faces: Vec<[usize; 3]> = (0..n).map(|k| [0, 1 + k, 1 + (k + 1) % n]).collect();
    let m = TriMesh::new(verts, faces).unwrap();
    let opts = HypothesisOptions { plane: Some(Plane { normal: Vec3::y(), offset: 0.0 }), ..Default::default() };
    let r = check_hypotheses(&m, &Sphere::unit(), &opts).unwrap();
    assert!(r.pole.is_some());
    let sep = r.separation.unwrap();
    assert!(!sep.passes && sep.witness.is_some(), "{sep:?}");
}

fn hausdorff(a: &TriMesh, b: &TriMesh) -> f64 {
    let one = |x: &TriMesh, y: &TriMesh| {
        let bvh = Bvh::new(y);
        x.vertices().iter().map(|p| bvh.distance(p)).fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

#[test]
fn reflected_part_of_a_symmetric_mesh() {
    let m = shapes::icosphere(3, 1.0);
    let eq = Plane { normal: Vec3::z(), offset: 0.0 };
    let (minus, plus) = half_parts(&m, &eq);
    let star = reflected_part(&m, &eq);
    assert!(hausdorff(&star, &plus) < 1e-10);
    assert!((star.surface_area() - minus.surface_area()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cut_parts_preserve_area(nx in -1.0f64..1.0, ny in -1.0f64..1.0, nz in -1.0f64..1.0, off in -1.2f64..1.2) {
        prop_assume!(Vec3::new(nx, ny, nz).norm() > 0.1);
        let m = shapes::ellipsoid(2, 1.2, 0.9, 0.8);
        let p = Plane::new(Vec3::new(nx, ny, nz), off).unwrap();
        let (a, b) = half_parts(&m, &p);
        let total = a.surface_area() + b.surface_area();
        prop_assert!((total / m.surface_area() - 1.0).abs() < 1e-10);
        prop_assert!(a.vertices().iter().all(|v| p.signed_distance(v) <= 1e-12));
        prop_assert!(b.vertices().iter().all(|v| p.signed_distance(v) >= -1e-12));
    }

    #[test]
    fn rotational_reflections_raise_points(t in FRAC_PI_2..PI, seed in 0u64..1000) {
        let cap = shapes::perturb_normal(&drop_cap(2.0, 10), 0.01, seed, true);
        let plane = y_pencil(FRAC_PI_2, PI).plane(t);
        let (minus, _) = half_parts(&cap, &plane);
        let star = minus.reflect(&plane);
        for (q, p) in minus.vertices().iter().zip(star.vertices()) {
            prop_assert!(p.z >= q.z - 1e-12);
        }
    }

    #[test]
    fn mirrored_meshes_are_detected(angle in 0.1f64..3.0, seed in 0u64..1000) {
        // random half surface on the negative side of a plane containing the y-axis
        let n = Vec3::new(angle.cos(), 0.0, angle.sin());
        let plane = Plane { normal: n, offset: 0.0 };
        let ball = shapes::perturb_normal(&shapes::icosphere(2, 1.0), 0.05, seed, false);
        let (half, _) = half_parts(&ball, &plane);
        let whole = TriMesh::merged(&[&half, &half.reflect(&plane).flipped()]);
        let pencil = y_pencil(0.0, PI).with_samples(256).unwrap();
        let (found, r) = detect_symmetry_plane(&whole, &pencil, &SymmetryOptions::default()).unwrap();
        prop_assert!(found.angle_to(&plane) < 1e-6, "{found:?} {plane:?}");
        prop_assert!(r <= 1e-10 * whole.bbox_diagonal());
    }
}
