//! Mesh representation and discrete differential geometry.

mod bvh;
mod closure;
mod curvature;
pub mod io;
mod mesh;
mod primitives;
pub mod shapes;

pub use bvh::{Bvh, RayHit};
pub use closure::{
    close_with_spherical_patch, close_with_spherical_patch_tol, enclosed_volume, hemisphere_pole, signed_containment,
    signed_containment_tol, ClosedRegion, Containment, ContainmentOracle, PatchSide,
};
pub use curvature::{
    area_gradient, cotan_weights, variational_mean_curvature, vertex_mean_curvature, volume_gradient, MeanCurvature,
    COT_CLAMP,
};
pub use mesh::{build_mesh, BoundaryLoop, MeshError, TriMesh};
pub(crate) use primitives::orthonormal_complement;
pub use primitives::{Line, Plane, Sphere};

/// Points and vectors in three dimensions.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Solid angle subtended at the origin by the triangle `(a, b, c)` given as unit-free
/// vectors from the observation point (Van Oosterom–Strackee).
pub fn triangle_solid_angle(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(&b.cross(c));
    let den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    2.0 * num.atan2(den)
}
