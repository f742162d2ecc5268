//! Constant-mean-curvature and capillary surfaces with boundary on a round sphere.
//!
//! The crate is organised in five layers:
//!
//! - [`geom`]: triangle meshes, discrete curvature, spherical closure of open surfaces,
//!   spatial queries and mesh file formats.
//! - [`analytic`]: spherical caps spanning a circle, Delaunay rotational profiles,
//!   surfaces of revolution and contact-angle measurement.
//! - [`solver`]: volume-constrained descent for prescribed-boundary, capillary and
//!   height-dependent mean curvature problems.
//! - [`alexandrov`]: the moving-plane machinery (half parts, reflected parts, graph
//!   tests, sweeps, symmetry planes and rotation axes).
//! - [`verify`]: shape fitting and pass/fail reports for the symmetry and rigidity
//!   statements the toolkit is built to test.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alexandrov;
pub mod analytic;
pub mod geom;
pub mod solver;
pub mod verify;

pub use geom::{BoundaryLoop, ClosedRegion, Containment, Line, MeshError, PatchSide, Plane, Sphere, TriMesh, Vec3};
