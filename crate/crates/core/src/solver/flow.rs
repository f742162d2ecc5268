//! Volume-constrained descent in reduced coordinates.
//!
//! Interior vertices move freely in space. Free boundary vertices move along the conormal
//! (tangent to the sphere, normal to the boundary curve) and are projected back onto the
//! sphere; their spacing along the curve is left to the remesher. Descent directions are taken in the metric
//! `L + M/ℓ²` (cotangent stiffness plus lumped mass, per coordinate), which makes the step
//! size essentially independent of the mesh resolution. Once curvature pairs are available
//! the metric direction is refined by L-BFGS, which takes care of the slow tangential modes
//! that plain preconditioned descent leaves behind.

use super::functional::{Functional, Gradients, Support, Values};
use super::sparse::{pcg, CsrMatrix};
use super::SolverError;
use crate::geom::{cotan_weights, TriMesh, Vec3};

#[derive(Debug, Clone, Copy)]
pub(crate) struct FlowSettings {
    pub initial_step: f64,
    pub backtracking: f64,
    pub max_step: f64,
    /// Consecutive steps with side re-projection tolerated before failing.
    pub side_patience: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct StepOutcome {
    pub stationary: bool,
    pub step: f64,
    /// Euclidean norm of the constrained reduced gradient.
    pub residual_norm: f64,
    pub max_displacement: f64,
    pub side_clamped: usize,
}

pub(crate) struct Flow {
    pub func: Functional,
    pub mesh: TriMesh,
    pub target_volume: f64,
    pub values: Values,
    pub energy: f64,
    pub grads: Gradients,
    /// Multiplier `λ` of `E − λ V`; equals `2H` at a constant mean curvature equilibrium.
    pub lambda: f64,
    pub step: f64,
    pub settings: FlowSettings,
    pub iteration: usize,
    /// First degree of freedom of each free vertex.
    var_of: Vec<Option<usize>>,
    dof_vertex: Vec<usize>,
    loop_nbrs: Vec<Option<(usize, usize)>>,
    warm_g: Vec<f64>,
    warm_v: Vec<f64>,
    warm_q: Vec<f64>,
    inv_l2: f64,
    side_streak: usize,
    /// Curvature pairs `(s, y, 1/sᵀy)` as per-vertex fields.
    history: std::collections::VecDeque<(Vec<Vec3>, Vec<Vec3>, f64)>,
    /// Positions and constrained residual field before the last accepted step.
    last: Option<(Vec<Vec3>, Vec<Vec3>)>,
}

const MEMORY: usize = 8;

/// Relative residual of the metric solves. The multiplier is computed from the inexact
/// solutions, so the step stays tangent to the volume constraint regardless.
const CG_TOL: f64 = 1e-6;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Flow {
    pub fn new(func: Functional, mesh: TriMesh, target_volume: f64, settings: FlowSettings) -> Self {
        let n = mesh.vertex_count();
        let boundary = mesh.boundary_mask();
        let pinned = matches!(func.support, Support::Pinned { .. });
        let mut loop_nbrs = vec![None; n];
        if !pinned {
            for lp in &func.loops {
                let m = lp.len();
                for j in 0..m {
                    loop_nbrs[lp[j]] = Some((lp[(j + m - 1) % m], lp[(j + 1) % m]));
                }
            }
        }
        let mut var_of = vec![None; n];
        let mut dof_vertex = Vec::new();
        for i in 0..n {
            if !(pinned && boundary[i]) {
                var_of[i] = Some(dof_vertex.len());
                let k = if loop_nbrs[i].is_some() { 1 } else { 3 };
                dof_vertex.extend(std::iter::repeat_n(i, k));
            }
        }
        let values = func.values(&mesh);
        let energy = func.energy(&values);
        let grads = func.gradients(&mesh);
        let inv_l2 = 2.0 * std::f64::consts::PI / values.area.max(1e-300);
        let nv = dof_vertex.len();
        Self {
            func,
            mesh,
            target_volume,
            values,
            energy,
            grads,
            lambda: 0.0,
            step: settings.initial_step,
            settings,
            iteration: 0,
            var_of,
            dof_vertex,
            loop_nbrs,
            warm_g: vec![0.0; nv],
            warm_v: vec![0.0; nv],
            warm_q: vec![0.0; nv],
            inv_l2,
            side_streak: 0,
            history: Default::default(),
            last: None,
        }
    }

    fn sphere(&self) -> Option<(crate::geom::Sphere, bool)> {
        match self.func.support {
            Support::Sphere { sphere, side } => Some((sphere, side == crate::analytic::Side::Interior)),
            Support::Pinned { .. } => None,
        }
    }

    /// Recomputes cached values after the mesh was changed from outside.
    pub fn refresh(&mut self) {
        self.forget();
        self.values = self.func.values(&self.mesh);
        self.energy = self.func.energy(&self.values);
        self.grads = self.func.gradients(&self.mesh);
    }

    /// Drops the quasi-Newton memory.
    pub fn forget(&mut self) {
        self.history.clear();
        self.last = None;
    }

    pub fn boundary_neighbors(&self, v: usize) -> Option<(usize, usize)> {
        self.loop_nbrs[v]
    }

    /// Orthonormal displacement basis per degree of freedom: the coordinate axes for
    /// interior vertices, the conormal for free boundary vertices.
    fn basis(&self) -> Vec<Vec3> {
        let verts = self.mesh.vertices();
        let sphere = self.sphere();
        let mut out = Vec::with_capacity(self.dof_vertex.len());
        let mut k = 0;
        while k < self.dof_vertex.len() {
            let i = self.dof_vertex[k];
            if let (Some((prev, next)), Some((s, _))) = (self.loop_nbrs[i], sphere) {
                let ns = (verts[i] - s.center).normalize();
                let t = verts[next] - verts[prev];
                let t = (t - ns * ns.dot(&t))
                    .try_normalize(1e-300)
                    .unwrap_or_else(|| crate::geom::orthonormal_complement(&ns).0);
                out.push(ns.cross(&t));
                k += 1;
            } else {
                out.extend([Vec3::x(), Vec3::y(), Vec3::z()]);
                k += 3;
            }
        }
        out
    }

    fn dof_count(&self, i: usize) -> usize {
        if self.loop_nbrs[i].is_some() {
            1
        } else {
            3
        }
    }

    fn reduce(&self, field: &[Vec3], basis: &[Vec3]) -> Vec<f64> {
        self.dof_vertex.iter().zip(basis).map(|(&i, b)| field[i].dot(b)).collect()
    }

    fn expand(&self, u: &[f64], basis: &[Vec3]) -> Vec<Vec3> {
        let mut out = vec![Vec3::zeros(); self.mesh.vertex_count()];
        for ((&i, b), x) in self.dof_vertex.iter().zip(basis).zip(u) {
            out[i] += b * *x;
        }
        out
    }

    fn metric(&self, basis: &[Vec3]) -> CsrMatrix {
        let ndof = self.dof_vertex.len();
        let mut trip = Vec::with_capacity(self.mesh.face_count() * 30 + ndof);
        let mut mass = vec![0.0; ndof];
        for f in 0..self.mesh.face_count() {
            let idx = self.mesh.faces()[f];
            let cot = cotan_weights(&self.mesh, f);
            let third = self.mesh.face_area(f) / 3.0;
            for k in 0..3 {
                let (j, l) = (idx[(k + 1) % 3], idx[(k + 2) % 3]);
                let w = 0.5 * cot[k].max(0.0);
                for (v, other) in [(j, l), (l, j)] {
                    let Some(sv) = self.var_of[v] else { continue };
                    for a in 0..self.dof_count(v) {
                        trip.push((sv + a, sv + a, w));
                    }
                    let Some(so) = self.var_of[other] else { continue };
                    for a in 0..self.dof_count(v) {
                        for b in 0..self.dof_count(other) {
                            let c = basis[sv + a].dot(&basis[so + b]);
                            if c.abs() > 1e-14 {
                                trip.push((sv + a, so + b, -w * c));
                            }
                        }
                    }
                }
                if let Some(sv) = self.var_of[idx[k]] {
                    for a in 0..self.dof_count(idx[k]) {
                        mass[sv + a] += third;
                    }
                }
            }
        }
        for (a, m) in mass.iter().enumerate() {
            trip.push((a, a, m * self.inv_l2 + 1e-300));
        }
        CsrMatrix::from_triplets(ndof, trip)
    }

    /// Adds `scale · Σ u[k] basis[k]` and puts free boundary vertices back on the sphere.
    fn displaced(&self, base: &TriMesh, basis: &[Vec3], u: &[f64], scale: f64) -> TriMesh {
        let mut m = base.clone();
        let sphere = self.sphere();
        let verts = m.vertices_mut();
        for (k, &i) in self.dof_vertex.iter().enumerate() {
            verts[i] += basis[k] * (u[k] * scale);
        }
        if let Some((s, _)) = sphere {
            for (i, p) in verts.iter_mut().enumerate() {
                if self.loop_nbrs[i].is_some() {
                    *p = s.project(p);
                }
            }
        }
        m
    }

    /// Pulls vertices that crossed the sphere back to its own side. Returns how many moved.
    fn clamp_side(&self, mesh: &mut TriMesh) -> usize {
        let Some((s, interior)) = self.sphere() else {
            return 0;
        };
        let eps = 1e-7 * s.radius;
        let mut count = 0;
        for (i, p) in mesh.vertices_mut().iter_mut().enumerate() {
            if self.loop_nbrs[i].is_some() {
                continue;
            }
            let d = s.signed_distance(p);
            let bad = if interior { d > 0.0 } else { d < 0.0 };
            if bad {
                let r = if interior { s.radius - eps } else { s.radius + eps };
                *p = s.center + (*p - s.center).normalize() * r;
                count += 1;
            }
        }
        count
    }

    /// Brings the volume of `mesh` to the target by moving along `w` (secant iteration).
    fn project_volume(&self, mesh: &mut TriMesh, dirs: &[Vec3], w: &[f64], slope0: f64) -> Option<Values> {
        let tol = 1e-12 * self.target_volume.abs().max(1e-300);
        let base = mesh.clone();
        let mut vals = self.func.values(mesh);
        let mut r = vals.volume - self.target_volume;
        if r.abs() <= tol {
            return Some(vals);
        }
        if slope0.abs() < 1e-300 {
            return None;
        }
        let (mut a0, mut r0) = (0.0, r);
        let mut a1 = -r / slope0;
        for _ in 0..60 {
            *mesh = self.displaced(&base, dirs, w, a1);
            vals = self.func.values(mesh);
            r = vals.volume - self.target_volume;
            if !r.is_finite() {
                return None;
            }
            if r.abs() <= tol {
                return Some(vals);
            }
            let denom = r - r0;
            let next = if denom.abs() > 1e-300 { a1 - r * (a1 - a0) / denom } else { a1 - r / slope0 };
            a0 = a1;
            r0 = r;
            a1 = next;
        }
        None
    }

    /// Projects the current mesh onto the target volume without a descent step.
    pub fn enforce_volume(&mut self) -> Result<(), SolverError> {
        let dirs = self.basis();
        let a = self.metric(&dirs);
        let v = self.reduce(&self.grads.volume, &dirs);
        let mut w = vec![0.0; v.len()];
        pcg(&a, &v, &mut w, CG_TOL, 4000);
        let slope0 = dot(&v, &w);
        self.forget();
        let mut m = self.mesh.clone();
        self.clamp_side(&mut m);
        let vals = self
            .project_volume(&mut m, &dirs, &w, slope0)
            .ok_or_else(|| SolverError::PreconditionFailed("cannot reach the target volume".into()))?;
        self.mesh = m;
        self.values = vals;
        self.energy = self.func.energy(&vals);
        self.grads = self.func.gradients(&self.mesh);
        Ok(())
    }

    pub fn step(&mut self) -> Result<StepOutcome, SolverError> {
        let dirs = self.basis();
        let g = self.reduce(&self.grads.energy, &dirs);
        let v = self.reduce(&self.grads.volume, &dirs);
        let a = self.metric(&dirs);
        let mut x1 = std::mem::take(&mut self.warm_g);
        let mut x2 = std::mem::take(&mut self.warm_v);
        if x1.len() != g.len() {
            x1 = vec![0.0; g.len()];
            x2 = vec![0.0; g.len()];
        }
        // Solving against g − λ₀v keeps the CG error relative to the residual, not to ∇E.
        let lambda0 = self.lambda;
        let r0: Vec<f64> = g.iter().zip(&v).map(|(g, v)| g - lambda0 * v).collect();
        pcg(&a, &r0, &mut x1, CG_TOL, 4000);
        pcg(&a, &v, &mut x2, CG_TOL, 4000);
        let vx2 = dot(&v, &x2);
        let shift = if vx2 > 0.0 { dot(&v, &x1) / vx2 } else { 0.0 };
        let lambda = lambda0 + shift;
        self.lambda = lambda;
        let r: Vec<f64> = g.iter().zip(&v).map(|(g, v)| g - lambda * v).collect();
        let residual_norm = dot(&r, &r).sqrt();
        let r_field = self.expand(&r, &dirs);
        if let Some((pos, res)) = self.last.take() {
            let s: Vec<Vec3> = self.mesh.vertices().iter().zip(&pos).map(|(a, b)| a - b).collect();
            let y: Vec<Vec3> = r_field.iter().zip(&res).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a.dot(b)).sum();
            let ss: f64 = s.iter().map(|a| a.norm_squared()).sum();
            let yy: f64 = y.iter().map(|a| a.norm_squared()).sum();
            if sy > 1e-10 * (ss * yy).sqrt() {
                self.history.push_back((s, y, 1.0 / sy));
                if self.history.len() > MEMORY {
                    self.history.pop_front();
                }
            }
        }
        let gradient_dir: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| -(a - shift * b)).collect();
        let mut d = Vec::new();
        if !self.history.is_empty() {
            d = self.quasi_newton(&r_field, &dirs, &a, &v, &x2, vx2);
            if !(dot(&r, &d) < 0.0) {
                self.history.clear();
                d.clear();
            }
        }
        let quasi = !d.is_empty();
        if !quasi {
            d = gradient_dir;
        }
        let slope = dot(&r, &d);
        self.warm_g = x1;
        self.warm_v = x2.clone();
        let mut out = StepOutcome { residual_norm, ..Default::default() };
        let scale = self.energy.abs() + self.values.area;
        if !(slope < -1e-15 * scale) {
            out.stationary = true;
            return Ok(out);
        }
        let start = self.mesh.vertices().to_vec();
        let mut t = if quasi { 1.0 } else { self.step };
        let min_t = 1e-10 * self.settings.initial_step;
        loop {
            let mut trial = self.displaced(&self.mesh, &dirs, &d, t);
            let clamped = self.clamp_side(&mut trial);
            if let Some(vals) = self.project_volume(&mut trial, &dirs, &x2, vx2) {
                let e = self.func.energy(&vals);
                if e <= self.energy + 1e-4 * t * slope {
                    let disp = self.mesh.vertices().iter().zip(trial.vertices()).map(|(p, q)| (p - q).norm());
                    out.max_displacement = disp.fold(0.0, f64::max);
                    out.step = t;
                    out.side_clamped = clamped;
                    self.mesh = trial;
                    self.values = vals;
                    self.energy = e;
                    self.grads = self.func.gradients(&self.mesh);
                    break;
                }
            }
            t *= self.settings.backtracking;
            if t < min_t {
                return Err(SolverError::StepCollapse { iteration: self.iteration });
            }
        }
        self.side_streak = if out.side_clamped > 0 { self.side_streak + 1 } else { 0 };
        if self.side_streak > self.settings.side_patience {
            return Err(SolverError::SideViolation { iteration: self.iteration, vertices: out.side_clamped });
        }
        if !quasi {
            self.step = (t / self.settings.backtracking).min(self.settings.max_step);
        }
        self.last = Some((start, r_field));
        self.iteration += 1;
        Ok(out)
    }

    /// Two-loop recursion with the volume-projected inverse metric as the initial matrix.
    fn quasi_newton(
        &mut self,
        r_field: &[Vec3],
        dirs: &[Vec3],
        a: &CsrMatrix,
        v: &[f64],
        x2: &[f64],
        vx2: f64,
    ) -> Vec<f64> {
        let fdot = |a: &[Vec3], b: &[Vec3]| -> f64 { a.iter().zip(b).map(|(p, q)| p.dot(q)).sum() };
        let mut q = r_field.to_vec();
        let mut alphas = Vec::with_capacity(self.history.len());
        for (s, y, rho) in self.history.iter().rev() {
            let al = rho * fdot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= yi * al;
            }
            alphas.push(al);
        }
        let rhs = self.reduce(&q, dirs);
        let mut z = std::mem::take(&mut self.warm_q);
        if z.len() != rhs.len() {
            z = vec![0.0; rhs.len()];
        }
        pcg(a, &rhs, &mut z, CG_TOL, 4000);
        self.warm_q = z.clone();
        let c = if vx2 > 0.0 { dot(v, &z) / vx2 } else { 0.0 };
        for (zi, xi) in z.iter_mut().zip(x2) {
            *zi -= c * xi;
        }
        let mut zf = self.expand(&z, dirs);
        for ((s, y, rho), al) in self.history.iter().zip(alphas.iter().rev()) {
            let b = rho * fdot(y, &zf);
            for (zi, si) in zf.iter_mut().zip(s) {
                *zi += si * (al - b);
            }
        }
        let mut d = self.reduce(&zf, dirs);
        // Keep the direction tangent to the volume constraint in the metric sense.
        let c = if vx2 > 0.0 { dot(v, &d) / vx2 } else { 0.0 };
        for (di, xi) in d.iter_mut().zip(x2) {
            *di = -(*di - c * xi);
        }
        d
    }

    /// `(vertex, H)` for interior vertices, `H = ∇A·∇V / 2|∇V|²`.
    pub fn variational_curvature(&self) -> Vec<(usize, f64)> {
        (0..self.mesh.vertex_count())
            .filter(|&i| self.is_interior(i))
            .filter_map(|i| {
                let gv = self.grads.volume[i];
                let d = gv.norm_squared();
                (d > 0.0).then(|| (i, self.grads.area[i].dot(&gv) / (2.0 * d)))
            })
            .collect()
    }

    /// Interior vertices only (free boundary vertices excluded).
    pub fn is_interior(&self, i: usize) -> bool {
        self.loop_nbrs[i].is_none() && self.var_of[i].is_some()
    }
}
