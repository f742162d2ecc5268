use std::collections::HashMap;

use nalgebra::{Matrix3, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::geom::{orthonormal_complement, TriMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Sphere,
    Plane,
    Circle,
}

/// Least-squares fit of a sphere, plane or circle. Spheres and circles carry a centre
/// and radius; planes and circles carry a unit normal (and planes the offset
/// `normal · x`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub center: Option<Vec3>,
    pub radius: Option<f64>,
    pub normal: Option<Vec3>,
    pub offset: Option<f64>,
    pub rms: f64,
    pub max_residual: f64,
}

fn stats(res: impl Iterator<Item = f64>, w: &[f64]) -> (f64, f64) {
    let (mut s, mut m) = (0.0, 0.0f64);
    let wsum: f64 = w.iter().sum();
    for (r, wi) in res.zip(w) {
        s += wi * r * r;
        m = m.max(r.abs());
    }
    ((s / wsum).sqrt(), m)
}

fn weights_or_ones(n: usize, weights: Option<&[f64]>) -> Result<Vec<f64>, VerifyError> {
    match weights {
        None => Ok(vec![1.0; n]),
        Some(w) if w.len() == n && w.iter().all(|x| x.is_finite() && *x >= 0.0) && w.iter().any(|x| *x > 0.0) => {
            Ok(w.to_vec())
        }
        Some(_) => Err(VerifyError::DegenerateConfiguration("weights must be non-negative, one per point".into())),
    }
}

fn centroid(points: &[Vec3], w: &[f64]) -> Vec3 {
    let wsum: f64 = w.iter().sum();
    points.iter().zip(w).fold(Vec3::zeros(), |a, (p, wi)| a + p * *wi) / wsum
}

/// Weighted covariance eigen-decomposition: (centroid, eigenvalues ascending, eigenvectors).
fn principal(points: &[Vec3], w: &[f64]) -> (Vec3, [f64; 3], [Vec3; 3]) {
    let c = centroid(points, w);
    let mut m = Matrix3::zeros();
    for (p, wi) in points.iter().zip(w) {
        let d = p - c;
        m += d * d.transpose() * *wi;
    }
    let eig = m.symmetric_eigen();
    let mut idx = [0, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.map(|i| eig.eigenvalues[i].max(0.0));
    let vecs = idx.map(|i| eig.eigenvectors.column(i).into_owned());
    (c, vals, vecs)
}

/// Sphere through `points` (optionally weighted): algebraic least squares on centred and
/// scaled coordinates, then geometric Gauss–Newton on `‖p − c‖ − R`.
pub fn fit_sphere(points: &[Vec3], weights: Option<&[f64]>) -> Result<FitResult, VerifyError> {
    if points.len() < 4 {
        return Err(VerifyError::DegenerateConfiguration(format!("{} points cannot fix a sphere", points.len())));
    }
    let w = weights_or_ones(points.len(), weights)?;
    let (c0, vals, _) = principal(points, &w);
    if vals[2] <= 0.0 || vals[0] <= 1e-14 * vals[2] {
        return Err(VerifyError::DegenerateConfiguration("points are coplanar".into()));
    }
    let scale = (vals.iter().sum::<f64>() / w.iter().sum::<f64>()).sqrt();
    // |q|² = 2 a·q + d in scaled coordinates q = (p − c0)/scale
    let mut ata = Matrix4::zeros();
    let mut atb = Vector4::zeros();
    for (p, wi) in points.iter().zip(&w) {
        let q = (p - c0) / scale;
        let row = Vector4::new(2.0 * q.x, 2.0 * q.y, 2.0 * q.z, 1.0);
        ata += row * row.transpose() * *wi;
        atb += row * (q.norm_squared() * wi);
    }
    let sol = ata
        .cholesky()
        .map(|ch| ch.solve(&atb))
        .ok_or_else(|| VerifyError::DegenerateConfiguration("singular sphere system".into()))?;
    let a = Vec3::new(sol[0], sol[1], sol[2]);
    let r2 = sol[3] + a.norm_squared();
    if !(r2 > 0.0) {
        return Err(VerifyError::DegenerateConfiguration("no real sphere fits the points".into()));
    }
    let mut c = c0 + a * scale;
    let mut r = r2.sqrt() * scale;
    for _ in 0..100 {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for (p, wi) in points.iter().zip(&w) {
            let d = p - c;
            let len = d.norm();
            if len == 0.0 {
                continue;
            }
            let u = d / len;
            let j = Vector4::new(-u.x, -u.y, -u.z, -1.0);
            let res = len - r;
            jtj += j * j.transpose() * *wi;
            jtr += j * (res * wi);
        }
        let Some(step) = jtj.cholesky().map(|ch| ch.solve(&(-jtr))) else { break };
        c += Vec3::new(step[0], step[1], step[2]);
        r += step[3];
        if step.norm() <= 1e-15 * (r + c.norm()) {
            break;
        }
    }
    let (rms, max) = stats(points.iter().map(|p| (p - c).norm() - r), &w);
    Ok(FitResult {
        model: FitModel::Sphere,
        center: Some(c),
        radius: Some(r.abs()),
        normal: None,
        offset: None,
        rms,
        max_residual: max,
    })
}

/// Total least-squares plane.
pub fn fit_plane(points: &[Vec3], weights: Option<&[f64]>) -> Result<FitResult, VerifyError> {
    if points.len() < 3 {
        return Err(VerifyError::DegenerateConfiguration(format!("{} points cannot fix a plane", points.len())));
    }
    let w = weights_or_ones(points.len(), weights)?;
    let (c, vals, vecs) = principal(points, &w);
    if vals[1] <= 1e-14 * vals[2].max(1e-300) {
        return Err(VerifyError::DegenerateConfiguration("points are collinear".into()));
    }
    let n = vecs[0].normalize();
    let (rms, max) = stats(points.iter().map(|p| n.dot(&(p - c))), &w);
    Ok(FitResult {
        model: FitModel::Plane,
        center: Some(c),
        radius: None,
        normal: Some(n),
        offset: Some(n.dot(&c)),
        rms,
        max_residual: max,
    })
}

/// Circle in space: plane fit, then an algebraic circle fit in the plane refined by
/// Gauss–Newton. Residuals combine the out-of-plane and in-plane radial errors.
pub fn fit_circle(points: &[Vec3]) -> Result<FitResult, VerifyError> {
    let plane = fit_plane(points, None)?;
    let n = plane.normal.expect("plane fit has a normal");
    let c0 = plane.center.expect("plane fit has a centroid");
    let (e1, e2) = orthonormal_complement(&n);
    let uv: Vec<(f64, f64)> = points.iter().map(|p| ((p - c0).dot(&e1), (p - c0).dot(&e2))).collect();
    let mut ata = Matrix3::zeros();
    let mut atb = Vec3::zeros();
    for &(u, v) in &uv {
        let row = Vec3::new(2.0 * u, 2.0 * v, 1.0);
        ata += row * row.transpose();
        atb += row * (u * u + v * v);
    }
    let sol =
        ata.lu().solve(&atb).ok_or_else(|| VerifyError::DegenerateConfiguration("singular circle system".into()))?;
    let (mut a, mut b) = (sol.x, sol.y);
    let r2 = sol.z + a * a + b * b;
    if !(r2 > 0.0) {
        return Err(VerifyError::DegenerateConfiguration("no real circle fits the points".into()));
    }
    let mut r = r2.sqrt();
    for _ in 0..100 {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vec3::zeros();
        for &(u, v) in &uv {
            let (du, dv) = (u - a, v - b);
            let len = du.hypot(dv);
            if len == 0.0 {
                continue;
            }
            let j = Vec3::new(-du / len, -dv / len, -1.0);
            jtj += j * j.transpose();
            jtr += j * (len - r);
        }
        let Some(step) = jtj.lu().solve(&(-jtr)) else { break };
        a += step.x;
        b += step.y;
        r += step.z;
        if step.norm() <= 1e-15 * (r + a.abs() + b.abs()) {
            break;
        }
    }
    let center = c0 + e1 * a + e2 * b;
    let w = vec![1.0; points.len()];
    let res = points.iter().map(|p| {
        let d = p - center;
        let h = d.dot(&n);
        let radial = (d - n * h).norm() - r;
        h.hypot(radial)
    });
    let (rms, max) = stats(res, &w);
    Ok(FitResult {
        model: FitModel::Circle,
        center: Some(center),
        radius: Some(r.abs()),
        normal: Some(n),
        offset: Some(n.dot(&center)),
        rms,
        max_residual: max,
    })
}

/// Points where the mesh edges cross the horizontal plane `z = level`, plus the vertices
/// lying exactly on it.
pub fn horizontal_section(mesh: &TriMesh, level: f64) -> Vec<Vec3> {
    let v = mesh.vertices();
    let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
    let mut out: Vec<Vec3> = v.iter().filter(|p| p.z == level).copied().collect();
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let (da, db) = (v[key.0].z - level, v[key.1].z - level);
            if da * db < 0.0 && seen.insert(key, ()).is_none() {
                out.push(v[key.0] + (v[key.1] - v[key.0]) * (da / (da - db)));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionCircle {
    pub z: f64,
    pub points: usize,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionCircles {
    pub sections: Vec<SectionCircle>,
    /// Levels that do not meet the mesh in at least three points.
    pub skipped: Vec<f64>,
    /// `(x, y)` of the best vertical line through the centres.
    pub axis_xy: (f64, f64),
    /// Largest distance of a centre from that vertical line.
    pub collinearity: f64,
    /// Largest distance of a centre from the `z`-axis.
    pub z_axis_distance: f64,
    pub max_circle_rms: f64,
}

/// Circle fits of the horizontal sections at `z_levels`, with the collinearity of their
/// centres along a vertical line.
pub fn horizontal_section_circles(mesh: &TriMesh, z_levels: &[f64]) -> Result<SectionCircles, VerifyError> {
    let mut sections = Vec::new();
    let mut skipped = Vec::new();
    for &z in z_levels {
        let pts = horizontal_section(mesh, z);
        match (pts.len() >= 3).then(|| fit_circle(&pts)) {
            Some(Ok(fit)) => sections.push(SectionCircle { z, points: pts.len(), fit }),
            _ => skipped.push(z),
        }
    }
    if sections.is_empty() {
        return Err(VerifyError::EmptySection { levels: z_levels.len() });
    }
    let n = sections.len() as f64;
    let centers: Vec<Vec3> = sections.iter().map(|s| s.fit.center.expect("circle centre")).collect();
    let (cx, cy) = centers.iter().fold((0.0, 0.0), |(x, y), c| (x + c.x / n, y + c.y / n));
    let collinearity = centers.iter().map(|c| (c.x - cx).hypot(c.y - cy)).fold(0.0, f64::max);
    let z_axis_distance = centers.iter().map(|c| c.x.hypot(c.y)).fold(0.0, f64::max);
    let max_circle_rms = sections.iter().map(|s| s.fit.rms).fold(0.0, f64::max);
    Ok(SectionCircles { sections, skipped, axis_xy: (cx, cy), collinearity, z_axis_distance, max_circle_rms })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_through_three_points() {
        let pts = [Vec3::new(1.0, 0.0, 2.0), Vec3::new(0.0, 1.0, 2.0), Vec3::new(-1.0, 0.0, 2.0)];
        let f = fit_circle(&pts).unwrap();
        assert!((f.center.unwrap() - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
        assert!((f.radius.unwrap() - 1.0).abs() < 1e-12);
        assert!(f.rms < 1e-12);
    }

    #[test]
    fn plane_of_a_tilted_grid() {
        let n = Vec3::new(1.0, 2.0, 2.0).normalize();
        let (e1, e2) = orthonormal_complement(&n);
        let pts: Vec<Vec3> = (0..25).map(|k| n * 0.5 + e1 * (k % 5) as f64 + e2 * (k / 5) as f64).collect();
        let f = fit_plane(&pts, None).unwrap();
        assert!(f.normal.unwrap().dot(&n).abs() > 1.0 - 1e-14);
        assert!((f.offset.unwrap().abs() - 0.5).abs() < 1e-12);
        assert!(fit_plane(&pts[..5], None).is_err());
    }
}
