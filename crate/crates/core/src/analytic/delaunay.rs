use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::AnalyticError;

/// Rotational constant-mean-curvature surface types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelaunayClass {
    Plane,
    Sphere,
    Cylinder,
    Catenoid,
    Unduloid,
    Nodoid,
}

/// Class of the meridian with first integral `x sin ψ − H x² = c`.
pub fn classify(h: f64, c: f64) -> Result<DelaunayClass, AnalyticError> {
    let (h, c) = if h < 0.0 { (-h, -c) } else { (h, c) };
    if h == 0.0 {
        return Ok(if c == 0.0 { DelaunayClass::Plane } else { DelaunayClass::Catenoid });
    }
    if c == 0.0 {
        return Ok(DelaunayClass::Sphere);
    }
    if c < 0.0 {
        return Ok(DelaunayClass::Nodoid);
    }
    let q = 4.0 * h * c;
    if (q - 1.0).abs() <= 1e-12 {
        Ok(DelaunayClass::Cylinder)
    } else if q < 1.0 {
        Ok(DelaunayClass::Unduloid)
    } else {
        Err(AnalyticError::NoProfile { h, c })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub s: f64,
    pub x: f64,
    pub z: f64,
    pub psi: f64,
    pub f: f64,
}

/// Sampled meridian `(x(s), z(s))` of a Delaunay surface, `s` the arclength, `ψ` the
/// tangent angle (`x' = cos ψ`, `z' = sin ψ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaunayProfile {
    pub h: f64,
    pub c: f64,
    pub class: DelaunayClass,
    pub samples: Vec<ProfileSample>,
    /// The profile was stopped on the axis at its start / end.
    pub axis_start: bool,
    pub axis_end: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-13, max_steps: 10_000_000 }
    }
}

type State = [f64; 3];

fn rhs(h: f64, y: &State) -> State {
    let (x, psi) = (y[0], y[2]);
    [psi.cos(), psi.sin(), 2.0 * h - psi.sin() / x]
}

fn axpy(y: &State, hs: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (w, k) in terms {
        for i in 0..3 {
            out[i] += hs * w * k[i];
        }
    }
    out
}

/// One Dormand–Prince step; returns the fifth-order solution and the error estimate.
fn dopri_step(h: f64, y: &State, ds: f64) -> (State, State) {
    let k1 = rhs(h, y);
    let k2 = rhs(h, &axpy(y, ds, &[(1.0 / 5.0, &k1)]));
    let k3 = rhs(h, &axpy(y, ds, &[(3.0 / 40.0, &k1), (9.0 / 40.0, &k2)]));
    let k4 = rhs(h, &axpy(y, ds, &[(44.0 / 45.0, &k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)]));
    let k5 = rhs(
        h,
        &axpy(
            y,
            ds,
            &[(19372.0 / 6561.0, &k1), (-25360.0 / 2187.0, &k2), (64448.0 / 6561.0, &k3), (-212.0 / 729.0, &k4)],
        ),
    );
    let k6 = rhs(
        h,
        &axpy(
            y,
            ds,
            &[
                (9017.0 / 3168.0, &k1),
                (-355.0 / 33.0, &k2),
                (46732.0 / 5247.0, &k3),
                (49.0 / 176.0, &k4),
                (-5103.0 / 18656.0, &k5),
            ],
        ),
    );
    let b = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
    let y5 = axpy(y, ds, &[(b[0], &k1), (b[2], &k3), (b[3], &k4), (b[4], &k5), (b[5], &k6)]);
    let k7 = rhs(h, &y5);
    let e = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];
    let err = axpy(&[0.0; 3], ds, &[(e[0], &k1), (e[2], &k3), (e[3], &k4), (e[4], &k5), (e[5], &k6), (e[6], &k7)]);
    (y5, err)
}

fn sample(h: f64, s: f64, y: &State) -> ProfileSample {
    ProfileSample { s, x: y[0], z: y[1], psi: y[2], f: y[0] * y[2].sin() - h * y[0] * y[0] }
}

/// Integrates from `s = 0` to `s_end` (either sign), recording samples at multiples of
/// `step` and at `s_end`. Returns the samples (starting with the seed) and whether the
/// profile stopped on the axis.
fn integrate(
    h: f64,
    y0: State,
    s_end: f64,
    step: f64,
    scale: f64,
    opts: &IntegratorOptions,
) -> Result<(Vec<ProfileSample>, bool), AnalyticError> {
    let dir = if s_end >= 0.0 { 1.0 } else { -1.0 };
    let mut out = vec![sample(h, 0.0, &y0)];
    if s_end == 0.0 {
        return Ok((out, false));
    }
    let axis_eps = 1e-6 * scale;
    let mut y = y0;
    let mut s = 0.0f64;
    let mut ds = dir * step.min(0.01 * scale);
    let mut k = 1usize;
    let mut steps = 0usize;
    loop {
        let target = (dir * (k as f64 * step)).clamp(s_end.min(0.0), s_end.max(0.0));
        let remaining = target - s;
        let lands = ds.abs() >= remaining.abs();
        let trial = if lands { remaining } else { ds };
        let (yn, err) = dopri_step(h, &y, trial);
        steps += 1;
        if steps > opts.max_steps {
            return Err(AnalyticError::InvalidParameter("integrator step budget exhausted".into()));
        }
        let mut en = 0.0f64;
        for i in 0..3 {
            let sc = opts.atol + opts.rtol * y[i].abs().max(yn[i].abs());
            en = en.max((err[i] / sc).abs());
        }
        if !yn.iter().all(|v| v.is_finite()) || yn[0] <= 0.0 {
            ds = trial * 0.25;
            if ds.abs() < 1e-15 * scale {
                return Err(AnalyticError::AxisSingularity { s, sin_psi: y[2].sin() });
            }
            continue;
        }
        let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        if en > 1.0 {
            ds = trial * factor;
            continue;
        }
        s = if lands { target } else { s + trial };
        y = yn;
        if !lands || trial.abs() >= ds.abs() * 0.999 {
            ds = trial * factor;
        }
        if y[0] < axis_eps {
            // close to the axis: finish along the tangent
            let cos = y[2].cos();
            if cos * dir >= 0.0 || y[2].sin().abs() > 1e-3 {
                return Err(AnalyticError::AxisSingularity { s, sin_psi: y[2].sin() });
            }
            let dl = -y[0] / cos;
            let end = [0.0, y[1] + y[2].sin() * dl, y[2]];
            out.push(ProfileSample { s: s + dl, x: 0.0, z: end[1], psi: end[2], f: 0.0 });
            return Ok((out, true));
        }
        if lands {
            out.push(sample(h, s, &y));
            k += 1;
            if s == s_end {
                return Ok((out, false));
            }
        }
    }
}

/// Seed with vertical tangent (`ψ = ±π/2`) for the profile with first integral `c`.
fn seed(h: f64, c: f64) -> Option<(f64, f64)> {
    let roots = |sgn: f64| -> Vec<f64> {
        // H x² − sgn·x + c = 0
        if h == 0.0 {
            return vec![sgn * c];
        }
        let disc = 1.0 - 4.0 * h * c;
        if disc < -1e-14 {
            return vec![];
        }
        let r = disc.max(0.0).sqrt();
        vec![(sgn + r) / (2.0 * h), (sgn - r) / (2.0 * h)]
    };
    for sgn in [1.0, -1.0] {
        let best = roots(sgn).into_iter().filter(|x| *x > 0.0 && x.is_finite()).fold(f64::NAN, f64::max);
        if best > 0.0 {
            return Some((best, sgn * FRAC_PI_2));
        }
    }
    None
}

/// Meridian of the Delaunay surface with mean curvature `H` and first integral `c`,
/// seeded at a point with vertical tangent at height `z = 0` and integrated over the
/// arclength interval `s_span = (s_min, s_max)` with `s_min ≤ 0 ≤ s_max`.
pub fn delaunay_profile(h: f64, c: f64, s_span: (f64, f64), step: f64) -> Result<DelaunayProfile, AnalyticError> {
    let class = classify(h, c)?;
    let (x0, psi0) =
        if class == DelaunayClass::Plane { (1.0, 0.0) } else { seed(h, c).ok_or(AnalyticError::NoProfile { h, c })? };
    delaunay_profile_from_seed(h, (x0, 0.0, psi0), s_span, step, &IntegratorOptions::default())
}

/// Meridian through `(x0, z0)` with tangent angle `psi0`; `c` follows from the seed.
pub fn delaunay_profile_from_seed(
    h: f64,
    seed: (f64, f64, f64),
    s_span: (f64, f64),
    step: f64,
    opts: &IntegratorOptions,
) -> Result<DelaunayProfile, AnalyticError> {
    let (x0, z0, psi0) = seed;
    if !(step > 0.0) {
        return Err(AnalyticError::InvalidParameter(format!("step {step}")));
    }
    if !(x0 > 0.0) {
        return Err(AnalyticError::InvalidParameter(format!("seed on or across the axis (x0 = {x0})")));
    }
    if s_span.0 > 0.0 || s_span.1 < 0.0 {
        return Err(AnalyticError::InvalidParameter("arclength span must contain 0".into()));
    }
    let c = x0 * psi0.sin() - h * x0 * x0;
    let class = classify(h, c)?;
    let scale = if h != 0.0 { (1.0 / h.abs()).min(x0.max(c.abs())) } else { x0 };
    let y0 = [x0, z0, psi0];
    let (fwd, axis_end) = integrate(h, y0, s_span.1, step, scale, opts)?;
    let (bwd, axis_start) = integrate(h, y0, s_span.0, step, scale, opts)?;
    let mut samples: Vec<ProfileSample> = bwd.into_iter().skip(1).rev().collect();
    samples.extend(fwd);
    Ok(DelaunayProfile { h, c, class, samples, axis_start, axis_end })
}

impl DelaunayProfile {
    pub fn arclength(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.s - a.s,
            _ => 0.0,
        }
    }

    /// Largest deviation of `F` from `c`, absolute and relative to the size of the terms
    /// `x sin ψ` and `H x²` along the profile (or `|c|` when larger).
    pub fn first_integral_drift(&self) -> (f64, f64) {
        let mut abs = 0.0f64;
        let mut scale = self.c.abs();
        for s in &self.samples {
            if s.x == 0.0 {
                continue;
            }
            abs = abs.max((s.f - self.c).abs());
            scale = scale.max((s.x * s.psi.sin()).abs()).max((self.h * s.x * s.x).abs());
        }
        (abs, if scale > 0.0 { abs / scale } else { abs })
    }

    /// The piece between the first crossings of the sphere `x² + (z − z_c)² = ρ²` on either
    /// side of the sample nearest `s = 0`, with crossing points located to round-off.
    pub fn clip_to_sphere(&self, center_z: f64, rho: f64) -> Result<DelaunayProfile, AnalyticError> {
        let g = |x: f64, z: f64| x * x + (z - center_z) * (z - center_z) - rho * rho;
        let k0 = (0..self.samples.len())
            .min_by(|&a, &b| self.samples[a].s.abs().total_cmp(&self.samples[b].s.abs()))
            .ok_or(AnalyticError::NoSphereCrossing)?;
        let inside = |i: usize| g(self.samples[i].x, self.samples[i].z) < 0.0;
        if !inside(k0) {
            return Err(AnalyticError::NoSphereCrossing);
        }
        let mut hi = k0;
        while hi + 1 < self.samples.len() && inside(hi + 1) {
            hi += 1;
        }
        let mut lo = k0;
        while lo > 0 && inside(lo - 1) {
            lo -= 1;
        }
        if hi + 1 == self.samples.len() || lo == 0 {
            return Err(AnalyticError::NoSphereCrossing);
        }
        let cross = |from: &ProfileSample, to: &ProfileSample| -> ProfileSample {
            let y = [from.x, from.z, from.psi];
            let total = to.s - from.s;
            let (mut a, mut b) = (0.0f64, 1.0f64);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let (ym, _) = dopri_step(self.h, &y, m * total);
                if g(ym[0], ym[1]) < 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            let (yc, _) = dopri_step(self.h, &y, 0.5 * (a + b) * total);
            sample(self.h, from.s + 0.5 * (a + b) * total, &yc)
        };
        let end = cross(&self.samples[hi], &self.samples[hi + 1]);
        let start = cross(&self.samples[lo], &self.samples[lo - 1]);
        let step = (self.samples[k0 + 1.min(self.samples.len() - 1 - k0)].s - self.samples[k0].s).abs();
        let min_gap = 0.3 * step;
        let mut samples = vec![start];
        for smp in &self.samples[lo..=hi] {
            if (smp.s - start.s).abs() >= min_gap && (end.s - smp.s).abs() >= min_gap {
                samples.push(*smp);
            }
        }
        samples.push(end);
        Ok(DelaunayProfile { samples, axis_start: false, axis_end: false, ..self.clone() })
    }

    /// CSV with a comment line carrying `H` and `c`, then `s,x,z,psi,F` rows.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# delaunay H={} c={}\ns,x,z,psi,F\n", self.h, self.c);
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{},{},{}", s.s, s.x, s.z, s.psi, s.f);
        }
        out
    }

    /// Reads [`DelaunayProfile::to_csv`] output. Without the comment line, `H` and `c` are
    /// recovered by least squares from `x sin ψ = c + H x²`.
    pub fn from_csv(text: &str) -> Result<Self, AnalyticError> {
        let mut hc: Option<(f64, f64)> = None;
        let mut samples = Vec::new();
        let mut header_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |m: String| AnalyticError::Csv { line: i + 1, message: m };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut h = None;
                let mut c = None;
                for tok in rest.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("H=") {
                        h = v.parse().ok();
                    } else if let Some(v) = tok.strip_prefix("c=") {
                        c = v.parse().ok();
                    }
                }
                if let (Some(h), Some(c)) = (h, c) {
                    hc = Some((h, c));
                }
                continue;
            }
            if !header_seen && line.starts_with('s') {
                header_seen = true;
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| err(format!("bad number `{t}`"))))
                .collect::<Result<_, _>>()?;
            if vals.len() != 5 {
                return Err(err(format!("expected 5 columns, found {}", vals.len())));
            }
            samples.push(ProfileSample { s: vals[0], x: vals[1], z: vals[2], psi: vals[3], f: vals[4] });
        }
        if samples.len() < 2 {
            return Err(AnalyticError::Csv { line: 0, message: "fewer than two samples".into() });
        }
        let (h, c) = match hc {
            Some(v) => v,
            None => fit_h_c(&samples),
        };
        let class = classify(h, c).unwrap_or(DelaunayClass::Unduloid);
        let axis_start = samples[0].x == 0.0;
        let axis_end = samples[samples.len() - 1].x == 0.0;
        Ok(Self { h, c, class, samples, axis_start, axis_end })
    }
}

fn fit_h_c(samples: &[ProfileSample]) -> (f64, f64) {
    // minimise Σ (x sinψ − c − H x²)²
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let a1 = 1.0;
        let a2 = s.x * s.x;
        let y = s.x * s.psi.sin();
        s11 += a1 * a1;
        s12 += a1 * a2;
        s22 += a2 * a2;
        b1 += a1 * y;
        b2 += a2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() < 1e-300 {
        return (0.0, b1 / s11);
    }
    let c = (b1 * s22 - b2 * s12) / det;
    let h = (s11 * b2 - s12 * b1) / det;
    (h, c)
}
