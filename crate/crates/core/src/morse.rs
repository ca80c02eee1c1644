//! Gradient flow of a height function on embedded surfaces, critical points,
//! and broken gradient trajectories.
//!
//! Surfaces live in `R³` and carry the induced metric, so the gradient of `h`
//! is the tangential part of its ambient gradient. Points are stored in
//! ambient coordinates and reprojected onto the surface after every step.
//! This is the only floating-point module; every tolerance is in
//! [`MorseConfig`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ext::{Ext, Q};
use crate::family::extract_alpha;
use crate::line::{BrokenLine, LinePoint, MarkedLine};
use crate::order::LinOrder;
use crate::rep::RepPoint;

pub type V3 = [f64; 3];

fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

fn unit(a: V3) -> V3 {
    scale(a, 1.0 / norm(a))
}

pub fn dist(a: V3, b: V3) -> f64 {
    norm(sub(a, b))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MorseError {
    #[error("start point is within {0} of a critical point")]
    AtCritical(f64),
    #[error("need h(x) < h(y), got {0} and {1}")]
    NotIncreasing(f64, f64),
    #[error("unknown surface {0:?}")]
    UnknownSurface(String),
    #[error("torus radii must satisfy R > r > 0")]
    BadRadii,
}

/// Numerical knobs, with the defaults used throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MorseConfig {
    pub step: f64,
    pub min_step: f64,
    pub tol_crit: f64,
    pub tol_merge: f64,
    pub tol_end: f64,
    pub tol_reparam: f64,
    pub tol_inv: f64,
    pub tol_time: f64,
    pub capture_radius: f64,
    pub ring_seeds: usize,
    pub grid: usize,
    pub samples: usize,
    pub horizon: f64,
}

impl Default for MorseConfig {
    fn default() -> Self {
        MorseConfig {
            step: 1e-3,
            min_step: 1e-9,
            tol_crit: 1e-8,
            tol_merge: 1e-6,
            tol_end: 1e-4,
            tol_reparam: 1e-5,
            tol_inv: 1e-4,
            tol_time: 1e-3,
            capture_radius: 1e-4,
            ring_seeds: 16,
            grid: 48,
            samples: 2001,
            horizon: 400.0,
        }
    }
}

impl MorseConfig {
    /// Seeds start this far from the critical point they leave.
    pub fn seed_radius(&self) -> f64 {
        10.0 * self.tol_crit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Sphere,
    /// Torus of revolution about the `y`-axis, standing upright so that the
    /// height `z` has a minimum, two saddles and a maximum.
    Torus { major: f64, minor: f64 },
}

/// `h = z + ε·exp(−|p − c|²/σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub epsilon: f64,
    pub center: V3,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceModel {
    pub shape: Shape,
    pub bump: Option<Bump>,
}

impl SurfaceModel {
    pub fn sphere() -> Self {
        SurfaceModel { shape: Shape::Sphere, bump: None }
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self, MorseError> {
        if !(major > minor && minor > 0.0) {
            return Err(MorseError::BadRadii);
        }
        Ok(SurfaceModel { shape: Shape::Torus { major, minor }, bump: None })
    }

    pub fn builtin(name: &str) -> Result<Self, MorseError> {
        match name {
            "sphere" => Ok(SurfaceModel::sphere()),
            "torus" => SurfaceModel::torus(2.0, 1.0),
            other => Err(MorseError::UnknownSurface(other.to_string())),
        }
    }

    pub fn with_bump(self, bump: Bump) -> Self {
        SurfaceModel { bump: Some(bump), ..self }
    }

    pub fn name(&self) -> &'static str {
        match self.shape {
            Shape::Sphere => "sphere",
            Shape::Torus { .. } => "torus",
        }
    }

    /// Parametrization of the surface by `(u, v)`.
    pub fn param(&self, uv: [f64; 2]) -> V3 {
        let [u, v] = uv;
        match self.shape {
            // u ∈ [0, π] polar angle from the south pole, v ∈ [0, 2π)
            Shape::Sphere => [u.sin() * v.cos(), u.sin() * v.sin(), -u.cos()],
            Shape::Torus { major, minor } => {
                let w = major + minor * v.cos();
                [w * u.cos(), minor * v.sin(), w * u.sin()]
            }
        }
    }

    /// Inverse of [`SurfaceModel::param`] on the surface.
    pub fn chart(&self, p: V3) -> [f64; 2] {
        match self.shape {
            Shape::Sphere => [(-p[2]).clamp(-1.0, 1.0).acos(), p[1].atan2(p[0]).rem_euclid(2.0 * PI)],
            Shape::Torus { major, .. } => {
                let u = p[2].atan2(p[0]).rem_euclid(2.0 * PI);
                let rho = (p[0] * p[0] + p[2] * p[2]).sqrt();
                let v = p[1].atan2(rho - major).rem_euclid(2.0 * PI);
                [u, v]
            }
        }
    }

    /// Parameter rectangle `[0, u_max] × [0, v_max]`.
    pub fn domain(&self) -> [f64; 2] {
        match self.shape {
            Shape::Sphere => [PI, 2.0 * PI],
            Shape::Torus { .. } => [2.0 * PI, 2.0 * PI],
        }
    }

    /// Nearest point of the surface.
    pub fn project(&self, p: V3) -> V3 {
        match self.shape {
            Shape::Sphere => unit(p),
            Shape::Torus { major, minor } => {
                let c = self.core(p, major);
                add(c, scale(unit(sub(p, c)), minor))
            }
        }
    }

    /// Point of the core circle nearest to `p`.
    fn core(&self, p: V3, major: f64) -> V3 {
        let rho = (p[0] * p[0] + p[2] * p[2]).sqrt();
        [major * p[0] / rho, 0.0, major * p[2] / rho]
    }

    pub fn normal(&self, p: V3) -> V3 {
        match self.shape {
            Shape::Sphere => unit(p),
            Shape::Torus { major, .. } => unit(sub(p, self.core(p, major))),
        }
    }

    pub fn height(&self, p: V3) -> f64 {
        let bump = self.bump.map_or(0.0, |b| b.epsilon * (-dot(sub(p, b.center), sub(p, b.center)) / (b.sigma * b.sigma)).exp());
        p[2] + bump
    }

    fn ambient_gradient(&self, p: V3) -> V3 {
        let mut g = [0.0, 0.0, 1.0];
        if let Some(b) = self.bump {
            let d = sub(p, b.center);
            let e = b.epsilon * (-dot(d, d) / (b.sigma * b.sigma)).exp();
            g = add(g, scale(d, -2.0 * e / (b.sigma * b.sigma)));
        }
        g
    }

    /// Riemannian gradient for the induced metric.
    pub fn gradient(&self, p: V3) -> V3 {
        let g = self.ambient_gradient(p);
        let n = self.normal(p);
        sub(g, scale(n, dot(g, n)))
    }

    /// An orthonormal basis of the tangent plane at `p`.
    pub fn tangent_basis(&self, p: V3) -> (V3, V3) {
        let n = self.normal(p);
        let pick = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let t1 = unit(sub(pick, scale(n, dot(pick, n))));
        let t2 = [n[1] * t1[2] - n[2] * t1[1], n[2] * t1[0] - n[0] * t1[2], n[0] * t1[1] - n[1] * t1[0]];
        (t1, t2)
    }

    fn chart_point(&self, p: V3, basis: (V3, V3), a: f64, b: f64) -> V3 {
        self.project(add(p, add(scale(basis.0, a), scale(basis.1, b))))
    }

    /// Hessian of `h` in the tangent chart at `p`, by central differences.
    pub fn hessian(&self, p: V3) -> [[f64; 2]; 2] {
        let basis = self.tangent_basis(p);
        let e = 1e-4;
        let h = |a: f64, b: f64| self.height(self.chart_point(p, basis, a, b));
        let h0 = h(0.0, 0.0);
        let haa = (h(e, 0.0) - 2.0 * h0 + h(-e, 0.0)) / (e * e);
        let hbb = (h(0.0, e) - 2.0 * h0 + h(0.0, -e)) / (e * e);
        let hab = (h(e, e) - h(e, -e) - h(-e, e) + h(-e, -e)) / (4.0 * e * e);
        [[haa, hab], [hab, hbb]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub point: V3,
    pub uv: [f64; 2],
    pub height: f64,
    pub grad_norm: f64,
    pub index: usize,
    /// Eigenvectors of the Hessian (ambient), for the negative then positive eigenvalue.
    #[serde(skip)]
    pub directions: Option<(V3, V3)>,
}

/// Newton iteration for `∇h = 0` in the tangent chart, with a finite-difference Jacobian.
fn newton_critical(s: &SurfaceModel, start: V3, cfg: &MorseConfig) -> Option<V3> {
    let mut p = s.project(start);
    for _ in 0..60 {
        if norm(s.gradient(p)) < cfg.tol_crit * 1e-3 {
            return Some(p);
        }
        let basis = s.tangent_basis(p);
        let f = |a: f64, b: f64| {
            let g = s.gradient(s.chart_point(p, basis, a, b));
            [dot(g, basis.0), dot(g, basis.1)]
        };
        let e = 1e-7;
        let f0 = f(0.0, 0.0);
        let (fa, fb) = (f(e, 0.0), f(0.0, e));
        let j = [[(fa[0] - f0[0]) / e, (fb[0] - f0[0]) / e], [(fa[1] - f0[1]) / e, (fb[1] - f0[1]) / e]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-14 {
            return None;
        }
        let da = (j[1][1] * f0[0] - j[0][1] * f0[1]) / det;
        let db = (-j[1][0] * f0[0] + j[0][0] * f0[1]) / det;
        let (da, db) = {
            let len = (da * da + db * db).sqrt();
            if len > 0.2 {
                (da * 0.2 / len, db * 0.2 / len)
            } else {
                (da, db)
            }
        };
        p = s.chart_point(p, basis, -da, -db);
    }
    (norm(s.gradient(p)) < cfg.tol_crit).then_some(p)
}

fn classify(s: &SurfaceModel, p: V3) -> (usize, Option<(V3, V3)>) {
    let h = s.hessian(p);
    let (a, b, c) = (h[0][0], h[0][1], h[1][1]);
    let det = a * c - b * b;
    let index = if det < 0.0 {
        1
    } else if a + c > 0.0 {
        0
    } else {
        2
    };
    // eigenvectors of the symmetric 2×2 Hessian
    let tr = a + c;
    let disc = ((a - c) * (a - c) / 4.0 + b * b).sqrt();
    let (lo, hi) = (tr / 2.0 - disc, tr / 2.0 + disc);
    let eig = |lambda: f64| -> [f64; 2] {
        if b.abs() > 1e-12 {
            let v = [b, lambda - a];
            let l = (v[0] * v[0] + v[1] * v[1]).sqrt();
            [v[0] / l, v[1] / l]
        } else if (lambda - a).abs() <= (lambda - c).abs() {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    };
    let basis = s.tangent_basis(p);
    let amb = |v: [f64; 2]| add(scale(basis.0, v[0]), scale(basis.1, v[1]));
    (index, Some((amb(eig(lo)), amb(eig(hi)))))
}

/// Critical points from local minima of `|∇h|` on a parameter grid, refined by
/// Newton's method and merged within `tol_merge`. Sorted by height.
pub fn find_critical_points(s: &SurfaceModel, cfg: &MorseConfig) -> Vec<CriticalPoint> {
    let n = cfg.grid;
    let [umax, vmax] = s.domain();
    let closed_u = matches!(s.shape, Shape::Sphere);
    let rows = if closed_u { n + 1 } else { n };
    // the sphere's u-range includes both poles, so it gets one extra row
    let uv = |i: usize, j: usize| [umax * i as f64 / n as f64, vmax * j as f64 / n as f64];
    let g: Vec<Vec<f64>> = (0..rows).map(|i| (0..n).map(|j| norm(s.gradient(s.param(uv(i, j))))).collect()).collect();
    let mut found: Vec<V3> = Vec::new();
    for i in 0..rows {
        for j in 0..n {
            let mut is_min = true;
            for di in [-1i64, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ii = i as i64 + di;
                    let ii = if closed_u {
                        if ii < 0 || ii >= rows as i64 {
                            continue;
                        }
                        ii as usize
                    } else {
                        ii.rem_euclid(rows as i64) as usize
                    };
                    let jj = (j as i64 + dj).rem_euclid(n as i64) as usize;
                    if g[ii][jj] < g[i][j] {
                        is_min = false;
                    }
                }
            }
            if !is_min {
                continue;
            }
            if let Some(p) = newton_critical(s, s.param(uv(i, j)), cfg) {
                if found.iter().all(|q| dist(*q, p) > cfg.tol_merge) {
                    found.push(p);
                }
            }
        }
    }
    let mut crits: Vec<CriticalPoint> = found
        .into_iter()
        .map(|p| {
            let (index, directions) = classify(s, p);
            CriticalPoint { point: p, uv: s.chart(p), height: s.height(p), grad_norm: norm(s.gradient(p)), index, directions }
        })
        .collect();
    crits.sort_by(|a, b| a.height.total_cmp(&b.height).then(a.uv[0].total_cmp(&b.uv[0])));
    crits
}

pub fn euler_characteristic(crits: &[CriticalPoint]) -> i64 {
    crits.iter().map(|c| if c.index % 2 == 0 { 1 } else { -1 }).sum()
}

/// A sampled flow line: flow times and points, `h` nondecreasing forward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowLine {
    pub times: Vec<f64>,
    pub points: Vec<V3>,
    /// Index of the critical point the line was captured by, if any.
    pub end: Option<usize>,
    pub truncated: bool,
    pub monotone: bool,
}

fn rk4(s: &SurfaceModel, p: V3, dt: f64) -> V3 {
    let k1 = s.gradient(p);
    let k2 = s.gradient(s.project(add(p, scale(k1, dt / 2.0))));
    let k3 = s.gradient(s.project(add(p, scale(k2, dt / 2.0))));
    let k4 = s.gradient(s.project(add(p, scale(k3, dt))));
    let incr = scale(add(add(k1, scale(k2, 2.0)), add(scale(k3, 2.0), k4)), dt / 6.0);
    s.project(add(p, incr))
}

/// Flows `p` by time `t` (negative for the backward flow) with steps of at most `step`.
pub fn flow_by(s: &SurfaceModel, p: V3, t: f64, step: f64) -> V3 {
    let n = (t.abs() / step).ceil().max(1.0) as usize;
    let dt = t / n as f64;
    (0..n).fold(p, |q, _| rk4(s, q, dt))
}

/// Integrates the gradient flow (`direction = 1.0`) or its reverse (`-1.0`)
/// until the path enters the capture radius of a listed critical point, or the
/// horizon is reached.
pub fn integrate_flow(
    s: &SurfaceModel,
    x0: V3,
    direction: f64,
    crits: &[CriticalPoint],
    cfg: &MorseConfig,
) -> Result<FlowLine, MorseError> {
    if norm(s.gradient(x0)) < cfg.tol_crit {
        return Err(MorseError::AtCritical(cfg.tol_crit));
    }
    let start_near: Vec<bool> = crits.iter().map(|c| dist(c.point, x0) < cfg.capture_radius).collect();
    let mut times = vec![0.0];
    let mut points = vec![x0];
    let mut p = x0;
    let mut t: f64 = 0.0;
    let mut monotone = true;
    let mut truncated = false;
    let mut end = None;
    while t.abs() < cfg.horizon {
        let nearest = crits
            .iter()
            .map(|c| dist(c.point, p))
            .fold(f64::INFINITY, f64::min);
        let mut dt = cfg.step;
        // smaller steps close to a critical point, where the capture test happens
        if nearest < 100.0 * cfg.capture_radius {
            dt /= 2.0;
        }
        let q = loop {
            let q = rk4(s, p, direction * dt);
            let dh = direction * (s.height(q) - s.height(p));
            if dh >= -1e-13 {
                break Some(q);
            }
            dt /= 2.0;
            if dt < cfg.min_step {
                break None;
            }
        };
        let Some(q) = q else {
            truncated = true;
            monotone = false;
            break;
        };
        t += direction * dt;
        p = q;
        times.push(t);
        points.push(p);
        if let Some(k) = crits
            .iter()
            .enumerate()
            .position(|(k, c)| !start_near[k] && dist(c.point, p) < cfg.capture_radius)
        {
            end = Some(k);
            break;
        }
    }
    if end.is_none() && t.abs() >= cfg.horizon {
        truncated = true;
    }
    Ok(FlowLine { times, points, end, truncated, monotone })
}

/// A flow segment between two critical points, oriented upward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub from: usize,
    pub to: usize,
    /// Flow times, increasing.
    pub times: Vec<f64>,
    pub points: Vec<V3>,
}

impl Segment {
    fn heights(&self, s: &SurfaceModel) -> Vec<f64> {
        self.points.iter().map(|&p| s.height(p)).collect()
    }

    /// A copy with every flow time moved by `shift`.
    pub fn time_shifted(&self, shift: f64) -> Segment {
        Segment { times: self.times.iter().map(|t| t + shift).collect(), ..self.clone() }
    }
}

/// All flow segments found between critical points: forward from a ring around
/// each minimum, forward along both unstable directions of each saddle, and
/// backward along both stable directions of each saddle.
pub fn connection_graph(s: &SurfaceModel, crits: &[CriticalPoint], cfg: &MorseConfig) -> Vec<Segment> {
    let r = cfg.seed_radius();
    let mut segments: Vec<Segment> = Vec::new();
    let push = |seg: Segment, segments: &mut Vec<Segment>| {
        let mid = seg.points[seg.points.len() / 2];
        let duplicate = segments.iter().any(|o| {
            o.from == seg.from && o.to == seg.to && o.points.iter().any(|&q| dist(q, mid) < 1e-3)
        });
        if !duplicate {
            segments.push(seg);
        }
    };
    for (k, c) in crits.iter().enumerate() {
        let mut launches: Vec<(V3, f64)> = Vec::new();
        match c.index {
            0 => {
                let (t1, t2) = s.tangent_basis(c.point);
                for i in 0..cfg.ring_seeds {
                    let a = 2.0 * PI * i as f64 / cfg.ring_seeds as f64;
                    let d = add(scale(t1, a.cos()), scale(t2, a.sin()));
                    launches.push((s.project(add(c.point, scale(d, r))), 1.0));
                }
            }
            1 => {
                let (down, up) = c.directions.expect("saddles carry eigenvectors");
                for sign in [1.0, -1.0] {
                    launches.push((s.project(add(c.point, scale(up, sign * r))), 1.0));
                    launches.push((s.project(add(c.point, scale(down, sign * r))), -1.0));
                }
            }
            _ => {}
        }
        for (x0, dir) in launches {
            let Ok(line) = integrate_flow(s, x0, dir, crits, cfg) else { continue };
            let Some(end) = line.end else { continue };
            if !line.monotone {
                continue;
            }
            let mut times = line.times;
            let mut points = line.points;
            points.insert(0, c.point);
            times.insert(0, f64::NEG_INFINITY);
            points.push(crits[end].point);
            times.push(f64::INFINITY);
            let seg = if dir > 0.0 {
                Segment { from: k, to: end, times, points }
            } else {
                times.reverse();
                points.reverse();
                let times = times.into_iter().map(|t| -t).collect();
                Segment { from: end, to: k, times, points }
            };
            push(seg, &mut segments);
        }
    }
    segments
}

/// A chain of flow segments through critical points, with its reparametrization
/// `p(t)` on a uniform grid of `t ∈ [h(x), h(y)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrokenTrajectory {
    /// Critical points visited, from `x` to `y`.
    pub criticals: Vec<usize>,
    pub segments: Vec<Segment>,
    pub path: ReparamPath,
}

impl BrokenTrajectory {
    pub fn intermediate_count(&self) -> usize {
        self.criticals.len() - 2
    }

    pub fn is_broken(&self) -> bool {
        self.intermediate_count() > 0
    }
}

/// Samples `(t, p(t))`, plus the dense image used for the invariance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReparamPath {
    pub t: Vec<f64>,
    pub points: Vec<V3>,
    #[serde(skip)]
    pub image: Vec<V3>,
}

/// Point of a segment at height `t`: the flow from the last sample below `t`,
/// run for the time found by Newton's method on `h(Φ_s(p)) = t`.
fn point_at_height(s: &SurfaceModel, seg: &Segment, heights: &[f64], t: f64, cfg: &MorseConfig) -> V3 {
    let n = heights.len();
    if t <= heights[0] {
        return seg.points[0];
    }
    if t >= heights[n - 1] {
        return seg.points[n - 1];
    }
    let i = heights.partition_point(|&h| h <= t) - 1;
    // the end samples are the critical points themselves
    let (lo, hi) = (i.max(1), (i + 1).min(n - 2));
    if i == 0 || i + 1 == n - 1 {
        let (a, b) = if i == 0 { (0, lo) } else { (hi, n - 1) };
        let (ha, hb) = (heights[a], heights[b]);
        let w = if hb > ha { (t - ha) / (hb - ha) } else { 0.0 };
        let guess = s.project(add(seg.points[a], scale(sub(seg.points[b], seg.points[a]), w)));
        let start = if i == 0 { seg.points[lo] } else { seg.points[hi] };
        return newton_on_flow(s, start, t, cfg).unwrap_or(guess);
    }
    newton_on_flow(s, seg.points[i], t, cfg).unwrap_or(seg.points[i])
}

fn newton_on_flow(s: &SurfaceModel, p: V3, t: f64, cfg: &MorseConfig) -> Option<V3> {
    let mut time = 0.0;
    let mut q = p;
    for _ in 0..50 {
        let r = t - s.height(q);
        if r.abs() < 1e-13 {
            return Some(q);
        }
        let g2 = dot(s.gradient(q), s.gradient(q));
        if g2 < 1e-24 {
            return None;
        }
        let dt = (r / g2).clamp(-1.0, 1.0);
        time += dt;
        q = flow_by(s, p, time, cfg.step / 4.0);
    }
    ((t - s.height(q)).abs() < cfg.tol_reparam * 1e-2).then_some(q)
}

/// Reparametrizes a chain of segments by height.
pub fn reparametrize(s: &SurfaceModel, segments: &[Segment], crits: &[CriticalPoint], cfg: &MorseConfig) -> ReparamPath {
    let h0 = crits[segments[0].from].height;
    let h1 = crits[segments[segments.len() - 1].to].height;
    let heights: Vec<Vec<f64>> = segments.iter().map(|seg| seg.heights(s)).collect();
    let n = cfg.samples.max(2);
    let mut t = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        let tk = h0 + (h1 - h0) * k as f64 / (n - 1) as f64;
        let which = segments
            .iter()
            .position(|seg| tk <= crits[seg.to].height)
            .unwrap_or(segments.len() - 1);
        let p = if k == 0 {
            crits[segments[0].from].point
        } else if k == n - 1 {
            crits[segments[segments.len() - 1].to].point
        } else {
            point_at_height(s, &segments[which], &heights[which], tk, cfg)
        };
        t.push(tk);
        points.push(p);
    }
    let image = segments.iter().flat_map(|seg| seg.points.iter().copied()).collect();
    ReparamPath { t, points, image }
}

/// Every chain of segments from `x` to `y`, reparametrized.
pub fn find_broken_trajectories(
    s: &SurfaceModel,
    crits: &[CriticalPoint],
    graph: &[Segment],
    x: usize,
    y: usize,
    cfg: &MorseConfig,
) -> Result<Vec<BrokenTrajectory>, MorseError> {
    if crits[x].height >= crits[y].height {
        return Err(MorseError::NotIncreasing(crits[x].height, crits[y].height));
    }
    let mut chains: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<Vec<usize>> = graph
        .iter()
        .enumerate()
        .filter(|(_, g)| g.from == x)
        .map(|(i, _)| vec![i])
        .collect();
    while let Some(chain) = stack.pop() {
        let last = graph[*chain.last().expect("nonempty")].to;
        if last == y {
            chains.push(chain);
            continue;
        }
        for (i, g) in graph.iter().enumerate() {
            if g.from == last && crits[g.to].height <= crits[y].height {
                let mut next = chain.clone();
                next.push(i);
                stack.push(next);
            }
        }
    }
    chains.sort();
    Ok(chains
        .into_iter()
        .map(|chain| {
            let segments: Vec<Segment> = chain.iter().map(|&i| graph[i].clone()).collect();
            let mut criticals = vec![x];
            criticals.extend(segments.iter().map(|g| g.to));
            let path = reparametrize(s, &segments, crits, cfg);
            BrokenTrajectory { criticals, segments, path }
        })
        .collect())
}

/// The straight chord in parameter space from `x` to `y`, reparametrized
/// linearly; not a gradient trajectory in general.
pub fn chord_path(s: &SurfaceModel, x: &CriticalPoint, y: &CriticalPoint, cfg: &MorseConfig) -> ReparamPath {
    let n = cfg.samples.max(2);
    let mut t = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        let w = k as f64 / (n - 1) as f64;
        let uv = [x.uv[0] + (y.uv[0] - x.uv[0]) * w, x.uv[1] + (y.uv[1] - x.uv[1]) * w];
        t.push(x.height + (y.height - x.height) * w);
        points.push(s.param(uv));
    }
    ReparamPath { t, image: points.clone(), points }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub endpoint_error: f64,
    pub reparam_residual: f64,
    pub invariance_error: f64,
    pub endpoints_ok: bool,
    pub reparam_ok: bool,
    pub invariance_ok: bool,
}

impl TrajectoryReport {
    pub fn passed(&self) -> bool {
        self.endpoints_ok && self.reparam_ok && self.invariance_ok
    }
}

fn distance_to_polyline(p: V3, line: &[V3]) -> f64 {
    if line.len() == 1 {
        return dist(p, line[0]);
    }
    line.windows(2)
        .map(|w| {
            let d = sub(w[1], w[0]);
            let l2 = dot(d, d);
            let s = if l2 > 0.0 { (dot(sub(p, w[0]), d) / l2).clamp(0.0, 1.0) } else { 0.0 };
            dist(p, add(w[0], scale(d, s)))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Checks endpoints, `h(p(t)) = t`, and that flowing sampled points a short time
/// either way stays on the image.
pub fn validate_trajectory(
    s: &SurfaceModel,
    path: &ReparamPath,
    x: &CriticalPoint,
    y: &CriticalPoint,
    cfg: &MorseConfig,
) -> TrajectoryReport {
    let n = path.points.len();
    let endpoint_error = dist(path.points[0], x.point).max(dist(path.points[n - 1], y.point));
    let reparam_residual = path
        .t
        .iter()
        .zip(&path.points)
        .map(|(&t, &p)| (s.height(p) - t).abs())
        .fold(0.0, f64::max);
    let stride = (n / 50).max(1);
    let flow_time = 1e-2;
    let mut invariance_error: f64 = 0.0;
    for k in (1..n - 1).step_by(stride) {
        let p = path.points[k];
        if norm(s.gradient(p)) < 1e-3 {
            continue;
        }
        for dir in [1.0, -1.0] {
            let q = flow_by(s, p, dir * flow_time, cfg.step);
            invariance_error = invariance_error.max(distance_to_polyline(q, &path.image));
        }
    }
    TrajectoryReport {
        endpoint_error,
        reparam_residual,
        invariance_error,
        endpoints_ok: endpoint_error < cfg.tol_end,
        reparam_ok: reparam_residual < cfg.tol_reparam,
        invariance_ok: invariance_error < cfg.tol_inv,
    }
}

/// Flow time between two samples of a segment, computed independently of the
/// integrator clock as `∫ dh / |∇h|²` (trapezoid rule over the samples).
pub fn quadrature_time(s: &SurfaceModel, seg: &Segment, i: usize, j: usize) -> f64 {
    let (lo, hi) = (i.min(j), i.max(j));
    let w = |p: V3| 1.0 / dot(s.gradient(p), s.gradient(p));
    let total: f64 = (lo..hi)
        .map(|k| {
            let (a, b) = (seg.points[k], seg.points[k + 1]);
            (s.height(b) - s.height(a)) * (w(a) + w(b)) / 2.0
        })
        .sum();
    if i <= j {
        total
    } else {
        -total
    }
}

/// The broken line of a trajectory, its marks and the resulting point of `Rep([m−1])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryLine {
    pub line: BrokenLine,
    pub marks: Vec<LinePoint>,
    pub alpha: RepPoint,
    /// Largest `|integrator time − quadrature time|` between each mark and its
    /// segment's other sampled points.
    pub time_discrepancy: f64,
}

fn q_of(x: f64) -> Q {
    let den = 1_000_000_000i64;
    crate::ext::q((x * den as f64).round() as i64, den)
}

/// One component per segment, one mark per segment at its middle sample.
pub fn trajectory_to_line(s: &SurfaceModel, traj: &BrokenTrajectory) -> TrajectoryLine {
    let m = traj.segments.len();
    let line = BrokenLine::new(m).expect("a trajectory has a segment");
    let mut marks = Vec::new();
    let mut discrepancy: f64 = 0.0;
    for (a, seg) in traj.segments.iter().enumerate() {
        let mid = seg.points.len() / 2;
        marks.push(LinePoint::interior(a + 1, q_of(seg.times[mid])));
        let probe = (mid + seg.points.len() / 4).min(seg.points.len() - 2);
        let clock = seg.times[probe] - seg.times[mid];
        discrepancy = discrepancy.max((clock - quadrature_time(s, seg, mid, probe)).abs());
    }
    let index = LinOrder::standard(m).as_preorder().clone();
    let alpha = extract_alpha(&index, &MarkedLine { line, marks: marks.clone() }).expect("one mark per component");
    TrajectoryLine { line, marks, alpha, time_discrepancy: discrepancy }
}

/// Two marks on one segment: the translation distance between them in the
/// extracted point, and the independent quadrature estimate of that flow time.
pub fn two_marks_on_segment(s: &SurfaceModel, seg: &Segment, i: usize, j: usize) -> (Ext, f64) {
    let line = BrokenLine::standard();
    let marks = vec![LinePoint::interior(1, q_of(seg.times[i])), LinePoint::interior(1, q_of(seg.times[j]))];
    let index = LinOrder::standard(2).as_preorder().clone();
    let alpha = extract_alpha(&index, &MarkedLine { line, marks }).expect("marks on one line");
    (alpha.at(0, 1).clone(), quadrature_time(s, seg, i, j))
}

/// Everything the demo reports for one surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseDemo {
    pub surface: String,
    pub criticals: Vec<CriticalPoint>,
    pub euler_characteristic: i64,
    pub segments: usize,
    pub trajectories: Vec<TrajectorySummary>,
    #[serde(skip)]
    pub flow_lines: Vec<Vec<V3>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub criticals: Vec<usize>,
    pub broken: bool,
    pub report: TrajectoryReport,
    pub line: TrajectoryLine,
}

/// Critical points, the connection graph, and every trajectory from the lowest
/// to the highest critical point, validated and converted to broken lines.
pub fn run_demo(s: &SurfaceModel, cfg: &MorseConfig) -> Result<MorseDemo, MorseError> {
    let crits = find_critical_points(s, cfg);
    let graph = connection_graph(s, &crits, cfg);
    let (x, y) = (0, crits.len() - 1);
    let trajs = find_broken_trajectories(s, &crits, &graph, x, y, cfg)?;
    let trajectories = trajs
        .iter()
        .map(|t| TrajectorySummary {
            criticals: t.criticals.clone(),
            broken: t.is_broken(),
            report: validate_trajectory(s, &t.path, &crits[x], &crits[y], cfg),
            line: trajectory_to_line(s, t),
        })
        .collect();
    Ok(MorseDemo {
        surface: s.name().to_string(),
        euler_characteristic: euler_characteristic(&crits),
        segments: graph.len(),
        flow_lines: graph.iter().map(|g| g.points.clone()).collect(),
        criticals: crits,
        trajectories,
    })
}

/// Flow lines and critical points drawn over the parameter rectangle.
pub fn render_svg(s: &SurfaceModel, demo: &MorseDemo) -> String {
    let [umax, vmax] = s.domain();
    let (w, h) = (600.0, 600.0 * vmax / umax);
    let to_px = |uv: [f64; 2]| (uv[0] / umax * w, h - uv[1] / vmax * h);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for line in &demo.flow_lines {
        let mut d = String::new();
        let mut prev: Option<[f64; 2]> = None;
        let mut last_px = String::new();
        for &p in line.iter().step_by(8).chain(line.last()) {
            let uv = s.chart(p);
            let (x, y) = to_px(uv);
            let px = format!("{x:.1},{y:.1}");
            if px == last_px {
                continue;
            }
            // break the polyline where it wraps around the parameter rectangle
            let jump = prev.is_some_and(|q| (q[0] - uv[0]).abs() > umax / 2.0 || (q[1] - uv[1]).abs() > vmax / 2.0);
            d.push_str(&format!("{}{px} ", if prev.is_none() || jump { "M" } else { "L" }));
            prev = Some(uv);
            last_px = px;
        }
        out.push_str(&format!("<path d=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\"/>\n", d.trim_end()));
    }
    let colors = ["green", "orange", "red"];
    for c in &demo.criticals {
        let (x, y) = to_px(c.uv);
        out.push_str(&format!(
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5\" fill=\"{}\"><title>index {} h={:.6}</title></circle>\n",
            colors[c.index.min(2)],
            c.index,
            c.height
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn sphere_criticals() {
        let cfg = MorseConfig::default();
        let s = SurfaceModel::sphere();
        let c = find_critical_points(&s, &cfg);
        assert_eq!(c.len(), 2);
        assert_eq!((c[0].index, c[1].index), (0, 2));
        assert_eq!(euler_characteristic(&c), 2);
        assert!(c.iter().all(|c| c.grad_norm < cfg.tol_crit));
    }

    #[test]
    fn torus_criticals() {
        let cfg = MorseConfig::default();
        let s = SurfaceModel::builtin("torus").unwrap();
        let c = find_critical_points(&s, &cfg);
        let idx: Vec<usize> = c.iter().map(|c| c.index).collect();
        assert_eq!(idx, vec![0, 1, 1, 2]);
        assert_eq!(euler_characteristic(&c), 0);
        let bumped = s.with_bump(Bump { epsilon: 1e-3, center: [1.0, 0.5, 0.5], sigma: 0.7 });
        assert_eq!(find_critical_points(&bumped, &cfg).len(), 4);
    }

    #[test]
    fn flow_goes_up() {
        let cfg = MorseConfig::default();
        let s = SurfaceModel::sphere();
        let crits = find_critical_points(&s, &cfg);
        let line = integrate_flow(&s, [1.0, 0.0, 0.0], 1.0, &crits, &cfg).unwrap();
        assert_eq!(line.end, Some(1));
        assert!(line.monotone);
        let h: Vec<f64> = line.points.iter().map(|&p| s.height(p)).collect();
        assert!(h.windows(2).all(|w| w[1] > w[0] - 1e-13));
        let back = integrate_flow(&s, [1.0, 0.0, 0.0], -1.0, &crits, &cfg).unwrap();
        assert_eq!(back.end, Some(0));
        assert!(integrate_flow(&s, crits[0].point, 1.0, &crits, &cfg).is_err());
    }

    #[test]
    fn sphere_trajectories() {
        let cfg = MorseConfig { samples: 401, ..MorseConfig::default() };
        let s = SurfaceModel::sphere();
        let crits = find_critical_points(&s, &cfg);
        let graph = connection_graph(&s, &crits, &cfg);
        let trajs = find_broken_trajectories(&s, &crits, &graph, 0, 1, &cfg).unwrap();
        assert!(trajs.len() >= 8);
        for t in &trajs {
            assert_eq!(t.intermediate_count(), 0);
            let r = validate_trajectory(&s, &t.path, &crits[0], &crits[1], &cfg);
            assert!(r.passed(), "{r:?}");
            assert_eq!(trajectory_to_line(&s, t).line.components(), 1);
        }
        assert!(find_broken_trajectories(&s, &crits, &graph, 1, 1, &cfg).is_err());
        let chord = chord_path(&s, &crits[0], &crits[1], &cfg);
        // on the sphere a parameter chord is a meridian, which is a flow line,
        // but its linear clock violates h(p(t)) = t
        assert!(!validate_trajectory(&s, &chord, &crits[0], &crits[1], &cfg).reparam_ok);
    }

    #[test]
    fn torus_broken_trajectories() {
        let cfg = MorseConfig { samples: 801, ..MorseConfig::default() };
        let s = SurfaceModel::builtin("torus").unwrap();
        let crits = find_critical_points(&s, &cfg);
        let graph = connection_graph(&s, &crits, &cfg);
        let trajs = find_broken_trajectories(&s, &crits, &graph, 0, 3, &cfg).unwrap();
        let broken: Vec<&BrokenTrajectory> = trajs.iter().filter(|t| t.is_broken()).collect();
        assert!(!broken.is_empty());
        for t in &trajs {
            let r = validate_trajectory(&s, &t.path, &crits[0], &crits[3], &cfg);
            assert!(r.passed(), "{:?} {r:?}", t.criticals);
        }
        let t = broken[0];
        let line = trajectory_to_line(&s, t);
        assert_eq!(line.line.components(), t.segments.len());
        assert!(line.alpha.gaps().iter().all(|g| *g == Ext::PosInf));
        assert!(line.time_discrepancy < cfg.tol_time, "{}", line.time_discrepancy);

        // shifting one segment's clock leaves the image and reparametrization alone
        let mut shifted = t.segments.clone();
        shifted[0] = shifted[0].time_shifted(3.5);
        let path = reparametrize(&s, &shifted, &crits, &cfg);
        assert!(validate_trajectory(&s, &path, &crits[0], &crits[3], &cfg).passed());

        let chord = chord_path(&s, &crits[0], &crits[3], &cfg);
        let r = validate_trajectory(&s, &chord, &crits[0], &crits[3], &cfg);
        assert!(r.endpoints_ok && !r.reparam_ok && !r.passed(), "{r:?}");
        let chord = chord_path(&s, &crits[0], &crits[2], &cfg);
        let r = validate_trajectory(&s, &chord, &crits[0], &crits[2], &cfg);
        assert!(!r.reparam_ok && !r.invariance_ok, "{r:?}");
    }

    #[test]
    fn marks_on_one_segment() {
        let cfg = MorseConfig::default();
        let s = SurfaceModel::sphere();
        let crits = find_critical_points(&s, &cfg);
        let line = integrate_flow(&s, [0.0, 1.0, 0.0], 1.0, &crits, &cfg).unwrap();
        let seg = Segment { from: 0, to: 1, times: line.times, points: line.points };
        let (d, quad) = two_marks_on_segment(&s, &seg, 100, 900);
        let d = d.finite().unwrap().to_f64().unwrap();
        assert!((d - 0.8).abs() < cfg.tol_time);
        assert!((quad - 0.8).abs() < cfg.tol_time);
    }
}
