//! Ray/triangle tests.

use crate::math::Vec3;

/// Per-ray constants for the watertight test: axis permutation and shear.
#[derive(Debug, Clone, Copy)]
pub struct ShearedRay {
    pub origin: Vec3,
    kx: usize,
    ky: usize,
    kz: usize,
    sx: f64,
    sy: f64,
    sz: f64,
}

impl ShearedRay {
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        let kz = dir.max_axis();
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        // Keep the winding of the projected triangle independent of the ray sign.
        if dir[kz] < 0.0 {
            core::mem::swap(&mut kx, &mut ky);
        }
        let sz = 1.0 / dir[kz];
        Self { origin, kx, ky, kz, sx: dir[kx] * sz, sy: dir[ky] * sz, sz }
    }
}

/// Triangle hit: ray parameter and the barycentric weights of `b` and `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriHit {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

/// Watertight ray/triangle intersection (Woop, Benthin and Wald). Edges
/// shared by two triangles are never both missed. Accepts `t` in
/// `[t_min, t_max]`.
#[inline]
pub fn intersect_watertight(r: &ShearedRay, a: Vec3, b: Vec3, c: Vec3, t_min: f64, t_max: f64) -> Option<TriHit> {
    let pa = a - r.origin;
    let pb = b - r.origin;
    let pc = c - r.origin;
    let ax = pa[r.kx] - r.sx * pa[r.kz];
    let ay = pa[r.ky] - r.sy * pa[r.kz];
    let bx = pb[r.kx] - r.sx * pb[r.kz];
    let by = pb[r.ky] - r.sy * pb[r.kz];
    let cx = pc[r.kx] - r.sx * pc[r.kz];
    let cy = pc[r.ky] - r.sy * pc[r.kz];

    let e0 = cx * by - cy * bx;
    let e1 = ax * cy - ay * cx;
    let e2 = bx * ay - by * ax;
    if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0) && (e0 > 0.0 || e1 > 0.0 || e2 > 0.0) {
        return None;
    }
    let det = e0 + e1 + e2;
    if det == 0.0 {
        return None;
    }
    let az = r.sz * pa[r.kz];
    let bz = r.sz * pb[r.kz];
    let cz = r.sz * pc[r.kz];
    let inv_det = 1.0 / det;
    let t = (e0 * az + e1 * bz + e2 * cz) * inv_det;
    if !(t >= t_min && t <= t_max) {
        return None;
    }
    Some(TriHit { t, u: e1 * inv_det, v: e2 * inv_det })
}

/// Classic Möller–Trumbore test, two-sided. Not watertight; kept as an
/// independent reference for the watertight path.
pub fn intersect_moller_trumbore(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Option<TriHit> {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(TriHit { t: e2.dot(q) * inv, u, v })
}
