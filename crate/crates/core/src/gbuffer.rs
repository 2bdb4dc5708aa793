//! Software rasterization pre-pass producing a per-eye G-buffer.
//!
//! Triangles are transformed by the eye's view-projection, clipped against
//! the near and far planes in homogeneous space, and scan-converted at pixel
//! centers (`i + 0.5`, matching [`raster_to_ndc`](crate::camera::raster_to_ndc))
//! with a top-left fill rule. Per-pixel barycentrics are perspective-correct
//! and feed the same interpolation routine the ray path uses, so a covered
//! texel is directly usable as a first hit.
//!
//! Work is split into horizontal bands of rows so callers can rasterize
//! bands concurrently into disjoint output slices.

use alloc::vec::Vec;

use crate::accel::{hit_from_barycentrics, Hit};
use crate::camera::{Dims, Eye};
use crate::math::{Mat4, Vec3};
use crate::scene::Scene;

/// Rows per work band.
pub const BAND_HEIGHT: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Texel {
    /// Post-projection depth `z'` in `[0, 1]`; meaningless when uncovered.
    pub depth: f64,
    /// Surface record, `None` where nothing was rasterized.
    pub hit: Option<Hit>,
}

impl Texel {
    pub const EMPTY: Texel = Texel { depth: f64::INFINITY, hit: None };

    #[inline]
    pub fn covered(&self) -> bool {
        self.hit.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GBuffer {
    pub dims: Dims,
    pub texels: Vec<Texel>,
}

impl GBuffer {
    pub fn empty(dims: Dims) -> Self {
        Self { dims, texels: alloc::vec![Texel::EMPTY; dims.pixel_count()] }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> &Texel {
        &self.texels[(y * self.dims.width + x) as usize]
    }

    pub fn coverage(&self) -> usize {
        self.texels.iter().filter(|t| t.covered()).count()
    }

    /// True when a covered pixel borders an uncovered pixel or a different
    /// instance among its 4-neighbors.
    pub fn is_silhouette(&self, x: u32, y: u32) -> bool {
        let here = self.get(x, y).hit.map(|h| h.instance);
        let (w, h) = (self.dims.width as i64, self.dims.height as i64);
        [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().any(|(dx, dy)| {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                return false;
            }
            self.get(nx as u32, ny as u32).hit.map(|h| h.instance) != here
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct ScreenVert {
    /// Continuous raster position.
    x: f64,
    y: f64,
    z: f64,
    inv_w: f64,
    /// Barycentrics with respect to the unclipped source triangle.
    bary: [f64; 3],
}

#[derive(Debug, Clone, Copy)]
struct ScreenTri {
    v: [ScreenVert; 3],
    instance: u32,
    triangle: u32,
    /// Pixel bounds, inclusive.
    x0: u32,
    x1: u32,
    y0: u32,
    y1: u32,
}

#[derive(Debug, Clone, Copy)]
struct ClipVert {
    c: [f64; 4],
    bary: [f64; 3],
}

impl ClipVert {
    fn lerp(&self, o: &ClipVert, t: f64) -> ClipVert {
        let c = core::array::from_fn(|i| self.c[i] + (o.c[i] - self.c[i]) * t);
        let bary = core::array::from_fn(|i| self.bary[i] + (o.bary[i] - self.bary[i]) * t);
        ClipVert { c, bary }
    }
}

/// Clips a polygon against `dist >= 0` (Sutherland–Hodgman).
fn clip_polygon(poly: &[ClipVert], dist: impl Fn(&ClipVert) -> f64) -> Vec<ClipVert> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = &poly[i];
        let b = &poly[(i + 1) % poly.len()];
        let (da, db) = (dist(a), dist(b));
        if da >= 0.0 {
            out.push(*a);
        }
        if (da >= 0.0) != (db >= 0.0) {
            out.push(a.lerp(b, da / (da - db)));
        }
    }
    out
}

/// Triangles of one eye view, transformed, clipped and binned into bands.
pub struct RasterSetup {
    pub dims: Dims,
    origin: Vec3,
    tris: Vec<ScreenTri>,
    bands: Vec<Vec<u32>>,
    /// (object to world, normal matrix) per instance.
    xforms: Vec<(Mat4, Mat4)>,
}

impl RasterSetup {
    pub fn new(scene: &Scene, eye: &Eye, dims: Dims) -> Self {
        let band_count = dims.height.div_ceil(BAND_HEIGHT) as usize;
        let mut setup = RasterSetup {
            dims,
            origin: eye.origin,
            tris: Vec::new(),
            bands: alloc::vec![Vec::new(); band_count],
            xforms: Vec::with_capacity(scene.instances().len()),
        };
        if dims.width == 0 || dims.height == 0 {
            return setup;
        }
        for (ii, inst) in scene.instances().iter().enumerate() {
            let o2w = inst.transform;
            let w2o = o2w.inverse().expect("scene validates instance transforms");
            setup.xforms.push((o2w, w2o.transpose()));
            if !scene.instance_material(ii).is_opaque() {
                continue;
            }
            let mvp = eye.view_proj * o2w;
            let mesh = &scene.meshes()[inst.mesh];
            for ti in 0..mesh.triangle_count() {
                let p = mesh.triangle(ti);
                let poly = [0, 1, 2].map(|k| {
                    let mut bary = [0.0; 3];
                    bary[k] = 1.0;
                    ClipVert { c: mvp.mul_vec4([p[k].x, p[k].y, p[k].z, 1.0]), bary }
                });
                let inside = |v: &ClipVert| v.c[2] >= 0.0 && v.c[2] <= v.c[3];
                let clipped;
                let verts: &[ClipVert] = if poly.iter().all(inside) {
                    &poly[..]
                } else {
                    let near = clip_polygon(&poly, |v| v.c[2]);
                    clipped = clip_polygon(&near, |v| v.c[3] - v.c[2]);
                    &clipped[..]
                };
                if verts.len() < 3 {
                    continue;
                }
                let screen: Vec<ScreenVert> = verts
                    .iter()
                    .map(|v| {
                        let inv_w = 1.0 / v.c[3];
                        ScreenVert {
                            x: (v.c[0] * inv_w + 1.0) * 0.5 * dims.width as f64,
                            y: (v.c[1] * inv_w + 1.0) * 0.5 * dims.height as f64,
                            z: v.c[2] * inv_w,
                            inv_w,
                            bary: v.bary,
                        }
                    })
                    .collect();
                for k in 1..screen.len() - 1 {
                    setup.push_tri([screen[0], screen[k], screen[k + 1]], ii as u32, ti as u32);
                }
            }
        }
        setup
    }

    fn push_tri(&mut self, v: [ScreenVert; 3], instance: u32, triangle: u32) {
        let area = edge(&v[0], &v[1], v[2].x, v[2].y);
        if !(area != 0.0) {
            return;
        }
        // Positive orientation for every triangle: rasterization is two-sided.
        let v = if area < 0.0 { [v[0], v[2], v[1]] } else { v };
        let (w, h) = (self.dims.width as f64, self.dims.height as f64);
        let min_x = v.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let max_x = v.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        let min_y = v.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let max_y = v.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        // Pixel i is sampled at i + 0.5.
        let lo = |m: f64| libm::ceil(m - 0.5).max(0.0);
        let hi = |m: f64, lim: f64| libm::floor(m - 0.5).min(lim - 1.0);
        let (x0, x1, y0, y1) = (lo(min_x), hi(max_x, w), lo(min_y), hi(max_y, h));
        if !(x0 <= x1 && y0 <= y1) {
            return;
        }
        let tri = ScreenTri { v, instance, triangle, x0: x0 as u32, x1: x1 as u32, y0: y0 as u32, y1: y1 as u32 };
        let id = self.tris.len() as u32;
        for band in (tri.y0 / BAND_HEIGHT)..=(tri.y1 / BAND_HEIGHT) {
            self.bands[band as usize].push(id);
        }
        self.tris.push(tri);
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    /// Row range `[start, end)` covered by a band.
    pub fn band_rows(&self, band: usize) -> (u32, u32) {
        let start = band as u32 * BAND_HEIGHT;
        (start, (start + BAND_HEIGHT).min(self.dims.height))
    }

    /// Rasterizes one band into `out`, which holds exactly the band's rows.
    pub fn rasterize_band(&self, scene: &Scene, band: usize, out: &mut [Texel]) {
        let (row0, row1) = self.band_rows(band);
        let width = self.dims.width;
        debug_assert_eq!(out.len(), ((row1 - row0) * width) as usize);
        out.fill(Texel::EMPTY);
        // Winning (depth, instance, triangle, weights) per pixel.
        for &id in &self.bands[band] {
            let tri = &self.tris[id as usize];
            let [a, b, c] = &tri.v;
            let area = edge(a, b, c.x, c.y);
            let tl = [top_left(b, c), top_left(c, a), top_left(a, b)];
            for y in tri.y0.max(row0)..=tri.y1.min(row1 - 1) {
                let py = y as f64 + 0.5;
                for x in tri.x0..=tri.x1 {
                    let px = x as f64 + 0.5;
                    let w0 = edge(b, c, px, py);
                    let w1 = edge(c, a, px, py);
                    let w2 = edge(a, b, px, py);
                    let inside = |w: f64, tl: bool| w > 0.0 || (w == 0.0 && tl);
                    if !(inside(w0, tl[0]) && inside(w1, tl[1]) && inside(w2, tl[2])) {
                        continue;
                    }
                    let (l0, l1, l2) = (w0 / area, w1 / area, w2 / area);
                    let z = l0 * a.z + l1 * b.z + l2 * c.z;
                    let slot = &mut out[((y - row0) * width + x) as usize];
                    let better = match slot.hit {
                        None => true,
                        Some(h) => z < slot.depth || (z == slot.depth && (tri.instance, tri.triangle) < (h.instance, h.triangle)),
                    };
                    if !better {
                        continue;
                    }
                    // Perspective-correct weights of the clipped vertices.
                    let (q0, q1, q2) = (l0 * a.inv_w, l1 * b.inv_w, l2 * c.inv_w);
                    let qs = q0 + q1 + q2;
                    let bary: [f64; 3] = core::array::from_fn(|k| (q0 * a.bary[k] + q1 * b.bary[k] + q2 * c.bary[k]) / qs);
                    let (o2w, nm) = &self.xforms[tri.instance as usize];
                    let mut hit = hit_from_barycentrics(scene, o2w, nm, tri.instance, tri.triangle, 0.0, bary[1], bary[2]);
                    hit.t = (hit.position - self.origin).length();
                    *slot = Texel { depth: z, hit: Some(hit) };
                }
            }
        }
    }
}

/// Edge function of `a -> b` at `(px, py)`. Evaluated from a canonical
/// endpoint order so that the two triangles sharing an edge get exactly
/// opposite values, which the fill rule relies on.
#[inline]
fn edge(a: &ScreenVert, b: &ScreenVert, px: f64, py: f64) -> f64 {
    if (a.x, a.y) <= (b.x, b.y) {
        (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
    } else {
        -((a.x - b.x) * (py - b.y) - (a.y - b.y) * (px - b.x))
    }
}

/// Top-left rule for edge `a -> b` of a positively oriented triangle in
/// y-down raster space.
#[inline]
fn top_left(a: &ScreenVert, b: &ScreenVert) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

/// Rasterizes the whole G-buffer on the calling thread.
pub fn rasterize_gbuffer(scene: &Scene, eye: &Eye, dims: Dims) -> GBuffer {
    let setup = RasterSetup::new(scene, eye, dims);
    let mut gb = GBuffer::empty(dims);
    let width = dims.width as usize;
    for band in 0..setup.band_count() {
        let (r0, r1) = setup.band_rows(band);
        setup.rasterize_band(scene, band, &mut gb.texels[r0 as usize * width..r1 as usize * width]);
    }
    gb
}
