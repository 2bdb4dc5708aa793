//! Shading for the four effects and the per-pixel dispatch between them.
//!
//! Bounce convention: the primary hit is depth 0 and a hit at depth
//! `d < max_depth` may spawn a ray at depth `d + 1`. `max_depth` therefore
//! counts secondary bounces. Mirror recursion that reaches `max_depth` looks
//! up the environment along the reflected direction instead of tracing.

use core::fmt;

use crate::accel::{Hit, SceneBvh};
use crate::camera::{ndc_from_raster, Dims, Eye, Ray, RayGenMode};
use crate::gbuffer::GBuffer;
use crate::image::{HdrImage, Rgb8Image};
use crate::math::{cos, pow, sin, sqrt, Rgb, Vec2, Vec3, PI};
use crate::rng::{Rng, SampleKey};
use crate::scene::{eval_light_sample, EffectId, Light, Material, Scene, ShadingPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceSettings {
    /// Secondary bounce limit, at least 1.
    pub max_depth: u32,
    /// Path-traced samples per pixel per frame, at least 1.
    pub spp: u32,
    pub rng_seed: u64,
    pub raygen_mode: RayGenMode,
}

impl Default for TraceSettings {
    fn default() -> Self {
        Self { max_depth: 1, spp: 1, rng_seed: 0, raygen_mode: RayGenMode::InverseMatrix }
    }
}

impl TraceSettings {
    pub fn validate(&self) -> Result<(), TraceError> {
        if self.max_depth == 0 {
            return Err(TraceError::InvalidSettings("max_depth must be at least 1"));
        }
        if self.spp == 0 {
            return Err(TraceError::InvalidSettings("spp must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceError {
    InvalidSettings(&'static str),
    /// G-buffer-derived first hits were requested without a G-buffer.
    MissingGBuffer,
    DimensionMismatch { expected: Dims, found: Dims },
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceError::InvalidSettings(why) => write!(f, "invalid trace settings: {why}"),
            TraceError::MissingGBuffer => write!(f, "G-buffer ray generation requires a G-buffer"),
            TraceError::DimensionMismatch { expected, found } => write!(
                f,
                "image is {}x{}, expected {}x{}",
                found.width, found.height, expected.width, expected.height
            ),
        }
    }
}

impl core::error::Error for TraceError {}

/// Rays cast, by purpose.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RayCounters {
    pub primary: u64,
    pub shadow: u64,
    pub reflection: u64,
    pub indirect: u64,
}

impl RayCounters {
    pub fn total(&self) -> u64 {
        self.primary + self.shadow + self.reflection + self.indirect
    }
}

impl core::ops::AddAssign for RayCounters {
    fn add_assign(&mut self, o: Self) {
        self.primary += o.primary;
        self.shadow += o.shadow;
        self.reflection += o.reflection;
        self.indirect += o.indirect;
    }
}

/// A hit prepared for shading, with both normals facing the viewer.
#[derive(Debug, Clone, Copy)]
pub struct Surface<'a> {
    pub hit: Hit,
    pub material: &'a Material,
    pub point: ShadingPoint,
    /// Geometric normal on the viewer's side.
    pub geometric_normal: Vec3,
    /// Direction the surface was reached along.
    pub incoming: Vec3,
}

/// Read-only state shared by every pixel of a frame.
#[derive(Clone, Copy)]
pub struct Tracer<'a> {
    pub scene: &'a Scene,
    pub bvh: &'a SceneBvh,
    pub settings: &'a TraceSettings,
    epsilon: f64,
}

impl<'a> Tracer<'a> {
    pub fn new(scene: &'a Scene, bvh: &'a SceneBvh, settings: &'a TraceSettings) -> Self {
        Self { scene, bvh, settings, epsilon: bvh.ray_epsilon() }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Prepares a hit reached along unit direction `incoming`.
    pub fn surface(&self, hit: Hit, incoming: Vec3) -> Surface<'a> {
        let to_viewer = -incoming;
        let mut ng = hit.geometric_normal;
        if ng.dot(to_viewer) < 0.0 {
            ng = -ng;
        }
        let mut n = hit.normal;
        if n.dot(ng) < 0.0 {
            n = -n;
        }
        let material = self.scene.material(hit.material).expect("scene validates instance materials");
        Surface {
            hit,
            material,
            point: ShadingPoint { position: hit.position, normal: n, to_viewer },
            geometric_normal: ng,
            incoming,
        }
    }

    /// Origin for a ray leaving `s` along `dir`, nudged off the surface.
    fn offset_origin(&self, s: &Surface, dir: Vec3) -> Vec3 {
        let side = if dir.dot(s.geometric_normal) >= 0.0 { 1.0 } else { -1.0 };
        s.point.position + s.geometric_normal * (side * self.epsilon)
    }

    pub fn closest(&self, ray: &Ray) -> Option<Hit> {
        self.bvh.intersect_closest(ray, self.scene)
    }

    pub fn environment(&self, dir: Vec3) -> Rgb {
        self.scene.environment().radiance(dir)
    }

    /// 1 when nothing opaque lies between the surface and the light, else 0.
    pub fn shadow_visibility(&self, s: &Surface, light: &Light, counters: &mut RayCounters) -> f64 {
        counters.shadow += 1;
        let ray = match *light {
            Light::Point { position, .. } => {
                let origin = self.offset_origin(s, position - s.point.position);
                let d = position - origin;
                let dist = d.length();
                Ray::new(origin, d).with_bounds(self.epsilon, dist - self.epsilon)
            }
            Light::Directional { direction, .. } => {
                let origin = self.offset_origin(s, -direction);
                Ray::new(origin, -direction).with_bounds(self.epsilon, f64::INFINITY)
            }
        };
        // The miss shader flips visibility from its default of 0.
        if self.bvh.intersect_any(&ray, self.scene) {
            0.0
        } else {
            1.0
        }
    }

    /// Emission plus the sum over lights of the unshadowed or shadowed
    /// material response. Lights with zero response cast no shadow ray.
    pub fn shade_direct(&self, s: &Surface, with_shadows: bool, counters: &mut RayCounters) -> Rgb {
        let mut c = s.material.emissive;
        for light in self.scene.lights() {
            let f = eval_light_sample(&s.point, s.material, &light.sample(s.point.position));
            if f.is_black() {
                continue;
            }
            if !with_shadows || self.shadow_visibility(s, light, counters) > 0.0 {
                c += f;
            }
        }
        c
    }

    /// Direct light with shadows plus `specular` times the radiance along
    /// the mirror direction. `depth` is the depth of the hit itself.
    pub fn shade_mirror(&self, s: &Surface, depth: u32, counters: &mut RayCounters) -> Rgb {
        let direct = self.shade_direct(s, true, counters);
        let dir = s.incoming.reflect(s.point.normal).normalize();
        let reflected = if depth < self.settings.max_depth {
            counters.reflection += 1;
            let ray = Ray::new(self.offset_origin(s, dir), dir)
                .with_bounds(self.epsilon, f64::INFINITY)
                .with_depth(depth + 1);
            match self.closest(&ray) {
                Some(h) => self.shade_mirror(&self.surface(h, dir), depth + 1, counters),
                None => self.environment(dir),
            }
        } else {
            self.environment(dir)
        };
        direct + s.material.specular * reflected
    }

    /// One-light estimate of direct lighting. A light is chosen with
    /// probability proportional to the largest channel of its unshadowed
    /// response, weighted by the inverse of that probability and tested for
    /// visibility.
    pub fn sample_direct_light(&self, s: &Surface, rng: &mut Rng, counters: &mut RayCounters) -> Rgb {
        let lights = self.scene.lights();
        let response = |l: &Light| eval_light_sample(&s.point, s.material, &l.sample(s.point.position));
        let total: f64 = lights.iter().map(|l| response(l).max_channel()).sum();
        if !(total > 0.0) {
            return Rgb::BLACK;
        }
        let mut target = rng.next_f64() * total;
        let mut pick = None;
        for light in lights {
            let f = response(light);
            let w = f.max_channel();
            if w > 0.0 {
                // The last lit light absorbs rounding at the top of the range.
                pick = Some((light, f, w));
                if target < w {
                    break;
                }
                target -= w;
            }
        }
        let (light, f, w) = pick.expect("some light has a positive response");
        if self.shadow_visibility(s, light, counters) == 0.0 {
            return Rgb::BLACK;
        }
        f * (total / w)
    }

    /// Path-traced radiance leaving a first hit toward the viewer.
    ///
    /// Each bounce adds emission and a one-light direct estimate, then
    /// continues along either a cosine-weighted diffuse direction or the
    /// mirror direction. The lobe is picked with probability proportional
    /// to the largest channel of albedo and specular, which bounds each
    /// lobe weight by `max(albedo) + max(specular)`.
    pub fn path_trace_from(&self, first: Surface, key: SampleKey, counters: &mut RayCounters) -> Rgb {
        self.path_trace_observed(first, key, counters, |_, _| {})
    }

    /// [`path_trace_from`](Self::path_trace_from) reporting the throughput
    /// in effect at each bounce to `observe(bounce, throughput)`.
    pub fn path_trace_observed(
        &self,
        first: Surface,
        key: SampleKey,
        counters: &mut RayCounters,
        mut observe: impl FnMut(u32, Rgb),
    ) -> Rgb {
        let mut radiance = Rgb::BLACK;
        let mut throughput = Rgb::WHITE;
        let mut s = first;
        let mut bounce = 0u32;
        loop {
            observe(bounce, throughput);
            let mut rng = key.bounce(bounce);
            radiance += throughput * (s.material.emissive + self.sample_direct_light(&s, &mut rng, counters));
            if bounce >= self.settings.max_depth {
                break;
            }
            let (pa, ps) = (s.material.albedo.max_channel(), s.material.specular.max_channel());
            if pa + ps <= 0.0 {
                break;
            }
            let xi = rng.next_f64();
            let p_diffuse = pa / (pa + ps);
            let dir = if xi < p_diffuse {
                let d = cosine_hemisphere(s.point.normal, rng.next_f64(), rng.next_f64());
                // Cosine-weighted pdf cancels the Lambert cosine and 1/pi.
                throughput = throughput * s.material.albedo / p_diffuse;
                d
            } else {
                throughput = throughput * s.material.specular / (1.0 - p_diffuse);
                s.incoming.reflect(s.point.normal).normalize()
            };
            counters.indirect += 1;
            let ray = Ray::new(self.offset_origin(&s, dir), dir)
                .with_bounds(self.epsilon, f64::INFINITY)
                .with_depth(bounce + 1);
            bounce += 1;
            match self.closest(&ray) {
                Some(h) => s = self.surface(h, dir),
                None => {
                    observe(bounce, throughput);
                    radiance += throughput * self.environment(dir);
                    break;
                }
            }
        }
        radiance
    }
}

/// Cosine-weighted direction about unit `n` from two uniforms.
pub fn cosine_hemisphere(n: Vec3, u1: f64, u2: f64) -> Vec3 {
    let r = sqrt(u1);
    let phi = 2.0 * PI * u2;
    let (t, b) = n.orthonormal_basis();
    let z = sqrt((1.0 - u1).max(0.0));
    (t * (r * cos(phi)) + b * (r * sin(phi)) + n * z).normalize()
}

/// Sub-pixel offset in `[0,1)²` for sample `sample` of `spp`. Perfect-square
/// counts are stratified on a grid; others are uniform.
pub fn jitter(sample: u32, spp: u32, rng: &mut Rng) -> Vec2 {
    let k = sqrt(spp as f64) as u32;
    let (jx, jy) = (rng.next_f64(), rng.next_f64());
    if k * k == spp {
        let (sx, sy) = ((sample % k) as f64, (sample / k) as f64);
        Vec2::new((sx + jx) / k as f64, (sy + jy) / k as f64)
    } else {
        Vec2::new(jx, jy)
    }
}

/// Per-eye inputs for one frame.
#[derive(Clone, Copy)]
pub struct EyeFrame<'a> {
    pub eye: &'a Eye,
    pub dims: Dims,
    pub gbuffer: Option<&'a GBuffer>,
    /// Frame counter feeding the sample streams.
    pub frame: u32,
}

impl<'a> Tracer<'a> {
    /// Primary ray through continuous raster position `(x, y)`.
    pub fn primary_ray(&self, eye: &Eye, dims: Dims, x: f64, y: f64) -> Ray {
        let n = ndc_from_raster(x, y, dims);
        let dir = match self.settings.raygen_mode {
            RayGenMode::OptimizedExpression => eye.direction_optimized(n, &eye.params),
            RayGenMode::InverseMatrix | RayGenMode::GBufferDerived => eye.direction_inverse(n),
        };
        Ray::new(eye.origin, dir)
    }

    fn check_frame(&self, f: &EyeFrame) -> Result<(), TraceError> {
        self.settings.validate()?;
        match f.gbuffer {
            None if self.settings.raygen_mode == RayGenMode::GBufferDerived => Err(TraceError::MissingGBuffer),
            Some(g) if g.dims != f.dims => Err(TraceError::DimensionMismatch { expected: f.dims, found: g.dims }),
            _ => Ok(()),
        }
    }

    /// Resolves the first hit of a pixel and shades it with its material's
    /// effect. G-buffer texels supply the first hit in G-buffer mode, and
    /// in the other modes whenever the texel's material is raster-shaded.
    pub fn trace_pixel_dispatch(&self, f: &EyeFrame, x: u32, y: u32, counters: &mut RayCounters) -> Result<Rgb, TraceError> {
        self.check_frame(f)?;
        Ok(self.trace_pixel(f, x, y, counters))
    }

    /// As [`trace_pixel_dispatch`](Self::trace_pixel_dispatch) without
    /// validating the frame; callers check once per frame via
    /// [`validate_frame`](Self::validate_frame).
    pub fn trace_pixel(&self, f: &EyeFrame, x: u32, y: u32, counters: &mut RayCounters) -> Rgb {
        let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
        let texel = f.gbuffer.map(|g| g.get(x, y));
        let gbuffer_mode = self.settings.raygen_mode == RayGenMode::GBufferDerived;
        let from_gbuffer = match texel.and_then(|t| t.hit) {
            Some(h) => gbuffer_mode || self.scene.material(h.material).is_some_and(|m| m.effect.is_raster()),
            None => gbuffer_mode,
        };
        let first = if from_gbuffer {
            texel.and_then(|t| t.hit).map(|h| {
                let d = (h.position - f.eye.origin).normalize();
                (h, d)
            })
        } else {
            counters.primary += 1;
            let ray = self.primary_ray(f.eye, f.dims, cx, cy);
            self.closest(&ray).map(|h| (h, ray.direction))
        };
        let Some((hit, dir)) = first else {
            // A G-buffer miss still looks up the environment along the
            // inverse-matrix ray, which is what the primary ray would be.
            return self.environment(self.primary_ray(f.eye, f.dims, cx, cy).direction);
        };
        let s = self.surface(hit, dir);
        match s.material.effect {
            EffectId::Raster => self.shade_direct(&s, false, counters),
            EffectId::RasterShadows => self.shade_direct(&s, true, counters),
            EffectId::Mirror => self.shade_mirror(&s, 0, counters),
            EffectId::PathTraced => self.path_trace_pixel(f, x, y, s, from_gbuffer, counters),
        }
    }

    pub fn validate_frame(&self, f: &EyeFrame) -> Result<(), TraceError> {
        self.check_frame(f)
    }

    /// Mean of `spp` path samples. With a G-buffer first hit every sample
    /// starts there; otherwise each sample casts its own jittered primary.
    fn path_trace_pixel(&self, f: &EyeFrame, x: u32, y: u32, center: Surface, from_gbuffer: bool, counters: &mut RayCounters) -> Rgb {
        let spp = self.settings.spp;
        let pixel = y * f.dims.width + x;
        let mut sum = Rgb::BLACK;
        for sample in 0..spp {
            let key = SampleKey { seed: self.settings.rng_seed, pixel, frame: f.frame, sample };
            if from_gbuffer {
                sum += self.path_trace_from(center, key, counters);
                continue;
            }
            // Stream offset past every bounce index, reserved for the lens.
            let mut jr = key.bounce(u32::MAX);
            let j = jitter(sample, spp, &mut jr);
            let ray = self.primary_ray(f.eye, f.dims, x as f64 + j.x, y as f64 + j.y);
            counters.primary += 1;
            sum += match self.closest(&ray) {
                Some(h) => self.path_trace_from(self.surface(h, ray.direction), key, counters),
                None => self.environment(ray.direction),
            };
        }
        sum / spp as f64
    }

    /// Renders every pixel of one eye on the calling thread.
    pub fn render_eye(&self, f: &EyeFrame, counters: &mut RayCounters) -> Result<HdrImage, TraceError> {
        self.check_frame(f)?;
        let mut img = HdrImage::new(f.dims);
        for y in 0..f.dims.height {
            for x in 0..f.dims.width {
                img.set(x, y, self.trace_pixel(f, x, y, counters));
            }
        }
        Ok(img)
    }
}

/// Direct shading of a G-buffer: each covered texel gets the sum over
/// lights of its material response, optionally shadowed; uncovered texels
/// get the environment along the pixel's inverse-matrix ray.
pub fn shade_gbuffer_direct(
    gbuffer: &GBuffer,
    eye: &Eye,
    scene: &Scene,
    bvh: &SceneBvh,
    shadows: bool,
    counters: &mut RayCounters,
) -> HdrImage {
    let settings = TraceSettings { raygen_mode: RayGenMode::GBufferDerived, ..TraceSettings::default() };
    let tracer = Tracer::new(scene, bvh, &settings);
    let dims = gbuffer.dims;
    let mut img = HdrImage::new(dims);
    for y in 0..dims.height {
        for x in 0..dims.width {
            let c = match gbuffer.get(x, y).hit {
                Some(h) => {
                    let s = tracer.surface(h, (h.position - eye.origin).normalize());
                    tracer.shade_direct(&s, shadows, counters)
                }
                None => tracer.environment(eye.direction_inverse(ndc_from_raster(x as f64 + 0.5, y as f64 + 0.5, dims))),
            };
            img.set(x, y, c);
        }
    }
    img
}

/// Incremental average `history + (current - history) / frame_index`.
/// Frame index 1 returns `current` unchanged.
pub fn accumulate(history: &HdrImage, current: &HdrImage, frame_index: u32) -> Result<HdrImage, TraceError> {
    if history.dims != current.dims {
        return Err(TraceError::DimensionMismatch { expected: history.dims, found: current.dims });
    }
    if frame_index <= 1 {
        return Ok(current.clone());
    }
    let k = frame_index as f64;
    let pixels = history.pixels.iter().zip(&current.pixels).map(|(h, c)| *h + (*c - *h) / k).collect();
    Ok(HdrImage { dims: current.dims, pixels })
}

/// Progressive accumulation that restarts whenever the camera moves or the
/// scene changes.
#[derive(Debug, Clone, Default)]
pub struct Accumulator {
    history: Option<HdrImage>,
    frame_index: u32,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds in a frame and returns the running mean. `reset` discards the
    /// history first, as does a change of dimensions.
    pub fn push(&mut self, current: HdrImage, reset: bool) -> &HdrImage {
        let stale = reset || self.history.as_ref().is_none_or(|h| h.dims != current.dims);
        if stale {
            self.frame_index = 1;
            self.history = Some(current);
        } else {
            self.frame_index += 1;
            let h = self.history.as_ref().expect("history present when not stale");
            let next = accumulate(h, &current, self.frame_index).expect("dimensions checked");
            self.history = Some(next);
        }
        self.history.as_ref().expect("history just set")
    }

    pub fn reset(&mut self) {
        self.history = None;
        self.frame_index = 0;
    }

    /// Frames in the current average; 0 before the first push.
    pub fn frame_index(&self) -> u32 {
        self.frame_index
    }

    pub fn image(&self) -> Option<&HdrImage> {
        self.history.as_ref()
    }
}

/// Reinhard `c / (1 + c)` followed by the sRGB transfer curve, per channel.
pub fn tonemap(c: Rgb) -> [u8; 3] {
    c.to_array().map(tonemap_channel)
}

fn tonemap_channel(c: f64) -> u8 {
    // NaN and negative inputs map to black, infinity to white.
    let c = if c > 0.0 { c } else { 0.0 };
    let x = if c.is_infinite() { 1.0 } else { c / (1.0 + c) };
    let s = if x <= 0.003_130_8 { 12.92 * x } else { 1.055 * pow(x, 1.0 / 2.4) - 0.055 };
    let v = s * 255.0 + 0.5;
    if v >= 255.0 {
        255
    } else {
        v as u8
    }
}

pub fn tonemap_image(img: &HdrImage) -> Rgb8Image {
    let mut out = Rgb8Image::new(img.dims);
    for (dst, src) in out.data.chunks_exact_mut(3).zip(&img.pixels) {
        dst.copy_from_slice(&tonemap(*src));
    }
    out
}
