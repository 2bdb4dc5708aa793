//! Frame execution: runs the pass graph for each eye on a worker pool and
//! records per-pass timings and ray counts.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use rayvr_core::accel::SceneBvh;
use rayvr_core::camera::{make_stereo_rig, Dims, FrustumOverride, Pose, ProjectionParams, StereoRig};
use rayvr_core::gbuffer::{GBuffer, RasterSetup, BAND_HEIGHT};
use rayvr_core::graph::{build_graph, PassKind, RenderGraph};
use rayvr_core::image::{HdrImage, Rgb8Image};
use rayvr_core::scene::{CameraConfig, Scene};
use rayvr_core::tracer::{tonemap, Accumulator, EyeFrame, RayCounters, TraceSettings, Tracer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Camera placement and output layout for a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    /// Pose of the point midway between the eyes.
    pub pose: Pose,
    pub ipd: f64,
    pub fov_y_deg: f64,
    pub dims: Dims,
    pub stereo: bool,
    /// Per-eye frustum shifts; `None` for symmetric frusta.
    pub frustum: Option<FrustumOverride>,
}

impl View {
    pub fn from_camera(c: &CameraConfig, dims: Dims, stereo: bool) -> Result<Self> {
        let pose = Pose::look_at(c.position, c.look_at, c.up)?;
        Ok(Self { pose, ipd: c.ipd, fov_y_deg: c.fov_y_deg, dims, stereo, frustum: None })
    }

    pub fn projection(&self) -> Result<ProjectionParams> {
        Ok(ProjectionParams::for_rays(self.fov_y_deg.to_radians(), self.dims.aspect())?)
    }

    pub fn rig(&self) -> Result<StereoRig> {
        let ipd = if self.stereo { self.ipd } else { 0.0 };
        Ok(make_stereo_rig(&self.pose, ipd, &self.projection()?, self.frustum)?)
    }
}

/// Timings and ray counts of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    /// Wall-clock milliseconds per pass, summed over eyes. `compose` is the
    /// final side-by-side assembly.
    pub passes: BTreeMap<String, f64>,
    pub total_ms: f64,
    pub rays: RayCounts,
    /// Frames rendered by this renderer, starting at 0.
    pub frame: u32,
    /// Frames since the last accumulation reset, starting at 1.
    pub frame_index: u32,
    pub accumulating: bool,
    pub width: u32,
    pub height: u32,
    pub stereo: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RayCounts {
    pub primary: u64,
    pub shadow: u64,
    pub reflection: u64,
    pub indirect: u64,
}

impl From<RayCounters> for RayCounts {
    fn from(c: RayCounters) -> Self {
        Self { primary: c.primary, shadow: c.shadow, reflection: c.reflection, indirect: c.indirect }
    }
}

pub const COMPOSE: &str = "compose";

impl FrameStats {
    pub fn pass_ms(&self, name: &str) -> f64 {
        self.passes.get(name).copied().unwrap_or(0.0)
    }

    pub fn fps_equivalent(&self) -> f64 {
        1000.0 / self.total_ms
    }

    pub fn csv_row(&self) -> StatsRow {
        StatsRow {
            frame: self.frame,
            frame_index: self.frame_index,
            width: self.width,
            height: self.height,
            stereo: self.stereo,
            total_ms: self.total_ms,
            gbuffer_ms: self.pass_ms(PassKind::GBuffer.as_str()),
            trace_ms: self.pass_ms(PassKind::Trace.as_str()),
            accumulate_ms: self.pass_ms(PassKind::Accumulate.as_str()),
            tonemap_ms: self.pass_ms(PassKind::Tonemap.as_str()),
            compose_ms: self.pass_ms(COMPOSE),
            primary_rays: self.rays.primary,
            shadow_rays: self.rays.shadow,
            reflection_rays: self.rays.reflection,
            indirect_rays: self.rays.indirect,
        }
    }
}

/// Flat per-frame record for CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub frame: u32,
    pub frame_index: u32,
    pub width: u32,
    pub height: u32,
    pub stereo: bool,
    pub total_ms: f64,
    pub gbuffer_ms: f64,
    pub trace_ms: f64,
    pub accumulate_ms: f64,
    pub tonemap_ms: f64,
    pub compose_ms: f64,
    pub primary_rays: u64,
    pub shadow_rays: u64,
    pub reflection_rays: u64,
    pub indirect_rays: u64,
}

/// Output of [`Renderer::render`].
#[derive(Debug, Clone)]
pub struct Frame {
    /// Per-eye radiance, accumulated when the graph accumulates. One entry
    /// in mono, left then right in stereo.
    pub eyes: Vec<HdrImage>,
    /// Per-eye G-buffers, empty when the graph has no G-buffer pass.
    pub gbuffers: Vec<GBuffer>,
    /// Tone-mapped image, side by side in stereo.
    pub display: Rgb8Image,
    pub stats: FrameStats,
    pub graph: RenderGraph,
}

/// Everything whose change invalidates accumulated history.
#[derive(Debug, Clone, PartialEq)]
struct HistoryKey {
    view: View,
    revision: u64,
    settings: TraceSettings,
}

impl HistoryKey {
    fn matches(&self, o: &HistoryKey) -> bool {
        self.view.pose.max_abs_diff(&o.view.pose) <= 1e-9
            && View { pose: o.view.pose, ..self.view.clone() } == o.view
            && self.revision == o.revision
            && self.settings == o.settings
    }
}

/// Renders frames with a fixed worker pool, keeping per-eye accumulation
/// history between calls.
pub struct Renderer {
    pool: rayon::ThreadPool,
    accum: [Accumulator; 2],
    history: Option<HistoryKey>,
    frame: u32,
    since_reset: u32,
}

impl Renderer {
    /// `workers = 0` uses one worker per available core.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
        Ok(Self { pool, accum: Default::default(), history: None, frame: 0, since_reset: 0 })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Frames rendered so far; also the number the next frame will carry.
    pub fn frames_rendered(&self) -> u32 {
        self.frame
    }

    /// Forgets accumulated history; the next frame starts a new average.
    pub fn reset(&mut self) {
        self.history = None;
    }

    pub fn render(&mut self, scene: &Scene, bvh: &SceneBvh, view: &View, settings: &TraceSettings) -> Result<Frame> {
        settings.validate()?;
        let start = Instant::now();
        let rig = view.rig()?;
        let graph = build_graph(settings, scene);
        let key = HistoryKey { view: view.clone(), revision: scene.revision(), settings: *settings };
        let reset = !self.history.as_ref().is_some_and(|h| h.matches(&key));
        self.history = Some(key);
        self.since_reset = if reset { 1 } else { self.since_reset + 1 };
        let accumulating = graph.has(PassKind::Accumulate);
        if !accumulating {
            self.accum.iter_mut().for_each(Accumulator::reset);
        }

        let dims = view.dims;
        let eyes = if view.stereo { vec![rig.left, rig.right] } else { vec![rig.left] };
        let tracer = Tracer::new(scene, bvh, settings);
        let mut passes: BTreeMap<String, f64> = BTreeMap::new();
        let mut counters = RayCounters::default();
        let mut radiance_out = Vec::with_capacity(eyes.len());
        let mut gbuffers = Vec::new();
        let mut displays = Vec::with_capacity(eyes.len());
        for (i, eye) in eyes.iter().enumerate() {
            let mut gbuffer: Option<GBuffer> = None;
            let mut radiance: Option<HdrImage> = None;
            let mut display: Option<Rgb8Image> = None;
            for pass in graph.passes() {
                let t0 = Instant::now();
                match pass.kind {
                    PassKind::GBuffer => gbuffer = Some(self.rasterize(scene, eye, dims)),
                    PassKind::Trace => {
                        let f = EyeFrame { eye, dims, gbuffer: gbuffer.as_ref(), frame: self.frame };
                        tracer.validate_frame(&f)?;
                        let (img, c) = self.trace(&tracer, &f);
                        counters += c;
                        radiance = Some(img);
                    }
                    PassKind::Accumulate => {
                        let current = radiance.take().expect("trace precedes accumulate");
                        radiance = Some(self.accum[i].push(current, reset).clone());
                    }
                    PassKind::Tonemap => {
                        display = Some(self.tonemap(radiance.as_ref().expect("trace precedes tonemap")));
                    }
                }
                *passes.entry(pass.kind.as_str().to_string()).or_default() += ms_since(t0);
            }
            radiance_out.push(radiance.expect("graph always traces"));
            gbuffers.extend(gbuffer);
            displays.push(display.expect("graph always tone maps"));
        }
        let t0 = Instant::now();
        let display = match displays.as_slice() {
            [l, r] => Rgb8Image::side_by_side(l, r),
            _ => displays.pop().expect("one eye"),
        };
        passes.insert(COMPOSE.to_string(), ms_since(t0));

        let stats = FrameStats {
            passes,
            total_ms: ms_since(start),
            rays: counters.into(),
            frame: self.frame,
            frame_index: self.since_reset,
            accumulating,
            width: dims.width,
            height: dims.height,
            stereo: view.stereo,
        };
        self.frame = self.frame.wrapping_add(1);
        Ok(Frame { eyes: radiance_out, gbuffers, display, stats, graph })
    }

    fn rasterize(&self, scene: &Scene, eye: &rayvr_core::Eye, dims: Dims) -> GBuffer {
        let setup = RasterSetup::new(scene, eye, dims);
        let mut gb = GBuffer::empty(dims);
        let band_len = (BAND_HEIGHT * dims.width) as usize;
        self.pool.install(|| {
            gb.texels
                .par_chunks_mut(band_len)
                .enumerate()
                .for_each(|(band, out)| setup.rasterize_band(scene, band, out))
        });
        gb
    }

    fn trace(&self, tracer: &Tracer, f: &EyeFrame) -> (HdrImage, RayCounters) {
        let mut img = HdrImage::new(f.dims);
        let width = f.dims.width as usize;
        let counters = self.pool.install(|| {
            img.pixels
                .par_chunks_mut(width)
                .enumerate()
                .map(|(y, row)| {
                    let mut c = RayCounters::default();
                    for (x, px) in row.iter_mut().enumerate() {
                        *px = tracer.trace_pixel(f, x as u32, y as u32, &mut c);
                    }
                    c
                })
                .reduce(RayCounters::default, |mut a, b| {
                    a += b;
                    a
                })
        });
        (img, counters)
    }

    fn tonemap(&self, img: &HdrImage) -> Rgb8Image {
        let mut out = Rgb8Image::new(img.dims);
        let width = img.dims.width as usize;
        self.pool.install(|| {
            out.data.par_chunks_mut(width * 3).zip(img.pixels.par_chunks(width)).for_each(|(dst, src)| {
                for (d, s) in dst.chunks_exact_mut(3).zip(src) {
                    d.copy_from_slice(&tonemap(*s));
                }
            })
        });
        out
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}
