//! Benchmark matrix: stereo and G-buffer overhead, and per-effect cost.

use std::fmt::Write as _;
use std::path::Path;

use rayvr_core::accel::SceneBvh;
use rayvr_core::camera::{Dims, RayGenMode};
use rayvr_core::scene::{EffectId, Scene};
use rayvr_core::tracer::TraceSettings;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::named;
use crate::render::{Renderer, View};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Table {
    /// Mono and stereo under a raster control, inverse-matrix rays and
    /// G-buffer first hits.
    StereoOverhead,
    /// Stereo G-buffer rendering with every material forced to one effect.
    EffectCost,
}

impl Table {
    pub fn title(self) -> &'static str {
        match self {
            Table::StereoOverhead => "G-buffer pre-pass and stereo impact",
            Table::EffectCost => "Effect impact",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub dims: Dims,
    /// Timed frames per row, at least 5.
    pub frames: usize,
    /// Untimed frames rendered first.
    pub warmup: usize,
    pub workers: usize,
    pub seed: u64,
    pub spp: u32,
    /// Recursion limit for mirror rows.
    pub mirror_depth: u32,
    /// Bounce limit for path-traced rows.
    pub path_depth: u32,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { dims: Dims::new(512, 512), frames: 5, warmup: 1, workers: 0, seed: 0, spp: 1, mirror_depth: 1, path_depth: 4 }
    }
}

/// One cell of the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub table: Table,
    pub label: &'static str,
    pub stereo: bool,
    pub mode: RayGenMode,
    pub effect: EffectId,
}

/// Experiment rows per scene, in report order.
pub fn matrix() -> Vec<Experiment> {
    let mut rows = Vec::new();
    for stereo in [false, true] {
        for (label, mode, effect) in [
            ("Raster", RayGenMode::GBufferDerived, EffectId::Raster),
            ("Inverse matrix", RayGenMode::InverseMatrix, EffectId::Mirror),
            ("G-Buffer", RayGenMode::GBufferDerived, EffectId::Mirror),
        ] {
            rows.push(Experiment { table: Table::StereoOverhead, label, stereo, mode, effect });
        }
    }
    for (label, effect) in [
        ("Raster", EffectId::Raster),
        ("Raster + shadows", EffectId::RasterShadows),
        ("Mirror reflections + shadows", EffectId::Mirror),
        ("Path tracing", EffectId::PathTraced),
    ] {
        rows.push(Experiment { table: Table::EffectCost, label, stereo: true, mode: RayGenMode::GBufferDerived, effect });
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub table: Table,
    pub scene: String,
    pub config: String,
    pub stereo: bool,
    #[serde(with = "named")]
    pub mode: RayGenMode,
    #[serde(with = "named")]
    pub effect: EffectId,
    pub width: u32,
    pub height: u32,
    pub frames: usize,
    pub mean_ms: f64,
    pub stdev_ms: f64,
    /// `1000 / mean_ms`.
    pub fps_equivalent: f64,
    pub rays_per_frame: f64,
}

/// Sample mean and standard deviation.
pub fn mean_stdev(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

impl BenchConfig {
    pub fn settings_for(&self, exp: &Experiment) -> TraceSettings {
        let max_depth = match exp.effect {
            EffectId::PathTraced => self.path_depth,
            _ => self.mirror_depth,
        };
        TraceSettings { max_depth, spp: self.spp, rng_seed: self.seed, raygen_mode: exp.mode }
    }

    fn validate(&self) -> Result<()> {
        if self.frames < 5 {
            return Err(Error::InvalidArgument("benchmarks average at least 5 frames".into()));
        }
        Ok(())
    }
}

/// Times one experiment: all materials forced to its effect, rendered
/// from the scene camera.
pub fn run_experiment(name: &str, base: &Scene, bvh: &SceneBvh, exp: &Experiment, cfg: &BenchConfig) -> Result<BenchRow> {
    cfg.validate()?;
    let mut scene = base.clone();
    scene.override_effects(exp.effect);
    let settings = cfg.settings_for(exp);
    let view = View::from_camera(&scene.camera, cfg.dims, exp.stereo)?;
    let mut renderer = Renderer::new(cfg.workers)?;
    for _ in 0..cfg.warmup {
        renderer.render(&scene, bvh, &view, &settings)?;
    }
    let mut ms = Vec::with_capacity(cfg.frames);
    let mut rays = 0u64;
    for _ in 0..cfg.frames {
        let f = renderer.render(&scene, bvh, &view, &settings)?;
        ms.push(f.stats.total_ms);
        let r = f.stats.rays;
        rays += r.primary + r.shadow + r.reflection + r.indirect;
    }
    let (mean_ms, stdev_ms) = mean_stdev(&ms);
    Ok(BenchRow {
        table: exp.table,
        scene: name.to_string(),
        config: exp.label.to_string(),
        stereo: exp.stereo,
        mode: exp.mode,
        effect: exp.effect,
        width: cfg.dims.width,
        height: cfg.dims.height,
        frames: cfg.frames,
        mean_ms,
        stdev_ms,
        fps_equivalent: 1000.0 / mean_ms,
        rays_per_frame: rays as f64 / cfg.frames as f64,
    })
}

/// Runs the full matrix on each scene.
pub fn run(scenes: &[(String, Scene)], cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (name, scene) in scenes {
        let bvh = SceneBvh::build(scene)?;
        for exp in matrix() {
            rows.push(run_experiment(name, scene, &bvh, &exp, cfg)?);
        }
    }
    Ok(rows)
}

/// Plain-text report grouped by scene and table.
pub fn format_report(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let mut scenes: Vec<&str> = rows.iter().map(|r| r.scene.as_str()).collect();
    scenes.dedup();
    for scene in scenes {
        for table in [Table::StereoOverhead, Table::EffectCost] {
            let rs: Vec<&BenchRow> = rows.iter().filter(|r| r.scene == scene && r.table == table).collect();
            let Some(first) = rs.first() else { continue };
            let _ = writeln!(out, "{} - {scene} ({}x{}, {} frames)", table.title(), first.width, first.height, first.frames);
            let _ = writeln!(out, "  {:<30} {:<7} {:>20} {:>9}", "config", "stereo", "ms/frame", "fps-eq");
            for r in rs {
                let ms = format!("{:.2} ± {:.2}", r.mean_ms, r.stdev_ms);
                let stereo = if r.stereo { "yes" } else { "no" };
                let _ = writeln!(out, "  {:<30} {:<7} {:>20} {:>9.1}", r.config, stereo, ms, r.fps_equivalent);
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_csv(rows: &[BenchRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(Error::io(path))
}
