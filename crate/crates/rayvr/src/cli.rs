//! Command line: `render`, `bench` and `serve`.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayvr_core::accel::SceneBvh;
use rayvr_core::camera::{Dims, RayGenMode};
use rayvr_core::gbuffer::rasterize_gbuffer;
use rayvr_core::scene::{EffectId, Scene};
use rayvr_core::tracer::TraceSettings;

use crate::bench::{self, BenchConfig};
use crate::error::{Error, Result};
use crate::output::{self, Channel};
use crate::render::{Frame, FrameStats, Renderer, View};
use crate::scene_file::load_scene;
use crate::{named, service};

#[derive(Debug, Parser)]
#[command(name = "rayvr", version, about = "Stereo hybrid ray tracer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene to a PNG.
    Render(RenderArgs),
    /// Run the benchmark matrix and print a report.
    Bench(BenchArgs),
    /// Serve live frames and accept tuning commands over WebSocket.
    Serve(ServeArgs),
}

pub fn parse_size(s: &str) -> Result<Dims, String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("size '{s}' is not WxH"))?;
    let w: u32 = w.parse().map_err(|_| format!("bad width in '{s}'"))?;
    let h: u32 = h.parse().map_err(|_| format!("bad height in '{s}'"))?;
    if w == 0 || h == 0 {
        return Err(format!("size '{s}' must be positive"));
    }
    Ok(Dims::new(w, h))
}

fn parse_mode(s: &str) -> Result<RayGenMode, String> {
    named::parse(s)
}

fn parse_effect(s: &str) -> Result<EffectId, String> {
    named::parse(s)
}

/// What to dump from the G-buffer: one channel or all of them.
#[derive(Debug, Clone, PartialEq)]
pub enum DumpChannels {
    All,
    One(Channel),
}

fn parse_dump(s: &str) -> Result<DumpChannels, String> {
    if s == "all" {
        Ok(DumpChannels::All)
    } else {
        s.parse().map(DumpChannels::One)
    }
}

/// Flags shared by `render` and `serve`.
#[derive(Debug, Clone, Args)]
pub struct RenderFlags {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value = "512x512", value_parser = parse_size)]
    pub size: Dims,
    #[arg(long)]
    pub stereo: bool,
    /// Eye separation; defaults to the scene camera's.
    #[arg(long)]
    pub ipd: Option<f64>,
    /// optimized, inverse or gbuffer.
    #[arg(long, default_value = "inverse", value_parser = parse_mode)]
    pub mode: RayGenMode,
    /// Force every material to one effect: raster, raster_shadows, mirror or path.
    #[arg(long, value_parser = parse_effect)]
    pub effect_override: Option<EffectId>,
    #[arg(long, default_value_t = 1)]
    pub spp: u32,
    #[arg(long, default_value_t = 4)]
    pub max_depth: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

impl RenderFlags {
    pub fn settings(&self) -> TraceSettings {
        TraceSettings { max_depth: self.max_depth, spp: self.spp, rng_seed: self.seed, raygen_mode: self.mode }
    }

    /// Loads the scene with the effect override applied.
    pub fn load(&self) -> Result<Scene> {
        let mut scene = load_scene(&self.scene)?;
        if let Some(e) = self.effect_override {
            scene.override_effects(e);
        }
        Ok(scene)
    }

    pub fn view(&self, scene: &Scene) -> Result<View> {
        let mut view = View::from_camera(&scene.camera, self.size, self.stereo)?;
        if let Some(ipd) = self.ipd {
            view.ipd = ipd;
        }
        Ok(view)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub flags: RenderFlags,
    /// Frames to render; path-traced materials accumulate across them.
    #[arg(long, default_value_t = 1)]
    pub frames: u32,
    #[arg(long)]
    pub out: PathBuf,
    /// Stats of the last frame as JSON, or one row per frame when the
    /// path ends in `.csv`.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Write G-buffer channel images: depth, position, normal, material,
    /// instance or all.
    #[arg(long, value_parser = parse_dump)]
    pub dump_gbuffer: Option<DumpChannels>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Scene files; each runs the full matrix.
    #[arg(long = "scene", required = true, num_args = 1..)]
    pub scenes: Vec<PathBuf>,
    #[arg(long, default_value = "512x512", value_parser = parse_size)]
    pub size: Dims,
    /// Timed frames per row, at least 5.
    #[arg(long, default_value_t = 5)]
    pub frames: usize,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    #[arg(long, default_value_t = 1)]
    pub spp: u32,
    /// Recursion limit for mirror rows.
    #[arg(long, default_value_t = 1)]
    pub mirror_depth: u32,
    /// Bounce limit for path-traced rows.
    #[arg(long, default_value_t = 4)]
    pub path_depth: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// CSV file for the rows.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub flags: RenderFlags,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Samples per pixel for snapshot stills.
    #[arg(long, default_value_t = 64)]
    pub snapshot_spp: u32,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Render(a) => render(&a).map(|_| ()),
        Command::Bench(a) => {
            let rows = run_bench(&a)?;
            print!("{}", bench::format_report(&rows));
            Ok(())
        }
        Command::Serve(a) => serve(a),
    }
}

/// Renders `frames` frames and writes the outputs of the last one.
pub fn render(a: &RenderArgs) -> Result<Frame> {
    if a.frames == 0 {
        return Err(Error::InvalidArgument("--frames must be at least 1".into()));
    }
    let scene = a.flags.load()?;
    let bvh = SceneBvh::build(&scene)?;
    let view = a.flags.view(&scene)?;
    let settings = a.flags.settings();
    let mut renderer = Renderer::new(a.flags.workers)?;
    let mut stats: Vec<FrameStats> = Vec::new();
    let mut last = None;
    for _ in 0..a.frames {
        let f = renderer.render(&scene, &bvh, &view, &settings)?;
        stats.push(f.stats.clone());
        last = Some(f);
    }
    let frame = last.expect("at least one frame");
    output::write_png(&frame.display, &a.out)?;
    if let Some(p) = &a.stats {
        if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            output::write_stats_csv(&stats, p)?;
        } else {
            output::write_stats_json(&frame.stats, p)?;
        }
    }
    if let Some(dump) = &a.dump_gbuffer {
        dump_gbuffers(&scene, &view, &frame, dump, &a.out)?;
    }
    Ok(frame)
}

fn dump_gbuffers(scene: &Scene, view: &View, frame: &Frame, dump: &DumpChannels, out: &Path) -> Result<()> {
    let gbuffers = if frame.gbuffers.is_empty() {
        let rig = view.rig()?;
        let eyes = if view.stereo { vec![rig.left, rig.right] } else { vec![rig.left] };
        eyes.iter().map(|e| rasterize_gbuffer(scene, e, view.dims)).collect()
    } else {
        frame.gbuffers.clone()
    };
    let channels = match dump {
        DumpChannels::All => Channel::ALL.to_vec(),
        DumpChannels::One(c) => vec![*c],
    };
    for ch in channels {
        for (i, gb) in gbuffers.iter().enumerate() {
            let eye = view.stereo.then_some(if i == 0 { "left" } else { "right" });
            output::write_png(&output::gbuffer_channel_image(gb, ch), &output::gbuffer_dump_path(out, ch, eye))?;
        }
    }
    Ok(())
}

pub fn run_bench(a: &BenchArgs) -> Result<Vec<bench::BenchRow>> {
    let scenes = a
        .scenes
        .iter()
        .map(|p| {
            let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("scene").to_string();
            load_scene(p).map(|s| (name, s))
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = BenchConfig {
        dims: a.size,
        frames: a.frames,
        warmup: a.warmup,
        workers: a.workers,
        seed: a.seed,
        spp: a.spp,
        mirror_depth: a.mirror_depth,
        path_depth: a.path_depth,
    };
    let rows = bench::run(&scenes, &cfg)?;
    if let Some(p) = &a.out {
        bench::write_csv(&rows, p)?;
    }
    Ok(rows)
}

fn serve(a: ServeArgs) -> Result<()> {
    let scene = a.flags.load()?;
    let view = a.flags.view(&scene)?;
    let cfg = service::SessionConfig {
        scene,
        view,
        settings: a.flags.settings(),
        workers: a.flags.workers,
        snapshot_spp: a.snapshot_spp,
    };
    let rt = tokio::runtime::Runtime::new().map_err(Error::io("tokio runtime"))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.bind).await.map_err(Error::io(a.bind.to_string()))?;
        eprintln!("serving on ws://{}/ws", listener.local_addr().map_err(Error::io(a.bind.to_string()))?);
        service::serve(listener, cfg).await
    })
}
