//! Image, G-buffer and statistics files.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayvr_core::gbuffer::GBuffer;
use rayvr_core::image::Rgb8Image;
use rayvr_core::math::Vec3;

use crate::error::{Error, Result};
use crate::render::FrameStats;

pub fn write_png(img: &Rgb8Image, path: &Path) -> Result<()> {
    let buf = image::RgbImage::from_raw(img.dims.width, img.dims.height, img.data.clone())
        .expect("buffer length matches dimensions");
    buf.save(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })
}

pub fn write_stats_json(stats: &FrameStats, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(stats).expect("stats serialize");
    std::fs::write(path, json + "\n").map_err(Error::io(path))
}

/// One CSV row per frame.
pub fn write_stats_csv(stats: &[FrameStats], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in stats {
        w.serialize(s.csv_row())?;
    }
    w.flush().map_err(Error::io(path))
}

/// G-buffer attribute written by `--dump-gbuffer`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Depth,
    Position,
    Normal,
    Material,
    Instance,
}

impl Channel {
    pub const ALL: [Channel; 5] = [Channel::Depth, Channel::Position, Channel::Normal, Channel::Material, Channel::Instance];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Depth => "depth",
            Channel::Position => "position",
            Channel::Normal => "normal",
            Channel::Material => "material",
            Channel::Instance => "instance",
        }
    }
}

impl FromStr for Channel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Channel::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = Channel::ALL.iter().map(|c| c.as_str()).collect();
            format!("unknown G-buffer channel '{s}', expected one of: {}", names.join(", "))
        })
    }
}

fn unit_to_u8(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Stable pseudo-random color per id.
fn id_color(id: u32) -> [u8; 3] {
    let h = rayvr_core::rng::splitmix64(id as u64 + 1);
    [(h >> 16) as u8 | 0x40, (h >> 24) as u8 | 0x40, (h >> 32) as u8 | 0x40]
}

/// Visualizes one channel; uncovered texels are black. Depth and position
/// are stretched over the covered range.
pub fn gbuffer_channel_image(gb: &GBuffer, ch: Channel) -> Rgb8Image {
    let mut out = Rgb8Image::new(gb.dims);
    let covered = || gb.texels.iter().filter_map(|t| t.hit.map(|h| (t.depth, h)));
    let (dmin, dmax) = covered().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (d, _)| (a.min(d), b.max(d)));
    let (pmin, pmax) = covered().fold((Vec3::splat(f64::INFINITY), Vec3::splat(f64::NEG_INFINITY)), |(a, b), (_, h)| {
        (a.min(h.position), b.max(h.position))
    });
    for (dst, t) in out.data.chunks_exact_mut(3).zip(&gb.texels) {
        let Some(h) = t.hit else { continue };
        let px = match ch {
            Channel::Depth => {
                let g = 1.0 - (t.depth - dmin) / (dmax - dmin).max(1e-12);
                [unit_to_u8(g); 3]
            }
            Channel::Position => {
                let span = (pmax - pmin).max(Vec3::splat(1e-12));
                let p = h.position - pmin;
                [unit_to_u8(p.x / span.x), unit_to_u8(p.y / span.y), unit_to_u8(p.z / span.z)]
            }
            Channel::Normal => {
                let n = h.normal * 0.5 + Vec3::splat(0.5);
                [unit_to_u8(n.x), unit_to_u8(n.y), unit_to_u8(n.z)]
            }
            Channel::Material => id_color(h.material),
            Channel::Instance => id_color(h.instance),
        };
        dst.copy_from_slice(&px);
    }
    out
}

/// `out.png` becomes `out.gbuffer-depth.png`, with an eye suffix in stereo.
pub fn gbuffer_dump_path(out: &Path, ch: Channel, eye: Option<&str>) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("frame");
    let eye = eye.map(|e| format!("-{e}")).unwrap_or_default();
    out.with_file_name(format!("{stem}.gbuffer-{}{eye}.png", ch.as_str()))
}
