//! JSON messages of the tuning protocol. `docs/protocol.md` describes them
//! with examples.

use rayvr_core::camera::RayGenMode;
use rayvr_core::scene::{EffectId, Light, Scene};
use serde::{Deserialize, Serialize};

use crate::named;
use crate::render::{FrameStats, View};
use crate::scene_file::LightSpec;
use rayvr_core::tracer::TraceSettings;

/// A client command with an optional sequence number echoed in replies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    #[serde(flatten)]
    pub command: Command,
}

/// Enum-valued fields stay strings here so that bad values get a
/// structured error naming the field rather than a parse failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Command {
    SetEffect {
        material_id: u32,
        effect: String,
    },
    SetMode {
        raygen_mode: String,
    },
    SetCamera {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        position: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        look_at: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        up: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ipd: Option<f64>,
    },
    SetQuality {
        /// `[width, height]` of one eye.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        size: Option<[u32; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spp: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_depth: Option<u32>,
    },
    Snapshot {},
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SetEffect { .. } => "set_effect",
            Command::SetMode { .. } => "set_mode",
            Command::SetCamera { .. } => "set_camera",
            Command::SetQuality { .. } => "set_quality",
            Command::Snapshot {} => "snapshot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Descriptor(Descriptor),
    Stats(FrameStats),
    /// The command was applied; `frame` is the first frame rendered with it.
    Ack {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seq: Option<u64>,
        command: String,
        frame: u32,
    },
    Error(ErrorReply),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReply {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    /// `bad_request`, `unknown_material` or `invalid_value`.
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

impl ErrorReply {
    pub fn bad_request(message: impl Into<String>) -> Self {
        Self { seq: None, code: "bad_request".into(), id: None, field: None, message: message.into() }
    }

    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        Self { seq: None, code: "invalid_value".into(), id: None, field: Some(field.into()), message: message.into() }
    }

    pub fn unknown_material(id: u32) -> Self {
        Self {
            seq: None,
            code: "unknown_material".into(),
            id: Some(id),
            field: Some("material_id".into()),
            message: format!("no material with id {id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialInfo {
    pub id: u32,
    #[serde(with = "named")]
    pub effect: EffectId,
    pub albedo: [f64; 3],
    pub specular: [f64; 3],
    pub emissive: [f64; 3],
    pub alpha: f64,
    pub shininess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraInfo {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub up: [f64; 3],
    pub fov_y_deg: f64,
    pub ipd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingsInfo {
    #[serde(with = "named")]
    pub raygen_mode: RayGenMode,
    pub width: u32,
    pub height: u32,
    pub stereo: bool,
    pub spp: u32,
    pub max_depth: u32,
}

/// Session state sent on connect and after every applied change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub materials: Vec<MaterialInfo>,
    pub lights: Vec<LightSpec>,
    pub camera: CameraInfo,
    pub settings: SettingsInfo,
    pub effects: Vec<String>,
    pub raygen_modes: Vec<String>,
}

impl Descriptor {
    pub fn new(scene: &Scene, camera: CameraInfo, view: &View, settings: &TraceSettings) -> Self {
        let materials = scene
            .materials()
            .iter()
            .map(|m| MaterialInfo {
                id: m.id,
                effect: m.effect,
                albedo: m.albedo.to_array(),
                specular: m.specular.to_array(),
                emissive: m.emissive.to_array(),
                alpha: m.alpha,
                shininess: m.shininess,
            })
            .collect();
        let lights = scene
            .lights()
            .iter()
            .map(|l| match *l {
                Light::Point { position, intensity } => {
                    LightSpec::Point { position: position.to_array(), intensity: intensity.to_array() }
                }
                Light::Directional { direction, intensity } => {
                    LightSpec::Directional { direction: direction.to_array(), intensity: intensity.to_array() }
                }
            })
            .collect();
        Self {
            materials,
            lights,
            camera,
            settings: SettingsInfo {
                raygen_mode: settings.raygen_mode,
                width: view.dims.width,
                height: view.dims.height,
                stereo: view.stereo,
                spp: settings.spp,
                max_depth: settings.max_depth,
            },
            effects: EffectId::ALL.iter().map(|e| e.as_str().to_string()).collect(),
            raygen_modes: RayGenMode::ALL.iter().map(|m| m.as_str().to_string()).collect(),
        }
    }
}

/// JSON header of a binary frame message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameHeader {
    /// `frame` for the live stream, `snapshot` for a requested still.
    #[serde(rename = "type")]
    pub kind: String,
    pub frame: u32,
    pub frame_index: u32,
    /// Size of the RGB8 payload image.
    pub width: u32,
    pub height: u32,
    /// `mono` or `side_by_side` (left eye in the left half).
    pub layout: String,
}

/// `[u32 LE header length][JSON header][RGB8 rows, top to bottom]`.
pub fn encode_frame(header: &FrameHeader, rgb: &[u8]) -> Vec<u8> {
    let json = serde_json::to_vec(header).expect("header serializes");
    let mut out = Vec::with_capacity(4 + json.len() + rgb.len());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(rgb);
    out
}

/// Splits a binary frame into header and pixels.
pub fn decode_frame(bytes: &[u8]) -> Result<(FrameHeader, &[u8]), String> {
    let len_bytes: [u8; 4] = bytes.get(..4).ok_or("frame shorter than its length prefix")?.try_into().expect("4 bytes");
    let len = u32::from_le_bytes(len_bytes) as usize;
    let json = bytes.get(4..4 + len).ok_or("frame shorter than its header")?;
    let header: FrameHeader = serde_json::from_slice(json).map_err(|e| e.to_string())?;
    let rgb = &bytes[4 + len..];
    if rgb.len() != header.width as usize * header.height as usize * 3 {
        return Err(format!("payload is {} bytes, header says {}x{}", rgb.len(), header.width, header.height));
    }
    Ok((header, rgb))
}
