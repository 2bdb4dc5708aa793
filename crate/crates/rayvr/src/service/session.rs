//! The render loop: applies queued commands at frame boundaries, renders
//! and publishes frames and stats.

use std::sync::mpsc::{Receiver, TryRecvError};
use std::sync::{Arc, RwLock};

use axum::extract::ws::Message;
use rayvr_core::accel::SceneBvh;
use rayvr_core::camera::{Dims, Pose, RayGenMode};
use rayvr_core::math::Vec3;
use rayvr_core::scene::{EffectId, Scene};
use rayvr_core::tracer::TraceSettings;
use tokio::sync::{broadcast, mpsc};

use super::protocol::{encode_frame, CameraInfo, Command, Descriptor, ErrorReply, FrameHeader, ServerMessage};
use crate::error::Result;
use crate::named;
use crate::render::{Frame, Renderer, View};

/// Largest accepted eye width or height.
pub const MAX_SIZE: u32 = 4096;

pub type Reply = mpsc::UnboundedSender<Message>;

pub enum Request {
    /// A new client; it is sent the current descriptor.
    Subscribe(Reply),
    Command { seq: Option<u64>, command: Command, reply: Reply },
}

/// Everything needed to start a session.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub scene: Scene,
    pub view: View,
    pub settings: TraceSettings,
    pub workers: usize,
    pub snapshot_spp: u32,
}

pub fn text(msg: &ServerMessage) -> Message {
    Message::Text(serde_json::to_string(msg).expect("server messages serialize").into())
}

pub(super) struct Session {
    scene: Scene,
    bvh: SceneBvh,
    view: View,
    look_at: Vec3,
    up: Vec3,
    settings: TraceSettings,
    renderer: Renderer,
    workers: usize,
    snapshot_spp: u32,
    frames: broadcast::Sender<Message>,
    /// Reliable per-client channels for descriptor updates, which must not
    /// be skipped like frames.
    clients: Vec<Reply>,
    descriptor: Arc<RwLock<String>>,
}

/// What applying a command asks of the loop.
enum Effect {
    None,
    DescriptorChanged,
    Snapshot,
}

impl Session {
    pub(super) fn new(cfg: SessionConfig, frames: broadcast::Sender<Message>, descriptor: Arc<RwLock<String>>) -> Result<Self> {
        cfg.settings.validate()?;
        let bvh = SceneBvh::build(&cfg.scene)?;
        let renderer = Renderer::new(cfg.workers)?;
        let camera = cfg.scene.camera;
        let s = Self {
            look_at: camera.look_at,
            up: camera.up,
            scene: cfg.scene,
            bvh,
            view: cfg.view,
            settings: cfg.settings,
            renderer,
            workers: cfg.workers,
            snapshot_spp: cfg.snapshot_spp.max(1),
            frames,
            clients: Vec::new(),
            descriptor,
        };
        s.store_descriptor();
        Ok(s)
    }

    fn camera_info(&self) -> CameraInfo {
        CameraInfo {
            position: self.view.pose.position.to_array(),
            look_at: self.look_at.to_array(),
            up: self.up.to_array(),
            fov_y_deg: self.view.fov_y_deg,
            ipd: self.view.ipd,
        }
    }

    fn descriptor_message(&self) -> ServerMessage {
        ServerMessage::Descriptor(Descriptor::new(&self.scene, self.camera_info(), &self.view, &self.settings))
    }

    fn store_descriptor(&self) {
        let json = serde_json::to_string(&self.descriptor_message()).expect("descriptor serializes");
        *self.descriptor.write().expect("descriptor lock") = json;
    }

    /// Runs until every request sender is gone.
    pub(super) fn run(mut self, requests: Receiver<Request>) {
        loop {
            let mut batch = Vec::new();
            if self.frames.receiver_count() == 0 {
                // Idle without viewers; wake on the next request.
                match requests.recv() {
                    Ok(r) => batch.push(r),
                    Err(_) => return,
                }
            }
            loop {
                match requests.try_recv() {
                    Ok(r) => batch.push(r),
                    Err(TryRecvError::Empty) => break,
                    Err(TryRecvError::Disconnected) => return,
                }
            }
            self.apply_batch(batch);
            if self.frames.receiver_count() == 0 {
                continue;
            }
            match self.renderer.render(&self.scene, &self.bvh, &self.view, &self.settings) {
                Ok(frame) => self.publish(&frame),
                Err(e) => {
                    let _ = self.frames.send(text(&ServerMessage::Error(ErrorReply::bad_request(format!("render failed: {e}")))));
                }
            }
        }
    }

    /// Applies every command of a batch before the next frame renders, so
    /// no frame sees a partial batch.
    fn apply_batch(&mut self, batch: Vec<Request>) {
        let mut changed = false;
        let mut snapshots = Vec::new();
        // Frame number the next render will carry.
        let next = self.next_frame();
        for req in batch {
            match req {
                Request::Subscribe(reply) => {
                    if reply.send(text(&self.descriptor_message())).is_ok() {
                        self.clients.push(reply);
                    }
                }
                Request::Command { seq, command, reply } => {
                    let name = command.name();
                    match self.apply(command) {
                        Ok(effect) => {
                            match effect {
                                Effect::None => {}
                                Effect::DescriptorChanged => changed = true,
                                Effect::Snapshot => snapshots.push(reply.clone()),
                            }
                            let _ = reply.send(text(&ServerMessage::Ack { seq, command: name.into(), frame: next }));
                        }
                        Err(mut e) => {
                            e.seq = seq;
                            let _ = reply.send(text(&ServerMessage::Error(e)));
                        }
                    }
                }
            }
        }
        if changed {
            self.store_descriptor();
            let msg = text(&self.descriptor_message());
            self.clients.retain(|c| c.send(msg.clone()).is_ok());
        }
        for reply in snapshots {
            self.snapshot(&reply);
        }
    }

    fn next_frame(&self) -> u32 {
        self.renderer.frames_rendered()
    }

    fn apply(&mut self, command: Command) -> Result<Effect, ErrorReply> {
        match command {
            Command::SetEffect { material_id, effect } => {
                let effect: EffectId = named::parse(&effect).map_err(|m| ErrorReply::invalid("effect", m))?;
                match self.scene.set_material_effect(material_id, effect) {
                    Ok(true) => Ok(Effect::DescriptorChanged),
                    Ok(false) => Ok(Effect::None),
                    Err(_) => Err(ErrorReply::unknown_material(material_id)),
                }
            }
            Command::SetMode { raygen_mode } => {
                let mode: RayGenMode = named::parse(&raygen_mode).map_err(|m| ErrorReply::invalid("raygen_mode", m))?;
                let changed = mode != self.settings.raygen_mode;
                self.settings.raygen_mode = mode;
                Ok(if changed { Effect::DescriptorChanged } else { Effect::None })
            }
            Command::SetCamera { position, look_at, up, ipd } => {
                let check = |field: &str, v: Option<[f64; 3]>| match v {
                    Some(a) if a.iter().any(|c| !c.is_finite()) => Err(ErrorReply::invalid(field, "must be finite")),
                    _ => Ok(v.map(Vec3::from_array)),
                };
                let position = check("position", position)?.unwrap_or(self.view.pose.position);
                let look_at = check("look_at", look_at)?.unwrap_or(self.look_at);
                let up = check("up", up)?.unwrap_or(self.up);
                let ipd = ipd.unwrap_or(self.view.ipd);
                if !(ipd >= 0.0) || !ipd.is_finite() {
                    return Err(ErrorReply::invalid("ipd", "must be finite and non-negative"));
                }
                let pose = Pose::look_at(position, look_at, up)
                    .map_err(|_| ErrorReply::invalid("look_at", "camera looks at its own position or along up"))?;
                self.view.pose = pose;
                self.view.ipd = ipd;
                self.look_at = look_at;
                self.up = up;
                Ok(Effect::DescriptorChanged)
            }
            Command::SetQuality { size, spp, max_depth } => {
                if let Some([w, h]) = size {
                    if w == 0 || h == 0 || w > MAX_SIZE || h > MAX_SIZE {
                        return Err(ErrorReply::invalid("size", format!("each side must be in 1..={MAX_SIZE}")));
                    }
                }
                if spp == Some(0) {
                    return Err(ErrorReply::invalid("spp", "must be at least 1"));
                }
                if max_depth == Some(0) {
                    return Err(ErrorReply::invalid("max_depth", "must be at least 1"));
                }
                if let Some([w, h]) = size {
                    self.view.dims = Dims::new(w, h);
                }
                self.settings.spp = spp.unwrap_or(self.settings.spp);
                self.settings.max_depth = max_depth.unwrap_or(self.settings.max_depth);
                Ok(Effect::DescriptorChanged)
            }
            Command::Snapshot {} => Ok(Effect::Snapshot),
        }
    }

    fn publish(&self, frame: &Frame) {
        let header = FrameHeader {
            kind: "frame".into(),
            frame: frame.stats.frame,
            frame_index: frame.stats.frame_index,
            width: frame.display.dims.width,
            height: frame.display.dims.height,
            layout: layout(self.view.stereo).into(),
        };
        // Slow subscribers lag and skip messages; sending never blocks.
        let _ = self.frames.send(Message::Binary(encode_frame(&header, &frame.display.data).into()));
        let _ = self.frames.send(text(&ServerMessage::Stats(frame.stats.clone())));
    }

    /// Renders a still at snapshot quality with a fresh history and sends
    /// it to the requesting client only.
    fn snapshot(&self, reply: &Reply) {
        let settings = TraceSettings { spp: self.snapshot_spp, ..self.settings };
        let result = Renderer::new(self.workers).and_then(|mut r| r.render(&self.scene, &self.bvh, &self.view, &settings));
        let msg = match result {
            Ok(frame) => {
                let header = FrameHeader {
                    kind: "snapshot".into(),
                    frame: self.next_frame(),
                    frame_index: 1,
                    width: frame.display.dims.width,
                    height: frame.display.dims.height,
                    layout: layout(self.view.stereo).into(),
                };
                Message::Binary(encode_frame(&header, &frame.display.data).into())
            }
            Err(e) => text(&ServerMessage::Error(ErrorReply::bad_request(format!("snapshot failed: {e}")))),
        };
        let _ = reply.send(msg);
    }
}

fn layout(stereo: bool) -> &'static str {
    if stereo {
        "side_by_side"
    } else {
        "mono"
    }
}
