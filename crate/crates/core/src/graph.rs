//! Per-eye render-pass graph: G-buffer rasterization, tracing, progressive
//! accumulation and tone mapping, with passes enabled by the ray generation
//! mode and the effects present in the scene.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::camera::RayGenMode;
use crate::scene::{EffectId, Scene};
use crate::tracer::TraceSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PassKind {
    GBuffer,
    Trace,
    Accumulate,
    Tonemap,
}

impl PassKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PassKind::GBuffer => "gbuffer",
            PassKind::Trace => "trace",
            PassKind::Accumulate => "accumulate",
            PassKind::Tonemap => "tonemap",
        }
    }
}

/// Images and state flowing between passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resource {
    /// Scene and camera state, available before any pass.
    SceneState,
    GBuffer,
    Radiance,
    Accumulated,
    Display,
}

impl Resource {
    fn is_external(self) -> bool {
        self == Resource::SceneState
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassDecl {
    pub kind: PassKind,
    pub inputs: Vec<Resource>,
    pub outputs: Vec<Resource>,
}

impl PassDecl {
    pub fn new(kind: PassKind, inputs: &[Resource], outputs: &[Resource]) -> Self {
        Self { kind, inputs: inputs.to_vec(), outputs: outputs.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    /// A pass reads a resource no earlier pass writes.
    UnresolvedInput { pass: PassKind, resource: Resource },
    /// Two passes write the same resource.
    DuplicateOutput { pass: PassKind, resource: Resource },
    DuplicatePass(PassKind),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::UnresolvedInput { pass, resource } => {
                write!(f, "pass {} reads {resource:?} before any pass writes it", pass.as_str())
            }
            GraphError::DuplicateOutput { pass, resource } => {
                write!(f, "pass {} writes {resource:?}, which an earlier pass already wrote", pass.as_str())
            }
            GraphError::DuplicatePass(p) => write!(f, "pass {} declared twice", p.as_str()),
        }
    }
}

impl core::error::Error for GraphError {}

/// Validated, ordered pass list. Every input is produced by an earlier
/// pass, so declaration order is a topological order of the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderGraph {
    passes: Vec<PassDecl>,
}

impl RenderGraph {
    pub fn from_passes(passes: Vec<PassDecl>) -> Result<Self, GraphError> {
        let mut produced: Vec<Resource> = Vec::new();
        let mut kinds: Vec<PassKind> = Vec::new();
        for p in &passes {
            if kinds.contains(&p.kind) {
                return Err(GraphError::DuplicatePass(p.kind));
            }
            kinds.push(p.kind);
            if let Some(&r) = p.inputs.iter().find(|r| !r.is_external() && !produced.contains(r)) {
                return Err(GraphError::UnresolvedInput { pass: p.kind, resource: r });
            }
            for &r in &p.outputs {
                if r.is_external() || produced.contains(&r) {
                    return Err(GraphError::DuplicateOutput { pass: p.kind, resource: r });
                }
                produced.push(r);
            }
        }
        Ok(Self { passes })
    }

    pub fn passes(&self) -> &[PassDecl] {
        &self.passes
    }

    pub fn kinds(&self) -> Vec<PassKind> {
        self.passes.iter().map(|p| p.kind).collect()
    }

    pub fn has(&self, kind: PassKind) -> bool {
        self.passes.iter().any(|p| p.kind == kind)
    }
}

/// Chooses the passes for a frame. The G-buffer pass runs in G-buffer mode
/// or when any material is raster-shaded; accumulation runs when any
/// material is path traced.
pub fn build_graph(settings: &TraceSettings, scene: &Scene) -> RenderGraph {
    let effects: Vec<EffectId> = scene.effects_in_use().collect();
    let gbuffer = settings.raygen_mode == RayGenMode::GBufferDerived || effects.iter().any(|e| e.is_raster());
    let accumulate = effects.contains(&EffectId::PathTraced);
    use Resource::*;
    let mut passes = vec![];
    if gbuffer {
        passes.push(PassDecl::new(PassKind::GBuffer, &[SceneState], &[GBuffer]));
        passes.push(PassDecl::new(PassKind::Trace, &[SceneState, GBuffer], &[Radiance]));
    } else {
        passes.push(PassDecl::new(PassKind::Trace, &[SceneState], &[Radiance]));
    }
    if accumulate {
        passes.push(PassDecl::new(PassKind::Accumulate, &[Radiance], &[Accumulated]));
        passes.push(PassDecl::new(PassKind::Tonemap, &[Accumulated], &[Display]));
    } else {
        passes.push(PassDecl::new(PassKind::Tonemap, &[Radiance], &[Display]));
    }
    RenderGraph::from_passes(passes).expect("built-in pass chains are well ordered")
}
