//! JSON scene files. See `docs/scene-format.md` for the schema.

use std::path::{Path, PathBuf};

use rayvr_core::math::{Mat4, Rgb, Vec3};
use rayvr_core::scene::{
    CameraConfig, EffectId, EnvImage, Environment, Instance, Light, Material, Mesh, Scene, DEFAULT_SHININESS,
};
use rayvr_core::shapes;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::named;
use crate::obj::load_obj;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub meshes: Vec<MeshSpec>,
    pub instances: Vec<InstanceSpec>,
    pub materials: Vec<MaterialSpec>,
    #[serde(default)]
    pub lights: Vec<LightSpec>,
    #[serde(default)]
    pub environment: EnvironmentSpec,
    #[serde(default)]
    pub camera: CameraSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub name: String,
    /// OBJ file, relative to the scene file. Every object in it is merged
    /// into this one mesh.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obj: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeSpec>,
}

/// Procedural meshes, an alternative to OBJ files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Quad { width: f64, depth: f64 },
    Cuboid { half: [f64; 3] },
    Sphere { radius: f64, segments: u32, rings: u32 },
    Torus { major: f64, minor: f64, segments: u32, sides: u32 },
    Cylinder { radius: f64, height: f64, segments: u32 },
}

/// An instance names its mesh or gives its index in `meshes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub mesh: MeshRef,
    pub material: u32,
    /// Object-to-world matrix, 16 numbers in row-major order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<[f64; 16]>,
}

fn white() -> [f64; 3] {
    [1.0; 3]
}
fn one() -> f64 {
    1.0
}
fn default_shininess() -> f64 {
    DEFAULT_SHININESS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub id: u32,
    #[serde(default = "white")]
    pub albedo: [f64; 3],
    #[serde(default)]
    pub specular: [f64; 3],
    #[serde(default)]
    pub emissive: [f64; 3],
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "default_shininess")]
    pub shininess: f64,
    #[serde(default = "default_effect", with = "named")]
    pub effect: EffectId,
}

fn default_effect() -> EffectId {
    EffectId::Raster
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LightSpec {
    Point { position: [f64; 3], intensity: [f64; 3] },
    /// `direction` is the way the light travels.
    Directional { direction: [f64; 3], intensity: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Constant([f64; 3]),
    /// Equirectangular image relative to the scene file. 8-bit images are
    /// decoded from sRGB; float images are taken as linear radiance.
    Image(PathBuf),
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        EnvironmentSpec::Constant([0.0; 3])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSpec {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub up: [f64; 3],
    pub fov_y_deg: f64,
    pub ipd: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        CameraSpec::from(CameraConfig::default())
    }
}

impl From<CameraConfig> for CameraSpec {
    fn from(c: CameraConfig) -> Self {
        Self {
            position: c.position.to_array(),
            look_at: c.look_at.to_array(),
            up: c.up.to_array(),
            fov_y_deg: c.fov_y_deg,
            ipd: c.ipd,
        }
    }
}

impl From<&CameraSpec> for CameraConfig {
    fn from(c: &CameraSpec) -> Self {
        Self {
            position: Vec3::from_array(c.position),
            look_at: Vec3::from_array(c.look_at),
            up: Vec3::from_array(c.up),
            fov_y_deg: c.fov_y_deg,
            ipd: c.ipd,
        }
    }
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = Vec3::from_array(v);
    let len = n.length();
    // Already-unit vectors are kept so that normalizing is idempotent.
    if len > 0.0 && len.is_finite() && (len - 1.0).abs() > 1e-12 {
        (n / len).to_array()
    } else {
        v
    }
}

impl SceneFile {
    pub fn parse(json: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(json).map_err(|source| Error::SceneJson { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::parse(&json, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene files always serialize")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(Error::io(path))
    }

    /// Canonical form: instances name their meshes and carry explicit
    /// transforms, materials are sorted by id and directional lights have
    /// unit directions. Dangling mesh indices are left as they are.
    pub fn normalized(&self) -> SceneFile {
        let mut out = self.clone();
        for inst in &mut out.instances {
            if let MeshRef::Index(i) = inst.mesh {
                if let Some(m) = self.meshes.get(i) {
                    inst.mesh = MeshRef::Name(m.name.clone());
                }
            }
            inst.transform.get_or_insert(Mat4::IDENTITY.to_row_array());
        }
        out.materials.sort_by_key(|m| m.id);
        for l in &mut out.lights {
            if let LightSpec::Directional { direction, .. } = l {
                *direction = normalize3(*direction);
            }
        }
        out
    }

    /// Builds the scene, resolving OBJ and image paths against `base_dir`.
    pub fn to_scene(&self, base_dir: &Path) -> Result<Scene> {
        let meshes = self.meshes.iter().map(|m| build_mesh(m, base_dir)).collect::<Result<Vec<_>>>()?;
        let mut instances = Vec::with_capacity(self.instances.len());
        for (i, inst) in self.instances.iter().enumerate() {
            let mesh = match &inst.mesh {
                MeshRef::Index(idx) => *idx,
                MeshRef::Name(name) => self
                    .meshes
                    .iter()
                    .position(|m| &m.name == name)
                    .ok_or_else(|| Error::UnknownMeshName { instance: i, name: name.clone() })?,
            };
            let transform = inst.transform.map_or(Mat4::IDENTITY, |t| Mat4::from_row_slice(&t));
            instances.push(Instance { mesh, material: inst.material, transform });
        }
        let materials = self
            .materials
            .iter()
            .map(|m| Material {
                id: m.id,
                albedo: Rgb::from_array(m.albedo),
                specular: Rgb::from_array(m.specular),
                emissive: Rgb::from_array(m.emissive),
                alpha: m.alpha,
                shininess: m.shininess,
                effect: m.effect,
            })
            .collect();
        let lights = self
            .lights
            .iter()
            .map(|l| match *l {
                LightSpec::Point { position, intensity } => {
                    Light::Point { position: Vec3::from_array(position), intensity: Rgb::from_array(intensity) }
                }
                LightSpec::Directional { direction, intensity } => Light::Directional {
                    direction: Vec3::from_array(normalize3(direction)),
                    intensity: Rgb::from_array(intensity),
                },
            })
            .collect();
        let environment = match &self.environment {
            EnvironmentSpec::Constant(c) => Environment::Constant(Rgb::from_array(*c)),
            EnvironmentSpec::Image(p) => Environment::Image(load_env_image(&base_dir.join(p))?),
        };
        Ok(Scene::new(meshes, instances, materials, lights, environment, CameraConfig::from(&self.camera))?)
    }
}

fn build_mesh(spec: &MeshSpec, base_dir: &Path) -> Result<Mesh> {
    let name = spec.name.clone();
    match (&spec.obj, &spec.shape) {
        (Some(obj), None) => {
            let mut parts = load_obj(&base_dir.join(obj))?;
            let mut mesh = parts.remove(0);
            for p in parts {
                let base = mesh.positions.len() as u32;
                mesh.positions.extend(p.positions);
                mesh.normals.extend(p.normals);
                mesh.indices.extend(p.indices.iter().map(|t| t.map(|i| i + base)));
            }
            mesh.uvs.clear();
            mesh.name = name;
            Ok(mesh)
        }
        (None, Some(shape)) => Ok(match *shape {
            ShapeSpec::Quad { width, depth } => shapes::quad(name, width, depth),
            ShapeSpec::Cuboid { half } => shapes::cuboid(name, Vec3::from_array(half)),
            ShapeSpec::Sphere { radius, segments, rings } => shapes::uv_sphere(name, radius, segments, rings)?,
            ShapeSpec::Torus { major, minor, segments, sides } => shapes::torus(name, major, minor, segments, sides)?,
            ShapeSpec::Cylinder { radius, height, segments } => shapes::cylinder(name, radius, height, segments)?,
        }),
        _ => Err(Error::InvalidArgument(format!("mesh '{}' needs exactly one of 'obj' or 'shape'", spec.name))),
    }
}

/// Decodes an equirectangular map into linear radiance.
pub fn load_env_image(path: &Path) -> Result<EnvImage> {
    let img = image::open(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })?;
    let (width, height) = (img.width(), img.height());
    let texels = match img {
        image::DynamicImage::ImageRgb32F(_) | image::DynamicImage::ImageRgba32F(_) => {
            img.into_rgb32f().pixels().map(|p| Rgb::new(p[0] as f64, p[1] as f64, p[2] as f64)).collect()
        }
        _ => img
            .into_rgb8()
            .pixels()
            .map(|p| Rgb::new(srgb_to_linear(p[0]), srgb_to_linear(p[1]), srgb_to_linear(p[2])))
            .collect(),
    };
    Ok(EnvImage { width, height, texels })
}

fn srgb_to_linear(v: u8) -> f64 {
    let c = v as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Loads and validates a scene file.
pub fn load_scene(path: &Path) -> Result<Scene> {
    let file = SceneFile::load(path)?;
    file.to_scene(path.parent().unwrap_or(Path::new(".")))
}
