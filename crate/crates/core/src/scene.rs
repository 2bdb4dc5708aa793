//! Scene model: meshes, instances, lights, environment and the material
//! table. Each material carries an [`EffectId`] that selects its shading
//! path; it can be changed between frames without touching geometry.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::camera::UnknownName;
use crate::math::{acos, atan2, floor, pow, Mat4, Rgb, Vec2, Vec3, PI};

/// Per-material shading path, ordered by cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EffectId {
    /// Direct light without shadows.
    Raster,
    /// Direct light with ray-traced shadows.
    RasterShadows,
    /// Direct light, shadows and recursive perfect-mirror reflections.
    Mirror,
    /// Monte Carlo path tracing, accumulated over static-camera frames.
    PathTraced,
}

impl EffectId {
    pub const ALL: [EffectId; 4] =
        [EffectId::Raster, EffectId::RasterShadows, EffectId::Mirror, EffectId::PathTraced];

    pub fn as_str(self) -> &'static str {
        match self {
            EffectId::Raster => "raster",
            EffectId::RasterShadows => "raster_shadows",
            EffectId::Mirror => "mirror",
            EffectId::PathTraced => "path",
        }
    }

    /// Effects whose first hit can come straight from the rasterizer.
    pub fn is_raster(self) -> bool {
        matches!(self, EffectId::Raster | EffectId::RasterShadows)
    }
}

impl core::str::FromStr for EffectId {
    type Err = UnknownName;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EffectId::ALL.into_iter().find(|e| e.as_str() == s).ok_or(UnknownName)
    }
}

/// Surfaces with alpha below this are skipped by closest- and any-hit queries.
pub const ALPHA_CUTOFF: f64 = 0.5;
pub const DEFAULT_SHININESS: f64 = 32.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub id: u32,
    pub albedo: Rgb,
    pub specular: Rgb,
    pub emissive: Rgb,
    /// Opacity in `[0, 1]`.
    pub alpha: f64,
    pub shininess: f64,
    pub effect: EffectId,
}

impl Material {
    pub fn diffuse(id: u32, albedo: Rgb) -> Self {
        Self {
            id,
            albedo,
            specular: Rgb::BLACK,
            emissive: Rgb::BLACK,
            alpha: 1.0,
            shininess: DEFAULT_SHININESS,
            effect: EffectId::Raster,
        }
    }

    pub fn with_specular(mut self, specular: Rgb) -> Self {
        self.specular = specular;
        self
    }

    pub fn with_effect(mut self, effect: EffectId) -> Self {
        self.effect = effect;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_emissive(mut self, emissive: Rgb) -> Self {
        self.emissive = emissive;
        self
    }

    #[inline]
    pub fn is_opaque(&self) -> bool {
        self.alpha >= ALPHA_CUTOFF
    }

    fn validate(&self) -> Result<(), SceneError> {
        let bad = |reason| Err(SceneError::InvalidMaterial { id: self.id, reason });
        if !self.albedo.in_unit_range() {
            return bad("albedo outside [0,1]");
        }
        if !self.specular.in_unit_range() {
            return bad("specular outside [0,1]");
        }
        if !self.emissive.is_finite_non_negative() {
            return bad("emissive must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha outside [0,1]");
        }
        if !(self.shininess >= 0.0) || !self.shininess.is_finite() {
            return bad("shininess must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub name: String,
    pub positions: Vec<Vec3>,
    /// Unit per-vertex normals.
    pub normals: Vec<Vec3>,
    pub uvs: Vec<Vec2>,
    pub indices: Vec<[u32; 3]>,
}

impl Mesh {
    /// Builds a mesh, computing area-weighted vertex normals when `normals`
    /// is `None`.
    pub fn new(
        name: impl Into<String>,
        positions: Vec<Vec3>,
        normals: Option<Vec<Vec3>>,
        indices: Vec<[u32; 3]>,
    ) -> Result<Self, SceneError> {
        let name = name.into();
        let normals = match normals {
            Some(n) => n.into_iter().map(Vec3::normalize).collect(),
            None => area_weighted_normals(&positions, &indices),
        };
        let mesh = Self { name, positions, normals, uvs: Vec::new(), indices };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn with_uvs(mut self, uvs: Vec<Vec2>) -> Self {
        self.uvs = uvs;
        self
    }

    pub fn triangle_count(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let [a, b, c] = self.indices[i];
        [self.positions[a as usize], self.positions[b as usize], self.positions[c as usize]]
    }

    #[inline]
    pub fn triangle_normals(&self, i: usize) -> [Vec3; 3] {
        let [a, b, c] = self.indices[i];
        [self.normals[a as usize], self.normals[b as usize], self.normals[c as usize]]
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |reason| Err(SceneError::InvalidMesh { name: self.name.clone(), reason });
        if self.indices.is_empty() {
            return bad("mesh has no triangles");
        }
        if self.normals.len() != self.positions.len() {
            return bad("normal count differs from position count");
        }
        if !self.uvs.is_empty() && self.uvs.len() != self.positions.len() {
            return bad("uv count differs from position count");
        }
        let n = self.positions.len() as u32;
        if self.indices.iter().flatten().any(|&i| i >= n) {
            return bad("triangle index out of range");
        }
        if self.positions.iter().any(|p| !p.is_finite()) {
            return bad("non-finite vertex position");
        }
        Ok(())
    }
}

/// Per-vertex normals as the normalized sum of incident face cross products
/// (each proportional to twice the face area).
pub fn area_weighted_normals(positions: &[Vec3], indices: &[[u32; 3]]) -> Vec<Vec3> {
    let mut acc = alloc::vec![Vec3::ZERO; positions.len()];
    for tri in indices {
        let [a, b, c] = tri.map(|i| i as usize);
        if a >= positions.len() || b >= positions.len() || c >= positions.len() {
            continue;
        }
        let n = (positions[b] - positions[a]).cross(positions[c] - positions[a]);
        acc[a] += n;
        acc[b] += n;
        acc[c] += n;
    }
    acc.into_iter()
        .map(|n| if n.length_squared() > 0.0 { n.normalize() } else { Vec3::Y })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub mesh: usize,
    pub material: u32,
    /// Object to world.
    pub transform: Mat4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Light {
    /// Radiant intensity falling off as `1/r²`.
    Point { position: Vec3, intensity: Rgb },
    /// `direction` is the unit direction the light travels in.
    Directional { direction: Vec3, intensity: Rgb },
}

/// Light arriving at a surface point, before visibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightSample {
    /// Unit vector from the point toward the light.
    pub to_light: Vec3,
    /// Distance to the light, infinite for directional lights.
    pub distance: f64,
    pub irradiance: Rgb,
}

impl Light {
    pub fn intensity(&self) -> Rgb {
        match *self {
            Light::Point { intensity, .. } | Light::Directional { intensity, .. } => intensity,
        }
    }

    pub fn sample(&self, p: Vec3) -> LightSample {
        match *self {
            Light::Point { position, intensity } => {
                let d = position - p;
                let r2 = d.length_squared();
                let r = crate::math::sqrt(r2);
                LightSample { to_light: d / r, distance: r, irradiance: intensity / r2 }
            }
            Light::Directional { direction, intensity } => {
                LightSample { to_light: -direction, distance: f64::INFINITY, irradiance: intensity }
            }
        }
    }

    fn validate(&self, index: usize) -> Result<(), SceneError> {
        let ok = match *self {
            Light::Point { position, intensity } => position.is_finite() && intensity.is_finite_non_negative(),
            Light::Directional { direction, intensity } => {
                (direction.length() - 1.0).abs() < 1e-6 && intensity.is_finite_non_negative()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SceneError::InvalidLight(index))
        }
    }
}

/// Equirectangular (lat-long) radiance map, row 0 at the zenith.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvImage {
    pub width: u32,
    pub height: u32,
    pub texels: Vec<Rgb>,
}

impl EnvImage {
    /// Bilinear lookup along a unit direction.
    pub fn lookup(&self, dir: Vec3) -> Rgb {
        let (w, h) = (self.width as i64, self.height as i64);
        let u = 0.5 + atan2(dir.x, -dir.z) / (2.0 * PI);
        let v = acos(dir.y.clamp(-1.0, 1.0)) / PI;
        let x = u * w as f64 - 0.5;
        let y = v * h as f64 - 0.5;
        let (x0, y0) = (floor(x), floor(y));
        let (fx, fy) = (x - x0, y - y0);
        let texel = |xi: i64, yi: i64| {
            let xi = xi.rem_euclid(w);
            let yi = yi.clamp(0, h - 1);
            self.texels[(yi * w + xi) as usize]
        };
        let (xi, yi) = (x0 as i64, y0 as i64);
        let top = texel(xi, yi) * (1.0 - fx) + texel(xi + 1, yi) * fx;
        let bottom = texel(xi, yi + 1) * (1.0 - fx) + texel(xi + 1, yi + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Environment {
    Constant(Rgb),
    Image(EnvImage),
}

impl Environment {
    pub fn radiance(&self, dir: Vec3) -> Rgb {
        match self {
            Environment::Constant(c) => *c,
            Environment::Image(img) => img.lookup(dir),
        }
    }
}

/// Default camera stored with a scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraConfig {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    pub fov_y_deg: f64,
    pub ipd: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            position: Vec3::new(0.0, 0.0, 5.0),
            look_at: Vec3::ZERO,
            up: Vec3::Y,
            fov_y_deg: 60.0,
            ipd: 0.064,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneError {
    DuplicateMaterial(u32),
    UnknownMaterial(u32),
    UnknownMesh { instance: usize, mesh: usize },
    InvalidMaterial { id: u32, reason: &'static str },
    InvalidMesh { name: String, reason: &'static str },
    SingularTransform(usize),
    InvalidLight(usize),
}

impl fmt::Display for SceneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneError::DuplicateMaterial(id) => write!(f, "duplicate material id {id}"),
            SceneError::UnknownMaterial(id) => write!(f, "unknown material id {id}"),
            SceneError::UnknownMesh { instance, mesh } => {
                write!(f, "instance {instance} references unknown mesh {mesh}")
            }
            SceneError::InvalidMaterial { id, reason } => write!(f, "material {id}: {reason}"),
            SceneError::InvalidMesh { name, reason } => write!(f, "mesh '{name}': {reason}"),
            SceneError::SingularTransform(i) => write!(f, "instance {i} has a non-invertible transform"),
            SceneError::InvalidLight(i) => write!(f, "light {i} is invalid"),
        }
    }
}

impl core::error::Error for SceneError {}

#[derive(Debug, Clone)]
pub struct Scene {
    meshes: Vec<Mesh>,
    instances: Vec<Instance>,
    lights: Vec<Light>,
    environment: Environment,
    /// Sorted by id.
    materials: Vec<Material>,
    /// Index into `materials` for each instance.
    instance_slots: Vec<usize>,
    pub camera: CameraConfig,
    revision: u64,
}

impl Scene {
    pub fn new(
        meshes: Vec<Mesh>,
        instances: Vec<Instance>,
        mut materials: Vec<Material>,
        lights: Vec<Light>,
        environment: Environment,
        camera: CameraConfig,
    ) -> Result<Self, SceneError> {
        materials.sort_by_key(|m| m.id);
        for pair in materials.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(SceneError::DuplicateMaterial(pair[0].id));
            }
        }
        for m in &materials {
            m.validate()?;
        }
        for mesh in &meshes {
            mesh.validate()?;
        }
        for (i, l) in lights.iter().enumerate() {
            l.validate(i)?;
        }
        let mut instance_slots = Vec::with_capacity(instances.len());
        for (i, inst) in instances.iter().enumerate() {
            if inst.mesh >= meshes.len() {
                return Err(SceneError::UnknownMesh { instance: i, mesh: inst.mesh });
            }
            let slot = materials
                .binary_search_by_key(&inst.material, |m| m.id)
                .map_err(|_| SceneError::UnknownMaterial(inst.material))?;
            if inst.transform.inverse().is_none() {
                return Err(SceneError::SingularTransform(i));
            }
            instance_slots.push(slot);
        }
        Ok(Self { meshes, instances, lights, environment, materials, instance_slots, camera, revision: 0 })
    }

    pub fn meshes(&self) -> &[Mesh] {
        &self.meshes
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn lights(&self) -> &[Light] {
        &self.lights
    }

    pub fn environment(&self) -> &Environment {
        &self.environment
    }

    pub fn set_environment(&mut self, env: Environment) {
        self.environment = env;
        self.revision += 1;
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn material(&self, id: u32) -> Option<&Material> {
        self.materials.binary_search_by_key(&id, |m| m.id).ok().map(|i| &self.materials[i])
    }

    #[inline]
    pub fn instance_material(&self, instance: usize) -> &Material {
        &self.materials[self.instance_slots[instance]]
    }

    /// Bumped on every change that invalidates accumulated frames.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn triangle_count(&self) -> usize {
        self.instances.iter().map(|i| self.meshes[i.mesh].triangle_count()).sum()
    }

    /// Distinct effects used by the materials that instances reference.
    pub fn effects_in_use(&self) -> impl Iterator<Item = EffectId> + '_ {
        EffectId::ALL
            .into_iter()
            .filter(move |e| self.instance_slots.iter().any(|&s| self.materials[s].effect == *e))
    }

    /// Changes one material's effect. Returns whether anything changed;
    /// only a real change bumps the revision.
    pub fn set_material_effect(&mut self, material_id: u32, effect: EffectId) -> Result<bool, SceneError> {
        let i = self
            .materials
            .binary_search_by_key(&material_id, |m| m.id)
            .map_err(|_| SceneError::UnknownMaterial(material_id))?;
        if self.materials[i].effect == effect {
            return Ok(false);
        }
        self.materials[i].effect = effect;
        self.revision += 1;
        Ok(true)
    }

    /// Forces every material to one effect.
    pub fn override_effects(&mut self, effect: EffectId) {
        let changed = self.materials.iter().any(|m| m.effect != effect);
        for m in &mut self.materials {
            m.effect = effect;
        }
        if changed {
            self.revision += 1;
        }
    }
}

/// Surface point as seen from a viewer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadingPoint {
    pub position: Vec3,
    /// Unit shading normal, facing the viewer.
    pub normal: Vec3,
    /// Unit vector toward the viewer.
    pub to_viewer: Vec3,
}

/// Direct contribution of one light without visibility: Lambert diffuse
/// plus normalized Blinn-Phong specular.
pub fn eval_material(p: &ShadingPoint, material: &Material, light: &Light) -> Rgb {
    eval_light_sample(p, material, &light.sample(p.position))
}

pub(crate) fn eval_light_sample(p: &ShadingPoint, material: &Material, s: &LightSample) -> Rgb {
    let n_dot_l = p.normal.dot(s.to_light);
    if n_dot_l <= 0.0 {
        return Rgb::BLACK;
    }
    let mut brdf = material.albedo * (1.0 / PI);
    if !material.specular.is_black() && p.normal.dot(p.to_viewer) > 0.0 {
        let h = (s.to_light + p.to_viewer).normalize();
        let n_dot_h = p.normal.dot(h).max(0.0);
        let norm = (material.shininess + 8.0) / (8.0 * PI);
        brdf += material.specular * (norm * pow(n_dot_h, material.shininess));
    }
    brdf * s.irradiance * n_dot_l
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tri_mesh() -> Mesh {
        Mesh::new(
            "tri",
            vec![Vec3::ZERO, Vec3::X, Vec3::Y],
            None,
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    fn scene_with(materials: Vec<Material>, instances: Vec<Instance>) -> Result<Scene, SceneError> {
        Scene::new(
            vec![tri_mesh()],
            instances,
            materials,
            vec![],
            Environment::Constant(Rgb::splat(0.5)),
            CameraConfig::default(),
        )
    }

    fn head_on(albedo: Rgb) -> (ShadingPoint, Material) {
        let p = ShadingPoint { position: Vec3::ZERO, normal: Vec3::Z, to_viewer: Vec3::Z };
        (p, Material::diffuse(1, albedo))
    }

    #[test]
    fn lambert_head_on() {
        let (p, m) = head_on(Rgb::new(1.0, 0.0, 0.0));
        let light = Light::Point { position: Vec3::Z, intensity: Rgb::splat(PI) };
        let c = eval_material(&p, &m, &light);
        assert!((c.r - 1.0).abs() < 1e-12 && c.g == 0.0 && c.b == 0.0);
    }

    #[test]
    fn light_behind_is_black() {
        let (p, m) = head_on(Rgb::WHITE);
        let light = Light::Point { position: -Vec3::Z, intensity: Rgb::splat(10.0) };
        assert_eq!(eval_material(&p, &m, &light), Rgb::BLACK);
        let sun = Light::Directional { direction: Vec3::Z, intensity: Rgb::WHITE };
        assert_eq!(eval_material(&p, &m, &sun), Rgb::BLACK);
    }

    #[test]
    fn inverse_square_and_linearity() {
        let (p, m) = head_on(Rgb::splat(0.7));
        let m = m.with_specular(Rgb::splat(0.2));
        let at = |d: f64, i: f64| {
            eval_material(&p, &m, &Light::Point { position: Vec3::new(0.3, 0.0, 1.0) * d, intensity: Rgb::splat(i) })
        };
        let one = at(1.0, 2.0);
        let two = at(2.0, 2.0);
        assert!((one.r / two.r - 4.0).abs() < 1e-12);
        let double = at(1.0, 4.0);
        assert!((double.g - 2.0 * one.g).abs() < 1e-12);
    }

    #[test]
    fn constant_environment() {
        let env = Environment::Constant(Rgb::splat(0.5));
        for d in [Vec3::X, -Vec3::Y, Vec3::new(1.0, 2.0, 3.0).normalize()] {
            assert_eq!(env.radiance(d), Rgb::splat(0.5));
        }
    }

    #[test]
    fn env_image_is_continuous_across_seam() {
        let texels = (0..8 * 4).map(|i| Rgb::splat((i % 8) as f64)).collect();
        let img = EnvImage { width: 8, height: 4, texels };
        let a = img.lookup(Vec3::new(1e-9, 0.0, 1.0).normalize());
        let b = img.lookup(Vec3::new(-1e-9, 0.0, 1.0).normalize());
        assert!((a.r - b.r).abs() < 1e-6);
    }

    #[test]
    fn unknown_material_is_named() {
        let err = scene_with(
            vec![Material::diffuse(1, Rgb::WHITE)],
            vec![Instance { mesh: 0, material: 7, transform: Mat4::IDENTITY }],
        )
        .unwrap_err();
        assert_eq!(err, SceneError::UnknownMaterial(7));
        assert!(alloc::format!("{err}").contains('7'));
    }

    #[test]
    fn rejects_bad_inputs() {
        let dup = scene_with(vec![Material::diffuse(1, Rgb::WHITE), Material::diffuse(1, Rgb::WHITE)], vec![]);
        assert_eq!(dup.unwrap_err(), SceneError::DuplicateMaterial(1));
        let hot = scene_with(vec![Material::diffuse(1, Rgb::splat(1.5))], vec![]);
        assert!(matches!(hot, Err(SceneError::InvalidMaterial { id: 1, .. })));
        let singular = scene_with(
            vec![Material::diffuse(1, Rgb::WHITE)],
            vec![Instance { mesh: 0, material: 1, transform: Mat4::scale(Vec3::new(1.0, 0.0, 1.0)) }],
        );
        assert_eq!(singular.unwrap_err(), SceneError::SingularTransform(0));
        let dangling = scene_with(
            vec![Material::diffuse(1, Rgb::WHITE)],
            vec![Instance { mesh: 3, material: 1, transform: Mat4::IDENTITY }],
        );
        assert!(matches!(dangling, Err(SceneError::UnknownMesh { mesh: 3, .. })));
        assert!(Mesh::new("bad", vec![Vec3::ZERO], None, vec![[0, 1, 2]]).is_err());
        assert!(Mesh::new("empty", vec![], None, vec![]).is_err());
    }

    #[test]
    fn effect_changes_bump_revision_only_when_different() {
        let mut s = scene_with(
            vec![Material::diffuse(1, Rgb::WHITE), Material::diffuse(2, Rgb::WHITE)],
            vec![Instance { mesh: 0, material: 2, transform: Mat4::IDENTITY }],
        )
        .unwrap();
        assert_eq!(s.set_material_effect(1, EffectId::Raster), Ok(false));
        assert_eq!(s.revision(), 0);
        assert_eq!(s.set_material_effect(1, EffectId::Mirror), Ok(true));
        assert_eq!(s.revision(), 1);
        assert_eq!(s.material(1).unwrap().effect, EffectId::Mirror);
        assert_eq!(s.set_material_effect(9, EffectId::Mirror), Err(SceneError::UnknownMaterial(9)));
        // Only material 2 is referenced by an instance.
        assert_eq!(s.effects_in_use().collect::<Vec<_>>(), vec![EffectId::Raster]);
    }

    #[test]
    fn effect_order_and_names() {
        assert!(EffectId::Raster < EffectId::RasterShadows);
        assert!(EffectId::RasterShadows < EffectId::Mirror);
        assert!(EffectId::Mirror < EffectId::PathTraced);
        for e in EffectId::ALL {
            assert_eq!(e.as_str().parse::<EffectId>(), Ok(e));
        }
    }

    #[test]
    fn face_normal_from_cross_product() {
        let m = tri_mesh();
        for n in &m.normals {
            assert!((*n - Vec3::Z).length() < 1e-12);
        }
    }

    #[test]
    fn tetrahedron_vertex_normals() {
        // Right-angle corner at the origin: faces x=0, y=0, z=0 (area 1/2
        // each) plus the slanted face (area sqrt(3)/2) with normal (1,1,1)/sqrt(3).
        let pos = vec![Vec3::ZERO, Vec3::X, Vec3::Y, Vec3::Z];
        let idx = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
        let m = Mesh::new("tet", pos, None, idx).unwrap();
        // Origin touches only the axis faces: (-1,-1,-1)/sqrt(3).
        let s = 1.0 / 3f64.sqrt();
        assert!((m.normals[0] - Vec3::new(-s, -s, -s)).length() < 1e-12);
        // Vertex X: faces y=0 (0,-1,0)*1, z=0 (0,0,-1)*1, slanted (1,1,1)*1
        // (cross products have length 2*area), sum = (1, 0, 0).
        assert!((m.normals[1] - Vec3::X).length() < 1e-12);
        for n in &m.normals {
            assert!((n.length() - 1.0).abs() < 1e-12);
        }
    }
}
