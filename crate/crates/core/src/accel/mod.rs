//! Two-level acceleration structure: one bottom-level hierarchy per mesh
//! (triangles in object space) and a top-level hierarchy over instances.
//!
//! Rays are carried into object space without renormalizing the direction,
//! so `t` values agree between levels. Instances whose material fails the
//! alpha test are skipped by both query modes.

mod bvh;
mod triangle;

use alloc::vec::Vec;
use core::fmt;

pub use bvh::{Aabb, Bvh, BvhAudit, Node, SAH_BINS, TRAVERSAL_STACK};
pub use triangle::{intersect_moller_trumbore, intersect_watertight, ShearedRay, TriHit};

use crate::camera::Ray;
use crate::math::{Mat4, Vec3};
use crate::scene::{Mesh, Scene};

/// Largest triangle count per bottom-level leaf.
pub const BLAS_LEAF_SIZE: usize = 4;
/// Secondary rays start this fraction of the scene diagonal off the surface.
pub const RAY_EPSILON_SCALE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AccelError {
    EmptyMesh(usize),
}

impl fmt::Display for AccelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccelError::EmptyMesh(i) => write!(f, "mesh {i} has no triangles"),
        }
    }
}

impl core::error::Error for AccelError {}

/// Bottom-level hierarchy over one mesh.
#[derive(Debug, Clone)]
pub struct Blas {
    pub bvh: Bvh,
    /// Triangle vertices in leaf order.
    tris: Vec<[Vec3; 3]>,
}

impl Blas {
    pub fn bounds(&self) -> Aabb {
        self.bvh.bounds()
    }

    /// Original mesh triangle index of leaf-order slot `i`.
    #[inline]
    pub fn triangle_id(&self, slot: usize) -> u32 {
        self.bvh.order[slot]
    }

    pub fn triangle_bounds(mesh: &Mesh) -> Vec<Aabb> {
        (0..mesh.triangle_count()).map(|i| Aabb::from_points(&mesh.triangle(i))).collect()
    }
}

pub fn build_blas(mesh: &Mesh) -> Result<Blas, AccelError> {
    if mesh.indices.is_empty() {
        return Err(AccelError::EmptyMesh(0));
    }
    let bounds = Blas::triangle_bounds(mesh);
    let bvh = Bvh::build(&bounds, BLAS_LEAF_SIZE);
    let tris = bvh.order.iter().map(|&t| mesh.triangle(t as usize)).collect();
    Ok(Blas { bvh, tris })
}

/// Per-instance data held by the top level.
#[derive(Debug, Clone, PartialEq)]
pub struct TlasInstance {
    pub instance: u32,
    pub mesh: u32,
    pub object_to_world: Mat4,
    pub world_to_object: Mat4,
    /// Transpose of the inverse linear part, for normals.
    pub normal_matrix: Mat4,
    pub bounds: Aabb,
}

#[derive(Debug, Clone)]
pub struct Tlas {
    pub bvh: Bvh,
    pub instances: Vec<TlasInstance>,
}

impl Tlas {
    pub fn instance_bounds(&self) -> Vec<Aabb> {
        self.instances.iter().map(|i| i.bounds).collect()
    }
}

/// Builds the top level over the scene instances. An empty scene yields a
/// hierarchy with no instances.
pub fn build_tlas(scene: &Scene, blas: &[Blas]) -> Tlas {
    let instances: Vec<TlasInstance> = scene
        .instances()
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let o2w = inst.transform;
            let w2o = o2w.inverse().expect("scene validates instance transforms");
            let bounds = blas[inst.mesh]
                .bounds()
                .corners()
                .iter()
                .fold(Aabb::EMPTY, |b, c| b.grow(o2w.transform_point_affine(*c)));
            TlasInstance {
                instance: i as u32,
                mesh: inst.mesh as u32,
                object_to_world: o2w,
                world_to_object: w2o,
                normal_matrix: w2o.transpose(),
                bounds,
            }
        })
        .collect();
    let bvh = if instances.is_empty() {
        Bvh { nodes: Vec::new(), order: Vec::new(), max_leaf: 1 }
    } else {
        Bvh::build(&instances.iter().map(|i| i.bounds).collect::<Vec<_>>(), 1)
    };
    Tlas { bvh, instances }
}

/// Closest intersection record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub instance: u32,
    pub triangle: u32,
    /// Barycentric weight of the triangle's second vertex.
    pub u: f64,
    /// Barycentric weight of the third vertex.
    pub v: f64,
    pub position: Vec3,
    /// Interpolated unit shading normal in world space (not face-forwarded).
    pub normal: Vec3,
    /// Unit geometric normal in world space (winding order).
    pub geometric_normal: Vec3,
    pub material: u32,
}

/// Counters filled by the instrumented query variants.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraversalStats {
    pub nodes_visited: u64,
    pub triangle_tests: u64,
}

/// Scene-wide two-level hierarchy.
#[derive(Debug, Clone)]
pub struct SceneBvh {
    pub blas: Vec<Blas>,
    pub tlas: Tlas,
    bounds: Aabb,
}

#[derive(Clone, Copy)]
struct Best {
    t: f64,
    instance: u32,
    triangle: u32,
    u: f64,
    v: f64,
}

trait HitVisitor {
    fn t_max(&self) -> f64;
    /// Returns `true` to stop traversal.
    fn on_hit(&mut self, instance: u32, triangle: u32, h: TriHit) -> bool;
}

impl HitVisitor for Best {
    #[inline]
    fn t_max(&self) -> f64 {
        self.t
    }

    /// Nearest `t` wins; exact ties go to the smaller (instance, triangle).
    #[inline]
    fn on_hit(&mut self, instance: u32, triangle: u32, h: TriHit) -> bool {
        if h.t < self.t || (h.t == self.t && (instance, triangle) < (self.instance, self.triangle)) {
            *self = Best { t: h.t, instance, triangle, u: h.u, v: h.v };
        }
        false
    }
}

struct AnyHit {
    t_max: f64,
    found: bool,
}

impl HitVisitor for AnyHit {
    #[inline]
    fn t_max(&self) -> f64 {
        self.t_max
    }

    #[inline]
    fn on_hit(&mut self, _: u32, _: u32, _: TriHit) -> bool {
        self.found = true;
        true
    }
}

impl SceneBvh {
    pub fn build(scene: &Scene) -> Result<SceneBvh, AccelError> {
        let blas = scene
            .meshes()
            .iter()
            .enumerate()
            .map(|(i, m)| build_blas(m).map_err(|_| AccelError::EmptyMesh(i)))
            .collect::<Result<Vec<_>, _>>()?;
        let tlas = build_tlas(scene, &blas);
        let bounds = tlas.instances.iter().fold(Aabb::EMPTY, |b, i| b.union(i.bounds));
        Ok(SceneBvh { blas, tlas, bounds })
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    /// Offset used to start secondary rays off a surface.
    pub fn ray_epsilon(&self) -> f64 {
        let d = self.bounds.diagonal();
        RAY_EPSILON_SCALE * if d > 0.0 { d } else { 1.0 }
    }

    pub fn node_count(&self) -> usize {
        self.tlas.bvh.nodes.len() + self.blas.iter().map(|b| b.bvh.nodes.len()).sum::<usize>()
    }

    pub fn intersect_closest(&self, ray: &Ray, scene: &Scene) -> Option<Hit> {
        self.intersect_closest_counted(ray, scene, &mut TraversalStats::default())
    }

    pub fn intersect_closest_counted(&self, ray: &Ray, scene: &Scene, stats: &mut TraversalStats) -> Option<Hit> {
        let mut best = Best { t: ray.t_max, instance: u32::MAX, triangle: u32::MAX, u: 0.0, v: 0.0 };
        self.traverse(ray, scene, stats, &mut best);
        if best.instance == u32::MAX {
            return None;
        }
        Some(self.make_hit(scene, &best))
    }

    /// True when any opaque surface lies within the ray's bounds. Stops at
    /// the first one found.
    pub fn intersect_any(&self, ray: &Ray, scene: &Scene) -> bool {
        self.intersect_any_counted(ray, scene, &mut TraversalStats::default())
    }

    pub fn intersect_any_counted(&self, ray: &Ray, scene: &Scene, stats: &mut TraversalStats) -> bool {
        let mut any = AnyHit { t_max: ray.t_max, found: false };
        self.traverse(ray, scene, stats, &mut any);
        any.found
    }

    /// Walks both levels, reporting each triangle hit within
    /// `[t_min, visitor.t_max()]` to the visitor.
    fn traverse<V: HitVisitor>(&self, ray: &Ray, scene: &Scene, stats: &mut TraversalStats, visitor: &mut V) {
        let nodes = &self.tlas.bvh.nodes;
        if nodes.is_empty() || !(ray.t_min <= ray.t_max) {
            return;
        }
        let inv = inv_dir(ray.direction);
        let mut stack = [0u32; TRAVERSAL_STACK];
        let mut sp = 1usize;
        while sp > 0 {
            sp -= 1;
            let node = &nodes[stack[sp] as usize];
            stats.nodes_visited += 1;
            if node.bounds.hit(ray.origin, inv, ray.t_min, visitor.t_max()).is_none() {
                continue;
            }
            if node.is_leaf() {
                for &idx in &self.tlas.bvh.order[node.first as usize..(node.first + node.count) as usize] {
                    let inst = &self.tlas.instances[idx as usize];
                    if !scene.instance_material(inst.instance as usize).is_opaque() {
                        continue;
                    }
                    if self.traverse_blas(inst, ray, stats, visitor) {
                        return;
                    }
                }
            } else {
                sp = push_children(nodes, node, ray.origin, inv, &mut stack, sp);
            }
        }
    }

    fn traverse_blas<V: HitVisitor>(
        &self,
        inst: &TlasInstance,
        ray: &Ray,
        stats: &mut TraversalStats,
        visitor: &mut V,
    ) -> bool {
        let blas = &self.blas[inst.mesh as usize];
        let origin = inst.world_to_object.transform_point_affine(ray.origin);
        let dir = inst.world_to_object.transform_vector(ray.direction);
        let inv = inv_dir(dir);
        let sheared = ShearedRay::new(origin, dir);
        let nodes = &blas.bvh.nodes;
        let mut stack = [0u32; TRAVERSAL_STACK];
        let mut sp = 1usize;
        while sp > 0 {
            sp -= 1;
            let node = &nodes[stack[sp] as usize];
            stats.nodes_visited += 1;
            if node.bounds.hit(origin, inv, ray.t_min, visitor.t_max()).is_none() {
                continue;
            }
            if node.is_leaf() {
                for slot in node.first as usize..(node.first + node.count) as usize {
                    stats.triangle_tests += 1;
                    let [a, b, c] = blas.tris[slot];
                    if let Some(h) = intersect_watertight(&sheared, a, b, c, ray.t_min, visitor.t_max()) {
                        if visitor.on_hit(inst.instance, blas.triangle_id(slot), h) {
                            return true;
                        }
                    }
                }
            } else {
                sp = push_children(nodes, node, origin, inv, &mut stack, sp);
            }
        }
        false
    }

    fn make_hit(&self, scene: &Scene, best: &Best) -> Hit {
        let ti = &self.tlas.instances[best.instance as usize];
        hit_from_barycentrics(
            scene,
            &ti.object_to_world,
            &ti.normal_matrix,
            best.instance,
            best.triangle,
            best.t,
            best.u,
            best.v,
        )
    }
}

/// Fills a [`Hit`] from a triangle id and barycentrics. Used by both the
/// ray path and the rasterizer so they share interpolation.
#[allow(clippy::too_many_arguments)]
pub fn hit_from_barycentrics(
    scene: &Scene,
    object_to_world: &Mat4,
    normal_matrix: &Mat4,
    instance: u32,
    triangle: u32,
    t: f64,
    u: f64,
    v: f64,
) -> Hit {
    let inst = &scene.instances()[instance as usize];
    let mesh = &scene.meshes()[inst.mesh];
    let [a, b, c] = mesh.triangle(triangle as usize);
    let [na, nb, nc] = mesh.triangle_normals(triangle as usize);
    let w = 1.0 - u - v;
    let p_obj = a * w + b * u + c * v;
    let n_obj = na * w + nb * u + nc * v;
    let g_obj = (b - a).cross(c - a);
    Hit {
        t,
        instance,
        triangle,
        u,
        v,
        position: object_to_world.transform_point_affine(p_obj),
        normal: normal_matrix.transform_vector(n_obj).normalize(),
        geometric_normal: normal_matrix.transform_vector(g_obj).normalize(),
        material: inst.material,
    }
}

#[inline]
fn inv_dir(d: Vec3) -> Vec3 {
    Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z)
}

/// Pushes both children, nearer one on top. Returns the new stack pointer.
#[inline]
fn push_children(nodes: &[Node], node: &Node, origin: Vec3, inv: Vec3, stack: &mut [u32; TRAVERSAL_STACK], mut sp: usize) -> usize {
    let l = node.first;
    let r = node.first + 1;
    let tl = nodes[l as usize].bounds.hit(origin, inv, f64::NEG_INFINITY, f64::INFINITY).unwrap_or(f64::INFINITY);
    let tr = nodes[r as usize].bounds.hit(origin, inv, f64::NEG_INFINITY, f64::INFINITY).unwrap_or(f64::INFINITY);
    let (near, far) = if tl <= tr { (l, r) } else { (r, l) };
    stack[sp] = far;
    stack[sp + 1] = near;
    sp += 2;
    sp
}
