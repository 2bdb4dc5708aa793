#![allow(dead_code)]

use rayvr_core::camera::{make_stereo_rig, Dims, Pose, ProjectionParams, StereoRig};
use rayvr_core::math::{Mat4, Rgb, Vec3, PI};
use rayvr_core::scene::{CameraConfig, EffectId, Environment, Instance, Light, Material, Scene};
use rayvr_core::shapes;

pub const WHITE: u32 = 1;
pub const RED: u32 = 2;
pub const GREEN: u32 = 3;
pub const MIRROR: u32 = 4;
pub const BOX: u32 = 5;

/// Closed box of five walls with two blocks, a mirror sphere and a mirror
/// panel, lit by two point lights.
pub fn cornell(effect: EffectId) -> Scene {
    let meshes = vec![
        shapes::quad("wall", 2.0, 2.0),
        shapes::cuboid("block", Vec3::new(0.3, 0.6, 0.3)),
        shapes::uv_sphere("ball", 0.3, 32, 16).unwrap(),
    ];
    let wall = |t: Vec3, r: Mat4| Mat4::translation(t) * r;
    let rx = |a: f64| Mat4::rotation(Vec3::X, a);
    let rz = |a: f64| Mat4::rotation(Vec3::Z, a);
    let instances = vec![
        Instance { mesh: 0, material: WHITE, transform: wall(Vec3::new(0.0, -1.0, 0.0), Mat4::IDENTITY) },
        Instance { mesh: 0, material: WHITE, transform: wall(Vec3::new(0.0, 1.0, 0.0), rx(PI)) },
        Instance { mesh: 0, material: WHITE, transform: wall(Vec3::new(0.0, 0.0, -1.0), rx(PI / 2.0)) },
        Instance { mesh: 0, material: RED, transform: wall(Vec3::new(-1.0, 0.0, 0.0), rz(-PI / 2.0)) },
        Instance { mesh: 0, material: GREEN, transform: wall(Vec3::new(1.0, 0.0, 0.0), rz(PI / 2.0)) },
        Instance {
            mesh: 1,
            material: BOX,
            transform: Mat4::translation(Vec3::new(-0.4, -0.4, -0.3)) * Mat4::rotation(Vec3::Y, 0.3),
        },
        Instance { mesh: 2, material: MIRROR, transform: Mat4::translation(Vec3::new(0.4, -0.7, 0.2)) },
        Instance {
            mesh: 0,
            material: MIRROR,
            transform: Mat4::translation(Vec3::new(0.5, 0.2, -0.95)) * rx(PI / 2.0) * Mat4::scale(Vec3::new(0.4, 1.0, 0.4)),
        },
    ];
    let materials = vec![
        Material::diffuse(WHITE, Rgb::splat(0.75)).with_effect(effect),
        Material::diffuse(RED, Rgb::new(0.75, 0.1, 0.1)).with_effect(effect),
        Material::diffuse(GREEN, Rgb::new(0.1, 0.75, 0.1)).with_effect(effect),
        Material::diffuse(MIRROR, Rgb::splat(0.05)).with_specular(Rgb::splat(0.9)).with_effect(effect),
        Material::diffuse(BOX, Rgb::splat(0.6)).with_specular(Rgb::splat(0.2)).with_effect(effect),
    ];
    let lights = vec![
        Light::Point { position: Vec3::new(0.0, 0.9, 0.0), intensity: Rgb::splat(1.5) },
        Light::Point { position: Vec3::new(-0.5, 0.5, 0.6), intensity: Rgb::new(0.8, 0.7, 0.5) },
    ];
    let camera = CameraConfig { position: Vec3::new(0.0, 0.0, 3.0), look_at: Vec3::ZERO, up: Vec3::Y, fov_y_deg: 45.0, ipd: 0.064 };
    Scene::new(meshes, instances, materials, lights, Environment::Constant(Rgb::new(0.1, 0.1, 0.15)), camera).unwrap()
}

pub fn rig(scene: &Scene, dims: Dims, ipd: f64) -> StereoRig {
    let c = scene.camera;
    let pose = Pose::look_at(c.position, c.look_at, c.up).unwrap();
    let p = ProjectionParams::for_rays(c.fov_y_deg.to_radians(), dims.aspect()).unwrap();
    make_stereo_rig(&pose, ipd, &p, None).unwrap()
}
