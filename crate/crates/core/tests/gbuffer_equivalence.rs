mod common;

use common::{cornell, rig, MIRROR};
use rayvr_core::accel::{intersect_moller_trumbore, SceneBvh};
use rayvr_core::camera::{gen_ray_from_gbuffer, gen_ray_inverse_matrix, Dims, Eye, Pose, ProjectionParams, RayGenMode};
use rayvr_core::gbuffer::{rasterize_gbuffer, GBuffer};
use rayvr_core::image::HdrImage;
use rayvr_core::math::{Mat4, Rgb, Vec2, Vec3};
use rayvr_core::scene::{eval_material, CameraConfig, EffectId, Environment, Instance, Material, Mesh, Scene};
use rayvr_core::tracer::{shade_gbuffer_direct, tonemap, EyeFrame, RayCounters, TraceSettings, Tracer};

/// Fraction of covered, non-silhouette texels whose position matches the
/// closest hit of the pixel's inverse-matrix ray within `tol`.
fn match_fraction(scene: &Scene, bvh: &SceneBvh, eye: &Eye, gb: &GBuffer, tol: f64) -> (f64, usize) {
    let d = gb.dims;
    let (mut ok, mut n) = (0usize, 0usize);
    for y in 0..d.height {
        for x in 0..d.width {
            let Some(h) = gb.get(x, y).hit else { continue };
            if gb.is_silhouette(x, y) {
                continue;
            }
            n += 1;
            let ray = gen_ray_inverse_matrix(Vec2::new(x as f64, y as f64), d, eye).unwrap();
            if let Some(r) = bvh.intersect_closest(&ray, scene) {
                if (r.position - h.position).length() <= tol {
                    ok += 1;
                }
            }
            // The reconstructed ray points back at the stored position.
            let g = gen_ray_from_gbuffer(Some(h.position), eye).unwrap();
            assert!((g.at(h.t) - h.position).length() < 1e-9);
        }
    }
    (ok as f64 / n.max(1) as f64, n)
}

#[test]
fn gbuffer_matches_ray_hits_for_both_eyes() {
    let scene = cornell(EffectId::Raster);
    let bvh = SceneBvh::build(&scene).unwrap();
    let d = Dims::new(96, 96);
    let r = rig(&scene, d, 0.064);
    for eye in [&r.left, &r.right] {
        let gb = rasterize_gbuffer(&scene, eye, d);
        let (frac, n) = match_fraction(&scene, &bvh, eye, &gb, 1e-3);
        assert!(n > 5000);
        assert!(frac >= 0.99, "{frac}");
        for t in gb.texels.iter().filter(|t| t.covered()) {
            assert!((0.0..=1.0).contains(&t.depth));
        }
    }
}

#[test]
fn gbuffer_reconstructs_single_triangle_positions() {
    let mesh = Mesh::new(
        "tri",
        vec![Vec3::new(-1.0, -1.0, -3.0), Vec3::new(1.5, -0.5, -4.0), Vec3::new(0.0, 1.2, -2.5)],
        None,
        vec![[0, 1, 2]],
    )
    .unwrap();
    let scene = Scene::new(
        vec![mesh],
        vec![Instance { mesh: 0, material: 1, transform: Mat4::IDENTITY }],
        vec![Material::diffuse(1, Rgb::WHITE)],
        vec![],
        Environment::Constant(Rgb::BLACK),
        CameraConfig::default(),
    )
    .unwrap();
    let bvh = SceneBvh::build(&scene).unwrap();
    let d = Dims::new(64, 64);
    let eye = Eye::new(&Pose::identity_at(Vec3::ZERO), ProjectionParams::for_rays(1.2, 1.0).unwrap(), Vec2::default()).unwrap();
    let gb = rasterize_gbuffer(&scene, &eye, d);
    assert!(gb.coverage() > 100);
    for y in 0..64 {
        for x in 0..64 {
            let Some(h) = gb.get(x, y).hit else { continue };
            let ray = gen_ray_from_gbuffer(Some(h.position), &eye).unwrap();
            if gb.is_silhouette(x, y) {
                continue;
            }
            let hit = bvh.intersect_closest(&ray, &scene).unwrap();
            assert!((hit.position - h.position).length() < 1e-4);
        }
    }
    // Uncovered pixels produce no ray.
    assert!(gen_ray_from_gbuffer(gb.get(0, 63).hit.map(|h| h.position), &eye).is_none());
}

#[test]
fn depth_test_keeps_nearest_of_two_triangles() {
    let a = [Vec3::new(-2.0, -2.0, -3.0), Vec3::new(2.0, -1.0, -6.0), Vec3::new(0.0, 2.0, -4.0)];
    let b = [Vec3::new(-2.0, 1.5, -6.0), Vec3::new(2.0, 1.0, -2.5), Vec3::new(0.0, -2.0, -4.5)];
    let mesh = Mesh::new("pair", [a, b].concat(), None, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
    let scene = Scene::new(
        vec![mesh],
        vec![Instance { mesh: 0, material: 1, transform: Mat4::IDENTITY }],
        vec![Material::diffuse(1, Rgb::WHITE)],
        vec![],
        Environment::Constant(Rgb::BLACK),
        CameraConfig::default(),
    )
    .unwrap();
    let d = Dims::new(80, 80);
    let eye = Eye::new(&Pose::identity_at(Vec3::ZERO), ProjectionParams::for_rays(1.4, 1.0).unwrap(), Vec2::default()).unwrap();
    let gb = rasterize_gbuffer(&scene, &eye, d);
    let mut both = 0;
    for y in 0..80 {
        for x in 0..80 {
            let Some(h) = gb.get(x, y).hit else { continue };
            if gb.is_silhouette(x, y) {
                continue;
            }
            let ray = gen_ray_inverse_matrix(Vec2::new(x as f64, y as f64), d, &eye).unwrap();
            let ta = intersect_moller_trumbore(ray.origin, ray.direction, a[0], a[1], a[2]).map(|h| h.t);
            let tb = intersect_moller_trumbore(ray.origin, ray.direction, b[0], b[1], b[2]).map(|h| h.t);
            if let (Some(ta), Some(tb)) = (ta, tb) {
                // Skip the intersection line, where either answer is right.
                if (ta - tb).abs() < 1e-2 {
                    continue;
                }
                both += 1;
                assert_eq!(h.triangle, if ta < tb { 0 } else { 1 }, "pixel {x},{y}");
            }
        }
    }
    assert!(both > 200, "{both}");
}

fn neighbor_covered(gb: &GBuffer, x: u32, y: u32) -> bool {
    [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().any(|(dx, dy)| {
        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
        nx >= 0 && ny >= 0 && nx < gb.dims.width as i64 && ny < gb.dims.height as i64 && gb.get(nx as u32, ny as u32).covered()
    })
}

fn render(scene: &Scene, mode: RayGenMode, dims: Dims) -> HdrImage {
    let bvh = SceneBvh::build(scene).unwrap();
    let settings = TraceSettings { raygen_mode: mode, max_depth: 2, ..TraceSettings::default() };
    let tracer = Tracer::new(scene, &bvh, &settings);
    let eye = rig(scene, dims, 0.0).left;
    let gb = rasterize_gbuffer(scene, &eye, dims);
    let frame = EyeFrame { eye: &eye, dims, gbuffer: Some(&gb), frame: 0 };
    tracer.render_eye(&frame, &mut RayCounters::default()).unwrap()
}

#[test]
fn raster_effects_equal_gbuffer_direct_shading() {
    let d = Dims::new(64, 64);
    for (effect, shadows) in [(EffectId::Raster, false), (EffectId::RasterShadows, true)] {
        let scene = cornell(effect);
        let bvh = SceneBvh::build(&scene).unwrap();
        let eye = rig(&scene, d, 0.0).left;
        let gb = rasterize_gbuffer(&scene, &eye, d);
        let direct = shade_gbuffer_direct(&gb, &eye, &scene, &bvh, shadows, &mut RayCounters::default());
        assert_eq!(render(&scene, RayGenMode::GBufferDerived, d), direct, "{effect:?}");
        // Ray modes take raster-shaded first hits from the G-buffer too;
        // only pixels the rasterizer leaves uncovered along seams and
        // silhouettes may be resolved by a primary ray instead.
        for mode in [RayGenMode::InverseMatrix, RayGenMode::OptimizedExpression] {
            let img = render(&scene, mode, d);
            for i in 0..d.pixel_count() {
                let (x, y) = (i as u32 % d.width, i as u32 / d.width);
                if img.pixels[i] != direct.pixels[i] {
                    assert!(!gb.texels[i].covered() && neighbor_covered(&gb, x, y), "{mode:?} {x},{y}");
                }
            }
        }
        if !shadows {
            // Without shadows the pass is a plain sum over lights.
            let settings = TraceSettings::default();
            let t = Tracer::new(&scene, &bvh, &settings);
            for y in 0..d.height {
                for x in 0..d.width {
                    let Some(h) = gb.get(x, y).hit else { continue };
                    let s = t.surface(h, (h.position - eye.origin).normalize());
                    let sum = scene.lights().iter().fold(s.material.emissive, |acc, l| acc + eval_material(&s.point, s.material, l));
                    let got = direct.get(x, y);
                    assert!((got - sum).max_channel().abs() < 1e-12 && (sum - got).max_channel().abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn switching_one_material_changes_only_its_pixels() {
    let d = Dims::new(64, 64);
    let base = cornell(EffectId::Raster);
    let mut mixed = base.clone();
    assert!(mixed.set_material_effect(MIRROR, EffectId::Mirror).unwrap());
    let eye = rig(&base, d, 0.0).left;
    let gb = rasterize_gbuffer(&base, &eye, d);
    let (a, b) = (render(&base, RayGenMode::GBufferDerived, d), render(&mixed, RayGenMode::GBufferDerived, d));
    let mut changed = 0;
    for y in 0..d.height {
        for x in 0..d.width {
            let is_mirror = gb.get(x, y).hit.is_some_and(|h| h.material == MIRROR);
            if a.get(x, y) != b.get(x, y) {
                assert!(is_mirror, "pixel {x},{y} changed");
                changed += 1;
            }
        }
    }
    assert!(changed > 20);
    // Switching every material back to raster restores the raster image.
    let mut back = mixed.clone();
    back.override_effects(EffectId::Raster);
    assert_eq!(render(&back, RayGenMode::GBufferDerived, d), a);
    // A no-op switch does not count as a scene change.
    let rev = back.revision();
    assert!(!back.set_material_effect(MIRROR, EffectId::Raster).unwrap());
    assert_eq!(back.revision(), rev);
}

#[test]
fn mirror_images_agree_between_inverse_and_gbuffer_modes() {
    let d = Dims::new(96, 96);
    let scene = cornell(EffectId::Mirror);
    let eye = rig(&scene, d, 0.0).left;
    let gb = rasterize_gbuffer(&scene, &eye, d);
    let a = render(&scene, RayGenMode::InverseMatrix, d);
    let b = render(&scene, RayGenMode::GBufferDerived, d);
    let (mut ok, mut n) = (0, 0);
    for y in 0..d.height {
        for x in 0..d.width {
            if gb.is_silhouette(x, y) {
                continue;
            }
            n += 1;
            let (pa, pb) = (tonemap(a.get(x, y)), tonemap(b.get(x, y)));
            if pa.iter().zip(pb).all(|(p, q)| p.abs_diff(q) <= 1) {
                ok += 1;
            }
        }
    }
    assert!(ok as f64 >= 0.99 * n as f64, "{ok}/{n}");
}
