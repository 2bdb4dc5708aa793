use proptest::prelude::*;
use rayvr_core::camera::{
    gen_ray_inverse_matrix, gen_ray_optimized, make_perspective, make_stereo_rig, raster_to_ndc, Dims, Eye,
    FrustumOverride, Pose, ProjectionParams,
};
use rayvr_core::math::{Mat4, Vec2, Vec3};

fn angle_between(a: Vec3, b: Vec3) -> f64 {
    // atan2 of cross and dot is accurate for tiny angles.
    a.cross(b).length().atan2(a.dot(b))
}

fn unit_vec() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-degenerate", |(x, y, z)| x * x + y * y + z * z > 0.05)
        .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalize())
}

fn pose() -> impl Strategy<Value = Pose> {
    (unit_vec(), (-20.0..20.0f64, -20.0..20.0f64, -20.0..20.0f64))
        .prop_filter_map("up not parallel to view", |(fwd, (x, y, z))| {
            let pos = Vec3::new(x, y, z);
            Pose::look_at(pos, pos + fwd, Vec3::Y).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_round_trip(
        n in 0.01..1.0f64, span in 1.5..1000.0f64, fov in 0.2..3.0f64, aspect in 0.3..3.0f64,
        fx in -0.9..0.9f64, fy in -0.9..0.9f64, fz in 0.0..1.0f64,
    ) {
        let f = n * span;
        let p = ProjectionParams::new(n, f, fov, aspect).unwrap();
        let m = make_perspective(&p).unwrap();
        let inv = m.inverse().unwrap();
        // A point inside the frustum: depth between the planes, inside the
        // side planes.
        let z = n + (f - n) * fz.clamp(1e-3, 0.999);
        let half_h = (fov / 2.0).tan() * z;
        let q = Vec3::new(fx * half_h * aspect, fy * half_h, z);
        let back = inv.transform_point(m.transform_point(q));
        prop_assert!((back - q).length() <= 1e-6 * q.length().max(1.0), "{q:?} -> {back:?}");
        let zp = m.transform_point(q).z;
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&zp));
    }

    #[test]
    fn mat4_inverse_and_associativity(
        axis in unit_vec(), angle in -3.0..3.0f64,
        s in (0.2..5.0f64, 0.2..5.0f64, 0.2..5.0f64), t in (-9.0..9.0f64, -9.0..9.0f64, -9.0..9.0f64),
        p in (-9.0..9.0f64, -9.0..9.0f64, -9.0..9.0f64),
    ) {
        let a = Mat4::translation(Vec3::new(t.0, t.1, t.2));
        let b = Mat4::rotation(axis, angle);
        let c = Mat4::scale(Vec3::new(s.0, s.1, s.2));
        prop_assert!(((a * b) * c).max_abs_diff(&(a * (b * c))) < 1e-9);
        prop_assert_eq!(Mat4::IDENTITY * b, b);
        let m = a * b * c;
        let pt = Vec3::new(p.0, p.1, p.2);
        let back = m.inverse().unwrap().transform_point(m.transform_point(pt));
        prop_assert!((back - pt).length() <= 1e-9 * pt.length().max(1.0));
    }

    #[test]
    fn mono_optimized_matches_inverse(
        pose in pose(), fov in 0.2..2.8f64, w in 1u32..1024, h in 1u32..1024, px in 0.0..1.0f64, py in 0.0..1.0f64,
    ) {
        let d = Dims::new(w, h);
        let p = ProjectionParams::for_rays(fov, d.aspect()).unwrap();
        let eye = Eye::new(&pose, p, Vec2::default()).unwrap();
        let pixel = Vec2::new((px * w as f64).floor(), (py * h as f64).floor());
        let a = gen_ray_optimized(pixel, d, &eye, &p).unwrap();
        let b = gen_ray_inverse_matrix(pixel, d, &eye).unwrap();
        prop_assert!(angle_between(a.direction, b.direction) < 1e-5);
        prop_assert!((a.direction.length() - 1.0).abs() < 1e-6);
        prop_assert_eq!(a.origin, b.origin);
    }

    #[test]
    fn eye_basis_and_matrices_consistent(pose in pose(), fov in 0.2..2.8f64, aspect in 0.3..3.0f64) {
        let p = ProjectionParams::for_rays(fov, aspect).unwrap();
        let e = Eye::new(&pose, p, Vec2::default()).unwrap();
        for (a, b) in [(e.u, e.v), (e.u, e.w), (e.v, e.w)] {
            prop_assert!(a.dot(b).abs() < 1e-6);
        }
        for v in [e.u, e.v, e.w] {
            prop_assert!((v.length() - 1.0).abs() < 1e-6);
        }
        prop_assert!((e.inv_view_proj * (e.proj * e.view)).max_abs_diff(&Mat4::IDENTITY) < 1e-6);
    }

    #[test]
    fn disparity_times_depth_is_constant(ipd in 0.01..0.2f64, fov in 0.5..2.0f64, x in -0.3..0.3f64, y in -0.3..0.3f64) {
        let d = Dims::new(512, 512);
        let p = ProjectionParams::for_rays(fov, 1.0).unwrap();
        let rig = make_stereo_rig(&Pose::identity_at(Vec3::ZERO), ipd, &p, None).unwrap();
        let products: Vec<f64> = [1.0, 3.0, 10.0, 30.0, 100.0]
            .iter()
            .map(|&z| {
                let pt = Vec3::new(x * z, y * z, -z);
                let l = rig.left.world_to_raster(pt, d).unwrap();
                let r = rig.right.world_to_raster(pt, d).unwrap();
                (l.x - r.x) * z
            })
            .collect();
        for v in &products {
            prop_assert!((v / products[0] - 1.0).abs() < 0.01, "{products:?}");
        }
    }
}

#[test]
fn raster_to_ndc_endpoints() {
    let d = Dims::new(800, 800);
    assert!((raster_to_ndc(Vec2::new(0.0, 0.0), d).unwrap().x + 0.99875).abs() < 1e-12);
    assert!((raster_to_ndc(Vec2::new(799.0, 799.0), d).unwrap().y - 0.99875).abs() < 1e-12);
    assert!(raster_to_ndc(Vec2::new(399.5, 399.5), d).unwrap().x.abs() < 1e-12);
    assert!(raster_to_ndc(Vec2::new(800.0, 0.0), d).is_err());
}

#[test]
fn far_point_has_sub_pixel_disparity() {
    let d = Dims::new(512, 512);
    let p = ProjectionParams::for_rays(60f64.to_radians(), 1.0).unwrap();
    let ipd = 0.064;
    let rig = make_stereo_rig(&Pose::identity_at(Vec3::ZERO), ipd, &p, None).unwrap();
    let pt = Vec3::new(0.3, -0.2, -10_000.0 * ipd);
    let (l, r) = (rig.left.world_to_raster(pt, d).unwrap(), rig.right.world_to_raster(pt, d).unwrap());
    assert!((l.x - r.x).abs() < 1.0 && (l.y - r.y).abs() < 1e-9);
}

#[test]
fn zero_ipd_gives_identical_eyes_and_swap_mirrors_disparity() {
    let p = ProjectionParams::for_rays(1.0, 1.0).unwrap();
    let pose = Pose::look_at(Vec3::new(1.0, 2.0, 3.0), Vec3::ZERO, Vec3::Y).unwrap();
    let rig0 = make_stereo_rig(&pose, 0.0, &p, None).unwrap();
    assert_eq!(rig0.left, rig0.right);

    let rig = make_stereo_rig(&Pose::identity_at(Vec3::ZERO), 0.064, &p, None).unwrap();
    assert!((rig.left.origin - Vec3::new(-0.032, 0.0, 0.0)).length() < 1e-12);
    assert!((rig.right.origin - Vec3::new(0.032, 0.0, 0.0)).length() < 1e-12);
    assert!(((rig.left.origin - rig.right.origin).length() - 0.064).abs() < 1e-9);
    let sw = rig.swapped();
    let d = Dims::new(64, 64);
    for i in 0..50 {
        let pt = Vec3::new((i as f64 * 0.37).sin(), (i as f64 * 0.71).cos() * 0.5, -2.0 - i as f64 * 0.3);
        let disp = |r: &rayvr_core::StereoRig| r.left.world_to_raster(pt, d).unwrap().x - r.right.world_to_raster(pt, d).unwrap().x;
        let (a, b) = (disp(&rig), disp(&sw));
        assert!(a > 0.0 && (a + b).abs() < 1e-9);
    }
}

/// Reprojection error of the closed-form expression under asymmetric
/// per-eye frusta: rays from the closed form and from the true projection
/// land on different pixels.
#[test]
fn asymmetric_frustum_breaks_optimized_expression() {
    let d = Dims::new(512, 512);
    let p = ProjectionParams::for_rays(90f64.to_radians(), 1.0).unwrap();
    let fo = FrustumOverride { left_shift: Vec2::new(0.15, 0.0), right_shift: Vec2::new(-0.15, 0.0) };
    let rig = make_stereo_rig(&Pose::identity_at(Vec3::ZERO), 0.064, &p, Some(fo)).unwrap();
    let mut worst: f64 = 0.0;
    for eye in [&rig.left, &rig.right] {
        for (x, y) in [(0.0, 0.0), (255.0, 255.0), (511.0, 100.0)] {
            let ray = gen_ray_optimized(Vec2::new(x, y), d, eye, &p).unwrap();
            let back = eye.world_to_raster(ray.at(5.0), d).unwrap();
            worst = worst.max((back.x - (x + 0.5)).abs().max((back.y - (y + 0.5)).abs()));
            let inv = gen_ray_inverse_matrix(Vec2::new(x, y), d, eye).unwrap();
            let back = eye.world_to_raster(inv.at(5.0), d).unwrap();
            assert!((back.x - (x + 0.5)).abs() < 1e-6 && (back.y - (y + 0.5)).abs() < 1e-6);
        }
    }
    assert!(worst > 1.0, "worst reprojection error {worst}");
}
