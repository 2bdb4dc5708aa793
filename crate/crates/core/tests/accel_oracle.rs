use proptest::prelude::*;
use rayvr_core::accel::{build_blas, intersect_moller_trumbore, intersect_watertight, Aabb, Blas, SceneBvh, ShearedRay, TraversalStats};
use rayvr_core::camera::Ray;
use rayvr_core::math::{Mat4, Rgb, Vec3};
use rayvr_core::rng::Rng;
use rayvr_core::scene::{CameraConfig, Environment, Instance, Material, Mesh, Scene};
use rayvr_core::shapes;

/// Closest opaque hit by testing every world-space triangle.
fn scan_closest(scene: &Scene, ray: &Ray) -> Option<(u32, u32, f64)> {
    let mut best: Option<(u32, u32, f64)> = None;
    for (ii, inst) in scene.instances().iter().enumerate() {
        if !scene.instance_material(ii).is_opaque() {
            continue;
        }
        let mesh = &scene.meshes()[inst.mesh];
        for ti in 0..mesh.triangle_count() {
            let [a, b, c] = mesh.triangle(ti).map(|p| inst.transform.transform_point_affine(p));
            if let Some(h) = intersect_moller_trumbore(ray.origin, ray.direction, a, b, c) {
                if h.t < ray.t_min || h.t > ray.t_max {
                    continue;
                }
                let cand = (ii as u32, ti as u32, h.t);
                best = match best {
                    Some(b) if b.2 < h.t || (b.2 == h.t && (b.0, b.1) < (cand.0, cand.1)) => Some(b),
                    _ => Some(cand),
                };
            }
        }
    }
    best
}

fn scene_from(meshes: Vec<Mesh>, instances: Vec<Instance>, materials: Vec<Material>) -> Scene {
    Scene::new(meshes, instances, materials, vec![], Environment::Constant(Rgb::BLACK), CameraConfig::default()).unwrap()
}

fn random_dir(rng: &mut Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.next_f64() * 2.0 - 1.0, rng.next_f64() * 2.0 - 1.0, rng.next_f64() * 2.0 - 1.0);
        if v.length_squared() > 0.01 && v.length_squared() <= 1.0 {
            return v.normalize();
        }
    }
}

/// Mixed scene: spheres, a torus, boxes and a translucent occluder.
fn mixed_scene() -> Scene {
    let meshes = vec![
        shapes::uv_sphere("sphere", 1.0, 24, 12).unwrap(),
        shapes::torus("torus", 1.0, 0.3, 24, 12).unwrap(),
        shapes::cuboid("box", Vec3::new(0.5, 0.7, 0.3)),
        shapes::quad("glass", 3.0, 3.0),
    ];
    let mut instances = Vec::new();
    let mut rng = Rng::from_key(11);
    for i in 0..12 {
        let t = Vec3::new(rng.next_f64() * 8.0 - 4.0, rng.next_f64() * 8.0 - 4.0, rng.next_f64() * 8.0 - 4.0);
        let xf = Mat4::translation(t) * Mat4::rotation(random_dir(&mut rng), rng.next_f64() * 3.0) * Mat4::scale(Vec3::new(1.0, 0.5 + rng.next_f64(), 1.0));
        instances.push(Instance { mesh: i % 3, material: 1, transform: xf });
    }
    instances.push(Instance { mesh: 3, material: 2, transform: Mat4::IDENTITY });
    scene_from(meshes, instances, vec![Material::diffuse(1, Rgb::WHITE), Material::diffuse(2, Rgb::WHITE).with_alpha(0.2)])
}

#[test]
fn closest_and_any_match_exhaustive_scan() {
    let scene = mixed_scene();
    let bvh = SceneBvh::build(&scene).unwrap();
    let mut rng = Rng::from_key(3);
    let mut hits = 0;
    for _ in 0..1000 {
        let origin = Vec3::new(rng.next_f64() * 16.0 - 8.0, rng.next_f64() * 16.0 - 8.0, rng.next_f64() * 16.0 - 8.0);
        // Aim half of the rays at instances so most of them hit.
        let dir = if rng.next_f64() < 0.5 {
            let inst = &scene.instances()[rng.next_index(12)];
            (inst.transform.transform_point_affine(Vec3::ZERO) - origin).normalize()
        } else {
            random_dir(&mut rng)
        };
        let ray = Ray::new(origin, dir).with_bounds(1e-4, 1e4);
        let got = bvh.intersect_closest(&ray, &scene);
        let want = scan_closest(&scene, &ray);
        match (got, want) {
            (Some(g), Some((i, t, dist))) => {
                hits += 1;
                assert_eq!((g.instance, g.triangle), (i, t));
                assert!((g.t - dist).abs() <= 1e-6);
                assert!(g.u >= 0.0 && g.v >= 0.0 && g.u + g.v <= 1.0 + 1e-12);
            }
            (None, None) => {}
            other => panic!("mismatch {other:?}"),
        }
        assert_eq!(bvh.intersect_any(&ray, &scene), want.is_some());
    }
    assert!(hits > 300, "{hits}");
}

#[test]
fn traversal_visits_bounded_by_node_count() {
    let scene = mixed_scene();
    let bvh = SceneBvh::build(&scene).unwrap();
    let mut rng = Rng::from_key(5);
    for _ in 0..200 {
        let ray = Ray::new(Vec3::new(0.0, 0.0, 12.0), random_dir(&mut rng));
        let mut stats = TraversalStats::default();
        bvh.intersect_closest_counted(&ray, &scene, &mut stats);
        assert!(stats.nodes_visited as usize <= bvh.node_count());
        let mut any = TraversalStats::default();
        bvh.intersect_any_counted(&ray, &scene, &mut any);
        assert!(any.nodes_visited <= stats.nodes_visited.max(1) + bvh.node_count() as u64);
    }
}

#[test]
fn sphere_blas_audit() {
    let mesh = shapes::uv_sphere("s", 1.0, 26, 11).unwrap();
    assert!(mesh.triangle_count() >= 500);
    let blas = build_blas(&mesh).unwrap();
    let bounds = Blas::triangle_bounds(&mesh);
    let audit = blas.bvh.audit(&bounds).unwrap();
    assert!(audit.leaves >= mesh.triangle_count() / 4);
    let mesh_box = bounds.iter().fold(Aabb::EMPTY, |a, b| a.union(*b));
    let leaf_union = blas
        .bvh
        .nodes
        .iter()
        .filter(|n| n.is_leaf())
        .fold(Aabb::EMPTY, |a, n| a.union(n.bounds));
    assert!(leaf_union.contains(&mesh_box));
    for n in blas.bvh.nodes.iter().filter(|n| n.is_leaf()) {
        assert!(n.count <= 4);
    }
    let mut seen = blas.bvh.order.clone();
    seen.sort_unstable();
    assert_eq!(seen, (0..mesh.triangle_count() as u32).collect::<Vec<_>>());
}

#[test]
fn fifty_instance_tlas_audit() {
    let mut rng = Rng::from_key(8);
    let instances = (0..50)
        .map(|_| Instance {
            mesh: 0,
            material: 1,
            transform: Mat4::translation(Vec3::new(rng.next_f64() * 40.0, rng.next_f64() * 40.0, rng.next_f64() * 40.0))
                * Mat4::rotation(random_dir(&mut rng), rng.next_f64() * 6.0),
        })
        .collect();
    let scene = scene_from(vec![shapes::cuboid("c", Vec3::splat(0.5))], instances, vec![Material::diffuse(1, Rgb::WHITE)]);
    let bvh = SceneBvh::build(&scene).unwrap();
    let inst_bounds = bvh.tlas.instance_bounds();
    bvh.tlas.bvh.audit(&inst_bounds).unwrap();
    let root = bvh.blas[0].bounds();
    for (ti, inst) in bvh.tlas.instances.iter().zip(scene.instances()) {
        let expect = root.corners().iter().fold(Aabb::EMPTY, |b, c| b.grow(inst.transform.transform_point_affine(*c)));
        assert_eq!(ti.bounds, expect);
        assert!(bvh.tlas.bvh.bounds().contains(&ti.bounds));
    }
}

#[test]
fn single_and_pair_tlas() {
    let one = scene_from(
        vec![shapes::quad("q", 1.0, 1.0)],
        vec![Instance { mesh: 0, material: 1, transform: Mat4::IDENTITY }],
        vec![Material::diffuse(1, Rgb::WHITE)],
    );
    assert_eq!(SceneBvh::build(&one).unwrap().tlas.bvh.nodes.len(), 1);
    let two = scene_from(
        vec![shapes::quad("q", 1.0, 1.0)],
        vec![
            Instance { mesh: 0, material: 1, transform: Mat4::IDENTITY },
            Instance { mesh: 0, material: 1, transform: Mat4::translation(Vec3::new(10.0, 0.0, 0.0)) },
        ],
        vec![Material::diffuse(1, Rgb::WHITE)],
    );
    let b = SceneBvh::build(&two).unwrap();
    assert_eq!(b.tlas.bvh.nodes.len(), 3);
    assert!(b.tlas.bvh.nodes[1].bounds.max.x < b.tlas.bvh.nodes[2].bounds.min.x || b.tlas.bvh.nodes[2].bounds.max.x < b.tlas.bvh.nodes[1].bounds.min.x);
}

#[test]
fn closed_mesh_crossings_are_even() {
    for mesh in [
        shapes::uv_sphere("s", 1.0, 40, 20).unwrap(),
        shapes::cuboid("c", Vec3::new(0.8, 0.6, 0.9)),
        shapes::torus("t", 0.8, 0.3, 32, 16).unwrap(),
    ] {
        let n = 200;
        let mut odd = 0;
        let mut total = 0;
        for axis in 0..3 {
            let dir = [Vec3::X, Vec3::Y, Vec3::Z][axis];
            let (u, v) = dir.orthonormal_basis();
            let sheared = |o| ShearedRay::new(o, dir);
            for i in 0..n {
                for j in 0..n {
                    // Grid spacing chosen so samples land on vertices and edges.
                    let (a, b) = (i as f64 / n as f64 * 2.4 - 1.2, j as f64 / n as f64 * 2.4 - 1.2);
                    let origin = dir * -5.0 + u * a + v * b;
                    let r = sheared(origin);
                    // A ray through a shared edge or vertex reports every
                    // incident triangle at the same t: count distinct
                    // surface crossings.
                    let mut ts: Vec<f64> = (0..mesh.triangle_count())
                        .filter_map(|t| {
                            let [p, q, s] = mesh.triangle(t);
                            intersect_watertight(&r, p, q, s, 0.0, f64::INFINITY).map(|h| h.t)
                        })
                        .collect();
                    ts.sort_by(f64::total_cmp);
                    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
                    let count = ts.len();
                    total += 1;
                    if count % 2 == 1 {
                        odd += 1;
                    }
                }
            }
        }
        assert!((odd as f64) <= total as f64 * 1e-3, "{}: {odd} of {total} rays have odd crossings", mesh.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_soup_matches_scan(seed in any::<u64>(), count in 1usize..60) {
        let mut rng = Rng::from_key(seed);
        let mut positions = Vec::new();
        let mut indices = Vec::new();
        for t in 0..count {
            let base = Vec3::new(rng.next_f64() * 6.0 - 3.0, rng.next_f64() * 6.0 - 3.0, rng.next_f64() * 6.0 - 3.0);
            for _ in 0..3 {
                positions.push(base + Vec3::new(rng.next_f64(), rng.next_f64(), rng.next_f64()) * 1.5);
            }
            indices.push([3 * t as u32, 3 * t as u32 + 1, 3 * t as u32 + 2]);
        }
        let mesh = Mesh::new("soup", positions, None, indices).unwrap();
        let scene = scene_from(
            vec![mesh],
            vec![
                Instance { mesh: 0, material: 1, transform: Mat4::IDENTITY },
                Instance { mesh: 0, material: 1, transform: Mat4::translation(Vec3::new(2.0, 0.0, 0.0)) * Mat4::rotation(Vec3::Y, 1.0) },
            ],
            vec![Material::diffuse(1, Rgb::WHITE)],
        );
        let bvh = SceneBvh::build(&scene).unwrap();
        for _ in 0..50 {
            let origin = random_dir(&mut rng) * 9.0;
            let target = Vec3::new(rng.next_f64() * 4.0 - 2.0, rng.next_f64() * 4.0 - 2.0, rng.next_f64() * 4.0 - 2.0);
            let ray = Ray::new(origin, target - origin);
            let got = bvh.intersect_closest(&ray, &scene).map(|h| (h.instance, h.triangle, h.t));
            let want = scan_closest(&scene, &ray);
            match (got, want) {
                (Some(g), Some(w)) => {
                    prop_assert_eq!((g.0, g.1), (w.0, w.1));
                    prop_assert!((g.2 - w.2).abs() <= 1e-6);
                }
                (g, w) => prop_assert_eq!(g.is_some(), w.is_some()),
            }
        }
    }
}
