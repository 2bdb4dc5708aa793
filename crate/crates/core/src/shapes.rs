//! Procedural meshes for the bundled scenes and tests.
//!
//! Closed shapes share seam and pole vertices so their surfaces are
//! watertight under a watertight triangle test.

use alloc::string::String;
use alloc::vec::Vec;

use crate::math::{cos, sin, Vec3, PI};
use crate::scene::{Mesh, SceneError};

/// Unit quad in the XZ plane centered at the origin, normal `+y`.
pub fn quad(name: impl Into<String>, width: f64, depth: f64) -> Mesh {
    let (hw, hd) = (width * 0.5, depth * 0.5);
    let positions = alloc::vec![
        Vec3::new(-hw, 0.0, -hd),
        Vec3::new(-hw, 0.0, hd),
        Vec3::new(hw, 0.0, hd),
        Vec3::new(hw, 0.0, -hd),
    ];
    let normals = alloc::vec![Vec3::Y; 4];
    Mesh::new(name, positions, Some(normals), alloc::vec![[0, 1, 2], [0, 2, 3]]).expect("valid quad")
}

/// Axis-aligned box with flat-shaded faces.
pub fn cuboid(name: impl Into<String>, half: Vec3) -> Mesh {
    let corner = |sx: f64, sy: f64, sz: f64| Vec3::new(sx * half.x, sy * half.y, sz * half.z);
    // Each face: outward normal and four corners counter-clockwise seen from outside.
    let faces: [(Vec3, [Vec3; 4]); 6] = [
        (Vec3::X, [corner(1., -1., 1.), corner(1., -1., -1.), corner(1., 1., -1.), corner(1., 1., 1.)]),
        (-Vec3::X, [corner(-1., -1., -1.), corner(-1., -1., 1.), corner(-1., 1., 1.), corner(-1., 1., -1.)]),
        (Vec3::Y, [corner(-1., 1., 1.), corner(1., 1., 1.), corner(1., 1., -1.), corner(-1., 1., -1.)]),
        (-Vec3::Y, [corner(-1., -1., -1.), corner(1., -1., -1.), corner(1., -1., 1.), corner(-1., -1., 1.)]),
        (Vec3::Z, [corner(-1., -1., 1.), corner(1., -1., 1.), corner(1., 1., 1.), corner(-1., 1., 1.)]),
        (-Vec3::Z, [corner(1., -1., -1.), corner(-1., -1., -1.), corner(-1., 1., -1.), corner(1., 1., -1.)]),
    ];
    let mut positions = Vec::with_capacity(24);
    let mut normals = Vec::with_capacity(24);
    let mut indices = Vec::with_capacity(12);
    for (n, quad) in faces {
        let base = positions.len() as u32;
        positions.extend_from_slice(&quad);
        normals.extend_from_slice(&[n; 4]);
        indices.push([base, base + 1, base + 2]);
        indices.push([base, base + 2, base + 3]);
    }
    Mesh::new(name, positions, Some(normals), indices).expect("valid box")
}

/// UV sphere with `segments` around the equator and `rings` from pole to
/// pole. Triangle count is `2 * segments * (rings - 1)`.
pub fn uv_sphere(name: impl Into<String>, radius: f64, segments: u32, rings: u32) -> Result<Mesh, SceneError> {
    let name = name.into();
    if segments < 3 || rings < 2 {
        return Err(SceneError::InvalidMesh { name, reason: "sphere needs segments >= 3 and rings >= 2" });
    }
    let mut positions = Vec::new();
    positions.push(Vec3::new(0.0, radius, 0.0));
    for ring in 1..rings {
        let theta = PI * ring as f64 / rings as f64;
        let (st, ct) = (sin(theta), cos(theta));
        for seg in 0..segments {
            let phi = 2.0 * PI * seg as f64 / segments as f64;
            positions.push(Vec3::new(radius * st * cos(phi), radius * ct, radius * st * sin(phi)));
        }
    }
    positions.push(Vec3::new(0.0, -radius, 0.0));
    let south = positions.len() as u32 - 1;
    let ring_start = |ring: u32| 1 + (ring - 1) * segments;
    let mut indices = Vec::new();
    for seg in 0..segments {
        let next = (seg + 1) % segments;
        indices.push([0, ring_start(1) + next, ring_start(1) + seg]);
    }
    for ring in 1..rings - 1 {
        let (a, b) = (ring_start(ring), ring_start(ring + 1));
        for seg in 0..segments {
            let next = (seg + 1) % segments;
            indices.push([a + seg, a + next, b + next]);
            indices.push([a + seg, b + next, b + seg]);
        }
    }
    let last = ring_start(rings - 1);
    for seg in 0..segments {
        let next = (seg + 1) % segments;
        indices.push([south, last + seg, last + next]);
    }
    let normals = positions.iter().map(|p| p.normalize()).collect();
    Mesh::new(name, positions, Some(normals), indices)
}

/// Torus around the y axis. Triangle count is `2 * segments * sides`.
pub fn torus(
    name: impl Into<String>,
    major: f64,
    minor: f64,
    segments: u32,
    sides: u32,
) -> Result<Mesh, SceneError> {
    let name = name.into();
    if segments < 3 || sides < 3 || !(minor > 0.0) || !(major > minor) {
        return Err(SceneError::InvalidMesh { name, reason: "torus needs 3+ segments/sides and major > minor > 0" });
    }
    let mut positions = Vec::new();
    let mut normals = Vec::new();
    for i in 0..segments {
        let phi = 2.0 * PI * i as f64 / segments as f64;
        let center = Vec3::new(major * cos(phi), 0.0, major * sin(phi));
        let radial = Vec3::new(cos(phi), 0.0, sin(phi));
        for j in 0..sides {
            let theta = 2.0 * PI * j as f64 / sides as f64;
            let n = radial * cos(theta) + Vec3::Y * sin(theta);
            positions.push(center + n * minor);
            normals.push(n);
        }
    }
    let idx = |i: u32, j: u32| (i % segments) * sides + (j % sides);
    let mut indices = Vec::new();
    for i in 0..segments {
        for j in 0..sides {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            indices.push([a, c, b]);
            indices.push([a, d, c]);
        }
    }
    Mesh::new(name, positions, Some(normals), indices)
}

/// Closed cylinder along y from `-height/2` to `height/2`.
pub fn cylinder(name: impl Into<String>, radius: f64, height: f64, segments: u32) -> Result<Mesh, SceneError> {
    let name = name.into();
    if segments < 3 || !(radius > 0.0) || !(height > 0.0) {
        return Err(SceneError::InvalidMesh { name, reason: "cylinder needs 3+ segments and positive size" });
    }
    let h = height * 0.5;
    let ring = |y: f64| -> Vec<Vec3> {
        (0..segments)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / segments as f64;
                Vec3::new(radius * cos(phi), y, radius * sin(phi))
            })
            .collect()
    };
    let (top, bottom) = (ring(h), ring(-h));
    let mut positions = Vec::new();
    let mut normals = Vec::new();
    let mut indices = Vec::new();
    // Side, smooth normals.
    for p in top.iter().chain(bottom.iter()) {
        positions.push(*p);
        normals.push(Vec3::new(p.x, 0.0, p.z).normalize());
    }
    for i in 0..segments {
        let n = (i + 1) % segments;
        let (t0, t1, b0, b1) = (i, n, segments + i, segments + n);
        indices.push([t0, t1, b1]);
        indices.push([t0, b1, b0]);
    }
    // Caps, flat normals; rim positions are bit-identical to the side rims.
    for (rim, y, n) in [(&top, h, Vec3::Y), (&bottom, -h, -Vec3::Y)] {
        let center = positions.len() as u32;
        positions.push(Vec3::new(0.0, y, 0.0));
        normals.push(n);
        let start = positions.len() as u32;
        for p in rim.iter() {
            positions.push(*p);
            normals.push(n);
        }
        for i in 0..segments {
            let nx = (i + 1) % segments;
            if n.y > 0.0 {
                indices.push([center, start + nx, start + i]);
            } else {
                indices.push([center, start + i, start + nx]);
            }
        }
    }
    Mesh::new(name, positions, Some(normals), indices)
}
