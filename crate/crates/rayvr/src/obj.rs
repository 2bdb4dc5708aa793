//! Wavefront OBJ reader: positions, normals and polygon faces.
//!
//! Each `o` or `g` statement starts a new mesh. Polygons are fan
//! triangulated from their first corner. Meshes whose faces all carry
//! normal indices keep those normals; others get area-weighted vertex
//! normals.

use std::collections::HashMap;
use std::path::Path;

use rayvr_core::math::Vec3;
use rayvr_core::scene::Mesh;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ObjError {
    pub line: usize,
    pub message: String,
}

struct Builder {
    name: String,
    /// (position index, normal index) per triangle corner.
    corners: Vec<[(usize, Option<usize>); 3]>,
    first_line: usize,
}

impl Builder {
    fn new(name: String, line: usize) -> Self {
        Self { name, corners: Vec::new(), first_line: line }
    }

    fn finish(self, positions: &[Vec3], normals: &[Vec3]) -> Result<Option<Mesh>, ObjError> {
        if self.corners.is_empty() {
            return Ok(None);
        }
        let with_normals = self.corners.iter().flatten().all(|c| c.1.is_some());
        let mut remap: HashMap<(usize, Option<usize>), u32> = HashMap::new();
        let mut mesh_pos = Vec::new();
        let mut mesh_nrm = Vec::new();
        let mut indices = Vec::with_capacity(self.corners.len());
        for tri in &self.corners {
            let mut out = [0u32; 3];
            for (slot, &(vi, ni)) in out.iter_mut().zip(tri) {
                let key = if with_normals { (vi, ni) } else { (vi, None) };
                *slot = *remap.entry(key).or_insert_with(|| {
                    mesh_pos.push(positions[vi]);
                    if let Some(n) = key.1 {
                        mesh_nrm.push(normals[n]);
                    }
                    (mesh_pos.len() - 1) as u32
                });
            }
            indices.push(out);
        }
        let normals = with_normals.then_some(mesh_nrm);
        Mesh::new(self.name, mesh_pos, normals, indices)
            .map(Some)
            .map_err(|e| ObjError { line: self.first_line, message: e.to_string() })
    }
}

fn parse_floats<const N: usize>(parts: &[&str], line: usize, what: &str) -> Result<[f64; N], ObjError> {
    if parts.len() < N {
        return Err(ObjError { line, message: format!("{what} needs {N} numbers") });
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| ObjError { line, message: format!("bad number '{p}' in {what}") })?;
    }
    Ok(out)
}

/// Resolves a 1-based or negative (relative) OBJ index against `count`.
fn resolve(token: &str, count: usize, line: usize, what: &str) -> Result<usize, ObjError> {
    let err = || ObjError { line, message: format!("{what} index '{token}' out of range") };
    let i: i64 = token.parse().map_err(|_| ObjError { line, message: format!("bad {what} index '{token}'") })?;
    let idx = match i {
        0 => return Err(err()),
        i if i > 0 => i as usize - 1,
        i => count.checked_sub(i.unsigned_abs() as usize).ok_or_else(err)?,
    };
    if idx >= count {
        return Err(err());
    }
    Ok(idx)
}

/// Parses OBJ text. Faces before any `o` or `g` statement go into a mesh
/// named `default_name`.
pub fn parse_obj(src: &str, default_name: &str) -> Result<Vec<Mesh>, ObjError> {
    let mut positions = Vec::new();
    let mut normals = Vec::new();
    let mut uv_count = 0usize;
    let mut meshes = Vec::new();
    let mut current = Builder::new(default_name.to_string(), 1);
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut parts = content.split_whitespace();
        let Some(keyword) = parts.next() else { continue };
        let rest: Vec<&str> = parts.collect();
        match keyword {
            "v" => positions.push(Vec3::from_array(parse_floats::<3>(&rest, line, "vertex")?)),
            "vn" => normals.push(Vec3::from_array(parse_floats::<3>(&rest, line, "normal")?)),
            "vt" => {
                parse_floats::<1>(&rest, line, "texture coordinate")?;
                uv_count += 1;
            }
            "o" | "g" => {
                let name = if rest.is_empty() { default_name.to_string() } else { rest.join(" ") };
                let done = std::mem::replace(&mut current, Builder::new(name, line));
                meshes.extend(done.finish(&positions, &normals)?);
            }
            "f" => {
                if rest.len() < 3 {
                    return Err(ObjError { line, message: "face needs at least 3 vertices".into() });
                }
                let mut poly = Vec::with_capacity(rest.len());
                for tok in &rest {
                    let mut fields = tok.split('/');
                    let v = resolve(fields.next().unwrap_or(""), positions.len(), line, "vertex")?;
                    if let Some(t) = fields.next().filter(|t| !t.is_empty()) {
                        resolve(t, uv_count, line, "texture")?;
                    }
                    let n = match fields.next().filter(|n| !n.is_empty()) {
                        Some(n) => Some(resolve(n, normals.len(), line, "normal")?),
                        None => None,
                    };
                    poly.push((v, n));
                }
                for k in 1..poly.len() - 1 {
                    current.corners.push([poly[0], poly[k], poly[k + 1]]);
                }
            }
            // Materials, smoothing groups, lines and points carry nothing
            // this renderer uses.
            _ => {}
        }
    }
    meshes.extend(current.finish(&positions, &normals)?);
    if meshes.is_empty() {
        return Err(ObjError { line: src.lines().count().max(1), message: "no faces".into() });
    }
    Ok(meshes)
}

pub fn load_obj(path: &Path) -> Result<Vec<Mesh>> {
    let src = std::fs::read_to_string(path).map_err(Error::io(path))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
    parse_obj(&src, stem).map_err(|source| Error::Obj { path: path.to_path_buf(), source })
}
