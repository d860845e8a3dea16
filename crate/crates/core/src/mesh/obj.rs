//! Wavefront OBJ subset: `v`, `vn` and triangle/polygon `f` records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{attach_file_normals, fan_triangulate, TriangleMesh};
use crate::geometry::Vec3;
use crate::{Error, Result};

fn parse_vec3<'a>(mut it: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec3> {
    let mut v = [0.0; 3];
    for c in &mut v {
        let t = it
            .next()
            .ok_or_else(|| Error::parse(format!("line {line}: expected 3 coordinates")))?;
        *c = t
            .parse()
            .map_err(|_| Error::parse(format!("line {line}: bad number {t:?}")))?;
    }
    Ok(Vec3::from(v))
}

/// Resolves a 1-based (or negative, relative) OBJ index.
fn resolve(token: &str, len: usize, line: usize) -> Result<usize> {
    let i: i64 = token
        .parse()
        .map_err(|_| Error::parse(format!("line {line}: bad index {token:?}")))?;
    let resolved = match i {
        i if i > 0 => i - 1,
        i if i < 0 => len as i64 + i,
        _ => -1,
    };
    if resolved < 0 {
        return Err(Error::parse(format!("line {line}: index {i} out of range")));
    }
    Ok(resolved as usize)
}

pub(super) fn read_obj(path: &Path) -> Result<(TriangleMesh, usize)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut vertices = Vec::new();
    let mut file_normals = Vec::new();
    let mut polys: Vec<Vec<u32>> = Vec::new();
    // Normal index referenced by each (vertex) corner, if any.
    let mut corner_normals: Vec<(usize, usize, usize)> = Vec::new();
    let mut corners_without_normal = false;

    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = n + 1;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => vertices.push(parse_vec3(it, lineno)?),
            Some("vn") => file_normals.push(parse_vec3(it, lineno)?),
            Some("f") => {
                let mut poly = Vec::new();
                for corner in it {
                    let mut parts = corner.split('/');
                    let v = resolve(parts.next().unwrap_or(""), vertices.len(), lineno)?;
                    let _texcoord = parts.next();
                    match parts.next().filter(|s| !s.is_empty()) {
                        Some(nt) => {
                            let ni = resolve(nt, file_normals.len(), lineno)?;
                            corner_normals.push((v, ni, lineno));
                        }
                        None => corners_without_normal = true,
                    }
                    poly.push(u32::try_from(v).map_err(|_| Error::parse("index overflow"))?);
                }
                if poly.len() < 3 {
                    return Err(Error::parse(format!(
                        "line {lineno}: face with fewer than 3 vertices"
                    )));
                }
                polys.push(poly);
            }
            _ => {}
        }
    }

    let polygons = polys.iter().filter(|p| p.len() > 3).count();
    let faces: Vec<[u32; 3]> = polys.iter().flat_map(|p| fan_triangulate(p)).collect();
    let mesh = TriangleMesh::new(vertices, faces)?;

    if corner_normals.is_empty() || corners_without_normal {
        return Ok((mesh, polygons));
    }
    let mut per_vertex: Vec<Option<Vec3>> = vec![None; mesh.vertices().len()];
    for (v, ni, lineno) in corner_normals {
        let normal = *file_normals.get(ni).ok_or_else(|| {
            Error::parse(format!("line {lineno}: normal index {} out of range", ni + 1))
        })?;
        per_vertex[v] = Some(normal);
    }
    let mesh = match per_vertex.into_iter().collect::<Option<Vec<_>>>() {
        Some(normals) => attach_file_normals(mesh, normals),
        None => mesh,
    };
    Ok((mesh, polygons))
}

pub(super) fn write_obj(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        for v in mesh.vertices() {
            writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
        }
        if let Some(normals) = mesh.vertex_normals() {
            for n in normals {
                writeln!(w, "vn {} {} {}", n.x, n.y, n.z)?;
            }
            for f in mesh.faces() {
                let [a, b, c] = f.map(|i| i + 1);
                writeln!(w, "f {a}//{a} {b}//{b} {c}//{c}")?;
            }
        } else {
            for f in mesh.faces() {
                let [a, b, c] = f.map(|i| i + 1);
                writeln!(w, "f {a} {b} {c}")?;
            }
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}
