//! Indexed triangle meshes, vertex normals and the per-face curvature
//! descriptor that drives curvature-guided sampling.

mod obj;
mod ply;

use std::path::Path;

use nalgebra::Isometry3;
use rayon::prelude::*;

use crate::geometry::{triangle_area, triangle_cross, Vec3};
use crate::{Error, Result};

pub(crate) use ply::{read_ply, write_ply, PlyData, PlyEncoding, PlyScalar, PlyVertexTable};

/// Faces with less area than this (m²) are dropped at load.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Triangle mesh with counterclockwise faces and optional unit vertex normals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    vertex_normals: Option<Vec<Vec3>>,
}

impl TriangleMesh {
    /// Builds a mesh, rejecting out-of-range face indices.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(bad) = faces.iter().flatten().find(|&&i| i as usize >= n) {
            return Err(Error::parse(format!(
                "face references vertex {bad} but mesh has {n} vertices"
            )));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::parse("non-finite vertex coordinate"));
        }
        Ok(TriangleMesh {
            vertices,
            faces,
            vertex_normals: None,
        })
    }

    /// Attaches vertex normals, normalizing each to unit length.
    pub fn with_normals(mut self, normals: Vec<Vec3>) -> Result<Self> {
        if normals.len() != self.vertices.len() {
            return Err(Error::InvalidParameter(format!(
                "{} normals for {} vertices",
                normals.len(),
                self.vertices.len()
            )));
        }
        let normals = normals
            .into_iter()
            .enumerate()
            .map(|(i, n)| {
                n.try_normalize(0.0).ok_or_else(|| {
                    Error::DegenerateGeometry(format!("vertex {i} has a zero normal"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.vertex_normals = Some(normals);
        Ok(self)
    }

    /// Keeps existing normals, otherwise computes them.
    pub fn with_vertex_normals(self) -> Result<Self> {
        if self.vertex_normals.is_some() {
            Ok(self)
        } else {
            self.compute_vertex_normals()
        }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn vertex_normals(&self) -> Option<&[Vec3]> {
        self.vertex_normals.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        triangle_area(&a, &b, &c)
    }

    pub fn face_areas(&self) -> Vec<f64> {
        (0..self.faces.len()).map(|f| self.face_area(f)).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas().iter().sum()
    }

    /// Drops faces below [`DEGENERATE_AREA`]; returns how many were removed.
    pub fn remove_degenerate_faces(&mut self) -> usize {
        let before = self.faces.len();
        let vertices = &self.vertices;
        self.faces.retain(|&[a, b, c]| {
            triangle_area(
                &vertices[a as usize],
                &vertices[b as usize],
                &vertices[c as usize],
            ) >= DEGENERATE_AREA
        });
        before - self.faces.len()
    }

    /// Area-weighted average of incident face normals, normalized.
    ///
    /// Vertices referenced by no face get `+z`; a vertex whose incident faces
    /// all have zero area (or cancel exactly) is an error.
    pub fn compute_vertex_normals(&self) -> Result<TriangleMesh> {
        if self.faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let mut sums = vec![Vec3::zeros(); self.vertices.len()];
        let mut referenced = vec![false; self.vertices.len()];
        for f in 0..self.faces.len() {
            let [a, b, c] = self.triangle(f);
            // |cross| is twice the area, so the sum is area weighted.
            let n = triangle_cross(&a, &b, &c);
            for &i in &self.faces[f] {
                sums[i as usize] += n;
                referenced[i as usize] = true;
            }
        }
        let mut isolated = 0usize;
        let normals = sums
            .into_iter()
            .zip(referenced)
            .enumerate()
            .map(|(i, (s, used))| {
                if !used {
                    isolated += 1;
                    return Ok(Vec3::z());
                }
                s.try_normalize(1e-300).ok_or_else(|| {
                    Error::DegenerateGeometry(format!(
                        "vertex {i} has only zero-area incident faces"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if isolated > 0 {
            log::warn!("{isolated} unreferenced vertices given a placeholder +z normal");
        }
        Ok(TriangleMesh {
            vertices: self.vertices.clone(),
            faces: self.faces.clone(),
            vertex_normals: Some(normals),
        })
    }

    /// Per-face total-curvature descriptor and its prefix sum.
    pub fn triangle_curvature(&self) -> Result<TriangleCurvature> {
        let normals = self.vertex_normals.as_ref().ok_or(Error::MissingNormals)?;
        let per_face = self
            .faces
            .par_iter()
            .map(|&[a, b, c]| {
                let (a, b, c) = (a as usize, b as usize, c as usize);
                face_curvature(
                    [&self.vertices[a], &self.vertices[b], &self.vertices[c]],
                    [&normals[a], &normals[b], &normals[c]],
                )
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(TriangleCurvature::from_per_face(per_face))
    }

    /// Applies a rigid motion to positions and normals.
    pub fn transformed(&self, motion: &Isometry3<f64>) -> TriangleMesh {
        TriangleMesh {
            vertices: self
                .vertices
                .iter()
                .map(|v| motion.transform_point(&(*v).into()).coords)
                .collect(),
            faces: self.faces.clone(),
            vertex_normals: self
                .vertex_normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| motion.transform_vector(n)).collect()),
        }
    }

    /// Concatenates two meshes. Normals survive only if both carry them.
    pub fn merged(&self, other: &TriangleMesh) -> TriangleMesh {
        let offset = self.vertices.len() as u32;
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut faces = self.faces.clone();
        faces.extend(other.faces.iter().map(|f| f.map(|i| i + offset)));
        let vertex_normals = match (&self.vertex_normals, &other.vertex_normals) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        TriangleMesh {
            vertices,
            faces,
            vertex_normals,
        }
    }
}

/// Normal variation across one triangle:
/// `(|ΔN_ab/e_ab|² + |ΔN_bc/e_bc|² + |ΔN_ac/e_ac|²) · area`.
pub fn face_curvature(v: [&Vec3; 3], n: [&Vec3; 3]) -> Result<f64> {
    let [a, b, c] = v;
    let [na, nb, nc] = n;
    let e_ab = (a - b).norm();
    let e_bc = (b - c).norm();
    let e_ac = (a - c).norm();
    if e_ab.min(e_bc).min(e_ac) < 1e-12 {
        return Err(Error::DegenerateGeometry(
            "edge shorter than 1e-12 in curvature evaluation".into(),
        ));
    }
    let term = |d: Vec3, e: f64| (d / e).norm_squared();
    let sum = term(na - nb, e_ab) + term(nb - nc, e_bc) + term(na - nc, e_ac);
    Ok(sum * triangle_area(a, b, c))
}

/// Per-face curvature with its running total.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleCurvature {
    pub per_face: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl TriangleCurvature {
    pub fn from_per_face(per_face: Vec<f64>) -> Self {
        let cumulative = prefix_sum(&per_face);
        TriangleCurvature {
            per_face,
            cumulative,
        }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

pub(crate) fn prefix_sum(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// On-disk mesh encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    PlyAscii,
    PlyBinary,
}

impl MeshFormat {
    /// `.obj` or `.ply` (binary for writing).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("ply") => Ok(MeshFormat::PlyBinary),
            other => Err(Error::UnsupportedFormat(format!(
                "mesh extension {:?}",
                other.unwrap_or("")
            ))),
        }
    }
}

/// What load-time cleaning did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub degenerate_faces_dropped: usize,
    pub polygons_triangulated: usize,
}

/// Reads an OBJ or PLY (ASCII or binary little-endian) mesh and drops
/// degenerate faces.
pub fn load_mesh(path: &Path) -> Result<(TriangleMesh, LoadReport)> {
    let (mut mesh, polygons) = match MeshFormat::from_path(path)? {
        MeshFormat::Obj => obj::read_obj(path)?,
        MeshFormat::PlyAscii | MeshFormat::PlyBinary => mesh_from_ply(read_ply(path)?)?,
    };
    let dropped = mesh.remove_degenerate_faces();
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} degenerate faces", path.display());
    }
    Ok((
        mesh,
        LoadReport {
            degenerate_faces_dropped: dropped,
            polygons_triangulated: polygons,
        },
    ))
}

pub fn save_mesh(mesh: &TriangleMesh, path: &Path, format: MeshFormat) -> Result<()> {
    match format {
        MeshFormat::Obj => obj::write_obj(mesh, path),
        MeshFormat::PlyAscii => save_mesh_ply(mesh, None, path, PlyEncoding::Ascii),
        MeshFormat::PlyBinary => save_mesh_ply(mesh, None, path, PlyEncoding::BinaryLittleEndian),
    }
}

/// Binary PLY with per-vertex `red green blue` bytes.
pub fn save_colored_mesh(mesh: &TriangleMesh, colors: &[[u8; 3]], path: &Path) -> Result<()> {
    if colors.len() != mesh.vertices.len() {
        return Err(Error::InvalidParameter(format!(
            "{} colors for {} vertices",
            colors.len(),
            mesh.vertices.len()
        )));
    }
    save_mesh_ply(mesh, Some(colors), path, PlyEncoding::BinaryLittleEndian)
}

fn save_mesh_ply(
    mesh: &TriangleMesh,
    colors: Option<&[[u8; 3]]>,
    path: &Path,
    encoding: PlyEncoding,
) -> Result<()> {
    let mut columns: Vec<(&str, PlyScalar, Vec<f64>)> = ["x", "y", "z"]
        .iter()
        .enumerate()
        .map(|(a, name)| {
            (
                *name,
                PlyScalar::F64,
                mesh.vertices.iter().map(|v| v[a]).collect(),
            )
        })
        .collect();
    if let Some(normals) = &mesh.vertex_normals {
        for (a, name) in ["nx", "ny", "nz"].iter().enumerate() {
            columns.push((*name, PlyScalar::F64, normals.iter().map(|n| n[a]).collect()));
        }
    }
    if let Some(colors) = colors {
        for (a, name) in ["red", "green", "blue"].iter().enumerate() {
            columns.push((
                *name,
                PlyScalar::U8,
                colors.iter().map(|c| c[a] as f64).collect(),
            ));
        }
    }
    let table = PlyVertexTable {
        len: mesh.vertices.len(),
        columns,
    };
    write_ply(path, encoding, &table, Some(&mesh.faces))
}

fn mesh_from_ply(data: PlyData) -> Result<(TriangleMesh, usize)> {
    let vertices = data.positions()?;
    let normals = data.normals()?;
    let mut polygons = 0;
    let mut faces = Vec::new();
    for poly in data.faces()? {
        if poly.len() < 3 {
            return Err(Error::parse(format!("face with {} vertices", poly.len())));
        }
        if poly.len() > 3 {
            polygons += 1;
        }
        faces.extend(fan_triangulate(&poly));
    }
    let mesh = TriangleMesh::new(vertices, faces)?;
    let mesh = match normals {
        Some(n) => attach_file_normals(mesh, n),
        None => mesh,
    };
    Ok((mesh, polygons))
}

pub(crate) fn fan_triangulate(poly: &[u32]) -> impl Iterator<Item = [u32; 3]> + '_ {
    (1..poly.len() - 1).map(move |i| [poly[0], poly[i], poly[i + 1]])
}

/// Normals supplied by a file are kept if every one is nonzero.
pub(crate) fn attach_file_normals(mesh: TriangleMesh, normals: Vec<Vec3>) -> TriangleMesh {
    let fallback = mesh.clone();
    match mesh.with_normals(normals) {
        Ok(m) => m,
        Err(e) => {
            log::warn!("ignoring file normals ({e}); they will be recomputed");
            fallback
        }
    }
}
