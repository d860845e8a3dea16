//! Procedural meshes used as fixtures by tests, benches and the CLI demo.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Vec3;
use crate::mesh::TriangleMesh;
use crate::sampling::OrientedPointCloud;

/// Uniform samples on an analytic sphere with exact outward normals.
pub fn sphere_cloud(center: Vec3, radius: f64, count: usize, seed: u64) -> OrientedPointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (points, normals) = (0..count)
        .map(|_| {
            // Archimedes: z uniform in [-1, 1] gives uniform area.
            let z: f64 = rng.random_range(-1.0..=1.0);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).max(0.0).sqrt();
            let n = Vec3::new(s * phi.cos(), s * phi.sin(), z).normalize();
            (center + n * radius, n)
        })
        .unzip();
    OrientedPointCloud { points, normals }
}

/// Axis-aligned unit cube `[0,1]³`, 8 vertices and 12 outward faces.
///
/// Every square is split along the diagonal joining its two even-parity
/// corners, so each corner sees the same triangle count on all three of its
/// squares and area-weighted normals come out exactly diagonal.
pub fn unit_cube() -> TriangleMesh {
    let vertices = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
        [0.0, 1.0, 1.0],
    ]
    .map(Vec3::from)
    .to_vec();
    let faces = vec![
        [0, 3, 2],
        [0, 2, 1],
        [5, 6, 7],
        [5, 7, 4],
        [0, 1, 5],
        [0, 5, 4],
        [7, 6, 2],
        [7, 2, 3],
        [0, 4, 7],
        [0, 7, 3],
        [2, 6, 5],
        [2, 5, 1],
    ];
    TriangleMesh::new(vertices, faces).expect("valid cube")
}

/// Subdivided icosahedron projected onto a sphere at the origin.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vec3::from(*v).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Vec3>| -> u32 {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = (vertices[a as usize] + vertices[b as usize]).normalize();
                vertices.push(m);
                (vertices.len() - 1) as u32
            })
        };
        faces = faces
            .iter()
            .flat_map(|&[a, b, c]| {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
            })
            .collect();
    }
    let vertices = vertices.into_iter().map(|v| v * radius).collect();
    TriangleMesh::new(vertices, faces).expect("valid icosphere")
}

/// Icosphere centred at `center` carrying exact radial normals.
pub fn icosphere_at(center: Vec3, radius: f64, subdivisions: u32) -> TriangleMesh {
    let sphere = icosphere(radius, subdivisions);
    let normals = sphere.vertices().iter().map(|v| v.normalize()).collect();
    let moved = sphere.vertices().iter().map(|v| v + center).collect();
    TriangleMesh::new(moved, sphere.faces().to_vec())
        .and_then(|m| m.with_normals(normals))
        .expect("valid icosphere")
}

/// Square `size × size` in the plane `z = height`, centred on `(cx, cy)`,
/// split into `cells × cells` quads, with `+z` normals.
pub fn floor(cx: f64, cy: f64, height: f64, size: f64, cells: u32) -> TriangleMesh {
    let n = cells + 1;
    let step = size / cells as f64;
    let x0 = cx - size / 2.0;
    let y0 = cy - size / 2.0;
    let mut vertices = Vec::with_capacity((n * n) as usize);
    for j in 0..n {
        for i in 0..n {
            vertices.push(Vec3::new(
                x0 + i as f64 * step,
                y0 + j as f64 * step,
                height,
            ));
        }
    }
    let mut faces = Vec::with_capacity((2 * cells * cells) as usize);
    for j in 0..cells {
        for i in 0..cells {
            let a = j * n + i;
            let b = a + 1;
            let c = a + n + 1;
            let d = a + n;
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    let normals = vec![Vec3::z(); vertices.len()];
    TriangleMesh::new(vertices, faces)
        .and_then(|m| m.with_normals(normals))
        .expect("valid floor")
}
