//! Marching-cubes extraction of an iso-surface from the active band.
//!
//! Cell corners are voxel centers. Only cells whose eight corners are all
//! active are polygonized, so the output is open where the band ends.

mod tables;

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::grid::VoxelGrid;
use crate::mesh::TriangleMesh;
use tables::{EDGE_TABLE, TRIANGLE_TABLE};

#[derive(Debug, Clone, PartialEq)]
pub struct IsoSurfaceConfig {
    pub iso_value: f64,
}

impl Default for IsoSurfaceConfig {
    fn default() -> Self {
        IsoSurfaceConfig { iso_value: 0.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub mesh: TriangleMesh,
    /// No active cell straddles the iso-value; `mesh` is empty.
    pub no_surface: bool,
    /// Fully active cells that were polygonized or found empty.
    pub active_cells: usize,
}

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// A lattice edge, named by its lower endpoint voxel and axis.
type EdgeKey = (usize, u8);

pub fn marching_cubes(grid: &VoxelGrid, cfg: &IsoSurfaceConfig) -> Result<Extraction> {
    if !cfg.iso_value.is_finite() {
        return Err(Error::InvalidParameter("iso value must be finite".into()));
    }
    let geo = grid.geometry;
    let [nx, ny, nz] = geo.dims;
    let iso = cfg.iso_value;

    // Per x-slab in parallel; collecting keeps cell order for determinism.
    let slabs: Vec<(Vec<[EdgeKey; 3]>, usize)> = (0..nx - 1)
        .into_par_iter()
        .map(|i| {
            let mut tris = Vec::new();
            let mut cells = 0;
            for j in 0..ny - 1 {
                for k in 0..nz - 1 {
                    let ids = CORNERS.map(|[di, dj, dk]| geo.index([i + di, j + dj, k + dk]));
                    if ids.iter().any(|&c| !grid.active[c]) {
                        continue;
                    }
                    cells += 1;
                    let mut case = 0usize;
                    for (c, &id) in ids.iter().enumerate() {
                        if grid.chi[id] < iso {
                            case |= 1 << c;
                        }
                    }
                    if EDGE_TABLE[case] == 0 {
                        continue;
                    }
                    let key = |e: i8| -> EdgeKey {
                        let [a, b] = EDGES[e as usize];
                        let (lo, hi) = (ids[a].min(ids[b]), ids[a].max(ids[b]));
                        let axis = match hi - lo {
                            d if d == ny * nz => 0,
                            d if d == nz => 1,
                            _ => 2,
                        };
                        (lo, axis)
                    };
                    for t in TRIANGLE_TABLE[case].chunks(3).take_while(|t| t[0] >= 0) {
                        // Table winding faces decreasing χ; swap to face increasing χ.
                        tris.push([key(t[0]), key(t[2]), key(t[1])]);
                    }
                }
            }
            (tris, cells)
        })
        .collect();

    let active_cells = slabs.iter().map(|s| s.1).sum();
    let mut index: HashMap<EdgeKey, u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (tris, _) in &slabs {
        for tri in tris {
            let face = tri.map(|k| {
                *index.entry(k).or_insert_with(|| {
                    vertices.push(edge_vertex(grid, k, iso));
                    (vertices.len() - 1) as u32
                })
            });
            faces.push(face);
        }
    }
    let no_surface = faces.is_empty();
    if no_surface {
        log::warn!("no iso-surface crossing inside the active band");
    }
    Ok(Extraction {
        mesh: TriangleMesh::new(vertices, faces)?,
        no_surface,
        active_cells,
    })
}

fn edge_vertex(grid: &VoxelGrid, (lo, axis): EdgeKey, iso: f64) -> Vec3 {
    let geo = &grid.geometry;
    let a = geo.coords(lo);
    let mut b = a;
    b[axis as usize] += 1;
    let (va, vb) = (grid.chi[lo], grid.chi[geo.index(b)]);
    let t = ((iso - va) / (vb - va)).clamp(0.0, 1.0);
    let mut p = geo.center(a);
    p[axis as usize] += t * geo.voxel_size;
    p
}
