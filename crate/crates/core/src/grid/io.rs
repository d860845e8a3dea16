//! Binary grid files: a `GRADSURF-GRID v1` header line, then little-endian
//! origin (3×f64), voxel size (f64), dims (3×i32), χ as f32 in k-fastest
//! order, and the active mask packed LSB-first.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GridGeometry, VoxelGrid};
use crate::geometry::Vec3;
use crate::{Error, Result};

pub const GRID_MAGIC: &str = "GRADSURF-GRID v1";

pub fn write_grid(grid: &VoxelGrid, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode(grid, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn encode(grid: &VoxelGrid, w: &mut impl Write) -> std::io::Result<()> {
    let g = &grid.geometry;
    writeln!(w, "{GRID_MAGIC}")?;
    for c in g.origin.iter() {
        w.write_all(&c.to_le_bytes())?;
    }
    w.write_all(&g.voxel_size.to_le_bytes())?;
    for d in g.dims {
        w.write_all(&(d as i32).to_le_bytes())?;
    }
    for &c in &grid.chi {
        w.write_all(&(c as f32).to_le_bytes())?;
    }
    let mut bits = vec![0u8; grid.active.len().div_ceil(8)];
    for (i, _) in grid.active.iter().enumerate().filter(|(_, &a)| a) {
        bits[i / 8] |= 1 << (i % 8);
    }
    w.write_all(&bits)
}

pub fn read_grid(path: &Path) -> Result<VoxelGrid> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode(&mut BufReader::new(file))
}

fn decode(r: &mut impl Read) -> Result<VoxelGrid> {
    let truncated = |e: std::io::Error| Error::parse(format!("grid file truncated: {e}"));
    let mut magic = vec![0u8; GRID_MAGIC.len() + 1];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic[..GRID_MAGIC.len()] != GRID_MAGIC.as_bytes() || magic[GRID_MAGIC.len()] != b'\n' {
        return Err(Error::UnsupportedFormat("missing GRADSURF-GRID v1 header".into()));
    }
    let mut f64s = [0.0f64; 4];
    for v in &mut f64s {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(truncated)?;
        *v = f64::from_le_bytes(b);
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let mut b = [0u8; 4];
        r.read_exact(&mut b).map_err(truncated)?;
        let v = i32::from_le_bytes(b);
        *d = usize::try_from(v).map_err(|_| Error::parse(format!("negative grid dim {v}")))?;
    }
    let geometry = GridGeometry::new(Vec3::new(f64s[0], f64s[1], f64s[2]), f64s[3], dims)?;
    let n = geometry.len();
    let mut raw = vec![0u8; n * 4];
    r.read_exact(&mut raw).map_err(truncated)?;
    let chi = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let mut bits = vec![0u8; n.div_ceil(8)];
    r.read_exact(&mut bits).map_err(truncated)?;
    let active = (0..n).map(|i| bits[i / 8] >> (i % 8) & 1 == 1).collect();
    Ok(VoxelGrid {
        geometry,
        chi,
        active,
    })
}
