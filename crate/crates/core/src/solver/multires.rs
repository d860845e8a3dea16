//! Coarse-to-fine cascade: each level is initialized by interpolating the
//! previous level's solution.

use super::{solve_cg, EnergyParams, QuadraticSystem, ReconstructionProblem, SolveReport};
use crate::geometry::Aabb;
use crate::grid::{build_band, splat, GridGeometry, VoxelGrid};
use crate::sampling::OrientedPointCloud;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LevelReport {
    pub voxel_size: f64,
    pub dims: [usize; 3],
    pub active_voxels: usize,
    pub skipped_grad_points: usize,
    /// Energy this level would start from with χ ≡ 0.
    pub zero_init_energy: f64,
    pub solve: SolveReport,
}

#[derive(Debug, Clone)]
pub struct MultiresSolution {
    /// Finest-level χ.
    pub grid: VoxelGrid,
    pub levels: Vec<LevelReport>,
}

/// Bounds of both clouds, padded so the band fits inside every level.
pub fn cascade_bounds(
    screen: &OrientedPointCloud,
    grad: &OrientedPointCloud,
    params: &EnergyParams,
) -> Option<Aabb> {
    let coarsest = params.resolutions.first().copied()?;
    let bb = Aabb::from_points(screen.points.iter().chain(&grad.points))?;
    Some(bb.padded((params.band_radius + 1.0) * coarsest))
}

/// Solves at each resolution in `params.resolutions`, coarse to fine, over
/// the box `bounds`.
pub fn solve_multires(
    screen: &OrientedPointCloud,
    grad: &OrientedPointCloud,
    params: &EnergyParams,
    bounds: Aabb,
) -> Result<MultiresSolution> {
    params.validate()?;
    if screen.is_empty() && grad.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut levels = Vec::with_capacity(params.resolutions.len());
    let mut previous: Option<VoxelGrid> = None;
    for &voxel_size in &params.resolutions {
        let geometry = GridGeometry::covering(&bounds, voxel_size)?;
        let band = build_band(
            screen.points.iter().chain(&grad.points),
            geometry,
            params.band_radius,
        )?;
        let (field, skipped_grad_points) = if grad.is_empty() {
            (crate::grid::SplatField::zeros(geometry), 0)
        } else {
            splat(grad, geometry)?
        };
        let grid = VoxelGrid::new(geometry, band)?;
        let init = previous.as_ref().map(|coarse| upsample(coarse, &grid));
        let active_voxels = grid.active_count();
        let prob = ReconstructionProblem::new(screen, field, grid, params.clone())?;
        let zero_init_energy = QuadraticSystem::assemble(&prob).constant;
        let solution = solve_cg(&prob, init.as_deref())?;
        log::info!(
            "level {voxel_size} m: {:?} voxels, {active_voxels} active, {} CG iterations, E {:.4e} -> {:.4e}",
            geometry.dims,
            solution.report.iterations,
            solution.report.initial_energy,
            solution.report.final_energy
        );
        levels.push(LevelReport {
            voxel_size,
            dims: geometry.dims,
            active_voxels,
            skipped_grad_points,
            zero_init_energy,
            solve: solution.report,
        });
        previous = Some(solution.grid);
    }
    Ok(MultiresSolution {
        grid: previous.expect("at least one level"),
        levels,
    })
}

/// Interpolates the coarse solution at every active fine voxel center.
pub fn upsample(coarse: &VoxelGrid, fine: &VoxelGrid) -> Vec<f64> {
    let geo = fine.geometry;
    (0..geo.len())
        .map(|idx| {
            if fine.active[idx] {
                coarse
                    .sample_active(&geo.center(geo.coords(idx)))
                    .unwrap_or(0.0)
            } else {
                0.0
            }
        })
        .collect()
}
