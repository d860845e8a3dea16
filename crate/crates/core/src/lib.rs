//! Gradient-domain surface reconstruction from oriented point clouds.
//!
//! The pipeline samples oriented points from a triangle mesh, splats them
//! into a narrow-band voxel grid, minimizes a screened-Poisson energy over the
//! grid values coarse-to-fine with conjugate gradients, and extracts the zero
//! level set with marching cubes. The [`metrics`] module scores the result
//! against a ground-truth mesh in 3D (precision/recall/F-score) and 2D
//! (rendered depth errors).
//!
//! ```no_run
//! use gradsurf::{mesh, sampling, solver, extract};
//!
//! let gt = mesh::load_mesh("scene.ply".as_ref())?.0.with_vertex_normals()?;
//! let p = sampling::sample_area(&gt, 100_000, 1)?;
//! let q = sampling::sample_curvature(&gt, 100_000, 2)?;
//! let params = solver::EnergyParams::default();
//! let bounds = solver::cascade_bounds(&p, &q, &params).unwrap();
//! let solved = solver::solve_multires(&p, &q, &params, bounds)?;
//! let surface = extract::marching_cubes(&solved.grid, &extract::IsoSurfaceConfig::default())?;
//! mesh::save_mesh(&surface.mesh, "out.ply".as_ref(), mesh::MeshFormat::PlyBinary)?;
//! # Ok::<(), gradsurf::Error>(())
//! ```

// Range checks are written `!(x > 0.0)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extract;
pub mod geometry;
pub mod grid;
pub mod mesh;
pub mod metrics;
pub mod pipeline;
pub mod sampling;
pub mod shapes;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{Aabb, Vec3};
pub use grid::{SplatField, VoxelGrid};
pub use mesh::{TriangleCurvature, TriangleMesh};
pub use sampling::OrientedPointCloud;
pub use solver::{EnergyParams, ReconstructionProblem};
