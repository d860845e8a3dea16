//! Screened-Poisson energy over narrow-band grid values and its minimizer.
//!
//! ```text
//! E(χ) = w0 · Σ_p χ(p)²  +  w1 · Σ_q W(q) · |∇χ(q) − n̄(q)|²
//! ```
//!
//! `p` runs over screening points (trilinear χ), `q` over active voxels with
//! splat weight `W(q) > 0` whose six face neighbors are active, `∇` is the
//! central difference and `n̄ = normal_sum / weight_sum`. Both terms are
//! squared, so `E` is quadratic in χ and conjugate gradients apply.

mod cg;
mod multires;
mod system;

pub use cg::{solve_cg, Solution, SolveReport};
pub use multires::{cascade_bounds, solve_multires, LevelReport, MultiresSolution};
pub use system::QuadraticSystem;

use crate::geometry::Vec3;
use crate::grid::{SplatField, VoxelGrid};
use crate::sampling::OrientedPointCloud;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyParams {
    /// Screening weight.
    pub w0: f64,
    /// Gradient-fitting weight.
    pub w1: f64,
    /// Band half-width in voxels.
    pub band_radius: f64,
    /// Relative residual at which CG stops.
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    /// Voxel sizes in meters, coarse to fine.
    pub resolutions: Vec<f64>,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            w0: 4.0,
            w1: 1.0,
            band_radius: 3.0,
            cg_tol: 1e-6,
            cg_max_iters: 2000,
            resolutions: vec![0.16, 0.08, 0.04],
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.w0 >= 0.0) {
            return bad(format!("w0 must be >= 0, got {}", self.w0));
        }
        if !(self.w1 > 0.0) {
            return bad(format!("w1 must be > 0, got {}", self.w1));
        }
        if !(self.band_radius >= 1.0) {
            return bad(format!("band radius must be >= 1, got {}", self.band_radius));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return bad(format!("cg_tol must be in (0,1), got {}", self.cg_tol));
        }
        if self.resolutions.is_empty() {
            return bad("at least one resolution is required".into());
        }
        if self.resolutions.iter().any(|&v| !(v > 0.0)) {
            return bad(format!("resolutions must be positive: {:?}", self.resolutions));
        }
        if self.resolutions.windows(2).any(|w| w[1] >= w[0]) {
            return bad(format!(
                "resolutions must be strictly decreasing: {:?}",
                self.resolutions
            ));
        }
        Ok(())
    }
}

/// One level of the reconstruction: unknown χ on `grid`, screening points
/// and the splatted gradient target.
#[derive(Debug, Clone)]
pub struct ReconstructionProblem {
    pub screen_points: Vec<Vec3>,
    pub grad_field: SplatField,
    pub grid: VoxelGrid,
    pub params: EnergyParams,
}

impl ReconstructionProblem {
    pub fn new(
        screen_cloud: &OrientedPointCloud,
        grad_field: SplatField,
        grid: VoxelGrid,
        params: EnergyParams,
    ) -> Result<Self> {
        Self::from_points(screen_cloud.points.clone(), grad_field, grid, params)
    }

    pub fn from_points(
        screen_points: Vec<Vec3>,
        grad_field: SplatField,
        grid: VoxelGrid,
        params: EnergyParams,
    ) -> Result<Self> {
        if grad_field.geometry != grid.geometry {
            return Err(Error::InvalidParameter(
                "gradient field and grid disagree on origin/voxel size/dims".into(),
            ));
        }
        Ok(ReconstructionProblem {
            screen_points,
            grad_field,
            grid,
            params,
        })
    }

    /// Voxels that carry a gradient term: active, positive weight, all six
    /// face neighbors active.
    pub(crate) fn gradient_voxels(&self) -> impl Iterator<Item = (usize, Vec3)> + '_ {
        (0..self.grid.chi.len()).filter_map(move |idx| {
            if !self.grid.active[idx] || self.grad_field.weight_sum[idx] <= 0.0 {
                return None;
            }
            let d = self
                .grid
                .central_difference(self.grid.geometry.coords(idx))
                .ok()?;
            Some((idx, d))
        })
    }
}

/// Energy split into its two terms, with the number of skipped terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyTerms {
    pub screening: f64,
    pub gradient: f64,
    pub skipped_screen_points: usize,
    pub skipped_gradient_voxels: usize,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.screening + self.gradient
    }
}

pub fn energy(prob: &ReconstructionProblem) -> f64 {
    energy_terms(prob).total()
}

/// Evaluates the energy term by term through [`VoxelGrid::trilinear_eval`]
/// and [`VoxelGrid::central_difference`].
pub fn energy_terms(prob: &ReconstructionProblem) -> EnergyTerms {
    let mut terms = EnergyTerms::default();
    let params = &prob.params;
    for p in &prob.screen_points {
        match prob.grid.trilinear_eval(p) {
            Ok(v) => terms.screening += v * v,
            Err(_) => terms.skipped_screen_points += 1,
        }
    }
    terms.screening *= params.w0;

    let field = &prob.grad_field;
    for idx in 0..prob.grid.chi.len() {
        let w = field.weight_sum[idx];
        if !prob.grid.active[idx] || w <= 0.0 {
            continue;
        }
        match prob.grid.central_difference(prob.grid.geometry.coords(idx)) {
            Ok(d) => terms.gradient += w * (d - field.normal_sum[idx] / w).norm_squared(),
            Err(_) => terms.skipped_gradient_voxels += 1,
        }
    }
    terms.gradient *= params.w1;
    terms
}

/// Exact gradient of [`energy`] with respect to every voxel value; zero on
/// inactive voxels.
pub fn energy_gradient(prob: &ReconstructionProblem) -> Vec<f64> {
    let geo = prob.grid.geometry;
    let params = &prob.params;
    let mut grad = vec![0.0; geo.len()];

    // Screening: adjoint of trilinear evaluation is trilinear splatting.
    for p in &prob.screen_points {
        let Ok(v) = prob.grid.trilinear_eval(p) else {
            continue;
        };
        let stencil = geo.stencil(p).expect("evaluated points have a stencil");
        for (idx, w) in stencil {
            grad[idx] += 2.0 * params.w0 * v * w;
        }
    }

    // Gradient fit: adjoint of the central difference.
    let half_inv_v = 0.5 / geo.voxel_size;
    for (idx, d) in prob.gradient_voxels() {
        let w = prob.grad_field.weight_sum[idx];
        let residual = d - prob.grad_field.normal_sum[idx] / w;
        let c = geo.coords(idx);
        for axis in 0..3 {
            let s = 2.0 * params.w1 * w * residual[axis] * half_inv_v;
            grad[geo.neighbor(c, axis, true).expect("interior")] += s;
            grad[geo.neighbor(c, axis, false).expect("interior")] -= s;
        }
    }
    grad
}
