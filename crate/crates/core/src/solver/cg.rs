//! Jacobi-preconditioned conjugate gradients on the assembled energy.

use super::{QuadraticSystem, ReconstructionProblem};
use crate::grid::VoxelGrid;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// `|∇E| / |∇E(init)|` at exit.
    pub relative_residual: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// Energy after each iteration, starting with the initial value.
    pub energy_history: Vec<f64>,
    pub unknowns: usize,
    pub skipped_screen_points: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub grid: VoxelGrid,
    pub report: SolveReport,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes the energy from `init` (a dense χ field; zeros when `None`).
///
/// Stops when the residual ‖b − Ax‖ falls below `cg_tol`·‖b‖ or after
/// `cg_max_iters`; a non-converged run still returns its last (lowest-energy)
/// iterate with `converged = false`. Inactive voxels are zero in the result.
pub fn solve_cg(prob: &ReconstructionProblem, init: Option<&[f64]>) -> Result<Solution> {
    let params = &prob.params;
    if !(params.w1 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "w1 must be > 0, got {}",
            params.w1
        )));
    }
    if params.w0 == 0.0 {
        log::warn!("w0 = 0: the energy is invariant to constant shifts and has no unique minimizer");
    }
    let len = prob.grid.chi.len();
    if let Some(init) = init {
        if init.len() != len {
            return Err(Error::InvalidParameter("initial field size mismatch".into()));
        }
    }

    let system = QuadraticSystem::assemble(prob);
    let n = system.len();
    let mut x = match init {
        Some(init) => system.gather(init),
        None => vec![0.0; n],
    };
    // Voxels coupled to nothing have a zero row; leave them alone.
    let inv_diag: Vec<f64> = system
        .diagonal
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut ax = vec![0.0; n];
    system.apply(&x, &mut ax);
    let mut r: Vec<f64> = system.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let energy_of = |x: &[f64], r: &[f64]| {
        // xᵀAx = xᵀb − xᵀr, so E = c − bᵀx − rᵀx.
        system.constant - dot(&system.rhs, x) - dot(r, x)
    };
    let initial_energy = system.energy(&x);
    let mut history = vec![initial_energy];
    let r0 = dot(&r, &r).sqrt();
    // Relative to ‖b‖ so a warm start near the minimizer stops early.
    let b_norm = dot(&system.rhs, &system.rhs).sqrt();
    let scale = if b_norm > 0.0 { b_norm } else { r0 };
    let mut rel = if r0 > 0.0 { r0 / scale } else { 0.0 };
    let mut iterations = 0;
    let mut converged = rel <= params.cg_tol;

    if !converged {
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, m)| a * m).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        while iterations < params.cg_max_iters {
            system.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            history.push(energy_of(&x, &r));
            rel = dot(&r, &r).sqrt() / scale;
            if rel <= params.cg_tol {
                converged = true;
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
    if !converged {
        log::warn!(
            "CG stopped after {iterations} iterations at relative residual {rel:.3e} (tol {:.1e})",
            params.cg_tol
        );
    }

    let final_energy = system.energy(&x);
    let grid = VoxelGrid {
        geometry: prob.grid.geometry,
        chi: system.scatter(&x, len),
        active: prob.grid.active.clone(),
    };
    Ok(Solution {
        grid,
        report: SolveReport {
            iterations,
            converged,
            relative_residual: rel,
            initial_energy,
            final_energy,
            energy_history: history,
            unknowns: n,
            skipped_screen_points: system.skipped_screen_points,
        },
    })
}
