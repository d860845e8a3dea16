//! The energy assembled as `E(x) = xᵀAx − 2bᵀx + c` over active voxels.

use super::ReconstructionProblem;

#[derive(Debug, Clone, Copy)]
struct GradRow {
    /// (forward, backward) unknown per axis.
    neighbors: [[u32; 2]; 3],
    weight: f64,
}

/// Matrix-free normal equations of the energy. Unknown `u` is the `u`-th
/// active voxel in storage order.
#[derive(Debug, Clone)]
pub struct QuadraticSystem {
    pub unknowns: Vec<usize>,
    screen: Vec<[(u32, f64); 8]>,
    rows: Vec<GradRow>,
    w0: f64,
    w1: f64,
    half_inv_v: f64,
    /// `b` in `Ax = b`.
    pub rhs: Vec<f64>,
    /// Energy at `x = 0`.
    pub constant: f64,
    pub diagonal: Vec<f64>,
    pub skipped_screen_points: usize,
}

impl QuadraticSystem {
    pub fn assemble(prob: &ReconstructionProblem) -> Self {
        let grid = &prob.grid;
        let geo = grid.geometry;
        let mut slot = vec![u32::MAX; geo.len()];
        let unknowns: Vec<usize> = (0..geo.len()).filter(|&i| grid.active[i]).collect();
        for (u, &idx) in unknowns.iter().enumerate() {
            slot[idx] = u as u32;
        }
        let n = unknowns.len();
        let (w0, w1) = (prob.params.w0, prob.params.w1);
        let half_inv_v = 0.5 / geo.voxel_size;

        let mut diagonal = vec![0.0; n];
        let mut screen = Vec::with_capacity(prob.screen_points.len());
        let mut skipped_screen_points = 0;
        for p in &prob.screen_points {
            let Some(st) = geo.stencil(p) else {
                skipped_screen_points += 1;
                continue;
            };
            if st.iter().any(|&(idx, _)| slot[idx] == u32::MAX) {
                skipped_screen_points += 1;
                continue;
            }
            let row = st.map(|(idx, w)| (slot[idx], w));
            for &(u, w) in &row {
                diagonal[u as usize] += w0 * w * w;
            }
            screen.push(row);
        }

        let mut rows = Vec::new();
        let mut rhs = vec![0.0; n];
        let mut constant = 0.0;
        let field = &prob.grad_field;
        for (idx, _) in prob.gradient_voxels() {
            let c = geo.coords(idx);
            let weight = field.weight_sum[idx];
            let target = field.normal_sum[idx];
            let mut neighbors = [[0u32; 2]; 3];
            for axis in 0..3 {
                let f = slot[geo.neighbor(c, axis, true).expect("interior")];
                let b = slot[geo.neighbor(c, axis, false).expect("interior")];
                neighbors[axis] = [f, b];
                // Dᵀ applied to the target N = W·n̄.
                rhs[f as usize] += w1 * target[axis] * half_inv_v;
                rhs[b as usize] -= w1 * target[axis] * half_inv_v;
                let dd = w1 * weight * half_inv_v * half_inv_v;
                diagonal[f as usize] += dd;
                diagonal[b as usize] += dd;
            }
            constant += w1 * target.norm_squared() / weight;
            rows.push(GradRow { neighbors, weight });
        }

        QuadraticSystem {
            unknowns,
            screen,
            rows,
            w0,
            w1,
            half_inv_v,
            rhs,
            constant,
            diagonal,
            skipped_screen_points,
        }
    }

    pub fn len(&self) -> usize {
        self.unknowns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unknowns.is_empty()
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for row in &self.screen {
            let v: f64 = row.iter().map(|&(u, w)| w * x[u as usize]).sum();
            let s = self.w0 * v;
            for &(u, w) in row {
                out[u as usize] += s * w;
            }
        }
        let h = self.half_inv_v;
        for row in &self.rows {
            let s = self.w1 * row.weight * h * h;
            for [f, b] in row.neighbors {
                let d = s * (x[f as usize] - x[b as usize]);
                out[f as usize] += d;
                out[b as usize] -= d;
            }
        }
    }

    /// `E(x)` from the assembled form.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        self.apply(x, &mut ax);
        let quad: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let lin: f64 = x.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
        quad - 2.0 * lin + self.constant
    }

    /// Gathers χ on active voxels.
    pub fn gather(&self, chi: &[f64]) -> Vec<f64> {
        self.unknowns.iter().map(|&i| chi[i]).collect()
    }

    /// Scatters unknowns into a dense field, zero elsewhere.
    pub fn scatter(&self, x: &[f64], len: usize) -> Vec<f64> {
        let mut chi = vec![0.0; len];
        for (&idx, &v) in self.unknowns.iter().zip(x) {
            chi[idx] = v;
        }
        chi
    }
}
