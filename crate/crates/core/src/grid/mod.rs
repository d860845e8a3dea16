//! Narrow-band voxel grids.
//!
//! Grid values live at voxel centers: voxel `(i, j, k)` sits at
//! `origin + (i + ½, j + ½, k + ½)·voxel_size`, with `origin` the min corner of
//! voxel `(0, 0, 0)`. Storage is dense with `k` varying fastest. Trilinear
//! interpolation and trilinear splatting share one stencil, so splatting is
//! exactly the adjoint of interpolation.

mod io;

pub use io::{read_grid, write_grid, GRID_MAGIC};

use crate::geometry::{Aabb, Vec3};
use crate::sampling::OrientedPointCloud;
use crate::{Error, Result};

/// Placement and resolution of a voxel lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub origin: Vec3,
    pub voxel_size: f64,
    pub dims: [usize; 3],
}

/// The eight voxels surrounding a point and their trilinear weights.
pub type Stencil = [(usize, f64); 8];

impl GridGeometry {
    pub fn new(origin: Vec3, voxel_size: f64, dims: [usize; 3]) -> Result<Self> {
        if !(voxel_size > 0.0) || !voxel_size.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "voxel size must be positive, got {voxel_size}"
            )));
        }
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidParameter(format!(
                "grid dims must all be >= 2, got {dims:?}"
            )));
        }
        Ok(GridGeometry {
            origin,
            voxel_size,
            dims,
        })
    }

    /// Smallest grid with min corner at `bounds.min` whose voxels cover `bounds`.
    pub fn covering(bounds: &Aabb, voxel_size: f64) -> Result<Self> {
        let ext = bounds.extent();
        let dims = [0, 1, 2].map(|a| ((ext[a] / voxel_size).ceil() as usize).max(2));
        GridGeometry::new(bounds.min, voxel_size, dims)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, [i, j, k]: [usize; 3]) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.dims[2];
        let ij = idx / self.dims[2];
        [ij / self.dims[1], ij % self.dims[1], k]
    }

    pub fn center(&self, [i, j, k]: [usize; 3]) -> Vec3 {
        self.origin + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * self.voxel_size
    }

    /// Continuous lattice coordinates: voxel centers map to integers.
    pub fn lattice(&self, p: &Vec3) -> Vec3 {
        (p - self.origin) / self.voxel_size - Vec3::repeat(0.5)
    }

    /// Whether a point lies inside the hull of voxel centers, where the full
    /// trilinear stencil exists.
    pub fn contains(&self, p: &Vec3) -> bool {
        let g = self.lattice(p);
        (0..3).all(|a| g[a] >= 0.0 && g[a] <= (self.dims[a] - 1) as f64)
    }

    /// Trilinear stencil of `p`, or `None` outside the center hull.
    pub fn stencil(&self, p: &Vec3) -> Option<Stencil> {
        let g = self.lattice(p);
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let hi = (self.dims[a] - 1) as f64;
            if !(g[a] >= 0.0 && g[a] <= hi) {
                return None;
            }
            let b = g[a].floor().min(hi - 1.0);
            base[a] = b as usize;
            frac[a] = g[a] - b;
        }
        let mut out = [(0usize, 0.0f64); 8];
        for (c, slot) in out.iter_mut().enumerate() {
            let (dx, dy, dz) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
            let w = |d: usize, f: f64| if d == 1 { f } else { 1.0 - f };
            *slot = (
                self.index([base[0] + dx, base[1] + dy, base[2] + dz]),
                w(dx, frac[0]) * w(dy, frac[1]) * w(dz, frac[2]),
            );
        }
        Some(out)
    }

    /// Index of the face neighbor one step along `axis` in direction `sign`.
    #[inline]
    pub fn neighbor(&self, c: [usize; 3], axis: usize, forward: bool) -> Option<usize> {
        let mut n = c;
        if forward {
            if c[axis] + 1 >= self.dims[axis] {
                return None;
            }
            n[axis] += 1;
        } else {
            if c[axis] == 0 {
                return None;
            }
            n[axis] -= 1;
        }
        Some(self.index(n))
    }
}

/// The implicit function χ over a narrow band.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub geometry: GridGeometry,
    pub chi: Vec<f64>,
    pub active: Vec<bool>,
}

impl VoxelGrid {
    pub fn new(geometry: GridGeometry, active: Vec<bool>) -> Result<Self> {
        if active.len() != geometry.len() {
            return Err(Error::InvalidParameter("active mask size mismatch".into()));
        }
        Ok(VoxelGrid {
            geometry,
            chi: vec![0.0; geometry.len()],
            active,
        })
    }

    /// Every voxel active.
    pub fn full(geometry: GridGeometry) -> Self {
        VoxelGrid {
            geometry,
            chi: vec![0.0; geometry.len()],
            active: vec![true; geometry.len()],
        }
    }

    pub fn voxel_size(&self) -> f64 {
        self.geometry.voxel_size
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn fill_with(&mut self, f: impl Fn(Vec3) -> f64) {
        for idx in 0..self.chi.len() {
            self.chi[idx] = f(self.geometry.center(self.geometry.coords(idx)));
        }
    }

    /// Central-difference gradient `(χ(i+1)−χ(i−1)) / 2v` per axis.
    pub fn central_difference(&self, at: [usize; 3]) -> Result<Vec3> {
        let mut grad = Vec3::zeros();
        let two_v = 2.0 * self.geometry.voxel_size;
        for axis in 0..3 {
            let (Some(fwd), Some(back)) = (
                self.geometry.neighbor(at, axis, true),
                self.geometry.neighbor(at, axis, false),
            ) else {
                return Err(Error::InactiveNeighbor(at));
            };
            if !self.active[fwd] || !self.active[back] {
                return Err(Error::InactiveNeighbor(at));
            }
            grad[axis] = (self.chi[fwd] - self.chi[back]) / two_v;
        }
        Ok(grad)
    }

    /// Trilinear interpolation of χ; all eight stencil voxels must be active.
    pub fn trilinear_eval(&self, p: &Vec3) -> Result<f64> {
        let stencil = self
            .geometry
            .stencil(p)
            .ok_or(Error::OutOfBounds([p.x, p.y, p.z]))?;
        let mut acc = 0.0;
        for (idx, w) in stencil {
            if !self.active[idx] {
                return Err(Error::InactiveNeighbor(self.geometry.coords(idx)));
            }
            acc += w * self.chi[idx];
        }
        Ok(acc)
    }

    /// Interpolates χ from active voxels only, clamping `p` into the grid and
    /// renormalizing the weights. `None` when no stencil voxel is active.
    pub fn sample_active(&self, p: &Vec3) -> Option<f64> {
        let geo = &self.geometry;
        let mut g = geo.lattice(p);
        for a in 0..3 {
            g[a] = g[a].clamp(0.0, (geo.dims[a] - 1) as f64);
        }
        let clamped = geo.origin + (g + Vec3::repeat(0.5)) * geo.voxel_size;
        let stencil = geo.stencil(&clamped)?;
        let (mut acc, mut wsum) = (0.0, 0.0);
        for (idx, w) in stencil {
            if self.active[idx] && w > 0.0 {
                acc += w * self.chi[idx];
                wsum += w;
            }
        }
        (wsum > 0.0).then(|| acc / wsum)
    }
}

/// Splatted normals and weights (the discretized gradient target).
#[derive(Debug, Clone, PartialEq)]
pub struct SplatField {
    pub geometry: GridGeometry,
    pub normal_sum: Vec<Vec3>,
    pub weight_sum: Vec<f64>,
}

impl SplatField {
    pub fn zeros(geometry: GridGeometry) -> Self {
        SplatField {
            geometry,
            normal_sum: vec![Vec3::zeros(); geometry.len()],
            weight_sum: vec![0.0; geometry.len()],
        }
    }

    /// Weighted mean normal `normal_sum / weight_sum`.
    pub fn mean_normal(&self, idx: usize) -> Option<Vec3> {
        let w = self.weight_sum[idx];
        (w > 0.0).then(|| self.normal_sum[idx] / w)
    }

    pub fn total_weight(&self) -> f64 {
        self.weight_sum.iter().sum()
    }
}

/// Trilinearly splats each oriented point onto its eight surrounding voxels.
/// Points outside the grid are skipped; the second value counts them.
pub fn splat(cloud: &OrientedPointCloud, geometry: GridGeometry) -> Result<(SplatField, usize)> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut field = SplatField::zeros(geometry);
    let mut skipped = 0;
    for (p, n) in cloud.iter() {
        let Some(stencil) = geometry.stencil(p) else {
            skipped += 1;
            continue;
        };
        for (idx, w) in stencil {
            field.weight_sum[idx] += w;
            field.normal_sum[idx] += n * w;
        }
    }
    if skipped > 0 {
        log::warn!("splat: {skipped} points outside the grid were skipped");
    }
    Ok((field, skipped))
}

/// Scalar splat, the adjoint of trilinear interpolation.
pub fn splat_scalar(points: &[Vec3], values: &[f64], geometry: GridGeometry) -> Vec<f64> {
    let mut out = vec![0.0; geometry.len()];
    for (p, &s) in points.iter().zip(values) {
        if let Some(stencil) = geometry.stencil(p) {
            for (idx, w) in stencil {
                out[idx] += w * s;
            }
        }
    }
    out
}

/// Marks voxels whose center lies within `band_radius` voxels (Chebyshev
/// distance) of any point.
pub fn build_band<'a>(
    points: impl IntoIterator<Item = &'a Vec3>,
    geometry: GridGeometry,
    band_radius: f64,
) -> Result<Vec<bool>> {
    if !(band_radius >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "band radius must be >= 1 voxel, got {band_radius}"
        )));
    }
    let mut active = vec![false; geometry.len()];
    let mut any = false;
    for p in points {
        any = true;
        let g = geometry.lattice(p);
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut empty = false;
        for a in 0..3 {
            let top = (geometry.dims[a] - 1) as f64;
            let l = (g[a] - band_radius).ceil().max(0.0);
            let h = (g[a] + band_radius).floor().min(top);
            if l > h {
                empty = true;
                break;
            }
            lo[a] = l as usize;
            hi[a] = h as usize;
        }
        if empty {
            continue;
        }
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                let row = geometry.index([i, j, lo[2]]);
                active[row..=row + (hi[2] - lo[2])].fill(true);
            }
        }
    }
    if !any {
        return Err(Error::EmptyCloud);
    }
    Ok(active)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn geo(n: usize, v: f64) -> GridGeometry {
        GridGeometry::new(Vec3::new(-0.3, 0.1, 0.7), v, [n, n + 1, n + 2]).unwrap()
    }

    fn one_point(p: Vec3, n: Vec3) -> OrientedPointCloud {
        OrientedPointCloud::new(vec![p], vec![n]).unwrap()
    }

    #[test]
    fn index_roundtrip() {
        let g = geo(4, 0.5);
        for idx in 0..g.len() {
            assert_eq!(g.index(g.coords(idx)), idx);
        }
        assert_eq!(g.index([0, 0, 1]), 1);
    }

    #[test]
    fn invalid_geometry() {
        assert!(GridGeometry::new(Vec3::zeros(), 0.0, [3, 3, 3]).is_err());
        assert!(GridGeometry::new(Vec3::zeros(), 1.0, [3, 1, 3]).is_err());
    }

    #[test]
    fn splat_at_voxel_center_is_unit() {
        let g = geo(4, 0.25);
        let c = g.center([1, 2, 3]);
        let (f, skipped) = splat(&one_point(c, Vec3::y()), g).unwrap();
        assert_eq!(skipped, 0);
        let idx = g.index([1, 2, 3]);
        for (i, &w) in f.weight_sum.iter().enumerate() {
            assert_eq!(w, if i == idx { 1.0 } else { 0.0 });
        }
        assert_eq!(f.normal_sum[idx], Vec3::y());
    }

    #[test]
    fn splat_at_cell_center_is_eighths() {
        let g = geo(4, 0.25);
        let p = (g.center([1, 1, 1]) + g.center([2, 2, 2])) / 2.0;
        let n = Vec3::new(0.6, 0.0, 0.8);
        let (f, _) = splat(&one_point(p, n), g).unwrap();
        let touched: Vec<_> = (0..g.len()).filter(|&i| f.weight_sum[i] > 0.0).collect();
        assert_eq!(touched.len(), 8);
        for i in touched {
            assert!((f.weight_sum[i] - 0.125).abs() < 1e-15);
            assert!((f.normal_sum[i] - n * 0.125).norm() < 1e-15);
        }
    }

    #[test]
    fn splat_skips_outside_and_rejects_empty() {
        let g = geo(3, 1.0);
        let (_, skipped) = splat(&one_point(Vec3::repeat(100.0), Vec3::x()), g).unwrap();
        assert_eq!(skipped, 1);
        assert!(matches!(
            splat(&OrientedPointCloud::default(), g),
            Err(Error::EmptyCloud)
        ));
    }

    #[test]
    fn splat_partition_of_unity() {
        let g = geo(6, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lo = g.center([0, 0, 0]);
        let hi = g.center([5, 6, 7]);
        let points: Vec<Vec3> = (0..1000)
            .map(|_| lo + (hi - lo).component_mul(&Vec3::from_fn(|_, _| rng.random::<f64>())))
            .collect();
        let cloud = OrientedPointCloud::new(points, vec![Vec3::z(); 1000]).unwrap();
        let (f, skipped) = splat(&cloud, g).unwrap();
        assert_eq!(skipped, 0);
        let mut total = 0.0;
        for w in &f.weight_sum {
            total += w;
        }
        assert!((total - 1000.0).abs() < 1e-6);
        for (w, n) in f.weight_sum.iter().zip(&f.normal_sum) {
            assert!(*w >= 0.0);
            if *w == 0.0 {
                assert_eq!(*n, Vec3::zeros());
            }
        }
    }

    #[test]
    fn central_difference_linear_and_constant() {
        let g = geo(5, 0.37);
        let mut grid = VoxelGrid::full(g);
        grid.fill_with(|p| p.x);
        let d = grid.central_difference([2, 2, 2]).unwrap();
        assert!((d - Vec3::x()).norm() < 1e-12);
        grid.fill_with(|_| 4.2);
        assert_eq!(grid.central_difference([1, 3, 2]).unwrap(), Vec3::zeros());
    }

    #[test]
    fn central_difference_quadratic() {
        // (x0+v)² − (x0−v)² = 4·x0·v, so the x component is exactly 2·x0.
        let g = GridGeometry::new(Vec3::zeros(), 0.5, [6, 4, 4]).unwrap();
        let mut grid = VoxelGrid::full(g);
        grid.fill_with(|p| p.x * p.x);
        let x0 = g.center([3, 1, 1]).x;
        let d = grid.central_difference([3, 1, 1]).unwrap();
        assert_eq!(d.x, 2.0 * x0);
        assert_eq!(d.y, 0.0);
    }

    #[test]
    fn central_difference_needs_active_neighbors() {
        let g = geo(4, 1.0);
        let mut grid = VoxelGrid::full(g);
        assert!(matches!(
            grid.central_difference([0, 1, 1]),
            Err(Error::InactiveNeighbor(_))
        ));
        let n = g.index([1, 2, 1]);
        grid.active[n] = false;
        assert!(grid.central_difference([1, 1, 1]).is_err());
    }

    #[test]
    fn trilinear_corner_and_linear() {
        let g = geo(4, 0.2);
        let mut grid = VoxelGrid::full(g);
        grid.fill_with(|p| 3.0 * p.x - 2.0 * p.y + 0.5 * p.z + 1.0);
        let c = g.center([2, 1, 3]);
        assert_eq!(grid.trilinear_eval(&c).unwrap(), grid.chi[g.index([2, 1, 3])]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lo = g.center([0, 0, 0]);
        let hi = g.center([3, 4, 5]);
        for _ in 0..100 {
            let p = lo + (hi - lo).component_mul(&Vec3::from_fn(|_, _| rng.random::<f64>()));
            let want = 3.0 * p.x - 2.0 * p.y + 0.5 * p.z + 1.0;
            assert!((grid.trilinear_eval(&p).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn trilinear_matches_hand_weights() {
        let g = GridGeometry::new(Vec3::zeros(), 1.0, [3, 3, 3]).unwrap();
        let mut grid = VoxelGrid::full(g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for c in grid.chi.iter_mut() {
            *c = rng.random::<f64>();
        }
        // Point at lattice coords (0.25, 1.5, 0.9): voxel centers sit at i + 0.5.
        let (fx, fy, fz) = (0.25, 0.5, 0.9);
        let p = Vec3::new(0.25 + 0.5, 1.5 + 0.5, 0.9 + 0.5);
        let chi = |i: usize, j: usize, k: usize| grid.chi[(i * 3 + j) * 3 + k];
        let mut want = 0.0;
        for (i, wx) in [(0, 1.0 - fx), (1, fx)] {
            for (j, wy) in [(1, 1.0 - fy), (2, fy)] {
                for (k, wz) in [(0, 1.0 - fz), (1, fz)] {
                    want += wx * wy * wz * chi(i, j, k);
                }
            }
        }
        assert!((grid.trilinear_eval(&p).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn trilinear_errors() {
        let g = geo(3, 1.0);
        let mut grid = VoxelGrid::full(g);
        assert!(matches!(
            grid.trilinear_eval(&Vec3::repeat(-50.0)),
            Err(Error::OutOfBounds(_))
        ));
        grid.active[0] = false;
        assert!(matches!(
            grid.trilinear_eval(&g.center([0, 0, 0])),
            Err(Error::InactiveNeighbor(_))
        ));
    }

    #[test]
    fn band_single_point() {
        let g = GridGeometry::new(Vec3::zeros(), 1.0, [9, 9, 9]).unwrap();
        let p = Vec3::new(4.3, 4.6, 4.5);
        let active = build_band([&p], g, 1.0).unwrap();
        let on: Vec<[usize; 3]> = (0..g.len())
            .filter(|&i| active[i])
            .map(|i| g.coords(i))
            .collect();
        for a in 0..3 {
            let lo = on.iter().map(|c| c[a]).min().unwrap();
            let hi = on.iter().map(|c| c[a]).max().unwrap();
            assert!(hi - lo < 3);
        }
        assert!(on.contains(&[4, 4, 4]));
    }

    #[test]
    fn band_covering_everything() {
        let g = geo(4, 1.0);
        let active = build_band([&g.center([2, 2, 2])], g, 10.0).unwrap();
        assert!(active.iter().all(|&a| a));
    }

    #[test]
    fn band_plane_slab_matches_brute_force() {
        let g = GridGeometry::new(Vec3::zeros(), 0.1, [10, 10, 12]).unwrap();
        let mut pts = Vec::new();
        for a in 0..20 {
            for b in 0..20 {
                pts.push(Vec3::new(a as f64 * 0.05, b as f64 * 0.05, 0.6));
            }
        }
        let active = build_band(&pts, g, 2.0).unwrap();
        for (idx, &on) in active.iter().enumerate() {
            let c = g.center(g.coords(idx));
            let near = pts.iter().any(|p| (c - p).amax() <= 2.0 * 0.1 + 1e-12);
            assert_eq!(on, near, "voxel {:?}", g.coords(idx));
        }
        let k_on: Vec<usize> = (0..12).filter(|&k| active[g.index([5, 5, k])]).collect();
        assert!((4..=6).contains(&k_on.len()), "{k_on:?}");
    }

    #[test]
    fn band_rejects_small_radius_and_empty() {
        let g = geo(3, 1.0);
        assert!(build_band([&Vec3::zeros()], g, 0.5).is_err());
        assert!(matches!(
            build_band(std::iter::empty(), g, 2.0),
            Err(Error::EmptyCloud)
        ));
    }

    proptest! {
        #[test]
        fn splat_is_adjoint_of_interpolation(seed in any::<u64>()) {
            let g = GridGeometry::new(Vec3::new(0.1, -0.2, 0.0), 0.3, [4, 5, 3]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut grid = VoxelGrid::full(g);
            for c in grid.chi.iter_mut() {
                *c = rng.random::<f64>() * 2.0 - 1.0;
            }
            let lo = g.center([0, 0, 0]);
            let hi = g.center([3, 4, 2]);
            let points: Vec<Vec3> = (0..25)
                .map(|_| lo + (hi - lo).component_mul(&Vec3::from_fn(|_, _| rng.random::<f64>())))
                .collect();
            let values: Vec<f64> = (0..25).map(|_| rng.random::<f64>() - 0.5).collect();
            let lhs: f64 = points.iter().zip(&values)
                .map(|(p, s)| s * grid.trilinear_eval(p).unwrap())
                .sum();
            let splatted = splat_scalar(&points, &values, g);
            let rhs: f64 = grid.chi.iter().zip(&splatted).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn central_difference_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let g = GridGeometry::new(Vec3::zeros(), 0.2, [4, 4, 4]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x = VoxelGrid::full(g);
            let mut y = VoxelGrid::full(g);
            for i in 0..g.len() {
                x.chi[i] = rng.random::<f64>();
                y.chi[i] = rng.random::<f64>();
            }
            let mut combo = VoxelGrid::full(g);
            for i in 0..g.len() {
                combo.chi[i] = a * x.chi[i] + b * y.chi[i];
            }
            let at = [1, 2, 1];
            let lhs = combo.central_difference(at).unwrap();
            let rhs = x.central_difference(at).unwrap() * a + y.central_difference(at).unwrap() * b;
            prop_assert!((lhs - rhs).amax() < 1e-12);
        }

        #[test]
        fn stencil_weights_sum_to_one(x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0) {
            let g = GridGeometry::new(Vec3::zeros(), 0.5, [3, 4, 5]).unwrap();
            let lo = g.center([0, 0, 0]);
            let hi = g.center([2, 3, 4]);
            let p = lo + (hi - lo).component_mul(&Vec3::new(x, y, z));
            let s = g.stencil(&p).unwrap();
            let sum: f64 = s.iter().map(|(_, w)| w).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(s.iter().all(|(_, w)| *w >= 0.0));
        }
    }
}
