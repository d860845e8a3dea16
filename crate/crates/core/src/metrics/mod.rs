//! Reconstruction quality metrics: 3D precision/recall/F-score between
//! meshes, 2D depth errors from ray-cast renderings, and per-vertex kNN error
//! heat maps.

mod io;
mod kdtree;
mod render;

use std::path::Path;

use rayon::prelude::*;

pub use io::{list_depth_files, parse_trajectory, read_depth, read_trajectory, write_depth, DEPTH_MAGIC};
pub use kdtree::KdTree;
pub use render::{eval_2d, render_depth, render_depth_brute_force, Bvh, CameraView, DepthImage, MetricsReport2D};

use crate::error::{Error, Result};
use crate::mesh::{save_colored_mesh, TriangleMesh};
use crate::sampling::sample_surface_points;

pub const DEFAULT_THRESHOLD: f64 = 0.05;
pub const DEFAULT_SAMPLES: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport3D {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
    pub threshold: f64,
}

pub fn fscore(precision: f64, recall: f64) -> f64 {
    if precision > 0.0 && recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Compares area-uniform samples of both meshes. Both are sampled with the
/// same seed, so swapping the arguments swaps precision and recall exactly.
pub fn eval_3d(
    pred: &TriangleMesh,
    gt: &TriangleMesh,
    threshold: f64,
    samples_per_mesh: usize,
    seed: u64,
) -> Result<MetricsReport3D> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be > 0, got {threshold}")));
    }
    if samples_per_mesh == 0 {
        return Err(Error::InvalidParameter("samples_per_mesh must be > 0".into()));
    }
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let ps = sample_surface_points(pred, samples_per_mesh, seed)?;
    let gs = sample_surface_points(gt, samples_per_mesh, seed)?;
    let precision = fraction_within(&ps, &KdTree::new(gs.clone()), threshold);
    let recall = fraction_within(&gs, &KdTree::new(ps), threshold);
    Ok(MetricsReport3D {
        precision,
        recall,
        fscore: fscore(precision, recall),
        threshold,
    })
}

fn fraction_within(queries: &[crate::Vec3], tree: &KdTree, threshold: f64) -> f64 {
    let t2 = threshold * threshold;
    let hits = queries
        .par_iter()
        .filter(|q| tree.nearest(q).is_some_and(|(_, d2)| d2 <= t2))
        .count();
    hits as f64 / queries.len() as f64
}

/// Sum of distances from each source vertex to its `k` nearest target vertices.
pub fn error_heatmap(source: &TriangleMesh, target: &TriangleMesh, k: usize) -> Result<Vec<f64>> {
    if source.vertices().is_empty() || target.vertices().is_empty() {
        return Err(Error::EmptyMesh);
    }
    if k == 0 || k > target.vertices().len() {
        return Err(Error::InvalidParameter(format!(
            "k must be in 1..={}, got {k}",
            target.vertices().len()
        )));
    }
    let tree = KdTree::new(target.vertices().to_vec());
    Ok(source
        .vertices()
        .par_iter()
        .map(|v| tree.knn(v, k).iter().map(|(_, d2)| d2.sqrt()).sum())
        .collect())
}

/// Linear blue→red over `[0, p95]`; larger values saturate red.
pub fn heatmap_colors(values: &[f64]) -> Vec<[u8; 3]> {
    let hi = percentile(values, 0.95);
    values
        .iter()
        .map(|&v| {
            let t = if hi > 0.0 { (v / hi).clamp(0.0, 1.0) } else { 0.0 };
            let r = (255.0 * t).round() as u8;
            [r, 0, 255 - r]
        })
        .collect()
}

fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Writes `source` as a binary PLY colored by [`heatmap_colors`].
pub fn write_heatmap(source: &TriangleMesh, values: &[f64], path: &Path) -> Result<()> {
    save_colored_mesh(source, &heatmap_colors(values), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::shapes;
    use nalgebra::{Isometry3, Translation3, UnitQuaternion};

    fn plane(z: f64) -> TriangleMesh {
        shapes::floor(0.0, 0.0, z, 1.0, 4)
    }

    fn shifted(m: &TriangleMesh, t: Vec3) -> TriangleMesh {
        m.transformed(&Isometry3::from_parts(Translation3::from(t), UnitQuaternion::identity()))
    }

    #[test]
    fn self_comparison_is_perfect() {
        let m = shapes::icosphere(0.5, 2);
        let r = eval_3d(&m, &m, 0.01, 5000, 3).unwrap();
        assert_eq!((r.precision, r.recall, r.fscore), (1.0, 1.0, 1.0));
    }

    #[test]
    fn far_offset_scores_zero() {
        let r = eval_3d(&shifted(&plane(0.0), Vec3::new(0.0, 0.0, 0.1)), &plane(0.0), 0.05, 2000, 1).unwrap();
        assert_eq!((r.precision, r.recall, r.fscore), (0.0, 0.0, 0.0));
    }

    #[test]
    fn half_threshold_offset_matches_brute_force() {
        let gt = plane(0.0);
        let pred = shifted(&gt, Vec3::new(0.0, 0.0, 0.025));
        let n = 1000;
        let r = eval_3d(&pred, &gt, 0.05, n, 9).unwrap();
        let ps = sample_surface_points(&pred, n, 9).unwrap();
        let gs = sample_surface_points(&gt, n, 9).unwrap();
        let brute = |a: &[Vec3], b: &[Vec3]| {
            a.iter()
                .filter(|p| b.iter().map(|q| (*p - q).norm()).fold(f64::INFINITY, f64::min) <= 0.05)
                .count() as f64
                / a.len() as f64
        };
        assert_eq!(r.precision, brute(&ps, &gs));
        assert_eq!(r.recall, brute(&gs, &ps));
        assert!(r.precision > 0.95);
    }

    #[test]
    fn swapping_swaps_precision_and_recall() {
        let a = shapes::icosphere(0.5, 2);
        let b = shifted(&shapes::icosphere(0.45, 1), Vec3::new(0.05, 0.0, 0.0));
        let ab = eval_3d(&a, &b, 0.03, 3000, 4).unwrap();
        let ba = eval_3d(&b, &a, 0.03, 3000, 4).unwrap();
        assert_eq!(ab.precision, ba.recall);
        assert_eq!(ab.recall, ba.precision);
        assert_eq!(ab.fscore, ba.fscore);
    }

    #[test]
    fn fscore_monotone_in_threshold() {
        let a = shapes::icosphere(0.5, 3);
        let b = shapes::icosphere(0.47, 1);
        let mut last = f64::INFINITY;
        for t in [0.1, 0.05, 0.03, 0.02, 0.01, 0.005] {
            let f = eval_3d(&a, &b, t, 2000, 5).unwrap().fscore;
            assert!(f <= last);
            last = f;
        }
    }

    #[test]
    fn eval_3d_rejects_bad_input() {
        let m = plane(0.0);
        assert!(matches!(eval_3d(&TriangleMesh::default(), &m, 0.05, 10, 0), Err(Error::EmptyMesh)));
        assert!(eval_3d(&m, &m, 0.0, 10, 0).is_err());
    }

    #[test]
    fn heatmap_self_is_zero() {
        let m = shapes::icosphere(1.0, 2);
        assert!(error_heatmap(&m, &m, 1).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn heatmap_translation_on_lattice() {
        let m = plane(0.0);
        // Lattice spacing 0.25; a shift below half of it keeps every match.
        let t = Vec3::new(0.03, -0.04, 0.0);
        let values = error_heatmap(&shifted(&m, t), &m, 1).unwrap();
        for v in values {
            assert!((v - t.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn heatmap_k3_hand_computed() {
        let target = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 2.0, 0.0),
                Vec3::new(0.0, 0.0, 3.0),
                Vec3::new(5.0, 5.0, 5.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let source = TriangleMesh::new(vec![Vec3::zeros()], vec![]).unwrap();
        let v = error_heatmap(&source, &target, 3).unwrap();
        assert!((v[0] - 3.0).abs() < 1e-12);
        assert!(error_heatmap(&source, &target, 6).is_err());
        assert!(error_heatmap(&source, &target, 0).is_err());
    }

    #[test]
    fn colormap_ends() {
        let values: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let c = heatmap_colors(&values);
        assert_eq!(c[0], [0, 0, 255]);
        assert_eq!(c[95], [255, 0, 0]);
        assert_eq!(c[100], [255, 0, 0]);
        assert_eq!(heatmap_colors(&[0.0, 0.0]), vec![[0, 0, 255]; 2]);
    }
}
