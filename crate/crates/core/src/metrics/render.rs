//! Pinhole cameras, ray-cast depth rendering and 2D depth metrics.

use nalgebra::{Matrix3, Matrix4, Rotation3, Translation3, UnitQuaternion, Isometry3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{ray_triangle, Aabb, Vec3};
use crate::mesh::TriangleMesh;

#[derive(Debug, Clone, PartialEq)]
pub struct CameraView {
    /// Pinhole intrinsics in pixels.
    pub intrinsics: Matrix3<f64>,
    /// World-from-camera rigid transform.
    pub pose: Matrix4<f64>,
    pub width: usize,
    pub height: usize,
}

impl CameraView {
    pub fn new(intrinsics: Matrix3<f64>, pose: Matrix4<f64>, width: usize, height: usize) -> Result<Self> {
        let k = &intrinsics;
        if k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 || k[(2, 2)] != 1.0 {
            return Err(Error::InvalidParameter(
                "intrinsics must be upper-triangular with K[2,2] = 1".into(),
            ));
        }
        if !(k[(0, 0)] > 0.0 && k[(1, 1)] > 0.0) {
            return Err(Error::InvalidParameter("focal lengths must be positive".into()));
        }
        let r = pose.fixed_view::<3, 3>(0, 0).into_owned();
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        if ortho > 1e-6 || (r.determinant() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "pose rotation is not orthonormal (error {ortho:.2e})"
            )));
        }
        let bottom = pose.fixed_view::<1, 4>(3, 0);
        if (bottom - Matrix4::<f64>::identity().fixed_view::<1, 4>(3, 0)).abs().max() > 1e-9 {
            return Err(Error::InvalidParameter("pose bottom row must be 0 0 0 1".into()));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("image size must be positive".into()));
        }
        Ok(CameraView { intrinsics, pose, width, height })
    }

    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize, pose: Matrix4<f64>) -> Result<Self> {
        let k = Matrix3::new(fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0);
        Self::new(k, pose, width, height)
    }

    /// Camera-from-world as an exact rigid motion.
    pub fn world_to_camera(&self) -> Isometry3<f64> {
        let r = self.pose.fixed_view::<3, 3>(0, 0).into_owned();
        let t = Vec3::new(self.pose[(0, 3)], self.pose[(1, 3)], self.pose[(2, 3)]);
        let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
        Isometry3::from_parts(Translation3::from(t), rot).inverse()
    }

    /// Camera-frame ray through the center of pixel `(u, v)`, scaled to unit z.
    pub fn pixel_ray(&self, u: usize, v: usize) -> Vec3 {
        let k = &self.intrinsics;
        let (px, py) = (u as f64 + 0.5, v as f64 + 0.5);
        let y = (py - k[(1, 2)]) / k[(1, 1)];
        let x = (px - k[(0, 2)] - k[(0, 1)] * y) / k[(0, 0)];
        Vec3::new(x, y, 1.0)
    }
}

/// Depth in meters, row-major; 0 marks an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "depth image {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if values.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidParameter("depth values must be finite and >= 0".into()));
        }
        Ok(DepthImage { width, height, values })
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[v * self.width + u]
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|&&d| d > 0.0).count()
    }
}

const BVH_LEAF: usize = 4;

#[derive(Debug, Clone)]
struct BvhNode {
    bounds: Aabb,
    /// Leaf: range into `faces`. Inner (`count == 0`): `start` is the right
    /// child and the left child directly follows this node.
    start: usize,
    count: usize,
}

/// Median-split bounding volume hierarchy over a mesh's triangles.
#[derive(Debug, Clone)]
pub struct Bvh {
    triangles: Vec<[Vec3; 3]>,
    faces: Vec<usize>,
    nodes: Vec<BvhNode>,
}

impl Bvh {
    pub fn new(triangles: Vec<[Vec3; 3]>) -> Self {
        let mut bvh = Bvh {
            faces: (0..triangles.len()).collect(),
            triangles,
            nodes: Vec::new(),
        };
        if !bvh.triangles.is_empty() {
            let centroids: Vec<Vec3> = bvh.triangles.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
            bvh.build(0, bvh.triangles.len(), &centroids);
        }
        bvh
    }

    fn bounds_of(&self, faces: &[usize]) -> Aabb {
        let mut bb = Aabb::empty();
        for &f in faces {
            for v in &self.triangles[f] {
                bb.grow(v);
            }
        }
        // Slack so slab-test roundoff never culls a triangle the exact test would hit.
        let pad = 1e-9 * bb.extent().amax() + 1e-12;
        bb.padded(pad)
    }

    fn build(&mut self, start: usize, end: usize, centroids: &[Vec3]) -> usize {
        let id = self.nodes.len();
        let bounds = self.bounds_of(&self.faces[start..end]);
        if end - start <= BVH_LEAF {
            self.nodes.push(BvhNode { bounds, start, count: end - start });
            return id;
        }
        let cb = Aabb::from_points(self.faces[start..end].iter().map(|&f| &centroids[f])).unwrap();
        let axis = cb.longest_axis();
        let mid = start + (end - start) / 2;
        self.faces[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
        });
        self.nodes.push(BvhNode { bounds, start: 0, count: 0 });
        self.build(start, mid, centroids);
        let right = self.build(mid, end, centroids);
        self.nodes[id].start = right;
        id
    }

    /// Smallest hit distance along `dir` (in units of `dir`).
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = dir.map(|d| 1.0 / d);
        let mut best = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            match node.bounds.ray_hit(origin, &inv, best) {
                Some(_) => {}
                None => continue,
            }
            if node.count > 0 {
                for &f in &self.faces[node.start..node.start + node.count] {
                    let [a, b, c] = &self.triangles[f];
                    if let Some(t) = ray_triangle(origin, dir, a, b, c) {
                        best = best.min(t);
                    }
                }
            } else {
                stack.push(node.start);
                stack.push(n + 1);
            }
        }
        best.is_finite().then_some(best)
    }
}

fn camera_triangles(mesh: &TriangleMesh, view: &CameraView) -> Vec<[Vec3; 3]> {
    let to_cam = view.world_to_camera();
    let local = mesh.transformed(&to_cam);
    (0..local.faces().len()).map(|f| local.triangle(f)).collect()
}

/// Ray-casts `mesh` into `view`. Depth is the camera-frame z of the nearest hit.
pub fn render_depth(mesh: &TriangleMesh, view: &CameraView) -> DepthImage {
    let bvh = Bvh::new(camera_triangles(mesh, view));
    render_with(view, |o, d| bvh.intersect(o, d))
}

/// Reference renderer testing every triangle for every pixel.
pub fn render_depth_brute_force(mesh: &TriangleMesh, view: &CameraView) -> DepthImage {
    let tris = camera_triangles(mesh, view);
    render_with(view, |o, d| {
        tris.iter()
            .filter_map(|[a, b, c]| ray_triangle(o, d, a, b, c))
            .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))))
    })
}

fn render_with(view: &CameraView, hit: impl Fn(&Vec3, &Vec3) -> Option<f64> + Sync) -> DepthImage {
    let origin = Vec3::zeros();
    let values: Vec<f64> = (0..view.height)
        .into_par_iter()
        .flat_map_iter(|v| {
            let hit = &hit;
            (0..view.width).map(move |u| hit(&origin, &view.pixel_ray(u, v)).unwrap_or(0.0))
        })
        .collect();
    DepthImage { width: view.width, height: view.height, values }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport2D {
    pub abs_rel: f64,
    pub abs_diff: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub valid_pixels: usize,
}

/// Depth errors over pixels where both images are valid (> 0).
pub fn eval_2d(pred: &DepthImage, gt: &DepthImage) -> Result<MetricsReport2D> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::InvalidParameter(format!(
            "depth sizes differ: {}x{} vs {}x{}",
            pred.width, pred.height, gt.width, gt.height
        )));
    }
    let (mut abs_rel, mut abs_diff, mut sq_rel, mut sq) = (0.0, 0.0, 0.0, 0.0);
    let mut n = 0usize;
    for (&d, &g) in pred.values.iter().zip(&gt.values) {
        if d > 0.0 && g > 0.0 {
            let e = d - g;
            abs_rel += e.abs() / g;
            abs_diff += e.abs();
            sq_rel += e * e / g;
            sq += e * e;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoValidPixels);
    }
    let n_f = n as f64;
    Ok(MetricsReport2D {
        abs_rel: abs_rel / n_f,
        abs_diff: abs_diff / n_f,
        sq_rel: sq_rel / n_f,
        rmse: (sq / n_f).sqrt(),
        valid_pixels: n,
    })
}
