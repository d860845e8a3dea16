//! Oriented point sampling on triangle meshes.
//!
//! Four strategies: uniform vertex picks, area-weighted surface points,
//! Poisson-disk dart throwing, and curvature-weighted surface points. The
//! surface samplers pick a face from a cumulative weight array by binary
//! search and place the point with the square-root barycentric warp, which is
//! uniform within the triangle.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Aabb, Vec3};
use crate::mesh::{
    prefix_sum, read_ply, write_ply, PlyEncoding, PlyScalar, PlyVertexTable, TriangleMesh,
};
use crate::{Error, Result};

/// Positions with unit normals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OrientedPointCloud {
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
}

impl OrientedPointCloud {
    pub fn new(points: Vec<Vec3>, normals: Vec<Vec3>) -> Result<Self> {
        if points.len() != normals.len() {
            return Err(Error::InvalidParameter(format!(
                "{} points but {} normals",
                points.len(),
                normals.len()
            )));
        }
        if let Some(i) = normals.iter().position(|n| (n.norm() - 1.0).abs() > 1e-6) {
            return Err(Error::InvalidParameter(format!("normal {i} is not unit length")));
        }
        Ok(OrientedPointCloud { points, normals })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> Option<Aabb> {
        Aabb::from_points(&self.points)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec3, &Vec3)> {
        self.points.iter().zip(&self.normals)
    }

    /// Reads `x y z nx ny nz` vertex properties from a PLY file.
    pub fn load(path: &Path) -> Result<Self> {
        let data = read_ply(path)?;
        let points = data.positions()?;
        let normals = data
            .normals()?
            .ok_or_else(|| Error::parse(format!("{} has no nx/ny/nz", path.display())))?;
        let normals = normals
            .into_iter()
            .map(|n| {
                n.try_normalize(0.0)
                    .ok_or_else(|| Error::parse("zero normal in point cloud"))
            })
            .collect::<Result<_>>()?;
        OrientedPointCloud::new(points, normals)
    }

    /// Binary little-endian PLY with float32 `x y z nx ny nz`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let column = |name, f: &dyn Fn(usize) -> f64| {
            (name, PlyScalar::F32, (0..self.len()).map(f).collect())
        };
        let table = PlyVertexTable {
            len: self.len(),
            columns: vec![
                column("x", &|i| self.points[i].x),
                column("y", &|i| self.points[i].y),
                column("z", &|i| self.points[i].z),
                column("nx", &|i| self.normals[i].x),
                column("ny", &|i| self.normals[i].y),
                column("nz", &|i| self.normals[i].z),
            ],
        };
        write_ply(path, PlyEncoding::BinaryLittleEndian, &table, None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Vertex,
    Area,
    PoissonDisk,
    Curvature,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertex" => Ok(Strategy::Vertex),
            "area" => Ok(Strategy::Area),
            "poisson" | "poisson_disk" => Ok(Strategy::PoissonDisk),
            "curvature" => Ok(Strategy::Curvature),
            other => Err(Error::InvalidParameter(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    pub count: usize,
    pub seed: u64,
    /// Minimum spacing for [`Strategy::PoissonDisk`]; derived from the mesh
    /// area when absent.
    pub disk_radius: Option<f64>,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        match self.disk_radius {
            Some(r) if !(r > 0.0) && self.strategy == Strategy::PoissonDisk => Err(
                Error::InvalidParameter(format!("disk radius must be positive, got {r}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Radius used when none is given: `sqrt(area / (2·count))`.
pub fn default_disk_radius(mesh: &TriangleMesh, count: usize) -> f64 {
    (mesh.total_area() / (2.0 * count as f64)).sqrt()
}

/// Result of a [`SamplerConfig`] run.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub cloud: OrientedPointCloud,
    /// Poisson-disk only: fewer than half the requested points fit.
    pub radius_too_large: bool,
}

pub fn sample(mesh: &TriangleMesh, cfg: &SamplerConfig) -> Result<Sampled> {
    cfg.validate()?;
    let plain = |cloud| Sampled {
        cloud,
        radius_too_large: false,
    };
    match cfg.strategy {
        Strategy::Vertex => sample_vertices(mesh, cfg.count, cfg.seed).map(plain),
        Strategy::Area => sample_area(mesh, cfg.count, cfg.seed).map(plain),
        Strategy::Curvature => sample_curvature(mesh, cfg.count, cfg.seed).map(plain),
        Strategy::PoissonDisk => {
            let radius = cfg
                .disk_radius
                .unwrap_or_else(|| default_disk_radius(mesh, cfg.count));
            let out = sample_poisson_disk(mesh, cfg.count, radius, cfg.seed)?;
            Ok(Sampled {
                cloud: out.cloud,
                radius_too_large: out.radius_too_large,
            })
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normals_of(mesh: &TriangleMesh) -> Result<&[Vec3]> {
    if mesh.is_empty() || mesh.vertices().is_empty() {
        return Err(Error::EmptyMesh);
    }
    mesh.vertex_normals().ok_or(Error::MissingNormals)
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        Err(Error::InvalidParameter("sample count must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Uniform random vertices with their normals; without replacement unless
/// `count` exceeds the vertex count.
pub fn sample_vertices(mesh: &TriangleMesh, count: usize, seed: u64) -> Result<OrientedPointCloud> {
    check_count(count)?;
    let normals = mesh.vertex_normals().ok_or(Error::MissingNormals)?;
    let n = mesh.vertices().len();
    if n == 0 {
        return Err(Error::EmptyMesh);
    }
    let mut rng = rng(seed);
    let picks: Vec<usize> = if count <= n {
        rand::seq::index::sample(&mut rng, n, count).into_vec()
    } else {
        (0..count).map(|_| rng.random_range(0..n)).collect()
    };
    Ok(OrientedPointCloud {
        points: picks.iter().map(|&i| mesh.vertices()[i]).collect(),
        normals: picks.iter().map(|&i| normals[i]).collect(),
    })
}

/// Point and renormalized normal at the warped barycentric location
/// `(1-√r1, √r1(1-r2), √r1·r2)`.
pub fn barycentric_sample(tri: [Vec3; 3], normals: [Vec3; 3], r1: f64, r2: f64) -> (Vec3, Vec3) {
    let w = barycentric_weights(r1, r2);
    let p = tri[0] * w[0] + tri[1] * w[1] + tri[2] * w[2];
    let n = normals[0] * w[0] + normals[1] * w[1] + normals[2] * w[2];
    let n = n.try_normalize(1e-12).unwrap_or_else(|| {
        (tri[1] - tri[0])
            .cross(&(tri[2] - tri[0]))
            .try_normalize(0.0)
            .unwrap_or_else(Vec3::z)
    });
    (p, n)
}

pub fn barycentric_weights(r1: f64, r2: f64) -> [f64; 3] {
    let s = r1.sqrt();
    [1.0 - s, s * (1.0 - r2), s * r2]
}

/// Picks faces with probability proportional to a weight array.
pub(crate) struct FacePicker {
    cumulative: Vec<f64>,
    total: f64,
    last_positive: usize,
}

impl FacePicker {
    /// `None` when no weight is positive.
    pub(crate) fn new(weights: &[f64]) -> Option<Self> {
        Self::from_cumulative(prefix_sum(weights), weights)
    }

    fn from_cumulative(cumulative: Vec<f64>, weights: &[f64]) -> Option<Self> {
        let last_positive = weights.iter().rposition(|&w| w > 0.0)?;
        let total = *cumulative.last()?;
        Some(FacePicker {
            cumulative,
            total,
            last_positive,
        })
    }

    /// Binary search for the first face whose running total exceeds `u·total`.
    pub(crate) fn pick(&self, u: f64) -> usize {
        let target = u * self.total;
        self.cumulative
            .partition_point(|&c| c <= target)
            .min(self.last_positive)
    }

    /// One draw: face, then `r1`, `r2`.
    pub(crate) fn draw(&self, rng: &mut impl Rng) -> (usize, f64, f64) {
        let face = self.pick(rng.random::<f64>());
        let r1 = rng.random::<f64>();
        let r2 = rng.random::<f64>();
        (face, r1, r2)
    }
}

fn sample_weighted(
    mesh: &TriangleMesh,
    picker: &FacePicker,
    count: usize,
    seed: u64,
) -> Result<OrientedPointCloud> {
    let normals = normals_of(mesh)?;
    let mut rng = rng(seed);
    let mut cloud = OrientedPointCloud {
        points: Vec::with_capacity(count),
        normals: Vec::with_capacity(count),
    };
    for _ in 0..count {
        let (p, n) = draw_oriented(mesh, normals, picker, &mut rng);
        cloud.points.push(p);
        cloud.normals.push(n);
    }
    Ok(cloud)
}

fn draw_oriented(
    mesh: &TriangleMesh,
    normals: &[Vec3],
    picker: &FacePicker,
    rng: &mut impl Rng,
) -> (Vec3, Vec3) {
    let (face, r1, r2) = picker.draw(rng);
    let f = mesh.faces()[face];
    let tri = mesh.triangle(face);
    let ns = f.map(|i| normals[i as usize]);
    barycentric_sample(tri, ns, r1, r2)
}

fn area_picker(mesh: &TriangleMesh) -> Result<FacePicker> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    FacePicker::new(&mesh.face_areas()).ok_or(Error::EmptyMesh)
}

/// Surface points with faces chosen proportionally to area.
pub fn sample_area(mesh: &TriangleMesh, count: usize, seed: u64) -> Result<OrientedPointCloud> {
    check_count(count)?;
    normals_of(mesh)?;
    sample_weighted(mesh, &area_picker(mesh)?, count, seed)
}

/// Surface points with faces chosen proportionally to the curvature
/// descriptor. Flat faces are never selected.
pub fn sample_curvature(
    mesh: &TriangleMesh,
    count: usize,
    seed: u64,
) -> Result<OrientedPointCloud> {
    check_count(count)?;
    normals_of(mesh)?;
    let curvature = mesh.triangle_curvature()?;
    let picker = FacePicker::from_cumulative(curvature.cumulative, &curvature.per_face)
        .ok_or(Error::ZeroCurvature)?;
    sample_weighted(mesh, &picker, count, seed)
}

/// Positions only, area weighted; needs no normals.
pub fn sample_surface_points(mesh: &TriangleMesh, count: usize, seed: u64) -> Result<Vec<Vec3>> {
    let picker = area_picker(mesh)?;
    let mut rng = rng(seed);
    Ok((0..count)
        .map(|_| {
            let (face, r1, r2) = picker.draw(&mut rng);
            let [a, b, c] = mesh.triangle(face);
            let w = barycentric_weights(r1, r2);
            a * w[0] + b * w[1] + c * w[2]
        })
        .collect())
}

/// Output of [`sample_poisson_disk`].
#[derive(Debug, Clone)]
pub struct PoissonDiskSample {
    pub cloud: OrientedPointCloud,
    /// Fewer than `count / 2` points were accepted within the budget.
    pub radius_too_large: bool,
    pub candidates_tried: usize,
}

/// Candidate budget per requested point.
pub const POISSON_BUDGET_FACTOR: usize = 30;

/// Dart throwing over area-weighted candidates. Accepted points are pairwise
/// at least `radius` apart.
pub fn sample_poisson_disk(
    mesh: &TriangleMesh,
    count: usize,
    radius: f64,
    seed: u64,
) -> Result<PoissonDiskSample> {
    check_count(count)?;
    if !(radius >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative disk radius {radius}")));
    }
    let normals = normals_of(mesh)?;
    let picker = area_picker(mesh)?;
    let mut rng = rng(seed);
    let mut cloud = OrientedPointCloud::default();
    let mut hash: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    let cell_of = |p: &Vec3| p.map(|c| (c / radius).floor() as i64).into();
    let budget = POISSON_BUDGET_FACTOR * count;
    let r2 = radius * radius;
    let mut tried = 0;
    while cloud.len() < count && tried < budget {
        tried += 1;
        let (p, n) = draw_oriented(mesh, normals, &picker, &mut rng);
        if radius > 0.0 {
            let cell: [i64; 3] = cell_of(&p);
            let blocked = neighbor_cells(cell).any(|c| {
                hash.get(&c).is_some_and(|ids| {
                    ids.iter()
                        .any(|&i| (cloud.points[i as usize] - p).norm_squared() < r2)
                })
            });
            if blocked {
                continue;
            }
            hash.entry(cell).or_default().push(cloud.len() as u32);
        }
        cloud.points.push(p);
        cloud.normals.push(n);
    }
    let radius_too_large = cloud.len() * 2 < count;
    if radius_too_large {
        log::warn!(
            "Poisson-disk radius {radius} too large: {} of {count} points after {tried} candidates",
            cloud.len()
        );
    }
    Ok(PoissonDiskSample {
        cloud,
        radius_too_large,
        candidates_tried: tried,
    })
}

fn neighbor_cells(c: [i64; 3]) -> impl Iterator<Item = [i64; 3]> {
    (-1..=1).flat_map(move |dx| {
        (-1..=1).flat_map(move |dy| (-1..=1).map(move |dz| [c[0] + dx, c[1] + dy, c[2] + dz]))
    })
}
