//! End-to-end reconstruction: sample a mesh, solve coarse-to-fine, extract,
//! and optionally score against a ground-truth mesh.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::extract::{marching_cubes, IsoSurfaceConfig};
use crate::grid::write_grid;
use crate::mesh::{load_mesh, save_mesh, MeshFormat, TriangleMesh};
use crate::metrics::{eval_3d, MetricsReport3D, DEFAULT_SAMPLES, DEFAULT_THRESHOLD};
use crate::sampling::{default_disk_radius, sample_area, sample_curvature, sample_poisson_disk};
use crate::solver::{cascade_bounds, solve_multires, EnergyParams, LevelReport};

/// Everything `run_pipeline` needs. Serialized as `key = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub gt: Option<PathBuf>,
    pub out_mesh: PathBuf,
    pub out_grid: Option<PathBuf>,
    pub out_report: Option<PathBuf>,
    /// Screening points (Poisson-disk).
    pub screen_count: usize,
    /// Gradient points (curvature-weighted).
    pub grad_count: usize,
    pub seed: u64,
    pub disk_radius: Option<f64>,
    pub energy: EnergyParams,
    pub iso_value: f64,
    pub eval_threshold: f64,
    pub eval_samples: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: PathBuf::new(),
            gt: None,
            out_mesh: PathBuf::from("mesh.ply"),
            out_grid: None,
            out_report: None,
            screen_count: 100_000,
            grad_count: 100_000,
            seed: 0,
            disk_radius: None,
            energy: EnergyParams::default(),
            iso_value: 0.0,
            eval_threshold: DEFAULT_THRESHOLD,
            eval_samples: DEFAULT_SAMPLES,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse {value:?}")))
}

pub const CONFIG_KEYS: &[&str] = &[
    "input", "gt", "out_mesh", "out_grid", "out_report", "screen_count", "grad_count", "seed",
    "disk_radius", "w0", "w1", "band", "tol", "max_iters", "resolutions", "iso", "threshold",
    "eval_samples",
];

impl PipelineConfig {
    /// Sets one field by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let path = || PathBuf::from(value);
        let opt_path = || (!value.is_empty()).then(|| PathBuf::from(value));
        match key {
            "input" => self.input = path(),
            "gt" => self.gt = opt_path(),
            "out_mesh" => self.out_mesh = path(),
            "out_grid" => self.out_grid = opt_path(),
            "out_report" => self.out_report = opt_path(),
            "screen_count" => self.screen_count = parse_num(key, value)?,
            "grad_count" => self.grad_count = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "disk_radius" => {
                self.disk_radius = if value.is_empty() { None } else { Some(parse_num(key, value)?) }
            }
            "w0" => self.energy.w0 = parse_num(key, value)?,
            "w1" => self.energy.w1 = parse_num(key, value)?,
            "band" => self.energy.band_radius = parse_num(key, value)?,
            "tol" => self.energy.cg_tol = parse_num(key, value)?,
            "max_iters" => self.energy.cg_max_iters = parse_num(key, value)?,
            "resolutions" => {
                self.energy.resolutions = value
                    .split(',')
                    .map(|v| parse_num(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            "iso" => self.iso_value = parse_num(key, value)?,
            "threshold" => self.eval_threshold = parse_num(key, value)?,
            "eval_samples" => self.eval_samples = parse_num(key, value)?,
            _ => return Err(Error::InvalidParameter(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("config line {}: expected key = value", n + 1))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| Error::InvalidParameter(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_str(&text)
    }

    pub fn to_config_string(&self) -> String {
        let opt = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let e = &self.energy;
        let res: Vec<String> = e.resolutions.iter().map(f64::to_string).collect();
        let mut s = String::new();
        let _ = writeln!(s, "input = {}", self.input.display());
        let _ = writeln!(s, "gt = {}", opt(&self.gt));
        let _ = writeln!(s, "out_mesh = {}", self.out_mesh.display());
        let _ = writeln!(s, "out_grid = {}", opt(&self.out_grid));
        let _ = writeln!(s, "out_report = {}", opt(&self.out_report));
        let _ = writeln!(s, "screen_count = {}", self.screen_count);
        let _ = writeln!(s, "grad_count = {}", self.grad_count);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "disk_radius = {}", self.disk_radius.map(|r| r.to_string()).unwrap_or_default());
        let _ = writeln!(s, "w0 = {}", e.w0);
        let _ = writeln!(s, "w1 = {}", e.w1);
        let _ = writeln!(s, "band = {}", e.band_radius);
        let _ = writeln!(s, "tol = {}", e.cg_tol);
        let _ = writeln!(s, "max_iters = {}", e.cg_max_iters);
        let _ = writeln!(s, "resolutions = {}", res.join(","));
        let _ = writeln!(s, "iso = {}", self.iso_value);
        let _ = writeln!(s, "threshold = {}", self.eval_threshold);
        let _ = writeln!(s, "eval_samples = {}", self.eval_samples);
        s
    }

    /// Checks ranges and that inputs exist and output directories are writable targets.
    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        if self.screen_count == 0 || self.grad_count == 0 {
            return Err(Error::InvalidParameter("sample counts must be at least 1".into()));
        }
        if let Some(r) = self.disk_radius {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("disk_radius must be >= 0, got {r}")));
            }
        }
        if !self.iso_value.is_finite() {
            return Err(Error::InvalidParameter("iso must be finite".into()));
        }
        if !(self.eval_threshold > 0.0) || self.eval_samples == 0 {
            return Err(Error::InvalidParameter("threshold and eval_samples must be positive".into()));
        }
        for input in std::iter::once(&self.input).chain(&self.gt) {
            if !input.is_file() {
                return Err(Error::InvalidParameter(format!("input {} does not exist", input.display())));
            }
        }
        MeshFormat::from_path(&self.out_mesh)?;
        let outputs = [Some(&self.out_mesh), self.out_grid.as_ref(), self.out_report.as_ref()];
        for out in outputs.into_iter().flatten() {
            let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !parent.is_dir() {
                return Err(Error::InvalidParameter(format!(
                    "output directory {} does not exist",
                    parent.display()
                )));
            }
        }
        Ok(())
    }

    /// Per-stage seeds drawn from the single user seed.
    pub fn stage_seeds(&self) -> StageSeeds {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        StageSeeds {
            screen: rng.next_u64(),
            grad: rng.next_u64(),
            eval: rng.next_u64(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSeeds {
    pub screen: u64,
    pub grad: u64,
    pub eval: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTimes {
    pub load_ms: f64,
    pub sample_ms: f64,
    pub solve_ms: f64,
    pub extract_ms: f64,
    pub eval_ms: f64,
    pub write_ms: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub screen_points: usize,
    pub grad_points: usize,
    pub disk_radius: f64,
    pub radius_too_large: bool,
    /// Gradient points came from area sampling because the mesh has no curvature.
    pub grad_fallback_area: bool,
    pub levels: Vec<LevelReport>,
    pub vertices: usize,
    pub faces: usize,
    pub no_surface: bool,
    pub metrics: Option<MetricsReport3D>,
    pub times: StageTimes,
}

impl PipelineReport {
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("screen_points", &self.screen_points);
        kv("grad_points", &self.grad_points);
        kv("disk_radius", &self.disk_radius);
        kv("radius_too_large", &self.radius_too_large);
        kv("grad_fallback_area", &self.grad_fallback_area);
        kv("levels", &self.levels.len());
        for (i, l) in self.levels.iter().enumerate() {
            let p = format!("level{i}.");
            kv(&format!("{p}voxel_size"), &l.voxel_size);
            kv(&format!("{p}dims"), &format!("{}x{}x{}", l.dims[0], l.dims[1], l.dims[2]));
            kv(&format!("{p}active_voxels"), &l.active_voxels);
            kv(&format!("{p}zero_init_energy"), &l.zero_init_energy);
            kv(&format!("{p}initial_energy"), &l.solve.initial_energy);
            kv(&format!("{p}final_energy"), &l.solve.final_energy);
            kv(&format!("{p}iterations"), &l.solve.iterations);
            kv(&format!("{p}converged"), &l.solve.converged);
            kv(&format!("{p}relative_residual"), &l.solve.relative_residual);
        }
        kv("vertices", &self.vertices);
        kv("faces", &self.faces);
        kv("no_surface", &self.no_surface);
        if let Some(m) = &self.metrics {
            kv("threshold", &m.threshold);
            kv("precision", &m.precision);
            kv("recall", &m.recall);
            kv("fscore", &m.fscore);
        }
        let t = &self.times;
        kv("time_load_ms", &t.load_ms);
        kv("time_sample_ms", &t.sample_ms);
        kv("time_solve_ms", &t.solve_ms);
        kv("time_extract_ms", &t.extract_ms);
        kv("time_eval_ms", &t.eval_ms);
        kv("time_write_ms", &t.write_ms);
        s
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Loads a mesh and keeps file normals, computing area-weighted ones otherwise.
pub fn load_oriented_mesh(path: &Path) -> Result<TriangleMesh> {
    let (mesh, report) = load_mesh(path)?;
    if report.degenerate_faces_dropped > 0 {
        log::warn!("{}: dropped {} degenerate faces", path.display(), report.degenerate_faces_dropped);
    }
    if mesh.vertex_normals().is_some() {
        Ok(mesh)
    } else {
        mesh.with_vertex_normals()
    }
}

/// Runs every stage and writes the outputs only after all of them succeed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<(TriangleMesh, PipelineReport)> {
    cfg.validate()?;
    let seeds = cfg.stage_seeds();
    let mut times = StageTimes::default();

    let t = Instant::now();
    let mesh = load_oriented_mesh(&cfg.input).map_err(Error::in_stage("load"))?;
    let gt = match &cfg.gt {
        Some(p) => Some(load_mesh(p).map_err(Error::in_stage("load"))?.0),
        None => None,
    };
    times.load_ms = elapsed_ms(t);

    let t = Instant::now();
    let disk_radius = cfg.disk_radius.unwrap_or_else(|| default_disk_radius(&mesh, cfg.screen_count));
    let screen = sample_poisson_disk(&mesh, cfg.screen_count, disk_radius, seeds.screen)
        .map_err(Error::in_stage("sample"))?;
    if screen.radius_too_large {
        log::warn!(
            "Poisson-disk radius {disk_radius} accepted only {} of {} points",
            screen.cloud.len(),
            cfg.screen_count
        );
    }
    let (grad, grad_fallback_area) = match sample_curvature(&mesh, cfg.grad_count, seeds.grad) {
        Ok(cloud) => (cloud, false),
        Err(Error::ZeroCurvature) => {
            log::warn!("mesh has zero total curvature; sampling gradient points by area");
            let cloud = sample_area(&mesh, cfg.grad_count, seeds.grad).map_err(Error::in_stage("sample"))?;
            (cloud, true)
        }
        Err(e) => return Err(Error::in_stage("sample")(e)),
    };
    times.sample_ms = elapsed_ms(t);

    let t = Instant::now();
    let bounds = cascade_bounds(&screen.cloud, &grad, &cfg.energy)
        .ok_or_else(|| Error::in_stage("solve")(Error::EmptyCloud))?;
    let solved = solve_multires(&screen.cloud, &grad, &cfg.energy, bounds).map_err(Error::in_stage("solve"))?;
    times.solve_ms = elapsed_ms(t);

    let t = Instant::now();
    let iso = IsoSurfaceConfig { iso_value: cfg.iso_value };
    let extraction = marching_cubes(&solved.grid, &iso).map_err(Error::in_stage("extract"))?;
    times.extract_ms = elapsed_ms(t);

    let t = Instant::now();
    let metrics = match (&gt, extraction.no_surface) {
        (Some(gt), false) => Some(
            eval_3d(&extraction.mesh, gt, cfg.eval_threshold, cfg.eval_samples, seeds.eval)
                .map_err(Error::in_stage("eval"))?,
        ),
        (Some(_), true) => {
            log::warn!("skipping evaluation: reconstruction is empty");
            None
        }
        (None, _) => None,
    };
    times.eval_ms = elapsed_ms(t);

    let mut report = PipelineReport {
        screen_points: screen.cloud.len(),
        grad_points: grad.len(),
        disk_radius,
        radius_too_large: screen.radius_too_large,
        grad_fallback_area,
        levels: solved.levels,
        vertices: extraction.mesh.vertices().len(),
        faces: extraction.mesh.faces().len(),
        no_surface: extraction.no_surface,
        metrics,
        times,
    };

    let t = Instant::now();
    let format = MeshFormat::from_path(&cfg.out_mesh)?;
    save_mesh(&extraction.mesh, &cfg.out_mesh, format).map_err(Error::in_stage("write"))?;
    if let Some(path) = &cfg.out_grid {
        write_grid(&solved.grid, path).map_err(Error::in_stage("write"))?;
    }
    report.times.write_ms = elapsed_ms(t);
    if let Some(path) = &cfg.out_report {
        std::fs::write(path, report.to_key_values())
            .map_err(|e| Error::in_stage("write")(Error::io(path, e)))?;
    }
    Ok((extraction.mesh, report))
}
