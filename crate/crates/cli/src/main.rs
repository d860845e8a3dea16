//! `gradsurf` command-line front end.

// Range checks are written `!(x > 0.0)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use gradsurf::extract::{marching_cubes, IsoSurfaceConfig};
use gradsurf::grid::{build_band, read_grid, splat, write_grid, GridGeometry, VoxelGrid};
use gradsurf::mesh::{load_mesh, save_mesh, MeshFormat};
use gradsurf::metrics::{self, MetricsReport2D};
use gradsurf::pipeline::{load_oriented_mesh, run_pipeline, PipelineConfig};
use gradsurf::sampling::{self, OrientedPointCloud, SamplerConfig, Strategy};
use gradsurf::solver::{cascade_bounds, solve_multires, EnergyParams};

#[derive(Parser)]
#[command(name = "gradsurf", version, about = "Gradient-domain surface reconstruction")]
struct Cli {
    /// Worker threads; 1 gives the deterministic reference ordering.
    #[arg(long, global = true, env = "GRADSURF_THREADS")]
    threads: Option<usize>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Sample an oriented point cloud from a mesh.
    Sample(SampleArgs),
    /// Splat a cloud into a grid for inspection (chi = splat weight, active = band).
    Splat(SplatArgs),
    /// Solve for the indicator grid from screening and gradient clouds.
    Reconstruct(ReconstructArgs),
    /// Extract the iso-surface of a grid with marching cubes.
    Extract(ExtractArgs),
    /// 3D precision, recall and F-score between two meshes.
    Eval3d(Eval3dArgs),
    /// Depth metrics of a mesh rendered into ground-truth depth frames.
    Eval2d(Eval2dArgs),
    /// Per-vertex kNN error heat map written as a colored PLY.
    Heatmap(HeatmapArgs),
    /// Full pipeline: sample, reconstruct, extract, optionally evaluate.
    Run(RunArgs),
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value = "area")]
    strategy: Strategy,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Poisson-disk radius; defaults to sqrt(area / (2 count)).
    #[arg(long)]
    radius: Option<f64>,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args)]
struct SplatArgs {
    #[arg(long)]
    cloud: PathBuf,
    #[arg(long)]
    voxel: f64,
    #[arg(long, default_value_t = 3.0)]
    band: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    screen: PathBuf,
    #[arg(long)]
    grad: PathBuf,
    /// Voxel sizes, coarse to fine.
    #[arg(long, value_delimiter = ',', default_value = "0.16,0.08,0.04")]
    res: Vec<f64>,
    #[arg(long, default_value_t = 4.0)]
    w0: f64,
    #[arg(long, default_value_t = 1.0)]
    w1: f64,
    #[arg(long, default_value_t = 3.0)]
    band: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    iso: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Eval3dArgs {
    pred: PathBuf,
    gt: PathBuf,
    #[arg(long, default_value_t = metrics::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = metrics::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Eval2dArgs {
    #[arg(long)]
    pred_mesh: PathBuf,
    /// Directory of depth frames (.png in mm or .depth), matched to
    /// trajectory lines in file-name order.
    #[arg(long)]
    gt_depth: PathBuf,
    #[arg(long)]
    traj: PathBuf,
    /// Also write the rendered depth frames here.
    #[arg(long)]
    save_depth: Option<PathBuf>,
}

#[derive(Args)]
struct HeatmapArgs {
    source: PathBuf,
    target: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// key = value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mesh to reconstruct (PLY or OBJ).
    #[arg(long)]
    input: Option<String>,
    /// Ground-truth mesh; enables 3D metrics in the report.
    #[arg(long)]
    gt: Option<String>,
    /// Output mesh path.
    #[arg(long)]
    out: Option<String>,
    /// Also write the finest solved grid.
    #[arg(long)]
    grid_out: Option<String>,
    /// Write the key=value report here as well as to stdout.
    #[arg(long)]
    report: Option<String>,
    /// Poisson-disk screening points.
    #[arg(long)]
    screen_count: Option<String>,
    /// Curvature-weighted gradient points.
    #[arg(long)]
    grad_count: Option<String>,
    /// Seed fanned out to every random stage.
    #[arg(long)]
    seed: Option<String>,
    /// Poisson-disk radius.
    #[arg(long)]
    radius: Option<String>,
    /// Comma-separated voxel sizes, coarse to fine.
    #[arg(long)]
    res: Option<String>,
    /// Screening weight.
    #[arg(long)]
    w0: Option<String>,
    /// Gradient-fit weight.
    #[arg(long)]
    w1: Option<String>,
    /// Band radius in voxels.
    #[arg(long)]
    band: Option<String>,
    /// CG relative residual tolerance.
    #[arg(long)]
    tol: Option<String>,
    /// CG iteration cap per level.
    #[arg(long)]
    max_iters: Option<String>,
    /// Extraction iso-value.
    #[arg(long)]
    iso: Option<String>,
    /// 3D metric distance threshold.
    #[arg(long)]
    threshold: Option<String>,
    /// Samples per mesh for 3D metrics.
    #[arg(long)]
    eval_samples: Option<String>,
}

/// Usage and configuration problems exit 2; everything else exits 1.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

type CmdResult = Result<(), Failure>;

trait UsageContext<T> {
    fn usage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> UsageContext<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn require_file(path: &Path) -> CmdResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(anyhow!("input {} does not exist", path.display())))
    }
}

fn require_out_dir(path: &Path) -> CmdResult {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if parent.is_dir() {
        Ok(())
    } else {
        Err(Failure::Usage(anyhow!("output directory {} does not exist", parent.display())))
    }
}

fn mesh_format(path: &Path) -> Result<MeshFormat, Failure> {
    MeshFormat::from_path(path).usage()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();

    let result = configure_threads(cli.threads).and_then(|_| dispatch(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads(threads: Option<usize>) -> CmdResult {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Usage(anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    Ok(())
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Sample(a) => cmd_sample(a),
        Command::Splat(a) => cmd_splat(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Eval3d(a) => cmd_eval3d(a),
        Command::Eval2d(a) => cmd_eval2d(a),
        Command::Heatmap(a) => cmd_heatmap(a),
        Command::Run(a) => cmd_run(a),
    }
}

fn cmd_sample(a: SampleArgs) -> CmdResult {
    require_file(&a.input)?;
    require_out_dir(&a.output)?;
    let cfg = SamplerConfig {
        strategy: a.strategy,
        count: a.count,
        seed: a.seed,
        disk_radius: a.radius,
    };
    cfg.validate().usage()?;
    let mesh = load_oriented_mesh(&a.input).context("loading mesh")?;
    let out = sampling::sample(&mesh, &cfg).context("sampling")?;
    out.cloud.save(&a.output).context("writing cloud")?;
    log::info!("wrote {} points to {}", out.cloud.len(), a.output.display());
    if out.radius_too_large {
        log::warn!("Poisson-disk radius too large; only {} points accepted", out.cloud.len());
    }
    Ok(())
}

fn cmd_splat(a: SplatArgs) -> CmdResult {
    require_file(&a.cloud)?;
    require_out_dir(&a.out)?;
    if !(a.voxel > 0.0) || !(a.band >= 1.0) {
        return Err(Failure::Usage(anyhow!("--voxel must be > 0 and --band >= 1")));
    }
    let cloud = OrientedPointCloud::load(&a.cloud).context("loading cloud")?;
    let bounds = gradsurf::Aabb::from_points(&cloud.points)
        .ok_or_else(|| anyhow!("cloud is empty"))?
        .padded((a.band + 1.0) * a.voxel);
    let geometry = GridGeometry::covering(&bounds, a.voxel).context("grid")?;
    let band = build_band(cloud.points.iter(), geometry, a.band).context("band")?;
    let (field, _) = splat(&cloud, geometry).context("splatting")?;
    let mut grid = VoxelGrid::new(geometry, band).context("grid")?;
    grid.chi = field.weight_sum;
    write_grid(&grid, &a.out).context("writing grid")?;
    Ok(())
}

fn cmd_reconstruct(a: ReconstructArgs) -> CmdResult {
    require_file(&a.screen)?;
    require_file(&a.grad)?;
    require_out_dir(&a.out)?;
    let params = EnergyParams {
        w0: a.w0,
        w1: a.w1,
        band_radius: a.band,
        cg_tol: a.tol,
        cg_max_iters: a.max_iters,
        resolutions: a.res,
    };
    params.validate().usage()?;
    let screen = OrientedPointCloud::load(&a.screen).context("loading screening cloud")?;
    let grad = OrientedPointCloud::load(&a.grad).context("loading gradient cloud")?;
    let bounds = cascade_bounds(&screen, &grad, &params).ok_or_else(|| anyhow!("both clouds are empty"))?;
    let solved = solve_multires(&screen, &grad, &params, bounds).context("solving")?;
    write_grid(&solved.grid, &a.out).context("writing grid")?;
    let mut out = std::io::stdout().lock();
    for (i, l) in solved.levels.iter().enumerate() {
        let _ = writeln!(
            out,
            "level{i}.voxel_size={}\nlevel{i}.iterations={}\nlevel{i}.converged={}\nlevel{i}.final_energy={}",
            l.voxel_size, l.solve.iterations, l.solve.converged, l.solve.final_energy
        );
    }
    Ok(())
}

fn cmd_extract(a: ExtractArgs) -> CmdResult {
    require_file(&a.grid)?;
    require_out_dir(&a.out)?;
    let format = mesh_format(&a.out)?;
    if !a.iso.is_finite() {
        return Err(Failure::Usage(anyhow!("--iso must be finite")));
    }
    let grid = read_grid(&a.grid).context("reading grid")?;
    let out = marching_cubes(&grid, &IsoSurfaceConfig { iso_value: a.iso }).context("extracting")?;
    save_mesh(&out.mesh, &a.out, format).context("writing mesh")?;
    println!("vertices={}\nfaces={}\nno_surface={}", out.mesh.vertices().len(), out.mesh.faces().len(), out.no_surface);
    Ok(())
}

fn cmd_eval3d(a: Eval3dArgs) -> CmdResult {
    require_file(&a.pred)?;
    require_file(&a.gt)?;
    if !(a.threshold > 0.0) || a.samples == 0 {
        return Err(Failure::Usage(anyhow!("--threshold and --samples must be positive")));
    }
    let (pred, _) = load_mesh(&a.pred).context("loading prediction")?;
    let (gt, _) = load_mesh(&a.gt).context("loading ground truth")?;
    let m = metrics::eval_3d(&pred, &gt, a.threshold, a.samples, a.seed).context("evaluating")?;
    println!(
        "threshold={}\nprecision={}\nrecall={}\nfscore={}",
        m.threshold, m.precision, m.recall, m.fscore
    );
    Ok(())
}

fn cmd_eval2d(a: Eval2dArgs) -> CmdResult {
    require_file(&a.pred_mesh)?;
    require_file(&a.traj)?;
    if !a.gt_depth.is_dir() {
        return Err(Failure::Usage(anyhow!("depth directory {} does not exist", a.gt_depth.display())));
    }
    if let Some(dir) = &a.save_depth {
        if !dir.is_dir() {
            return Err(Failure::Usage(anyhow!("directory {} does not exist", dir.display())));
        }
    }
    let views = metrics::read_trajectory(&a.traj).usage()?;
    let frames = metrics::list_depth_files(&a.gt_depth).usage()?;
    if views.len() != frames.len() {
        return Err(Failure::Usage(anyhow!(
            "{} trajectory poses but {} depth frames",
            views.len(),
            frames.len()
        )));
    }
    let (mesh, _) = load_mesh(&a.pred_mesh).context("loading mesh")?;
    if mesh.is_empty() {
        return Err(anyhow!("prediction mesh is empty").into());
    }
    let mut per_frame: Vec<MetricsReport2D> = Vec::new();
    for (i, (view, path)) in views.iter().zip(&frames).enumerate() {
        let gt = metrics::read_depth(path).with_context(|| format!("reading {}", path.display()))?;
        if (gt.width, gt.height) != (view.width, view.height) {
            return Err(anyhow!("{}: size {}x{} does not match trajectory", path.display(), gt.width, gt.height).into());
        }
        let pred = metrics::render_depth(&mesh, view);
        if let Some(dir) = &a.save_depth {
            let name = format!("{i:06}.depth");
            metrics::write_depth(&pred, &dir.join(name)).context("writing rendered depth")?;
        }
        match metrics::eval_2d(&pred, &gt) {
            Ok(m) => per_frame.push(m),
            Err(gradsurf::Error::NoValidPixels) => {
                log::warn!("{}: no pixel valid in both images; frame skipped", path.display())
            }
            Err(e) => return Err(Failure::Runtime(e.into())),
        }
    }
    if per_frame.is_empty() {
        return Err(anyhow!("no frame had a valid pixel in both rendered and ground-truth depth").into());
    }
    let n = per_frame.len() as f64;
    let mean = |f: fn(&MetricsReport2D) -> f64| per_frame.iter().map(f).sum::<f64>() / n;
    println!(
        "frames={}\nframes_skipped={}\nabs_rel={}\nabs_diff={}\nsq_rel={}\nrmse={}",
        per_frame.len(),
        frames.len() - per_frame.len(),
        mean(|m| m.abs_rel),
        mean(|m| m.abs_diff),
        mean(|m| m.sq_rel),
        mean(|m| m.rmse)
    );
    Ok(())
}

fn cmd_heatmap(a: HeatmapArgs) -> CmdResult {
    require_file(&a.source)?;
    require_file(&a.target)?;
    require_out_dir(&a.out)?;
    if a.k == 0 {
        return Err(Failure::Usage(anyhow!("--k must be at least 1")));
    }
    let (source, _) = load_mesh(&a.source).context("loading source")?;
    let (target, _) = load_mesh(&a.target).context("loading target")?;
    let values = metrics::error_heatmap(&source, &target, a.k).context("heat map")?;
    metrics::write_heatmap(&source, &values, &a.out).context("writing heat map")?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let max = values.iter().copied().fold(0.0, f64::max);
    println!("vertices={}\nmean={mean}\nmax={max}", values.len());
    Ok(())
}

fn cmd_run(a: RunArgs) -> CmdResult {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &a.config {
        require_file(path)?;
        cfg.apply_file(path).usage()?;
    }
    let overrides = [
        ("input", &a.input),
        ("gt", &a.gt),
        ("out_mesh", &a.out),
        ("out_grid", &a.grid_out),
        ("out_report", &a.report),
        ("screen_count", &a.screen_count),
        ("grad_count", &a.grad_count),
        ("seed", &a.seed),
        ("disk_radius", &a.radius),
        ("resolutions", &a.res),
        ("w0", &a.w0),
        ("w1", &a.w1),
        ("band", &a.band),
        ("tol", &a.tol),
        ("max_iters", &a.max_iters),
        ("iso", &a.iso),
        ("threshold", &a.threshold),
        ("eval_samples", &a.eval_samples),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, v).usage()?;
        }
    }
    if cfg.input.as_os_str().is_empty() {
        return Err(Failure::Usage(anyhow!("no input mesh (--input or `input =` in --config)")));
    }
    cfg.validate().usage()?;
    let (_, report) = run_pipeline(&cfg)?;
    print!("{}", report.to_key_values());
    Ok(())
}

impl From<gradsurf::Error> for Failure {
    fn from(e: gradsurf::Error) -> Self {
        Failure::Runtime(e.into())
    }
}
