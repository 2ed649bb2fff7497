//! Command implementations and run manifests.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use triags_core::optimizer::{
    bounding_diagonal, orbit_cameras, surface_metrics, AblationRow, AnalyticSurface, TraceRow,
};
use triags_core::{
    ablate_k, ablate_loss, batch_triangulate, eval_metrics, extract_mesh, fuse_depth, gradcheck, gradcheck_on,
    make_synthetic_scene, mesh_chamfer, optimize, render_depth_normal_with, CameraView, DepthImage, DepthNormalMap,
    DepthTransfer, GeometryMetrics, LossKind, NeighborPolicy, OptimizerError, RenderOptions, SurfacePoint,
    TsdfVolume,
};

use crate::config::RunConfig;
use crate::fixture::fibonacci_sphere;
use crate::output::{self, f, Csv, OutputSet, TsdfSidecar};
use crate::schema::{self, GroundTruth, Scene, SceneFile};
use crate::{CliError, Command};

/// Worst tolerated relative error of `gradcheck`.
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;

/// A validated scene plus the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct SceneInput {
    pub scene: Scene,
    pub base: Option<PathBuf>,
}

impl SceneInput {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let scene = schema::load_scene(path)?;
        let base = path.parent().map(|p| std::fs::canonicalize(if p.as_os_str().is_empty() { Path::new(".") } else { p }))
            .transpose()
            .map_err(|e| CliError::io(path, e))?;
        Ok(Self { scene, base })
    }

    pub fn from_file(file: SceneFile, base: Option<PathBuf>) -> Result<Self, CliError> {
        Ok(Self { scene: schema::validate(file, base.as_deref())?, base })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Everything needed to re-run a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub config: RunConfig,
    pub scene: Option<SceneFile>,
    /// Directory that relative paths inside `scene` resolve against.
    pub scene_dir: Option<PathBuf>,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_s: f64,
    pub stages: Vec<StageTiming>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    scene: Option<&'a SceneInput>,
    out: OutputSet,
    stages: Vec<StageTiming>,
}

impl<'a> Ctx<'a> {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let r = f();
        self.stages.push(StageTiming { stage: name.to_string(), seconds: t.elapsed().as_secs_f64() });
        r
    }

    fn require_scene(&self, command: &str) -> Result<&'a Scene, CliError> {
        self.scene.map(|s| &s.scene).ok_or_else(|| CliError::Input(format!("{command} needs --scene")))
    }

    fn reject_scene(&self, command: &str) -> Result<(), CliError> {
        if self.scene.is_some() {
            return Err(CliError::Input(format!("{command} runs on the config's synthetic scene; --scene is not used")));
        }
        Ok(())
    }
}

fn planned(command: &Command) -> &'static [(&'static str, &'static str)] {
    match command {
        Command::Render => &[("", "csv"), ("maps", "bin")],
        Command::Triangulate => &[("", "csv"), ("", "ply")],
        Command::Optimize => &[("", "csv"), ("trace", "csv"), ("timing", "csv"), ("", "ply")],
        Command::AblateK => &[("", "csv"), ("timing", "csv")],
        Command::AblateLoss => &[("", "csv")],
        Command::Gradcheck => &[("", "csv"), ("summary", "csv")],
        Command::Fuse => &[("", "csv"), ("", "ply"), ("", "obj"), ("tsdf", "bin"), ("tsdf", "json")],
        Command::Eval => &[("", "csv")],
        Command::Replay { .. } => &[],
    }
}

/// Run one command and write its artifacts and manifest into `out`.
/// Returns the manifest path. A diverged optimisation still writes its trace
/// and manifest before reporting the error.
pub fn run(
    command: &Command,
    cfg: &RunConfig,
    scene: Option<&SceneInput>,
    out: &Path,
    force: bool,
) -> Result<PathBuf, CliError> {
    if matches!(command, Command::Replay { .. }) {
        return Err(CliError::Input("replay takes a manifest path".into()));
    }
    let start = Instant::now();
    let out = OutputSet::new(out, command.name(), cfg.seed, force)?;
    let mut planned_all = planned(command).to_vec();
    planned_all.push(("", "manifest.json"));
    out.guard(&planned_all)?;
    let mut ctx = Ctx { cfg, scene, out, stages: Vec::new() };

    let result = match command {
        Command::Render => render(&mut ctx),
        Command::Triangulate => triangulate(&mut ctx),
        Command::Optimize => optimize_cmd(&mut ctx),
        Command::AblateK => ablate_k_cmd(&mut ctx),
        Command::AblateLoss => ablate_loss_cmd(&mut ctx),
        Command::Gradcheck => gradcheck_cmd(&mut ctx),
        Command::Fuse => fuse(&mut ctx),
        Command::Eval => eval(&mut ctx),
        Command::Replay { .. } => unreachable!(),
    };
    // input errors leave nothing behind; everything else is recorded
    if let Err(CliError::Input(_) | CliError::Io { .. } | CliError::Exists(_)) = &result {
        return result.map(|_| PathBuf::new());
    }
    let manifest = Manifest {
        command: command.name().to_string(),
        config: cfg.clone(),
        scene: scene.map(|s| s.scene.file.clone()),
        scene_dir: scene.and_then(|s| s.base.clone()),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: ctx.out.written().to_vec(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        stages: ctx.stages,
    };
    let path = ctx.out.json("", "manifest.json", &manifest)?;
    result.map(|_| path)
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Re-run the command recorded in a manifest into `out`.
pub fn run_manifest(path: &Path, out: &Path, force: bool) -> Result<PathBuf, CliError> {
    let m = read_manifest(path)?;
    let command = Command::from_name(&m.command)
        .ok_or_else(|| CliError::Input(format!("{}: unknown command {:?}", path.display(), m.command)))?;
    let scene = m.scene.map(|file| SceneInput::from_file(file, m.scene_dir.clone())).transpose()?;
    run(&command, &m.config, scene.as_ref(), out, force)
}

fn core_input(e: OptimizerError) -> CliError {
    match e {
        OptimizerError::Diverged { iteration, .. } => CliError::Diverged(iteration),
        other => CliError::Input(other.to_string()),
    }
}

fn render_all(ctx: &mut Ctx<'_>, scene: &Scene) -> Vec<DepthNormalMap> {
    let opts = RenderOptions::with_mode(ctx.cfg.depth_mode());
    ctx.stage("render", || scene.views.iter().map(|v| render_depth_normal_with(v, &scene.gaussians, &opts)).collect())
}

/// Depth maps of the scene: rendered from its Gaussians, or from its analytic
/// ground truth when it has no Gaussians.
fn scene_depths(ctx: &mut Ctx<'_>, scene: &Scene) -> Result<Vec<DepthImage>, CliError> {
    if !scene.gaussians.is_empty() {
        let maps = render_all(ctx, scene);
        return Ok(maps.into_iter().map(|m| m.depth).collect());
    }
    match &scene.ground_truth {
        Some(GroundTruth::Surface(s)) => Ok(scene.views.iter().map(|v| s.depth_image(v)).collect()),
        _ => Err(CliError::Input("scene has neither gaussians nor an analytic ground truth".into())),
    }
}

fn backproject(views: &[CameraView], depths: &[DepthImage]) -> Vec<Vector3<f64>> {
    let mut out = Vec::new();
    for (v, img) in views.iter().zip(depths) {
        for (x, y, d) in img.valid_pixels() {
            out.push(v.center() + v.depth_direction(&Vector2::new(x as f64, y as f64)) * d);
        }
    }
    out
}

/// Dense reference samples of a ground truth. Spheres are sampled whole, so
/// unobserved parts count against completeness; other surfaces as seen from
/// `views`.
fn reference_points(truth: &GroundTruth, views: &[CameraView]) -> Vec<Vector3<f64>> {
    match truth {
        GroundTruth::Points(p) => p.clone(),
        GroundTruth::Surface(AnalyticSurface::Sphere { center, radius }) => {
            fibonacci_sphere(20_000, *radius).into_iter().map(|p| p + center).collect()
        }
        GroundTruth::Surface(s) => {
            let depths: Vec<DepthImage> = views.iter().map(|v| s.depth_image(v)).collect();
            backproject(views, &depths)
        }
    }
}

fn render(ctx: &mut Ctx<'_>) -> Result<(), CliError> {
    let scene = ctx.require_scene("render")?;
    let maps = render_all(ctx, scene);
    let mut csv = Csv::new(&["view", "width", "height", "valid_pixels", "min_depth", "mean_depth", "max_depth", "mean_opacity"]);
    for (v, m) in scene.views.iter().zip(&maps) {
        let depths: Vec<f64> = m.depth.valid_pixels().map(|(_, _, d)| d).collect();
        let (lo, hi) = depths.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(*d), b.max(*d)));
        let mean = if depths.is_empty() { f64::NAN } else { depths.iter().sum::<f64>() / depths.len() as f64 };
        let opacity = m.opacity.iter().sum::<f64>() / m.opacity.len() as f64;
        csv.push(vec![
            v.id.to_string(),
            m.width().to_string(),
            m.height().to_string(),
            depths.len().to_string(),
            f(if depths.is_empty() { f64::NAN } else { lo }),
            f(mean),
            f(if depths.is_empty() { f64::NAN } else { hi }),
            f(opacity),
        ]);
    }
    ctx.out.csv("", &csv)?;
    ctx.out.binary("maps", "bin", &output::depth_maps_binary(&maps))?;
    Ok(())
}

fn triangulate(ctx: &mut Ctx<'_>) -> Result<(), CliError> {
    let scene = ctx.require_scene("triangulate")?;
    let depths = scene_depths(ctx, scene)?;
    let stride = ctx.cfg.triangulate_stride.max(1);
    let mut points = Vec::new();
    for (v, img) in scene.views.iter().zip(&depths) {
        for (x, y, d) in img.valid_pixels() {
            if x % stride == 0 && y % stride == 0 {
                let p = SurfacePoint::from_pixel(v, Vector2::new(x as f64, y as f64), d)
                    .map_err(|e| CliError::Input(e.to_string()))?;
                points.push(p);
            }
        }
    }
    if scene.views.len() <= ctx.cfg.k {
        return Err(CliError::Input(format!("k = {} needs more than {} views", ctx.cfg.k, scene.views.len())));
    }
    let source = DepthTransfer::new(depths.as_slice());
    let k = ctx.cfg.k;
    let results = ctx.stage("triangulate", || {
        batch_triangulate(&points, &scene.views, &NeighborPolicy::default(), k, &source, 256)
    });
    let mut csv = Csv::new(&["point_id", "view", "px", "py", "x", "y", "z", "residual", "degenerate", "shift"]);
    let mut cloud = Vec::new();
    for (i, (p, r)) in points.iter().zip(&results).enumerate() {
        let (pos, residual, degenerate) = match r {
            Ok(c) => (c.position, c.residual, c.degenerate),
            Err(_) => (Vector3::repeat(f64::NAN), f64::NAN, true),
        };
        if !degenerate {
            cloud.push(pos);
        }
        csv.push(vec![
            i.to_string(),
            p.view_id.to_string(),
            f(p.pixel.x),
            f(p.pixel.y),
            f(pos.x),
            f(pos.y),
            f(pos.z),
            f(residual),
            degenerate.to_string(),
            f((pos - p.position).norm()),
        ]);
    }
    ctx.out.csv("", &csv)?;
    ctx.out.text("", "ply", &output::ply_points(&cloud))?;
    Ok(())
}

fn trace_csv(trace: &[TraceRow]) -> Csv {
    let mut csv = Csv::new(&["iteration", "active", "sigma", "loss_mean", "loss_sum", "valid_points", "rmse"]);
    for r in trace {
        csv.push(vec![
            r.iteration.to_string(),
            r.active.to_string(),
            f(r.sigma),
            f(r.loss),
            f(r.loss * r.valid_points as f64),
            r.valid_points.to_string(),
            f(r.rmse),
        ]);
    }
    csv
}

fn metric_cells(m: &GeometryMetrics) -> Vec<String> {
    vec![f(m.rmse), f(m.chamfer), f(m.precision), f(m.recall), f(m.f1)]
}

fn optimize_cmd(ctx: &mut Ctx<'_>) -> Result<(), CliError> {
    ctx.reject_scene("optimize")?;
    let cfg = ctx.cfg;
    let exp = cfg.experiment()?;
    let synth = ctx.stage("scene", || make_synthetic_scene(&cfg.scene_spec(), cfg.seed)).map_err(core_input)?;
    let tau = cfg.tau_fraction * synth.truth.diagonal;
    let initial = surface_metrics(&synth.surface, &synth.truth, tau).map_err(core_input)?;
    let run = ctx.stage("optimize", || optimize(&synth.surface, &synth.truth, &exp));

    let mut metrics = Csv::new(&["stage", "rmse", "chamfer", "precision", "recall", "f1", "tau"]);
    let mut row = vec!["initial".to_string()];
    row.extend(metric_cells(&initial));
    row.push(f(tau));
    metrics.push(row);
    match run {
        Ok(res) => {
            let fin = surface_metrics(&res.surface, &synth.truth, tau).map_err(core_input)?;
            let mut row = vec!["final".to_string()];
            row.extend(metric_cells(&fin));
            row.push(f(tau));
            metrics.push(row);
            ctx.out.csv("", &metrics)?;
            ctx.out.csv("trace", &trace_csv(&res.trace))?;
            let mut timing = Csv::new(&["iterations_per_s"]);
            timing.push(vec![f(res.iterations_per_s)]);
            ctx.out.csv("timing", &timing)?;
            let pts: Vec<Vector3<f64>> = res.surface.points().into_iter().map(|p| p.position).collect();
            ctx.out.text("", "ply", &output::ply_points(&pts))?;
            Ok(())
        }
        Err(OptimizerError::Diverged { iteration, trace }) => {
            ctx.out.csv("", &metrics)?;
            ctx.out.csv("trace", &trace_csv(&trace))?;
            Err(CliError::Diverged(iteration))
        }
        Err(e) => Err(core_input(e)),
    }
}

fn loss_name(l: LossKind) -> &'static str {
    match l {
        LossKind::GemanMcClure => "gm",
        LossKind::L2 => "l2",
    }
}

fn opt_cell(v: Option<usize>) -> String {
    v.map(|i| i.to_string()).unwrap_or_default()
}

/// Columns follow the k-ablation table (variant, F1, speed); speed goes to
/// the separate timing file so the main table is reproducible.
fn ablate_k_cmd(ctx: &mut Ctx<'_>) -> Result<(), CliError> {
    ctx.reject_scene("ablate-k")?;
    let cfg = ctx.cfg;
    let exp = cfg.experiment()?;
    if cfg.ablation_ks.is_empty() {
        return Err(CliError::Input("ablation_ks: at least one k is required".into()));
    }
    let synth = ctx.stage("scene", || make_synthetic_scene(&cfg.scene_spec(), cfg.seed)).map_err(core_input)?;
    let rows = ctx.stage("ablate", || ablate_k(&synth, &exp, &cfg.ablation_ks));
    let rows: Vec<AblationRow> = rows.into_iter().collect::<Result<_, _>>().map_err(core_input)?;
    let mut csv = Csv::new(&[
        "variant", "k", "f1", "precision", "recall", "chamfer", "initial_rmse", "final_rmse", "diverged_at",
    ]);
    let mut timing = Csv::new(&["variant", "k", "iterations_per_s"]);
    for r in &rows {
        let m = r.final_metrics;
        let cell = |g: fn(&GeometryMetrics) -> f64| m.as_ref().map(|m| f(g(m))).unwrap_or_default();
        csv.push(vec![
            r.variant.clone(),
            r.k.to_string(),
            cell(|m| m.f1),
            cell(|m| m.precision),
            cell(|m| m.recall),
            cell(|m| m.chamfer),
            f(r.initial.rmse),
            cell(|m| m.rmse),
            opt_cell(r.diverged_at),
        ]);
        timing.push(vec![r.variant.clone(), r.k.to_string(), f(r.iterations_per_s)]);
    }
    ctx.out.csv("", &csv)?;
    ctx.out.csv("timing", &timing)?;
    Ok(())
}

/// A diverged arm is a result here, not an error.
fn ablate_loss_cmd(ctx: &mut Ctx<'_>) -> Result<(), CliError> {
    ctx.reject_scene("ablate-loss")?;
    let cfg = ctx.cfg;
    let exp = cfg.experiment()?;
    let synth = ctx.stage("scene", || make_synthetic_scene(&cfg.scene_spec(), cfg.seed)).map_err(core_input)?;
    let rows = ctx.stage("ablate", || ablate_loss(&synth, &exp)).map_err(core_input)?;
    let mut csv = Csv::new(&[
        "variant", "loss", "initial_rmse", "final_rmse", "final_f1", "diverged", "diverged_at", "mean_offset",
    ]);
    for r in &rows {
        csv.push(vec![
            r.variant.clone(),
            loss_name(r.loss).to_string(),
            f(r.initial.rmse),
            r.final_metrics.map(|m| f(m.rmse)).unwrap_or_default(),
            r.final_metrics.map(|m| f(m.f1)).unwrap_or_default(),
            r.diverged_at.is_some().to_string(),
            opt_cell(r.diverged_at),
            if r.mean_offset.is_nan() { String::new() } else { f(r.mean_offset) },
        ]);
    }
    ctx.out.csv("", &csv)?;
    Ok(())
}

/// Uses the scene's cameras and analytic ground truth when given, the
/// synthetic scene otherwise.
fn gradcheck_cmd(ctx: &mut Ctx<'_>) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let spec = cfg.gradcheck_spec();
    let scene = ctx.scene.map(|s| &s.scene);
    let report = match scene {
        Some(s) => {
            let Some(GroundTruth::Surface(surface)) = &s.ground_truth else {
                return Err(CliError::Input("gradcheck needs an analytic ground_truth in the scene".into()));
            };
            ctx.stage("gradcheck", || gradcheck_on(&s.views, surface, &spec))
        }
        None => ctx.stage("gradcheck", || gradcheck(&cfg.scene_spec(), &spec)),
    }
    .map_err(core_input)?;
    let mut csv = Csv::new(&["point", "coord", "analytic", "numeric", "relative_error"]);
    for e in &report.entries {
        csv.push(vec![e.point.to_string(), e.coord.to_string(), f(e.analytic), f(e.numeric), f(e.relative_error)]);
    }
    let pass = report.max_relative_error < GRADCHECK_TOLERANCE;
    let mut summary = Csv::new(&["points", "entries", "max_relative_error", "tolerance", "pass"]);
    summary.push(vec![
        spec.points.to_string(),
        report.entries.len().to_string(),
        f(report.max_relative_error),
        f(GRADCHECK_TOLERANCE),
        pass.to_string(),
    ]);
    ctx.out.csv("", &csv)?;
    ctx.out.csv("summary", &summary)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::GradCheck(report.max_relative_error))
    }
}

/// Fuses the scene's depth maps, or without a scene, analytic depths of the
/// synthetic surface from cameras spread over the whole sphere.
fn fuse(ctx: &mut Ctx<'_>) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    if cfg.grid_resolution < 2 {
        return Err(CliError::Input(format!("grid_resolution must be at least 2, got {}", cfg.grid_resolution)));
    }
    let (views, depths, truth) = match ctx.scene.map(|s| &s.scene) {
        Some(s) => {
            let depths = scene_depths(ctx, s)?;
            (s.views.clone(), depths, s.ground_truth.clone())
        }
        None => {
            let spec = cfg.scene_spec();
            let surface = spec.kind.surface();
            let views = orbit_cameras(spec.n_views, spec.camera_distance, spec.resolution, spec.kind.framing_radius())
                .map_err(core_input)?;
            let depths = views.iter().map(|v| surface.depth_image(v)).collect();
            (views, depths, Some(GroundTruth::Surface(surface)))
        }
    };
    let points = backproject(&views, &depths);
    if points.is_empty() {
        return Err(CliError::Input("no valid depth to fuse".into()));
    }
    let (lo, hi) = points.iter().fold(
        (Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), p| (lo.inf(p), hi.sup(p)),
    );
    let mut vol = TsdfVolume::for_bounds(&lo, &hi, cfg.grid_resolution);
    ctx.stage("fuse", || {
        for (v, d) in views.iter().zip(&depths) {
            fuse_depth(&mut vol, v, d);
        }
    });
    let mesh = ctx.stage("mesh", || extract_mesh(&vol));

    let reference = truth.as_ref().map(|t| reference_points(t, &views));
    let chamfer = match &reference {
        Some(r) if !mesh.is_empty() => Some(ctx.stage("chamfer", || mesh_chamfer(&mesh, r, 20_000)).expect("non-empty inputs")),
        _ => None,
    };
    let max_dev = match &truth {
        Some(GroundTruth::Surface(s)) if !mesh.is_empty() => {
            Some(mesh.vertices.iter().map(|p| s.distance(p).abs()).fold(0.0, f64::max))
        }
        _ => None,
    };
    let mut csv = Csv::new(&[
        "vertices", "triangles", "boundary_edges", "closed", "voxel_size", "chamfer", "chamfer_voxels",
        "max_surface_distance",
    ]);
    csv.push(vec![
        mesh.vertices.len().to_string(),
        mesh.triangles.len().to_string(),
        mesh.boundary_edges().len().to_string(),
        mesh.is_closed().to_string(),
        f(vol.voxel_size),
        chamfer.map(f).unwrap_or_default(),
        chamfer.map(|c| f(c / vol.voxel_size)).unwrap_or_default(),
        max_dev.map(f).unwrap_or_default(),
    ]);
    ctx.out.csv("", &csv)?;
    ctx.out.text("", "ply", &output::ply_mesh(&mesh))?;
    ctx.out.text("", "obj", &output::obj_mesh(&mesh))?;
    ctx.out.binary("tsdf", "bin", &output::tsdf_binary(&vol))?;
    ctx.out.json("tsdf", "json", &TsdfSidecar::of(&vol))?;
    Ok(())
}

fn eval(ctx: &mut Ctx<'_>) -> Result<(), CliError> {
    let scene = ctx.require_scene("eval")?;
    let truth = scene
        .ground_truth
        .clone()
        .ok_or_else(|| CliError::Input("eval needs a ground_truth in the scene".into()))?;
    if scene.gaussians.is_empty() {
        return Err(CliError::Input("eval needs gaussians to render".into()));
    }
    let depths = scene_depths(ctx, scene)?;
    let predicted = backproject(&scene.views, &depths);
    if predicted.is_empty() {
        return Err(CliError::Input("rendered depth maps are empty".into()));
    }
    // only what the cameras see: this scores the rendered depth, not coverage
    let reference = match &truth {
        GroundTruth::Points(p) => p.clone(),
        GroundTruth::Surface(s) => {
            let d: Vec<DepthImage> = scene.views.iter().map(|v| s.depth_image(v)).collect();
            backproject(&scene.views, &d)
        }
    };
    let tau = ctx.cfg.tau_fraction * bounding_diagonal(&reference);
    let m = ctx.stage("metrics", || eval_metrics(&predicted, &reference, tau)).map_err(core_input)?;
    let surface_dist = match &truth {
        GroundTruth::Surface(s) => f(predicted.iter().map(|p| s.distance(p).abs()).sum::<f64>() / predicted.len() as f64),
        GroundTruth::Points(_) => String::new(),
    };
    let mut csv = Csv::new(&[
        "predicted_points", "reference_points", "tau", "chamfer", "precision", "recall", "f1", "mean_surface_distance",
    ]);
    csv.push(vec![
        predicted.len().to_string(),
        reference.len().to_string(),
        f(tau),
        f(m.chamfer),
        f(m.precision),
        f(m.recall),
        f(m.f1),
        surface_dist,
    ]);
    ctx.out.csv("", &csv)?;
    Ok(())
}
