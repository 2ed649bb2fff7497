//! Consensus-driven refinement of per-pixel depth.
//!
//! Each active step freezes the current depth maps, triangulates every valid
//! pixel against its neighbours through [`DepthTransfer`], and moves the
//! pixel's depth offset down the gradient of the robust consistency loss.

pub mod metrics;
pub mod scene;

use std::time::Instant;

use nalgebra::{Vector2, Vector3};
use thiserror::Error;

use crate::camera::{CameraError, CameraView, NeighborPolicy};
use crate::loss::{consistency_loss_and_grad, finite_diff_check, sigma_schedule, GradCheckReport, LossError, LossKind, PointViews, RobustLossConfig};
use crate::triangulation::DepthTransfer;

pub use metrics::{eval_metrics, GeometryMetrics, NearestIndex};
pub use scene::{
    band_cameras, bounding_diagonal, make_synthetic_scene, orbit_cameras, AnalyticDepthField, AnalyticSurface, GroundTruth, OptimizableSurface,
    Ripple, SceneKind, SceneSpec, SyntheticScene,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("optimization diverged at iteration {iteration}")]
    Diverged { iteration: usize, trace: Vec<TraceRow> },
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Loss(#[from] LossError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub k: usize,
    pub loss: LossKind,
    pub steps: usize,
    /// Dimensionless step: the update is `step_size / ρ''(0)` times the
    /// gradient, so 1 would jump straight to the consensus of a quadratic.
    pub step_size: f64,
    pub warmup_fraction: f64,
    pub lambda_t: f64,
    pub seed: u64,
    pub differentiate_consensus: bool,
    /// Heavy-ball momentum; 0 is plain gradient descent.
    pub momentum: f64,
    /// Neighbour observations whose depth disagrees by more than this
    /// fraction of the scene diagonal are dropped.
    pub depth_filter: Option<f64>,
    /// Weight of a quadratic pull of every offset back towards zero, in the
    /// same normalised units as the step. Without it, interpolation bias in
    /// the sampled neighbour depths integrates into unbounded drift.
    pub anchor_weight: f64,
    pub sigma0_fraction: f64,
    pub sigma_end_fraction: f64,
    /// Parameters beyond this many scene diagonals count as divergence.
    pub divergence_bound: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k: 8,
            loss: LossKind::GemanMcClure,
            steps: 2000,
            step_size: 0.5,
            warmup_fraction: 0.5,
            lambda_t: 1.0,
            seed: 0,
            differentiate_consensus: true,
            momentum: 0.0,
            depth_filter: None,
            anchor_weight: 0.005,
            sigma0_fraction: 0.05,
            sigma_end_fraction: 0.001,
            divergence_bound: 100.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: String| Err(OptimizerError::InvalidInput(m));
        if self.steps == 0 {
            return bad("steps must be positive".into());
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad(format!("step_size must be positive, got {}", self.step_size));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad(format!("warmup_fraction must lie in [0, 1), got {}", self.warmup_fraction));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.anchor_weight >= 0.0 && self.step_size * self.anchor_weight < 1.0) {
            return bad(format!("anchor weight must be non-negative with step·weight < 1, got {}", self.anchor_weight));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.lambda_t >= 0.0 && self.lambda_t.is_finite()) {
            return bad(format!("lambda_t must be non-negative, got {}", self.lambda_t));
        }
        if !(self.sigma0_fraction > 0.0 && self.sigma_end_fraction > 0.0) {
            return bad("sigma fractions must be positive".into());
        }
        Ok(())
    }

    pub fn warmup_steps(&self) -> usize {
        (self.steps as f64 * self.warmup_fraction).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub active: bool,
    pub sigma: f64,
    /// Mean per-point loss over valid points; 0 while inactive.
    pub loss: f64,
    pub valid_points: usize,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub surface: OptimizableSurface,
    pub trace: Vec<TraceRow>,
    /// Wall-clock rate over active iterations. Not deterministic.
    pub iterations_per_s: f64,
}

/// RMS distance between each pixel's current point and its true point on
/// the same ray.
pub fn surface_rmse(surface: &OptimizableSurface, truth: &GroundTruth) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (vi, img) in surface.initial.iter().enumerate() {
        let view = &surface.views[vi];
        for (x, y, _) in img.valid_pixels() {
            let (Some(d), Some(t)) = (surface.depth(vi, x, y), truth.depths[vi].get(x, y)) else { continue };
            let dir = view.depth_direction(&Vector2::new(x as f64, y as f64));
            sum += ((d - t) * dir.norm()).powi(2);
            n += 1;
        }
    }
    (sum / n.max(1) as f64).sqrt()
}

/// Mean signed depth error over all valid pixels.
pub fn mean_depth_offset(surface: &OptimizableSurface, truth: &GroundTruth) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (vi, img) in surface.initial.iter().enumerate() {
        for (x, y, _) in img.valid_pixels() {
            if let (Some(d), Some(t)) = (surface.depth(vi, x, y), truth.depths[vi].get(x, y)) {
                sum += d - t;
                n += 1;
            }
        }
    }
    sum / n.max(1) as f64
}

pub fn surface_metrics(
    surface: &OptimizableSurface,
    truth: &GroundTruth,
    tau: f64,
) -> Result<GeometryMetrics, OptimizerError> {
    let pred: Vec<Vector3<f64>> = surface.points().into_iter().map(|p| p.position).collect();
    let gt = truth.points(&surface.views);
    let mut m = eval_metrics(&pred, &gt, tau)?;
    m.rmse = surface_rmse(surface, truth);
    Ok(m)
}

/// Reference-plus-neighbour view sets for every view.
fn view_sets<'a>(views: &'a [CameraView], k: usize) -> Result<Vec<Vec<&'a CameraView>>, OptimizerError> {
    let policy = NeighborPolicy::default();
    views
        .iter()
        .map(|v| {
            let ids = policy.select(v, views, k)?;
            let mut set = vec![v];
            set.extend(ids.iter().map(|id| &views[*id]));
            Ok(set)
        })
        .collect()
}

/// Gradient descent on depth offsets. The consistency term is inactive for
/// the first `warmup_fraction` of steps and σ follows the exponential
/// schedule afterwards. `truth` only feeds the trace.
pub fn optimize(
    surface: &OptimizableSurface,
    truth: &GroundTruth,
    config: &ExperimentConfig,
) -> Result<OptimizeResult, OptimizerError> {
    config.validate()?;
    if surface.views.iter().enumerate().any(|(i, v)| v.id != i) {
        return Err(OptimizerError::InvalidInput("view ids must equal their index".into()));
    }
    let diag = truth.diagonal;
    let warmup = config.warmup_steps();
    let sched = RobustLossConfig::new(
        config.sigma0_fraction * diag,
        config.sigma_end_fraction * diag,
        config.steps,
        warmup,
    )?;
    let sets = view_sets(&surface.views, config.k)?;
    let mut surf = surface.clone();
    let mut velocity: Vec<Vec<f64>> = surf.offsets.iter().map(|o| vec![0.0; o.len()]).collect();
    let mut trace = Vec::with_capacity(config.steps + 1);
    let bound = config.divergence_bound * diag;

    // pixel bookkeeping is fixed for the whole run
    let mut pixels: Vec<(usize, usize, Vector2<f64>, Vector3<f64>)> = Vec::new();
    for (vi, img) in surf.initial.iter().enumerate() {
        for (x, y, _) in img.valid_pixels() {
            let p = Vector2::new(x as f64, y as f64);
            pixels.push((vi, img.index(x, y), p, surf.views[vi].depth_direction(&p)));
        }
    }
    let point_views: Vec<PointViews<'_>> = pixels
        .iter()
        .map(|(vi, ..)| PointViews { reference: sets[*vi][0], views: sets[*vi].clone() })
        .collect();

    let mut active_time = 0.0;
    let mut active_iters = 0usize;
    for it in 0..config.steps {
        let sigma = sigma_schedule(&sched, it);
        if it < warmup {
            trace.push(TraceRow { iteration: it, active: false, sigma, loss: 0.0, valid_points: 0, rmse: surface_rmse(&surf, truth) });
            continue;
        }
        let start = Instant::now();
        let depths = surf.depth_images();
        let mut source = DepthTransfer::new(&depths);
        source.max_depth_disagreement = config.depth_filter.map(|f| f * diag);
        let points: Vec<Vector3<f64>> = pixels
            .iter()
            .map(|(vi, idx, _, dir)| {
                let d = surf.initial[*vi].raw()[*idx] + surf.offsets[*vi][*idx];
                surf.views[*vi].center() + dir * d
            })
            .collect();
        let lgr = consistency_loss_and_grad(
            config.loss,
            &points,
            &point_views,
            &source,
            sigma,
            config.differentiate_consensus,
        );
        let lg = match lgr {
            Ok(lg) => lg,
            Err(LossError::EmptyBatch) => {
                return Err(OptimizerError::Diverged { iteration: it, trace });
            }
            Err(e) => return Err(e.into()),
        };
        let scale = config.step_size * config.lambda_t / config.loss.curvature_at_zero(sigma);
        for ((vi, idx, _, dir), term) in pixels.iter().zip(&lg.terms) {
            let g = term.gradient.dot(dir) / dir.norm_squared();
            let anchor = config.step_size * config.anchor_weight * surf.offsets[*vi][*idx];
            let v = config.momentum * velocity[*vi][*idx] - scale * g - anchor;
            velocity[*vi][*idx] = v;
            surf.offsets[*vi][*idx] += v;
        }
        active_time += start.elapsed().as_secs_f64();
        active_iters += 1;
        let rmse = surface_rmse(&surf, truth);
        trace.push(TraceRow { iteration: it, active: true, sigma, loss: lg.mean(), valid_points: lg.valid_count, rmse });

        let broken = pixels.iter().any(|(vi, idx, ..)| {
            let off = surf.offsets[*vi][*idx];
            let d = surf.initial[*vi].raw()[*idx] + off;
            !off.is_finite() || off.abs() > bound || d <= 0.0
        });
        if broken {
            return Err(OptimizerError::Diverged { iteration: it, trace });
        }
    }
    Ok(OptimizeResult {
        surface: surf,
        trace,
        iterations_per_s: if active_time > 0.0 { active_iters as f64 / active_time } else { 0.0 },
    })
}

/// Outcome of one ablation arm.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: String,
    pub k: usize,
    pub loss: LossKind,
    pub initial: GeometryMetrics,
    /// `None` when the arm diverged.
    pub final_metrics: Option<GeometryMetrics>,
    pub diverged_at: Option<usize>,
    pub mean_offset: f64,
    pub iterations_per_s: f64,
}

fn run_arm(
    scene: &SyntheticScene,
    config: &ExperimentConfig,
    variant: String,
    tau: f64,
) -> Result<AblationRow, OptimizerError> {
    let initial = surface_metrics(&scene.surface, &scene.truth, tau)?;
    match optimize(&scene.surface, &scene.truth, config) {
        Ok(res) => Ok(AblationRow {
            variant,
            k: config.k,
            loss: config.loss,
            initial,
            final_metrics: Some(surface_metrics(&res.surface, &scene.truth, tau)?),
            diverged_at: None,
            mean_offset: mean_depth_offset(&res.surface, &scene.truth),
            iterations_per_s: res.iterations_per_s,
        }),
        Err(OptimizerError::Diverged { iteration, .. }) => Ok(AblationRow {
            variant,
            k: config.k,
            loss: config.loss,
            initial,
            final_metrics: None,
            diverged_at: Some(iteration),
            mean_offset: f64::NAN,
            iterations_per_s: 0.0,
        }),
        Err(e) => Err(e),
    }
}

/// F1 threshold: 2% of the scene diagonal.
pub fn default_tau(truth: &GroundTruth) -> f64 {
    0.02 * truth.diagonal
}

/// One run per `k` on the same scene and seed.
pub fn ablate_k(
    scene: &SyntheticScene,
    base: &ExperimentConfig,
    ks: &[usize],
) -> Vec<Result<AblationRow, OptimizerError>> {
    let tau = default_tau(&scene.truth);
    ks.iter()
        .map(|&k| {
            let variant = if k == 1 { "k=1 (pairwise)".to_string() } else { format!("k={k}") };
            run_arm(scene, &ExperimentConfig { k, ..*base }, variant, tau)
        })
        .collect()
}

/// Geman–McClure arm then L2 arm, otherwise identical.
pub fn ablate_loss(
    scene: &SyntheticScene,
    base: &ExperimentConfig,
) -> Result<[AblationRow; 2], OptimizerError> {
    let tau = default_tau(&scene.truth);
    let gm = run_arm(scene, &ExperimentConfig { loss: LossKind::GemanMcClure, ..*base }, "geman-mcclure".into(), tau)?;
    let l2 = run_arm(scene, &ExperimentConfig { loss: LossKind::L2, ..*base }, "l2".into(), tau)?;
    Ok([gm, l2])
}

/// Setup of a gradient check on a smooth scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckSpec {
    pub points: usize,
    pub k: usize,
    /// Loss scale as a fraction of the scene diagonal.
    pub sigma_fraction: f64,
    /// Amplitude of the per-view depth ripples.
    pub ripple: f64,
    /// Standard deviation of the offset of each `X_r` from the surface.
    pub offset: f64,
    pub step: f64,
    pub seed: u64,
    pub loss: LossKind,
}

impl Default for GradCheckSpec {
    fn default() -> Self {
        Self {
            points: 24,
            k: 8,
            sigma_fraction: 0.05,
            ripple: 0.02,
            offset: 0.03,
            step: 1e-6,
            seed: 0,
            loss: LossKind::GemanMcClure,
        }
    }
}

/// Central-difference check of the full consistency gradient (direct term
/// plus the path through the consensus point) at random points near the
/// surface of `scene`. Neighbour depths come from an analytic field with
/// smooth per-view errors, so the loss is smooth in every `X_r`.
pub fn gradcheck(scene: &SceneSpec, spec: &GradCheckSpec) -> Result<GradCheckReport, OptimizerError> {
    gradcheck_on(&band_cameras(scene)?, &scene.kind.surface(), spec)
}

/// [`gradcheck`] for given views (ids equal to their indices) and surface.
pub fn gradcheck_on(
    views: &[CameraView],
    surface: &AnalyticSurface,
    spec: &GradCheckSpec,
) -> Result<GradCheckReport, OptimizerError> {
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Normal};

    if views.iter().enumerate().any(|(i, v)| v.id != i) {
        return Err(OptimizerError::InvalidInput("view ids must equal their indices".into()));
    }
    let views = views.to_vec();
    let surface = surface.clone();
    let field = AnalyticDepthField::with_random_ripples(surface.clone(), views.clone(), spec.ripple, spec.seed);
    let source = DepthTransfer::new(&field);
    let sets = view_sets(&views, spec.k)?;
    let diag = bounding_diagonal(&surface_points(&surface, &views));
    if !(diag > 0.0) {
        return Err(OptimizerError::InvalidInput("surface is not visible in any view".into()));
    }
    let sigma = spec.sigma_fraction * diag;
    let normal = Normal::new(0.0, spec.offset).map_err(|e| OptimizerError::InvalidInput(e.to_string()))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);

    let mut points = Vec::with_capacity(spec.points);
    let mut pvs = Vec::with_capacity(spec.points);
    let mut attempts = 0;
    while points.len() < spec.points {
        attempts += 1;
        if attempts > 1000 * spec.points.max(1) {
            return Err(OptimizerError::InvalidInput("could not place gradient-check points".into()));
        }
        let vi = rng.gen_range(0..views.len());
        let k = views[vi].intrinsics();
        let pixel = Vector2::new(rng.gen_range(0.0..k.width as f64 - 1.0), rng.gen_range(0.0..k.height as f64 - 1.0));
        let Some((d, _)) = surface.depth_at(&views[vi], &pixel) else { continue };
        let x = views[vi].center() + views[vi].depth_direction(&pixel) * (d + normal.sample(&mut rng));
        let pv = PointViews { reference: sets[vi][0], views: sets[vi].clone() };
        // keep only points with a valid, non-degenerate term
        let probe = consistency_loss_and_grad(spec.loss, &[x], std::slice::from_ref(&pv), &source, sigma, true);
        if matches!(probe, Ok(ref lg) if lg.valid_count == 1 && lg.terms[0].residual > 0.0) {
            points.push(x);
            pvs.push(pv);
        }
    }
    let f = |pts: &[Vector3<f64>]| -> Result<(f64, Vec<Vector3<f64>>), LossError> {
        let lg = consistency_loss_and_grad(spec.loss, pts, &pvs, &source, sigma, true)?;
        Ok((lg.total, lg.terms.iter().map(|t| t.gradient).collect()))
    };
    Ok(finite_diff_check(f, &points, spec.step)?)
}

fn surface_points(surface: &AnalyticSurface, views: &[CameraView]) -> Vec<Vector3<f64>> {
    views
        .iter()
        .flat_map(|v| {
            let img = surface.depth_image(v);
            img.valid_pixels()
                .map(|(x, y, d)| {
                    let p = Vector2::new(x as f64, y as f64);
                    v.center() + v.depth_direction(&p) * d
                })
                .collect::<Vec<_>>()
        })
        .collect()
}
