//! Robust multi-view consistency loss and its gradient.
//!
//! Every rendered surface point `X_r` is compared with the consensus point
//! `X*` triangulated from its observations in neighbouring views. The
//! per-point term is Geman–McClure on `‖X_r − X*‖²` (or plain squared
//! distance for the L2 arm). Gradients optionally flow through `X*` itself via
//! implicit differentiation of the DLT solve.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::camera::CameraView;
use crate::triangulation::{
    assemble_dlt_with, solve_consensus, solve_consensus_with_jacobian, ObservationSource, TriangulationError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("no point in the batch has a non-degenerate consensus")]
    EmptyBatch,
    #[error("invalid loss configuration: {0}")]
    InvalidConfig(String),
    #[error("points and view sets differ in length ({points} vs {views})")]
    LengthMismatch { points: usize, views: usize },
    #[error("finite-difference step {0} outside [1e-7, 1e-3]")]
    BadStep(f64),
}

/// `r² / (r² + σ²)`.
pub fn geman_mcclure(r_sq: f64, sigma: f64) -> f64 {
    r_sq / (r_sq + sigma * sigma)
}

/// `d/d(r²)` of [`geman_mcclure`]: `σ² / (r² + σ²)²`.
pub fn geman_mcclure_derivative(r_sq: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let d = r_sq + s2;
    s2 / (d * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    GemanMcClure,
    L2,
}

impl LossKind {
    /// Loss and its derivative with respect to `r²`.
    pub fn eval(self, r_sq: f64, sigma: f64) -> (f64, f64) {
        match self {
            LossKind::GemanMcClure => (geman_mcclure(r_sq, sigma), geman_mcclure_derivative(r_sq, sigma)),
            LossKind::L2 => (r_sq, 1.0),
        }
    }

    /// Second derivative in `r` at `r = 0`.
    pub fn curvature_at_zero(self, sigma: f64) -> f64 {
        match self {
            LossKind::GemanMcClure => 2.0 / (sigma * sigma),
            LossKind::L2 => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustLossConfig {
    pub sigma0: f64,
    pub sigma_end: f64,
    pub total_iterations: usize,
    pub warmup_iterations: usize,
}

impl RobustLossConfig {
    pub fn new(
        sigma0: f64,
        sigma_end: f64,
        total_iterations: usize,
        warmup_iterations: usize,
    ) -> Result<Self, LossError> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) || !(sigma_end > 0.0 && sigma_end.is_finite()) {
            return Err(LossError::InvalidConfig(format!("sigma0={sigma0}, sigma_end={sigma_end} must be positive")));
        }
        if sigma_end > sigma0 {
            return Err(LossError::InvalidConfig(format!("sigma_end {sigma_end} exceeds sigma0 {sigma0}")));
        }
        if warmup_iterations >= total_iterations {
            return Err(LossError::InvalidConfig(format!(
                "warmup {warmup_iterations} must be below total {total_iterations}"
            )));
        }
        Ok(Self { sigma0, sigma_end, total_iterations, warmup_iterations })
    }

    /// 5% and 0.1% of the scene bounding-box diagonal.
    pub fn for_scene(diagonal: f64, total_iterations: usize, warmup_iterations: usize) -> Result<Self, LossError> {
        Self::new(0.05 * diagonal, 0.001 * diagonal, total_iterations, warmup_iterations)
    }
}

/// Constant `sigma0` through warm-up, then exponential decay to `sigma_end`
/// at `total_iterations`.
pub fn sigma_schedule(config: &RobustLossConfig, iteration: usize) -> f64 {
    let RobustLossConfig { sigma0, sigma_end, total_iterations, warmup_iterations } = *config;
    if iteration <= warmup_iterations {
        return sigma0;
    }
    let t = iteration.min(total_iterations);
    let frac = (t - warmup_iterations) as f64 / (total_iterations - warmup_iterations) as f64;
    if t == total_iterations {
        return sigma_end;
    }
    sigma0 * (sigma_end / sigma0).powf(frac)
}

/// Reference view and the views (reference included) a point is triangulated from.
#[derive(Debug, Clone)]
pub struct PointViews<'a> {
    pub reference: &'a CameraView,
    pub views: Vec<&'a CameraView>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTerm {
    pub loss: f64,
    pub gradient: Vector3<f64>,
    /// `‖X_r − X*‖`; NaN when the point was skipped.
    pub residual: f64,
    pub valid: bool,
}

impl PointTerm {
    fn skipped() -> Self {
        Self { loss: 0.0, gradient: Vector3::zeros(), residual: f64::NAN, valid: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossAndGradient {
    /// Sum over valid points.
    pub total: f64,
    pub valid_count: usize,
    pub terms: Vec<PointTerm>,
}

impl LossAndGradient {
    /// Average over valid points.
    pub fn mean(&self) -> f64 {
        self.total / self.valid_count as f64
    }
}

fn point_term<S: ObservationSource + ?Sized>(
    kind: LossKind,
    x_r: &Vector3<f64>,
    pv: &PointViews<'_>,
    source: &S,
    sigma: f64,
    differentiate_consensus: bool,
) -> Result<PointTerm, TriangulationError> {
    let sys = assemble_dlt_with(x_r, pv.reference, &pv.views, source, differentiate_consensus)?;
    let (cp, jac) = if differentiate_consensus {
        solve_consensus_with_jacobian(&sys)?
    } else {
        (solve_consensus(&sys)?, Matrix3::zeros())
    };
    if cp.degenerate {
        return Ok(PointTerm::skipped());
    }
    let e = x_r - cp.position;
    let r_sq = e.norm_squared();
    let (loss, dl) = kind.eval(r_sq, sigma);
    let gradient = (Matrix3::identity() - jac).transpose() * e * (2.0 * dl);
    if !(loss.is_finite() && gradient.iter().all(|g| g.is_finite())) {
        return Ok(PointTerm::skipped());
    }
    Ok(PointTerm { loss, gradient, residual: r_sq.sqrt(), valid: true })
}

/// Per-point consistency loss and gradient with respect to each `X_r`.
/// Points whose system cannot be assembled or whose consensus is degenerate
/// contribute zero.
pub fn consistency_loss_and_grad<S: ObservationSource + ?Sized>(
    kind: LossKind,
    points: &[Vector3<f64>],
    views: &[PointViews<'_>],
    source: &S,
    sigma: f64,
    differentiate_consensus: bool,
) -> Result<LossAndGradient, LossError> {
    if points.len() != views.len() {
        return Err(LossError::LengthMismatch { points: points.len(), views: views.len() });
    }
    if kind == LossKind::GemanMcClure && !(sigma > 0.0) {
        return Err(LossError::InvalidConfig(format!("sigma must be positive, got {sigma}")));
    }
    let terms: Vec<PointTerm> = points
        .par_iter()
        .zip(views.par_iter())
        .map(|(x, pv)| {
            point_term(kind, x, pv, source, sigma, differentiate_consensus).unwrap_or_else(|_| PointTerm::skipped())
        })
        .collect();
    let valid_count = terms.iter().filter(|t| t.valid).count();
    if valid_count == 0 {
        return Err(LossError::EmptyBatch);
    }
    let total = terms.iter().map(|t| t.loss).sum();
    Ok(LossAndGradient { total, valid_count, terms })
}

pub fn tggc_loss_and_grad<S: ObservationSource + ?Sized>(
    points: &[Vector3<f64>],
    views: &[PointViews<'_>],
    source: &S,
    sigma: f64,
    differentiate_consensus: bool,
) -> Result<LossAndGradient, LossError> {
    consistency_loss_and_grad(LossKind::GemanMcClure, points, views, source, sigma, differentiate_consensus)
}

pub fn l2_loss_and_grad<S: ObservationSource + ?Sized>(
    points: &[Vector3<f64>],
    views: &[PointViews<'_>],
    source: &S,
    differentiate_consensus: bool,
) -> Result<LossAndGradient, LossError> {
    consistency_loss_and_grad(LossKind::L2, points, views, source, 1.0, differentiate_consensus)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckEntry {
    pub point: usize,
    pub coord: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_relative_error: f64,
}

/// Central-difference check of an analytic gradient.
///
/// `f` returns the scalar loss and its gradient for every point. The error of
/// a coordinate is `|a − n| / max(‖g_a‖∞, ‖g_n‖∞, 1e-8)`, taken against the
/// largest component of that point's gradient so that near-zero components
/// are not judged by their own vanishing magnitude.
pub fn finite_diff_check<E>(
    f: impl Fn(&[Vector3<f64>]) -> Result<(f64, Vec<Vector3<f64>>), E>,
    points: &[Vector3<f64>],
    step: f64,
) -> Result<GradCheckReport, E>
where
    E: From<LossError>,
{
    if !(1e-7..=1e-3).contains(&step) {
        return Err(LossError::BadStep(step).into());
    }
    let (_, analytic) = f(points)?;
    let mut entries = Vec::with_capacity(points.len() * 3);
    let mut work = points.to_vec();
    for i in 0..points.len() {
        let mut numeric = Vector3::zeros();
        for c in 0..3 {
            let x0 = work[i][c];
            work[i][c] = x0 + step;
            let (fp, _) = f(&work)?;
            work[i][c] = x0 - step;
            let (fm, _) = f(&work)?;
            work[i][c] = x0;
            numeric[c] = (fp - fm) / (2.0 * step);
        }
        let scale = analytic[i].amax().max(numeric.amax()).max(1e-8);
        for c in 0..3 {
            let (a, n) = (analytic[i][c], numeric[c]);
            entries.push(GradCheckEntry { point: i, coord: c, analytic: a, numeric: n, relative_error: (a - n).abs() / scale });
        }
    }
    let max_relative_error = entries.iter().map(|e| e.relative_error).fold(0.0, f64::max);
    Ok(GradCheckReport { entries, max_relative_error })
}
