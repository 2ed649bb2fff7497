//! Multi-view DLT triangulation of a rendered surface point.
//!
//! A point `X_r` rendered from a reference view is pushed through each view's
//! projection to produce one pixel observation per view. Each observation
//! contributes the two homogeneous constraints `(u P₃ − P₁) X = 0` and
//! `(v P₃ − P₂) X = 0`; the stacked system is solved for the unit vector that
//! minimises `‖A X‖`.
//!
//! How the per-view pixels are produced is pluggable through
//! [`ObservationSource`]. [`DirectProjection`] projects `X_r` itself, which
//! makes every ray pass through `X_r`. [`DepthTransfer`] moves the observation
//! to where each neighbour's current depth estimate places the surface along
//! the reference ray, so that disagreement between views shows up as
//! inconsistent rays.

use nalgebra::{Matrix2x3, Matrix3, Matrix4, Vector2, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::camera::{backproject_pixel, CameraError, CameraView, NeighborPolicy, Observation};
use crate::depth::DepthImage;
use crate::linalg::{
    canonical_sign, min_right_singular_vector, pinv_shifted_from, LinalgError, Mat2kx4, SPECTRAL_GAP_EPS,
};

/// `|X_h[3]|` below this means the solution is a point at infinity.
pub const HOMOGENEITY_EPS: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TriangulationError {
    #[error("need at least 2 views with a valid observation, got {0}")]
    InsufficientViews(usize),
    #[error("unknown view id {0}")]
    UnknownView(usize),
    #[error("system has no input derivatives; assemble with derivatives enabled")]
    MissingDerivatives,
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub position: Vector3<f64>,
    pub view_id: usize,
    pub pixel: Vector2<f64>,
    pub depth: f64,
}

impl SurfacePoint {
    pub fn from_pixel(view: &CameraView, pixel: Vector2<f64>, depth: f64) -> Result<Self, CameraError> {
        Ok(Self {
            position: backproject_pixel(view, &pixel, depth)?,
            view_id: view.id,
            pixel,
            depth,
        })
    }
}

/// A pixel observation of the current point in some view together with its
/// derivative with respect to the point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcedObservation {
    pub observation: Observation,
    pub d_pixel: Matrix2x3<f64>,
}

pub trait ObservationSource: Sync {
    /// Observation of `x` in `view`, where `x` was rendered from `reference`.
    /// `None` drops the view from the system.
    fn observe(&self, view: &CameraView, reference: &CameraView, x: &Vector3<f64>) -> Option<SourcedObservation>;
}

/// `p'ᵢ = Pᵢ [X_r; 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectProjection;

impl ObservationSource for DirectProjection {
    fn observe(&self, view: &CameraView, _reference: &CameraView, x: &Vector3<f64>) -> Option<SourcedObservation> {
        view.project_with_jacobian(x)
            .ok()
            .map(|(observation, d_pixel)| SourcedObservation { observation, d_pixel })
    }
}

/// Depth lookups for views, indexed by view id.
pub trait DepthField: Sync {
    /// Depth and its pixel gradient at a sub-pixel location of view `view_id`.
    fn sample(&self, view_id: usize, pixel: &Vector2<f64>) -> Option<(f64, Vector2<f64>)>;
}

impl DepthField for [DepthImage] {
    fn sample(&self, view_id: usize, pixel: &Vector2<f64>) -> Option<(f64, Vector2<f64>)> {
        self.get(view_id)?.sample_bicubic(pixel)
    }
}

impl DepthField for Vec<DepthImage> {
    fn sample(&self, view_id: usize, pixel: &Vector2<f64>) -> Option<(f64, Vector2<f64>)> {
        self.as_slice().sample(view_id, pixel)
    }
}

/// Observation transfer through each neighbour's depth.
///
/// For neighbour `i`, `X_r` is projected to `p'ᵢ`, the neighbour's depth `Dᵢ`
/// is read there, and the reference ray `c_r + t (X_r − c_r)` is cut where its
/// projective depth in view `i` equals `Dᵢ`. The observation is the projection
/// of that cut point `Zᵢ`. When the neighbour agrees with `X_r`, `Zᵢ = X_r`
/// and the observation reduces to plain projection.
#[derive(Clone, Copy)]
pub struct DepthTransfer<'a, F: DepthField + ?Sized> {
    pub depths: &'a F,
    /// Drop a neighbour when `|Dᵢ − sᵢ|` exceeds this (occlusion filter).
    pub max_depth_disagreement: Option<f64>,
}

impl<'a, F: DepthField + ?Sized> DepthTransfer<'a, F> {
    pub fn new(depths: &'a F) -> Self {
        Self { depths, max_depth_disagreement: None }
    }
}

impl<F: DepthField + ?Sized> ObservationSource for DepthTransfer<'_, F> {
    fn observe(&self, view: &CameraView, reference: &CameraView, x: &Vector3<f64>) -> Option<SourcedObservation> {
        if view.id == reference.id {
            return DirectProjection.observe(view, reference, x);
        }
        let (obs, d_pix) = view.project_with_jacobian(x).ok()?;
        let (d_i, grad) = self.depths.sample(view.id, &obs.pixel)?;
        if let Some(limit) = self.max_depth_disagreement {
            if (d_i - obs.depth).abs() > limit {
                return None;
            }
        }
        let p3 = view.projection().row(2).transpose();
        let a3 = Vector3::new(p3[0], p3[1], p3[2]);
        let c = reference.center();
        let w = x - c;
        let s_c = a3.dot(&c) + p3[3];
        let den = a3.dot(&w);
        if den <= 1e-9 * w.norm() {
            return None;
        }
        let t = (d_i - s_c) / den;
        let z = c + w * t;
        let (obs_z, d_pix_z) = view.project_with_jacobian(&z).ok()?;
        // dt/dx = (∇D · ∂p'/∂x) / den − t · a3 / den
        let d_di = d_pix.transpose() * grad;
        let dt = (d_di - a3 * t) / den;
        // dZ/dx = t I + w dtᵀ
        let dz = Matrix3::identity() * t + w * dt.transpose();
        Some(SourcedObservation { observation: obs_z, d_pixel: d_pix_z * dz })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DltSystem {
    pub a: Mat2kx4,
    pub view_ids: Vec<usize>,
    pub observations: Vec<Observation>,
    /// Views dropped because no observation was available (behind camera,
    /// off-image, filtered).
    pub dropped: Vec<usize>,
    /// `∂A/∂X_r[j]` for `j = 0..3`, row-aligned with `a`.
    pub derivatives: Option<[Vec<Vector4<f64>>; 3]>,
}

fn dlt_row(coord: f64, p_coord: Vector4<f64>, p3: Vector4<f64>) -> (Vector4<f64>, f64) {
    let raw = p3 * coord - p_coord;
    let n = raw.norm();
    (raw / n, n)
}

/// DLT assembly with `p'ᵢ` from direct projection of `X_r` into every view.
pub fn assemble_dlt(point: &SurfacePoint, views: &[&CameraView]) -> Result<DltSystem, TriangulationError> {
    let reference = views
        .iter()
        .find(|v| v.id == point.view_id)
        .copied()
        .unwrap_or(views[0]);
    assemble_dlt_with(&point.position, reference, views, &DirectProjection, false)
}

/// DLT assembly with a pluggable observation source. Rows are normalised to
/// unit length. With `with_derivatives`, `∂A/∂X_r` is carried along.
pub fn assemble_dlt_with<S: ObservationSource + ?Sized>(
    x_r: &Vector3<f64>,
    reference: &CameraView,
    views: &[&CameraView],
    source: &S,
    with_derivatives: bool,
) -> Result<DltSystem, TriangulationError> {
    let mut rows = Vec::with_capacity(views.len() * 2);
    let mut drows: [Vec<Vector4<f64>>; 3] = Default::default();
    let mut view_ids = Vec::with_capacity(views.len());
    let mut observations = Vec::with_capacity(views.len());
    let mut dropped = Vec::new();

    for view in views {
        let Some(so) = source.observe(view, reference, x_r) else {
            dropped.push(view.id);
            continue;
        };
        let p = view.projection();
        let p1 = p.row(0).transpose();
        let p2 = p.row(1).transpose();
        let p3 = p.row(2).transpose();
        let (r1, n1) = dlt_row(so.observation.pixel.x, p1, p3);
        let (r2, n2) = dlt_row(so.observation.pixel.y, p2, p3);
        if !(n1 > 0.0 && n2 > 0.0) || !(n1.is_finite() && n2.is_finite()) {
            dropped.push(view.id);
            continue;
        }
        if with_derivatives {
            // d(r/‖r‖) = (I − r̂ r̂ᵀ) dr / ‖r‖ with dr = P₃ du
            let proj1 = Matrix4::identity() - r1 * r1.transpose();
            let proj2 = Matrix4::identity() - r2 * r2.transpose();
            let g1 = proj1 * p3 / n1;
            let g2 = proj2 * p3 / n2;
            for (j, d) in drows.iter_mut().enumerate() {
                d.push(g1 * so.d_pixel[(0, j)]);
                d.push(g2 * so.d_pixel[(1, j)]);
            }
        }
        rows.push(r1);
        rows.push(r2);
        view_ids.push(view.id);
        observations.push(so.observation);
    }
    if view_ids.len() < 2 {
        return Err(TriangulationError::InsufficientViews(view_ids.len()));
    }
    Ok(DltSystem {
        a: Mat2kx4::new(rows)?,
        view_ids,
        observations,
        dropped,
        derivatives: with_derivatives.then_some(drows),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusPoint {
    /// Dehomogenised consensus point; NaN when degenerate at infinity.
    pub position: Vector3<f64>,
    /// Unit-norm, sign-normalised homogeneous solution.
    pub homogeneous: Vector4<f64>,
    /// `‖A X_h‖`.
    pub residual: f64,
    pub sigma_min: f64,
    pub spectral_gap: f64,
    pub degenerate: bool,
}

fn consensus_from(h: Vector4<f64>, sigma_min: f64, spectral_gap: f64, spectral_degenerate: bool) -> ConsensusPoint {
    let at_infinity = h[3].abs() < HOMOGENEITY_EPS;
    let position = if at_infinity {
        Vector3::repeat(f64::NAN)
    } else {
        h.xyz() / h[3]
    };
    ConsensusPoint {
        position,
        homogeneous: h,
        residual: sigma_min,
        sigma_min,
        spectral_gap,
        degenerate: at_infinity || spectral_degenerate,
    }
}

pub fn solve_consensus(system: &DltSystem) -> Result<ConsensusPoint, TriangulationError> {
    let s = min_right_singular_vector(&system.a)?;
    Ok(consensus_from(s.vector, s.sigma_min, s.spectral_gap, s.degenerate_spectrum))
}

/// Consensus point plus `∂X*/∂X_r` by implicit differentiation of the minimal
/// eigenvector of `M = AᵀA`: `∂v = (λ_min I − M)⁺ (∂M) v`.
pub fn solve_consensus_with_jacobian(
    system: &DltSystem,
) -> Result<(ConsensusPoint, Matrix3<f64>), TriangulationError> {
    let derivs = system.derivatives.as_ref().ok_or(TriangulationError::MissingDerivatives)?;
    let s = min_right_singular_vector(&system.a)?;
    let cp = consensus_from(s.vector, s.sigma_min, s.spectral_gap, s.degenerate_spectrum);
    if cp.degenerate {
        return Ok((cp, Matrix3::zeros()));
    }
    let v = s.vector;
    let pinv = pinv_shifted_from(&s.eigen, s.eigen.values[0]);
    let rows = system.a.rows();
    let mut jac = Matrix3::zeros();
    for (j, drow) in derivs.iter().enumerate() {
        // (∂M) v = Σ (∂r rᵀ + r ∂rᵀ) v
        let mut dmv = Vector4::zeros();
        for (r, dr) in rows.iter().zip(drow) {
            dmv += dr * r.dot(&v) + r * dr.dot(&v);
        }
        let dv = pinv * dmv;
        let dx = (dv.xyz() - cp.position * dv[3]) / v[3];
        jac.set_column(j, &dx);
    }
    Ok((cp, jac))
}

/// Derivative-free reference solver: multi-start Nelder–Mead over the unit
/// 3-sphere in hyperspherical coordinates. Independent of the eigensolver.
pub fn triangulate_oracle(system: &DltSystem, seed: u64) -> Result<ConsensusPoint, TriangulationError> {
    const RESTARTS: usize = 64;
    let a = &system.a;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let f1 = |x: &[f64]| a.apply_norm(&sphere_point(x)).powi(2);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..RESTARTS {
        let x0: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..std::f64::consts::PI)).collect();
        let (fx, x) = nelder_mead(&f1, &x0, 0.5);
        if best.as_ref().map_or(true, |b| fx < b.0) {
            best = Some((fx, x));
        }
    }
    let (_, x) = best.expect("at least one restart");
    let v1 = canonical_sign(sphere_point(&x));
    let sigma_min = a.apply_norm(&v1);

    // second singular value: minimise over the orthogonal complement of v1
    let basis = orthonormal_complement(&v1);
    let f2 = |x: &[f64]| {
        let (s2, c2) = x[0].sin_cos();
        let (s1, c1) = x[1].sin_cos();
        let u = basis[0] * c2 + basis[1] * (s2 * c1) + basis[2] * (s2 * s1);
        a.apply_norm(&u).powi(2)
    };
    let mut best2 = f64::INFINITY;
    for _ in 0..RESTARTS / 4 {
        let x0: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..std::f64::consts::PI)).collect();
        let (fx, _) = nelder_mead(&f2, &x0, 0.5);
        best2 = best2.min(fx);
    }
    let sigma_2 = best2.max(0.0).sqrt();
    let sigma_max = system
        .a
        .rows()
        .iter()
        .map(|r| r.norm_squared())
        .sum::<f64>()
        .sqrt();
    let gap = (sigma_2 - sigma_min).max(0.0);
    // ‖A‖_F bounds σ_max from above; it only scales the threshold.
    Ok(consensus_from(v1, sigma_min, gap, gap < SPECTRAL_GAP_EPS * sigma_max))
}

fn sphere_point(x: &[f64]) -> Vector4<f64> {
    let (s0, c0) = x[0].sin_cos();
    let (s1, c1) = x[1].sin_cos();
    let (s2, c2) = x[2].sin_cos();
    Vector4::new(c0, s0 * c1, s0 * s1 * c2, s0 * s1 * s2)
}

fn orthonormal_complement(v: &Vector4<f64>) -> [Vector4<f64>; 3] {
    let mut out: Vec<Vector4<f64>> = Vec::with_capacity(3);
    for i in 0..4 {
        let mut e = Vector4::zeros();
        e[i] = 1.0;
        let mut u = e - v * v.dot(&e);
        for b in &out {
            u -= b * b.dot(&u);
        }
        if u.norm() > 1e-6 && out.len() < 3 {
            out.push(u.normalize());
        }
    }
    [out[0], out[1], out[2]]
}

/// Nelder–Mead with restarts from the incumbent until the simplex stalls.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64) -> (f64, Vec<f64>) {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut scale = step;
    for _round in 0..6 {
        let mut simplex: Vec<Vec<f64>> = vec![x.clone()];
        for i in 0..n {
            let mut p = x.clone();
            p[i] += scale;
            simplex.push(p);
        }
        let mut vals: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
        for _ in 0..2000 {
            let mut idx: Vec<usize> = (0..=n).collect();
            idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
            vals = idx.iter().map(|&i| vals[i]).collect();
            let spread = vals[n] - vals[0];
            let size = simplex[1..]
                .iter()
                .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if size < 1e-13 || (spread <= 1e-30 && size < 1e-9) {
                break;
            }
            let centroid: Vec<f64> = (0..n)
                .map(|d| simplex[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                (0..n).map(|d| centroid[d] + t * (simplex[n][d] - centroid[d])).collect()
            };
            let xr = along(-1.0);
            let fr = f(&xr);
            if fr < vals[0] {
                let xe = along(-2.0);
                let fe = f(&xe);
                if fe < fr {
                    simplex[n] = xe;
                    vals[n] = fe;
                } else {
                    simplex[n] = xr;
                    vals[n] = fr;
                }
            } else if fr < vals[n - 1] {
                simplex[n] = xr;
                vals[n] = fr;
            } else {
                let (xc, fc) = if fr < vals[n] {
                    let xc = along(-0.5);
                    let fc = f(&xc);
                    (xc, fc)
                } else {
                    let xc = along(0.5);
                    let fc = f(&xc);
                    (xc, fc)
                };
                if fc < vals[n].min(fr) {
                    simplex[n] = xc;
                    vals[n] = fc;
                } else {
                    for i in 1..=n {
                        for d in 0..n {
                            simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
                        }
                        vals[i] = f(&simplex[i]);
                    }
                }
            }
        }
        let (bi, bv) = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, v)| (i, *v))
            .unwrap();
        let improved = bv < fx;
        if bv <= fx {
            fx = bv;
            x = simplex[bi].clone();
        }
        if !improved && scale < 1e-6 {
            break;
        }
        scale = (scale * 0.1).max(1e-8);
    }
    (fx, x)
}

/// Triangulates every point against its reference view's neighbours.
///
/// Output order matches input order and does not depend on `batch_size` or
/// on how many worker threads run the chunks.
pub fn batch_triangulate<S: ObservationSource + ?Sized>(
    points: &[SurfacePoint],
    views: &[CameraView],
    policy: &NeighborPolicy,
    k: usize,
    source: &S,
    batch_size: usize,
) -> Vec<Result<ConsensusPoint, TriangulationError>> {
    let batch_size = batch_size.max(1);
    let neighbours: Vec<Result<Vec<usize>, CameraError>> =
        views.iter().map(|v| policy.select(v, views, k)).collect();
    let by_id = |id: usize| views.iter().position(|v| v.id == id);

    points
        .par_chunks(batch_size)
        .flat_map_iter(|chunk| {
            chunk.iter().map(|p| {
                let ri = by_id(p.view_id).ok_or(TriangulationError::UnknownView(p.view_id))?;
                let nb = neighbours[ri].as_ref().map_err(|e| TriangulationError::from(e.clone()))?;
                let mut set: Vec<&CameraView> = vec![&views[ri]];
                for id in nb {
                    set.push(&views[by_id(*id).ok_or(TriangulationError::UnknownView(*id))?]);
                }
                let sys = assemble_dlt_with(&p.position, &views[ri], &set, source, false)?;
                solve_consensus(&sys)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{CameraIntrinsics, CameraPose};
    use approx::assert_relative_eq;

    fn ring(n: usize, radius: f64) -> Vec<CameraView> {
        let k = CameraIntrinsics::centered(200.0, 128).unwrap();
        (0..n)
            .map(|i| {
                let a = i as f64 / n as f64 * std::f64::consts::TAU * 0.3;
                let eye = Vector3::new(radius * a.cos(), radius * a.sin(), 0.8);
                CameraView::new(i, k, CameraPose::look_at(&eye, &Vector3::zeros(), &Vector3::z()).unwrap())
            })
            .collect()
    }

    fn point_from(view: &CameraView, x: Vector3<f64>) -> SurfacePoint {
        let o = view.project(&x).unwrap();
        SurfacePoint { position: x, view_id: view.id, pixel: o.pixel, depth: o.depth }
    }

    #[test]
    fn exact_projections_reproduce_point() {
        let views = ring(3, 4.0);
        let refs: Vec<&CameraView> = views.iter().collect();
        let x = Vector3::new(0.2, -0.3, 0.1);
        let sys = assemble_dlt(&point_from(&views[0], x), &refs).unwrap();
        assert_eq!(sys.a.nrows(), 6);
        let xh = Vector4::new(x.x, x.y, x.z, 1.0).normalize();
        assert!(sys.a.apply_norm(&xh) < 1e-10);
        let cp = solve_consensus(&sys).unwrap();
        assert!(!cp.degenerate);
        assert_relative_eq!(cp.position, x, epsilon = 1e-8);
    }

    #[test]
    fn row_hand_expansion() {
        let views = ring(2, 3.0);
        let refs: Vec<&CameraView> = views.iter().collect();
        let x = Vector3::new(0.1, 0.2, 0.3);
        let sys = assemble_dlt(&point_from(&views[0], x), &refs).unwrap();
        let p = views[1].projection();
        let o = views[1].project(&x).unwrap();
        let mut expected = Vector4::zeros();
        for c in 0..4 {
            expected[c] = o.pixel.x * p[(2, c)] - p[(0, c)];
        }
        assert_relative_eq!(sys.a.rows()[2], expected.normalize(), epsilon = 1e-14);
    }

    #[test]
    fn collinear_centres_are_degenerate() {
        let k = CameraIntrinsics::centered(200.0, 128).unwrap();
        let x = Vector3::zeros();
        let views: Vec<CameraView> = [3.0, 5.0, 8.0]
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let eye = Vector3::new(0.0, -*d, 0.0);
                CameraView::new(i, k, CameraPose::look_at(&eye, &x, &Vector3::z()).unwrap())
            })
            .collect();
        let refs: Vec<&CameraView> = views.iter().collect();
        let sys = assemble_dlt(&point_from(&views[0], x), &refs).unwrap();
        assert!(solve_consensus(&sys).unwrap().degenerate);
        assert!(triangulate_oracle(&sys, 1).unwrap().degenerate);
    }

    #[test]
    fn behind_camera_views_are_dropped() {
        let mut views = ring(3, 4.0);
        let k = *views[0].intrinsics();
        views.push(CameraView::new(
            9,
            k,
            CameraPose::look_at(&Vector3::new(0.0, 0.0, 5.0), &Vector3::new(0.0, 0.0, 10.0), &Vector3::x()).unwrap(),
        ));
        let refs: Vec<&CameraView> = views.iter().collect();
        let sys = assemble_dlt(&point_from(&views[0], Vector3::zeros()), &refs).unwrap();
        assert_eq!(sys.dropped, vec![9]);
        assert_eq!(sys.a.nrows(), 6);
        let two: Vec<&CameraView> = vec![&views[0], &views[3]];
        assert_eq!(
            assemble_dlt(&point_from(&views[0], Vector3::zeros()), &two),
            Err(TriangulationError::InsufficientViews(1))
        );
    }

    #[test]
    fn oracle_agrees_on_noisy_system() {
        let views = ring(5, 4.0);
        let refs: Vec<&CameraView> = views.iter().collect();
        let x = Vector3::new(0.1, 0.0, -0.2);
        let mut sys = assemble_dlt(&point_from(&views[0], x), &refs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vector4<f64>> =
            sys.a.rows().iter().map(|r| r + Vector4::from_fn(|_, _| rng.gen_range(-1e-3..1e-3))).collect();
        sys.a = Mat2kx4::new(rows).unwrap();
        let a = solve_consensus(&sys).unwrap();
        let b = triangulate_oracle(&sys, 2).unwrap();
        assert!((a.sigma_min - b.sigma_min).abs() < 1e-5);
        assert!(a.sigma_min <= b.sigma_min + 1e-12);
        assert_relative_eq!(a.homogeneous, b.homogeneous, epsilon = 1e-4);
    }
}
