//! Point-set accuracy metrics.

use std::collections::HashMap;

use nalgebra::Vector3;
use rayon::prelude::*;

use super::OptimizerError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryMetrics {
    /// RMS per-pixel distance to the true surface point on the same ray.
    /// NaN when evaluated on bare point sets.
    pub rmse: f64,
    /// Mean of the two directed nearest-neighbour means.
    pub chamfer: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Exact nearest-neighbour queries over a uniform hash grid.
pub struct NearestIndex<'a> {
    points: &'a [Vector3<f64>],
    cell: f64,
    grid: HashMap<[i64; 3], Vec<usize>>,
    lo: [i64; 3],
    hi: [i64; 3],
}

impl<'a> NearestIndex<'a> {
    pub fn new(points: &'a [Vector3<f64>]) -> Self {
        let diag = super::scene::bounding_diagonal(points);
        // about two points per occupied cell on a surface-like set
        let cell = if diag > 0.0 { diag / (points.len() as f64 / 2.0).sqrt().max(1.0) } else { 1.0 };
        let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for (i, p) in points.iter().enumerate() {
            let key = Self::key_of(p, cell);
            for d in 0..3 {
                lo[d] = lo[d].min(key[d]);
                hi[d] = hi[d].max(key[d]);
            }
            grid.entry(key).or_default().push(i);
        }
        Self { points, cell, grid, lo, hi }
    }

    fn key_of(p: &Vector3<f64>, cell: f64) -> [i64; 3] {
        [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64]
    }

    /// Distance from `q` to the closest indexed point.
    pub fn nearest_distance(&self, q: &Vector3<f64>) -> f64 {
        let c = Self::key_of(q, self.cell);
        let mut best = f64::INFINITY;
        let max_ring = (0..3)
            .map(|d| (c[d] - self.lo[d]).abs().max((self.hi[d] - c[d]).abs()))
            .max()
            .unwrap_or(0);
        for r in 0..=max_ring {
            // every cell in ring r is at least (r−1)·cell away
            if best.is_finite() && (r as f64 - 1.0) * self.cell > best {
                break;
            }
            for dx in -r..=r {
                for dy in -r..=r {
                    for dz in -r..=r {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                            continue;
                        }
                        if let Some(ids) = self.grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                            for &i in ids {
                                best = best.min((self.points[i] - q).norm());
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

fn directed(from: &[Vector3<f64>], to: &NearestIndex<'_>) -> Vec<f64> {
    from.par_iter().map(|p| to.nearest_distance(p)).collect()
}

/// Chamfer and F1 at threshold `tau` between a predicted and a reference set.
pub fn eval_metrics(
    predicted: &[Vector3<f64>],
    reference: &[Vector3<f64>],
    tau: f64,
) -> Result<GeometryMetrics, OptimizerError> {
    if predicted.is_empty() || reference.is_empty() {
        return Err(OptimizerError::InvalidInput("metric point sets must be non-empty".into()));
    }
    if !(tau > 0.0) {
        return Err(OptimizerError::InvalidInput(format!("tau must be positive, got {tau}")));
    }
    let pi = NearestIndex::new(predicted);
    let ri = NearestIndex::new(reference);
    let d_pr = directed(predicted, &ri);
    let d_rp = directed(reference, &pi);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let chamfer = 0.5 * (mean(&d_pr) + mean(&d_rp));
    let precision = d_pr.iter().filter(|d| **d < tau).count() as f64 / d_pr.len() as f64;
    let recall = d_rp.iter().filter(|d| **d < tau).count() as f64 / d_rp.len() as f64;
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    Ok(GeometryMetrics { rmse: f64::NAN, chamfer, f1, precision, recall })
}
