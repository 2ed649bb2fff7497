//! Projective TSDF fusion of depth maps and iso-surface extraction.

mod mesh;
mod tables;

pub use mesh::{extract_mesh, mesh_chamfer, MeshError, TriangleMesh};

use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;

use crate::camera::CameraView;
use crate::depth::DepthImage;
use crate::gaussian::DepthNormalMap;

/// Truncation band in voxels.
pub const TRUNCATION_VOXELS: f64 = 4.0;
pub const WEIGHT_CAP: f64 = 64.0;

/// Regular grid of truncated signed distances. Voxel `(i, j, k)` is centred
/// at `origin + voxel_size·(i, j, k)` and stored at `i + nx·(j + ny·k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TsdfVolume {
    pub origin: Vector3<f64>,
    pub voxel_size: f64,
    pub dims: [usize; 3],
    /// Normalised distances in `[−1, 1]`, positive in front of the surface.
    pub values: Vec<f64>,
    /// Zero exactly where a voxel was never observed.
    pub weights: Vec<f64>,
    pub truncation: f64,
}

impl TsdfVolume {
    /// Panics on a non-positive voxel size or an empty grid.
    pub fn new(origin: Vector3<f64>, voxel_size: f64, dims: [usize; 3]) -> Self {
        assert!(voxel_size > 0.0, "voxel size must be positive");
        assert!(dims.iter().all(|d| *d >= 2), "grid needs at least two voxels per axis");
        let n = dims[0] * dims[1] * dims[2];
        Self {
            origin,
            voxel_size,
            dims,
            values: vec![1.0; n],
            weights: vec![0.0; n],
            truncation: TRUNCATION_VOXELS * voxel_size,
        }
    }

    /// Cubic voxels covering the box `[lo, hi]` inflated by 5 %, with
    /// `resolution` voxels along its longest side.
    pub fn for_bounds(lo: &Vector3<f64>, hi: &Vector3<f64>, resolution: usize) -> Self {
        let centre = (lo + hi) / 2.0;
        let half = (hi - lo) * 0.5 * 1.05;
        let voxel = 2.0 * half.max() / (resolution - 1) as f64;
        let dims = [0, 1, 2].map(|a| ((2.0 * half[a] / voxel).ceil() as usize + 1).clamp(2, resolution));
        let extent = Vector3::new(dims[0] as f64 - 1.0, dims[1] as f64 - 1.0, dims[2] as f64 - 1.0) * voxel;
        Self::new(centre - extent / 2.0, voxel, dims)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        self.origin + Vector3::new(i as f64, j as f64, k as f64) * self.voxel_size
    }

    /// Upper corner of the grid.
    pub fn max_corner(&self) -> Vector3<f64> {
        self.voxel_center(self.dims[0] - 1, self.dims[1] - 1, self.dims[2] - 1)
    }

    pub fn observed_count(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    /// Fill directly from a signed distance function, marking every voxel
    /// observed.
    pub fn fill_with(&mut self, sdf: impl Fn(&Vector3<f64>) -> f64 + Sync) {
        let (nx, ny) = (self.dims[0], self.dims[1]);
        let (origin, voxel, trunc) = (self.origin, self.voxel_size, self.truncation);
        self.values
            .par_iter_mut()
            .zip(self.weights.par_iter_mut())
            .enumerate()
            .for_each(|(idx, (v, w))| {
                let p = origin + Vector3::new((idx % nx) as f64, (idx / nx % ny) as f64, (idx / (nx * ny)) as f64) * voxel;
                *v = (sdf(&p) / trunc).clamp(-1.0, 1.0);
                *w = 1.0;
            });
    }
}

/// Integrate one depth map. Depth is read with inverse-depth bilinear
/// interpolation, or from the nearest texel where that is unavailable.
pub fn fuse_depth(volume: &mut TsdfVolume, view: &CameraView, depth: &DepthImage) {
    let (nx, ny) = (volume.dims[0], volume.dims[1]);
    let (origin, voxel, trunc) = (volume.origin, volume.voxel_size, volume.truncation);
    let pose = *view.pose();
    let k = view.intrinsics().matrix();
    volume
        .values
        .par_chunks_mut(nx * ny)
        .zip(volume.weights.par_chunks_mut(nx * ny))
        .enumerate()
        .for_each(|(kz, (vals, wts))| {
            for idx in 0..nx * ny {
                let p = origin + Vector3::new((idx % nx) as f64, (idx / nx) as f64, kz as f64) * voxel;
                let pc = pose.to_camera(&p);
                if pc.z <= 1e-9 {
                    continue;
                }
                let h = k * pc;
                let pixel = Vector2::new(h.x / h.z, h.y / h.z);
                let Some(d) = lookup(depth, &pixel) else { continue };
                let sd = d - pc.z;
                if sd < -trunc {
                    continue;
                }
                let s = sd.min(trunc) / trunc;
                let w = wts[idx];
                vals[idx] = (vals[idx] * w + s) / (w + 1.0);
                wts[idx] = (w + 1.0).min(WEIGHT_CAP);
            }
        });
}

fn lookup(depth: &DepthImage, pixel: &Vector2<f64>) -> Option<f64> {
    if let Some((d, _)) = depth.sample_perspective(pixel) {
        return Some(d);
    }
    let (x, y) = (pixel.x.round(), pixel.y.round());
    if x < 0.0 || y < 0.0 || x as usize >= depth.width || y as usize >= depth.height {
        return None;
    }
    depth.get(x as usize, y as usize)
}

/// Integrate a rendered depth/normal map; only its depth channel is used.
pub fn fuse_tsdf(volume: &mut TsdfVolume, view: &CameraView, map: &DepthNormalMap) {
    fuse_depth(volume, view, &map.depth);
}
