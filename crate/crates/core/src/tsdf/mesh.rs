use std::collections::HashMap;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::tables::{EDGE_TABLE, TRIANGLE_TABLE};
use super::TsdfVolume;
use crate::optimizer::metrics::NearestIndex;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("reference point set is empty")]
    EmptyReference,
    #[error("sample count must be positive")]
    NoSamples,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_area(&self, t: &[u32; 3]) -> f64 {
        let [a, b, c] = t.map(|i| self.vertices[i as usize]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        self.triangles.iter().map(|t| self.triangle_area(t)).sum()
    }

    /// Undirected edges that are not shared by exactly two triangles.
    pub fn boundary_edges(&self) -> Vec<([u32; 2], usize)> {
        let mut count: HashMap<[u32; 2], usize> = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *count.entry([a.min(b), a.max(b)]).or_default() += 1;
            }
        }
        let mut bad: Vec<_> = count.into_iter().filter(|(_, c)| *c != 2).collect();
        bad.sort_unstable();
        bad
    }

    /// Every edge borders exactly two triangles.
    pub fn is_closed(&self) -> bool {
        !self.is_empty() && self.boundary_edges().is_empty()
    }

    /// `n` points drawn uniformly by area.
    pub fn sample_points(&self, n: usize, seed: u64) -> Vec<Vector3<f64>> {
        let mut cumulative = Vec::with_capacity(self.triangles.len());
        let mut total = 0.0;
        for t in &self.triangles {
            total += self.triangle_area(t);
            cumulative.push(total);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let r = rng.gen::<f64>() * total;
                let ti = cumulative.partition_point(|c| *c <= r).min(self.triangles.len() - 1);
                let [a, b, c] = self.triangles[ti].map(|i| self.vertices[i as usize]);
                let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                a + (b - a) * u + (c - a) * v
            })
            .collect()
    }
}

const CORNERS: [[usize; 3]; 8] =
    [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]];
const EDGES: [[usize; 2]; 12] =
    [[0, 1], [1, 2], [2, 3], [3, 0], [4, 5], [5, 6], [6, 7], [7, 4], [0, 4], [1, 5], [2, 6], [3, 7]];

/// Marching cubes on the zero level set. Only cells whose eight corners are
/// all observed are polygonised. Vertices are shared between neighbouring
/// cells, so a watertight level set gives a closed mesh.
pub fn extract_mesh(volume: &TsdfVolume) -> TriangleMesh {
    let [nx, ny, nz] = volume.dims;
    let mut mesh = TriangleMesh::default();
    let mut edge_vertex: HashMap<(usize, usize), u32> = HashMap::new();
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let ids = CORNERS.map(|c| volume.index(i + c[0], j + c[1], k + c[2]));
                if ids.iter().any(|&id| volume.weights[id] <= 0.0) {
                    continue;
                }
                let mut case = 0usize;
                for (b, &id) in ids.iter().enumerate() {
                    if volume.values[id] < 0.0 {
                        case |= 1 << b;
                    }
                }
                if EDGE_TABLE[case] == 0 {
                    continue;
                }
                let mut vert = [u32::MAX; 12];
                for (e, [a, b]) in EDGES.iter().enumerate() {
                    if EDGE_TABLE[case] & (1 << e) == 0 {
                        continue;
                    }
                    let key = (ids[*a].min(ids[*b]), ids[*a].max(ids[*b]));
                    vert[e] = *edge_vertex.entry(key).or_insert_with(|| {
                        let (va, vb) = (volume.values[ids[*a]], volume.values[ids[*b]]);
                        // keep vertices off the corners so shared corners never
                        // collapse a triangle
                        let t = (va / (va - vb)).clamp(1e-6, 1.0 - 1e-6);
                        let pa = volume.voxel_center(i + CORNERS[*a][0], j + CORNERS[*a][1], k + CORNERS[*a][2]);
                        let pb = volume.voxel_center(i + CORNERS[*b][0], j + CORNERS[*b][1], k + CORNERS[*b][2]);
                        mesh.vertices.push(pa + (pb - pa) * t);
                        (mesh.vertices.len() - 1) as u32
                    });
                }
                for tri in TRIANGLE_TABLE[case].chunks(3).take_while(|t| t[0] >= 0) {
                    mesh.triangles.push([vert[tri[0] as usize], vert[tri[1] as usize], vert[tri[2] as usize]]);
                }
            }
        }
    }
    mesh
}

/// Symmetric chamfer between `samples` area-weighted mesh samples and the
/// reference set: the mean of the two directed mean distances.
pub fn mesh_chamfer(mesh: &TriangleMesh, reference: &[Vector3<f64>], samples: usize) -> Result<f64, MeshError> {
    if mesh.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    if reference.is_empty() {
        return Err(MeshError::EmptyReference);
    }
    if samples == 0 {
        return Err(MeshError::NoSamples);
    }
    let pts = mesh.sample_points(samples, 0);
    let pi = NearestIndex::new(&pts);
    let ri = NearestIndex::new(reference);
    let a = pts.iter().map(|p| ri.nearest_distance(p)).sum::<f64>() / pts.len() as f64;
    let b = reference.iter().map(|p| pi.nearest_distance(p)).sum::<f64>() / reference.len() as f64;
    Ok(0.5 * (a + b))
}
