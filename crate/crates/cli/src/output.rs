//! Artifact files. Names are `{command}_{seed}[_{suffix}].{ext}` inside the
//! output directory, and nothing is overwritten without `--force`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::Serialize;

use triags_core::{DepthNormalMap, TriangleMesh, TsdfVolume};

use crate::CliError;

pub struct OutputSet {
    dir: PathBuf,
    stem: String,
    force: bool,
    written: Vec<PathBuf>,
}

impl OutputSet {
    pub fn new(dir: &Path, command: &str, seed: u64, force: bool) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), stem: format!("{command}_{seed}"), force, written: Vec::new() })
    }

    pub fn path(&self, suffix: &str, ext: &str) -> PathBuf {
        let name = if suffix.is_empty() {
            format!("{}.{ext}", self.stem)
        } else {
            format!("{}_{suffix}.{ext}", self.stem)
        };
        self.dir.join(name)
    }

    /// Refuse up front if any of the planned files exists.
    pub fn guard(&self, planned: &[(&str, &str)]) -> Result<(), CliError> {
        if self.force {
            return Ok(());
        }
        for (suffix, ext) in planned {
            let p = self.path(suffix, ext);
            if p.exists() {
                return Err(CliError::Exists(p));
            }
        }
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write_bytes(&mut self, suffix: &str, ext: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let p = self.path(suffix, ext);
        if p.exists() && !self.force {
            return Err(CliError::Exists(p));
        }
        write_atomic(&p, bytes)?;
        self.written.push(p.clone());
        Ok(p)
    }

    pub fn csv(&mut self, suffix: &str, table: &Csv) -> Result<PathBuf, CliError> {
        self.write_bytes(suffix, "csv", table.render().as_bytes())
    }

    pub fn text(&mut self, suffix: &str, ext: &str, text: &str) -> Result<PathBuf, CliError> {
        self.write_bytes(suffix, ext, text.as_bytes())
    }

    pub fn binary(&mut self, suffix: &str, ext: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        self.write_bytes(suffix, ext, bytes)
    }

    pub fn json<T: Serialize>(&mut self, suffix: &str, ext: &str, value: &T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value).expect("artifact serialises") + "\n";
        self.write_bytes(suffix, ext, text.as_bytes())
    }
}

/// Write through a temporary sibling and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Minimal CSV table; numbers are written with Rust's shortest round-trip
/// formatting so bodies are reproducible bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Cell formatting shorthand.
pub fn f(v: f64) -> String {
    format!("{v:?}")
}

pub fn ply_points(points: &[Vector3<f64>]) -> String {
    let mut s = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
        points.len()
    );
    for p in points {
        let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    s
}

pub fn ply_mesh(mesh: &TriangleMesh) -> String {
    let mut s = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n\
         element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.triangles.len()
    );
    for p in &mesh.vertices {
        let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

pub fn obj_mesh(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for p in &mesh.vertices {
        let _ = writeln!(s, "v {:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

/// Depth/normal maps of all views: per view a little-endian `u32` header
/// `(width, height, channels)` followed by `f32` pixels in row-major order
/// with channels `(depth, nx, ny, nz, opacity)` interleaved. Invalid pixels
/// hold depth 0 and a zero normal.
pub fn depth_maps_binary(maps: &[DepthNormalMap]) -> Vec<u8> {
    let mut out = Vec::new();
    for m in maps {
        let (w, h) = (m.width(), m.height());
        for v in [w as u32, h as u32, 5] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for y in 0..h {
            for x in 0..w {
                let d = m.depth.get(x, y).unwrap_or(0.0);
                let n = m.normal(x, y).unwrap_or_else(Vector3::zeros);
                let a = m.opacity[m.depth.index(x, y)];
                for v in [d, n.x, n.y, n.z, a] {
                    out.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
        }
    }
    out
}

/// Read back [`depth_maps_binary`] as `(width, height, channels, data)` per view.
pub fn read_depth_maps(bytes: &[u8]) -> Result<Vec<(usize, usize, usize, Vec<f32>)>, String> {
    let mut out = Vec::new();
    let mut at = 0;
    let u32_at = |i: usize| -> Result<u32, String> {
        bytes.get(i..i + 4).map(|b| u32::from_le_bytes(b.try_into().unwrap())).ok_or_else(|| "truncated header".to_string())
    };
    while at < bytes.len() {
        let (w, h, c) = (u32_at(at)? as usize, u32_at(at + 4)? as usize, u32_at(at + 8)? as usize);
        at += 12;
        let n = w * h * c;
        let body = bytes.get(at..at + 4 * n).ok_or("truncated body")?;
        let data = body.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        out.push((w, h, c, data));
        at += 4 * n;
    }
    Ok(out)
}

pub fn tsdf_binary(volume: &TsdfVolume) -> Vec<u8> {
    let mut out = Vec::with_capacity(volume.len() * 4);
    for v in &volume.values {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

#[derive(Debug, Serialize)]
pub struct TsdfSidecar {
    pub origin: [f64; 3],
    pub voxel_size: f64,
    pub dims: [usize; 3],
    pub truncation: f64,
    /// Index of voxel `(i, j, k)` is `i + nx·(j + ny·k)`; values are `f32` LE
    /// in `[−1, 1]`, 1 where unobserved.
    pub layout: &'static str,
}

impl TsdfSidecar {
    pub fn of(v: &TsdfVolume) -> Self {
        Self {
            origin: [v.origin.x, v.origin.y, v.origin.z],
            voxel_size: v.voxel_size,
            dims: v.dims,
            truncation: v.truncation,
            layout: "x-fastest f32le",
        }
    }
}
