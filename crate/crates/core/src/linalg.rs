//! Fixed-size linear algebra for the triangulation path.
//!
//! Everything here works on 4-column systems: the symmetric 4×4 Gram matrix
//! `AᵀA` is diagonalised with cyclic Jacobi rotations, and the minimal right
//! singular vector of `A` is read off its smallest eigenpair.

use nalgebra::{Matrix4, Vector4};
use thiserror::Error;

/// Default relative threshold below which the two smallest singular values
/// are considered indistinguishable.
pub const SPECTRAL_GAP_EPS: f64 = 1e-9;

const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 50;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("system needs an even number of rows >= {min}, got {got}")]
    BadShape { min: usize, got: usize },
}

/// A stacked `2(k+1) × 4` constraint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat2kx4 {
    rows: Vec<Vector4<f64>>,
}

impl Mat2kx4 {
    pub fn new(rows: Vec<Vector4<f64>>) -> Result<Self, LinalgError> {
        if rows.len() < 2 || rows.len() % 2 != 0 {
            return Err(LinalgError::BadShape { min: 2, got: rows.len() });
        }
        if rows.iter().any(|r| r.iter().any(|x| !x.is_finite())) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vector4<f64>] {
        &self.rows
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// `AᵀA`.
    pub fn gram(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for r in &self.rows {
            m += r * r.transpose();
        }
        m
    }

    /// `‖A x‖₂`.
    pub fn apply_norm(&self, x: &Vector4<f64>) -> f64 {
        self.rows.iter().map(|r| r.dot(x).powi(2)).sum::<f64>().sqrt()
    }
}

/// Eigendecomposition of a symmetric 4×4 matrix, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen4 {
    pub values: [f64; 4],
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: Matrix4<f64>,
}

impl SymEigen4 {
    pub fn vector(&self, i: usize) -> Vector4<f64> {
        self.vectors.column(i).into_owned()
    }

    pub fn reconstruct(&self) -> Matrix4<f64> {
        let d = Matrix4::from_diagonal(&Vector4::from(self.values));
        self.vectors * d * self.vectors.transpose()
    }
}

fn off_diagonal_norm(a: &Matrix4<f64>) -> f64 {
    let mut s = 0.0;
    for p in 0..4 {
        for q in 0..4 {
            if p != q {
                s += a[(p, q)] * a[(p, q)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver.
pub fn symmetric_eigen_4x4(m: &Matrix4<f64>) -> Result<SymEigen4, LinalgError> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let scale = m.norm();
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * scale.max(1.0) {
        return Err(LinalgError::NotSymmetric(asym));
    }
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = Matrix4::<f64>::identity();
    let target = JACOBI_TOL * scale.max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- Jᵀ A J for the (p, q) plane rotation.
                for k in 0..4 {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..4 {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let mut values = [0.0; 4];
    let mut vectors = Matrix4::zeros();
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = a[(src, src)];
        let col = v.column(src).normalize();
        vectors.set_column(dst, &col);
    }
    Ok(SymEigen4 { values, vectors })
}

/// Flip `v` so that its last component with magnitude above 1e-12 is positive.
pub fn canonical_sign(v: Vector4<f64>) -> Vector4<f64> {
    for i in (0..4).rev() {
        if v[i].abs() > 1e-12 {
            return if v[i] < 0.0 { -v } else { v };
        }
    }
    v
}

/// Result of the minimal right singular vector solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MinSingular {
    /// Unit vector minimising `‖A v‖`, sign-normalised.
    pub vector: Vector4<f64>,
    pub sigma_min: f64,
    /// Second-smallest singular value minus the smallest.
    pub spectral_gap: f64,
    pub sigma_max: f64,
    /// Eigenpairs of `AᵀA`, kept for implicit differentiation.
    pub gram: Matrix4<f64>,
    pub eigen: SymEigen4,
    /// `spectral_gap < eps · sigma_max`.
    pub degenerate_spectrum: bool,
}

pub fn min_right_singular_vector(a: &Mat2kx4) -> Result<MinSingular, LinalgError> {
    min_right_singular_vector_with_eps(a, SPECTRAL_GAP_EPS)
}

pub fn min_right_singular_vector_with_eps(
    a: &Mat2kx4,
    gap_eps: f64,
) -> Result<MinSingular, LinalgError> {
    if a.nrows() < 4 {
        return Err(LinalgError::BadShape { min: 4, got: a.nrows() });
    }
    let gram = a.gram();
    let eigen = symmetric_eigen_4x4(&gram)?;
    let vector = canonical_sign(eigen.vector(0));
    // Singular values from ‖A vᵢ‖ rather than sqrt(λᵢ): the square root of a
    // round-off sized eigenvalue would put a sqrt(eps) floor under the gap.
    let sigma_min = a.apply_norm(&vector);
    let sigma_2 = a.apply_norm(&eigen.vector(1));
    let sigma_max = a.apply_norm(&eigen.vector(3));
    let spectral_gap = (sigma_2 - sigma_min).max(0.0);
    let degenerate_spectrum = spectral_gap < gap_eps * sigma_max.max(f64::MIN_POSITIVE);
    Ok(MinSingular {
        vector,
        sigma_min,
        spectral_gap,
        sigma_max,
        gram,
        eigen,
        degenerate_spectrum,
    })
}

/// Moore–Penrose pseudo-inverse of `(λI − M)` through the eigenbasis of `M`.
///
/// Components with `|λ − λᵢ|` below `1e-12 · max|λⱼ|` are zeroed.
pub fn pinv_shifted(m: &Matrix4<f64>, lambda: f64) -> Result<Matrix4<f64>, LinalgError> {
    let eig = symmetric_eigen_4x4(m)?;
    Ok(pinv_shifted_from(&eig, lambda))
}

pub fn pinv_shifted_from(eig: &SymEigen4, lambda: f64) -> Matrix4<f64> {
    let scale = eig
        .values
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
        .max(lambda.abs())
        .max(f64::MIN_POSITIVE);
    let eps = 1e-12 * scale;
    let mut out = Matrix4::zeros();
    for i in 0..4 {
        let d = lambda - eig.values[i];
        if d.abs() > eps {
            let v = eig.vector(i);
            out += v * v.transpose() / d;
        }
    }
    out
}
