//! Pinhole cameras in the world-to-camera convention (`x_cam = R x + t`).
//!
//! Camera frame: x right, y down, z forward. Pixel `(i, j)` has its centre at
//! the integer coordinate `(i, j)`.

use nalgebra::{Matrix2x3, Matrix3, Matrix3x4, Vector2, Vector3, Vector4};
use thiserror::Error;

/// Projective depths at or below this are treated as behind the camera.
pub const DEPTH_EPS: f64 = 1e-6;

const ROTATION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("point is behind the camera (projective depth {0})")]
    BehindCamera(f64),
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("need {needed} eligible neighbour views, found {found}")]
    InsufficientViews { needed: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, CameraError> {
        let all = [fx, fy, cx, cy];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(CameraError::InvalidIntrinsics("non-finite value".into()));
        }
        if fx <= 0.0 || fy <= 0.0 {
            return Err(CameraError::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={fx}, fy={fy})"
            )));
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(CameraError::InvalidIntrinsics(format!(
                "principal point ({cx}, {cy}) outside {width}x{height}"
            )));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }

    /// Square image with the principal point at the centre.
    pub fn centered(focal: f64, size: usize) -> Result<Self, CameraError> {
        let c = (size as f64 - 1.0) / 2.0;
        Self::new(focal, focal, c, c, size, size)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// `K⁻¹ [u, v, 1]ᵀ`.
    pub fn unproject(&self, pixel: &Vector2<f64>) -> Vector3<f64> {
        Vector3::new((pixel.x - self.cx) / self.fx, (pixel.y - self.cy) / self.fy, 1.0)
    }

    pub fn contains(&self, pixel: &Vector2<f64>) -> bool {
        pixel.x >= -0.5
            && pixel.y >= -0.5
            && pixel.x < self.width as f64 - 0.5
            && pixel.y < self.height as f64 - 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl CameraPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, CameraError> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(CameraError::InvalidPose("non-finite value".into()));
        }
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if ortho > ROTATION_TOL {
            return Err(CameraError::InvalidPose(format!(
                "rotation not orthonormal (|RᵀR - I| = {ortho:e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(CameraError::InvalidPose(format!("det(R) = {det}")));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// Camera at `eye` looking at `target`; `up` fixes the roll (image y points away from it).
    pub fn look_at(
        eye: &Vector3<f64>,
        target: &Vector3<f64>,
        up: &Vector3<f64>,
    ) -> Result<Self, CameraError> {
        let z = (target - eye).normalize();
        let x = z.cross(up);
        if x.norm() < 1e-9 {
            return Err(CameraError::InvalidPose("up vector parallel to view direction".into()));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        // Re-orthonormalise through the constructor check.
        Self::new(rotation, -(rotation * eye))
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Camera centre in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Principal axis in world coordinates.
    pub fn optical_axis(&self) -> Vector3<f64> {
        self.rotation.row(2).transpose()
    }

    pub fn to_camera(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * x + self.translation
    }

    pub fn to_world(&self, x_cam: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (x_cam - self.translation)
    }

    /// Pre-compose with a rigid world transform `x ↦ g_rot x + g_trans`.
    pub fn transformed(&self, g_rot: &Matrix3<f64>, g_trans: &Vector3<f64>) -> Result<Self, CameraError> {
        let rotation = self.rotation * g_rot.transpose();
        let translation = self.translation - rotation * g_trans;
        Self::new(rotation, translation)
    }

    /// Row-major `[R | t]`.
    pub fn to_row_major(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 4 + c] = self.rotation[(r, c)];
            }
            out[r * 4 + 3] = self.translation[r];
        }
        out
    }

    pub fn from_row_major(m: &[f64; 12]) -> Result<Self, CameraError> {
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let translation = Vector3::new(m[3], m[7], m[11]);
        Self::new(rotation, translation)
    }
}

/// A pixel observation `s · [u, v, 1]ᵀ = P [X; 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub pixel: Vector2<f64>,
    /// Unnormalised projective depth `s`.
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vector3<f64>,
    pub direction: Vector3<f64>,
}

impl Ray {
    pub fn new(origin: Vector3<f64>, direction: Vector3<f64>) -> Self {
        Self { origin, direction: direction.normalize() }
    }

    pub fn at(&self, t: f64) -> Vector3<f64> {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraView {
    pub id: usize,
    intrinsics: CameraIntrinsics,
    pose: CameraPose,
    projection: Matrix3x4<f64>,
}

impl CameraView {
    pub fn new(id: usize, intrinsics: CameraIntrinsics, pose: CameraPose) -> Self {
        let projection = projection_matrix(&intrinsics, &pose);
        Self { id, intrinsics, pose, projection }
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intrinsics
    }

    pub fn pose(&self) -> &CameraPose {
        &self.pose
    }

    pub fn projection(&self) -> &Matrix3x4<f64> {
        &self.projection
    }

    pub fn center(&self) -> Vector3<f64> {
        self.pose.center()
    }

    /// Projects `x` and returns the pixel, projective depth, and `∂(u, v)/∂x`.
    pub fn project_with_jacobian(
        &self,
        x: &Vector3<f64>,
    ) -> Result<(Observation, Matrix2x3<f64>), CameraError> {
        let obs = self.project(x)?;
        let p = &self.projection;
        let s = obs.depth;
        let mut jac = Matrix2x3::zeros();
        for c in 0..3 {
            jac[(0, c)] = (p[(0, c)] - obs.pixel.x * p[(2, c)]) / s;
            jac[(1, c)] = (p[(1, c)] - obs.pixel.y * p[(2, c)]) / s;
        }
        Ok((obs, jac))
    }

    pub fn project(&self, x: &Vector3<f64>) -> Result<Observation, CameraError> {
        project_point(self, x)
    }

    /// Unit-norm viewing ray through `pixel`, in world coordinates.
    pub fn ray_through(&self, pixel: &Vector2<f64>) -> Ray {
        let dir_cam = self.intrinsics.unproject(pixel);
        Ray::new(self.center(), self.pose.rotation.transpose() * dir_cam)
    }

    /// `∂X/∂d` for `X = backproject(pixel, d)`: the ray direction scaled to unit depth.
    pub fn depth_direction(&self, pixel: &Vector2<f64>) -> Vector3<f64> {
        self.pose.rotation.transpose() * self.intrinsics.unproject(pixel)
    }

    pub fn transformed(&self, g_rot: &Matrix3<f64>, g_trans: &Vector3<f64>) -> Result<Self, CameraError> {
        Ok(Self::new(self.id, self.intrinsics, self.pose.transformed(g_rot, g_trans)?))
    }
}

/// `P = K [R | t]`.
pub fn projection_matrix(intrinsics: &CameraIntrinsics, pose: &CameraPose) -> Matrix3x4<f64> {
    let mut rt = Matrix3x4::zeros();
    rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&pose.rotation);
    rt.set_column(3, &pose.translation);
    intrinsics.matrix() * rt
}

pub fn project_point(view: &CameraView, x: &Vector3<f64>) -> Result<Observation, CameraError> {
    let h = view.projection * Vector4::new(x.x, x.y, x.z, 1.0);
    let s = h.z;
    if !(s > DEPTH_EPS) {
        return Err(CameraError::BehindCamera(s));
    }
    Ok(Observation { pixel: Vector2::new(h.x / s, h.y / s), depth: s })
}

/// World point at camera-frame depth `depth` along the ray through `pixel`.
pub fn backproject_pixel(
    view: &CameraView,
    pixel: &Vector2<f64>,
    depth: f64,
) -> Result<Vector3<f64>, CameraError> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(CameraError::NonPositiveDepth(depth));
    }
    let x_cam = view.intrinsics.unproject(pixel) * depth;
    Ok(view.pose.to_world(&x_cam))
}

/// Neighbour selection: nearest camera centres among views whose principal
/// axis is within `max_axis_angle_deg` of the reference axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborPolicy {
    pub max_axis_angle_deg: f64,
}

impl Default for NeighborPolicy {
    fn default() -> Self {
        Self { max_axis_angle_deg: 60.0 }
    }
}

impl NeighborPolicy {
    pub fn eligible(&self, reference: &CameraView, all: &[CameraView]) -> Vec<usize> {
        let cos_max = self.max_axis_angle_deg.to_radians().cos();
        let axis = reference.pose.optical_axis();
        let c0 = reference.center();
        let mut cands: Vec<(f64, usize)> = all
            .iter()
            .filter(|v| v.id != reference.id)
            .filter(|v| v.pose.optical_axis().dot(&axis) > cos_max)
            .map(|v| ((v.center() - c0).norm(), v.id))
            .collect();
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cands.into_iter().map(|(_, id)| id).collect()
    }

    pub fn select(
        &self,
        reference: &CameraView,
        all: &[CameraView],
        k: usize,
    ) -> Result<Vec<usize>, CameraError> {
        let eligible = self.eligible(reference, all);
        if eligible.len() < k {
            return Err(CameraError::InsufficientViews { needed: k, found: eligible.len() });
        }
        Ok(eligible[..k].to_vec())
    }
}

/// Default-policy neighbour selection (60° axis cone).
pub fn select_neighbor_views(
    reference: &CameraView,
    all: &[CameraView],
    k: usize,
) -> Result<Vec<usize>, CameraError> {
    NeighborPolicy::default().select(reference, all, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    fn k100() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap()
    }

    #[test]
    fn identity_projection() {
        let k = CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 1, 1).unwrap();
        let v = CameraView::new(0, k, CameraPose::identity());
        let mut expected = Matrix3x4::zeros();
        expected.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
        assert_eq!(*v.projection(), expected);
        let o = v.project(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(o.pixel, Vector2::zeros());
        assert_eq!(o.depth, 1.0);
    }

    #[test]
    fn pinhole_formula() {
        let v = CameraView::new(0, k100(), CameraPose::identity());
        let o = v.project(&Vector3::new(1.0, 2.0, 2.0)).unwrap();
        assert_relative_eq!(o.pixel, Vector2::new(100.0, 150.0), epsilon = 1e-12);
        assert_eq!(o.depth, 2.0);
        assert!(matches!(
            v.project(&Vector3::new(0.0, 0.0, -1.0)),
            Err(CameraError::BehindCamera(_))
        ));
    }

    #[test]
    fn projection_entries_and_center() {
        let r = Rotation3::from_euler_angles(0.3, -0.2, 0.9).into_inner();
        let pose = CameraPose::new(r, Vector3::new(0.5, -1.0, 4.0)).unwrap();
        let v = CameraView::new(0, k100(), pose);
        let p = v.projection();
        assert_relative_eq!(p[(0, 0)], 100.0 * r[(0, 0)] + 50.0 * r[(2, 0)], epsilon = 1e-12);
        let c = v.center();
        let h = p * Vector4::new(c.x, c.y, c.z, 1.0);
        assert!(h.z.abs() < 1e-12);
        // with zero principal point the (0,0) entry is fx·R₀₀
        let k = CameraIntrinsics::new(100.0, 100.0, 0.0, 0.0, 100, 100).unwrap();
        let v = CameraView::new(0, k, pose);
        assert_relative_eq!(v.projection()[(0, 0)], 100.0 * r[(0, 0)], epsilon = 1e-12);
    }

    #[test]
    fn principal_point_backprojects_on_axis() {
        let v = CameraView::new(0, k100(), CameraPose::identity());
        let x = backproject_pixel(&v, &Vector2::new(50.0, 50.0), 5.0).unwrap();
        assert_relative_eq!(x, Vector3::new(0.0, 0.0, 5.0), epsilon = 1e-15);
        assert!(backproject_pixel(&v, &Vector2::new(50.0, 50.0), 0.0).is_err());
    }

    #[test]
    fn backprojection_matches_ray_march() {
        let eye = Vector3::new(2.0, -1.0, 3.0);
        let pose = CameraPose::look_at(&eye, &Vector3::zeros(), &Vector3::z()).unwrap();
        let v = CameraView::new(0, k100(), pose);
        let pixel = Vector2::new(13.0, 81.0);
        let depth = 2.75;
        let ray = v.ray_through(&pixel);
        // the camera-frame z of o + t·dir grows at rate axis·dir
        let t = depth / ray.direction.dot(&pose.optical_axis());
        let expected = ray.at(t);
        let x = backproject_pixel(&v, &pixel, depth).unwrap();
        assert_relative_eq!(x, expected, epsilon = 1e-12);
    }

    #[test]
    fn projection_jacobian_matches_differences() {
        let pose = CameraPose::look_at(&Vector3::new(0.0, -3.0, 1.0), &Vector3::zeros(), &Vector3::z())
            .unwrap();
        let v = CameraView::new(0, k100(), pose);
        let x = Vector3::new(0.1, 0.2, -0.3);
        let (_, j) = v.project_with_jacobian(&x).unwrap();
        let h = 1e-6;
        for c in 0..3 {
            let mut dx = Vector3::zeros();
            dx[c] = h;
            let a = v.project(&(x + dx)).unwrap().pixel;
            let b = v.project(&(x - dx)).unwrap().pixel;
            let fd = (a - b) / (2.0 * h);
            assert_relative_eq!(fd.x, j[(0, c)], epsilon = 1e-6, max_relative = 1e-7);
            assert_relative_eq!(fd.y, j[(1, c)], epsilon = 1e-6, max_relative = 1e-7);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 4.0, 0.0, 4, 4).is_err());
        assert!(CameraPose::new(Matrix3::identity() * 2.0, Vector3::zeros()).is_err());
        let flip = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(CameraPose::new(flip, Vector3::zeros()).is_err());
    }

    fn arc_views() -> Vec<CameraView> {
        let k = k100();
        [0.0f64, 20.0, 45.0, 180.0]
            .iter()
            .enumerate()
            .map(|(i, deg)| {
                let a = deg.to_radians();
                let eye = Vector3::new(4.0 * a.sin(), -4.0 * a.cos(), 0.0);
                // the 180° camera sits near the reference but faces away
                let (eye, target) = if i == 3 {
                    (Vector3::new(0.3, -4.0, 0.0), Vector3::new(0.3, -8.0, 0.0))
                } else {
                    (eye, Vector3::zeros())
                };
                CameraView::new(i, k, CameraPose::look_at(&eye, &target, &Vector3::z()).unwrap())
            })
            .collect()
    }

    #[test]
    fn nearest_arc_neighbor_and_angle_filter() {
        let views = arc_views();
        assert_eq!(select_neighbor_views(&views[0], &views, 1).unwrap(), vec![1]);
        assert_eq!(select_neighbor_views(&views[0], &views, 2).unwrap(), vec![1, 2]);
        assert_eq!(
            select_neighbor_views(&views[0], &views, 3),
            Err(CameraError::InsufficientViews { needed: 3, found: 2 })
        );
        let again = select_neighbor_views(&views[0], &views, 2).unwrap();
        assert_eq!(again, vec![1, 2]);
    }

    #[test]
    fn row_major_pose_round_trip() {
        let pose = CameraPose::look_at(&Vector3::new(1.0, 2.0, 3.0), &Vector3::zeros(), &Vector3::z())
            .unwrap();
        let back = CameraPose::from_row_major(&pose.to_row_major()).unwrap();
        assert_eq!(pose, back);
    }

    proptest! {
        #[test]
        fn backproject_project_round_trip(
            u in 0.0f64..99.0, v in 0.0f64..99.0, d in 0.1f64..100.0,
            yaw in -3.0f64..3.0, pitch in -1.0f64..1.0,
        ) {
            let eye = Vector3::new(3.0 * yaw.cos(), 3.0 * yaw.sin(), 2.0 * pitch);
            let pose = CameraPose::look_at(&eye, &Vector3::zeros(), &Vector3::z()).unwrap();
            let view = CameraView::new(0, k100(), pose);
            let pixel = Vector2::new(u, v);
            let x = backproject_pixel(&view, &pixel, d).unwrap();
            let o = view.project(&x).unwrap();
            prop_assert!((o.pixel - pixel).norm() < 1e-9);
            prop_assert!((o.depth - d).abs() < 1e-9 * d.max(1.0));
            // d·[u v 1]ᵀ = P·[X 1]ᵀ
            let h = view.projection() * Vector4::new(x.x, x.y, x.z, 1.0);
            let lhs = Vector3::new(o.pixel.x, o.pixel.y, 1.0) * o.depth;
            prop_assert!((lhs - h).norm() < 1e-12 * h.norm().max(1.0));
        }
    }
}
