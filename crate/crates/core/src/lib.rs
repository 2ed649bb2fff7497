//! Geometry core: camera model, Gaussian depth/normal rasterization,
//! differentiable multi-view triangulation, robust consistency loss,
//! depth optimization and TSDF meshing.

pub mod camera;
pub mod depth;
pub mod gaussian;
pub mod linalg;
pub mod loss;
pub mod optimizer;
pub mod triangulation;
pub mod tsdf;

pub use camera::{
    backproject_pixel, project_point, projection_matrix, select_neighbor_views, CameraError, CameraIntrinsics,
    CameraPose, CameraView, NeighborPolicy, Observation, Ray,
};
pub use depth::DepthImage;
pub use gaussian::{
    ray_gaussian_intersection_exact, render_depth_normal, render_depth_normal_with, to_ray_space, DepthMode,
    DepthNormalMap, GaussianError, GaussianPrimitive, RaySpaceGaussian, RenderOptions,
};
pub use linalg::{min_right_singular_vector, pinv_shifted, symmetric_eigen_4x4, LinalgError, Mat2kx4, MinSingular};
pub use triangulation::{
    assemble_dlt, assemble_dlt_with, batch_triangulate, solve_consensus, solve_consensus_with_jacobian,
    triangulate_oracle, ConsensusPoint, DepthField, DepthTransfer, DirectProjection, DltSystem,
    ObservationSource, SurfacePoint, TriangulationError,
};
pub use loss::{
    finite_diff_check, geman_mcclure, l2_loss_and_grad, GradCheckEntry, GradCheckReport, sigma_schedule, tggc_loss_and_grad, LossAndGradient,
    LossError, LossKind, PointViews, RobustLossConfig,
};
pub use optimizer::{
    ablate_k, ablate_loss, eval_metrics, gradcheck, gradcheck_on, GradCheckSpec, make_synthetic_scene, optimize, ExperimentConfig, GeometryMetrics,
    OptimizableSurface, OptimizerError, SceneKind, SceneSpec,
};
pub use tsdf::{extract_mesh, fuse_depth, fuse_tsdf, mesh_chamfer, MeshError, TriangleMesh, TsdfVolume};
