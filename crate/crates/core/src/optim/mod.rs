//! Fitting a field to target normal maps, evaluation metrics, camera refinement by rigid
//! registration, and triangle pruning.

mod fit;
mod gradcheck;
mod icp;
mod metrics;
mod precond;
mod prune;

pub use fit::{evaluate_views, fit_sdf, fit_sdf_observed, objective, FitConfig, FitMode, FitReport, IterationRecord, View, ViewMetrics};
pub use gradcheck::fd_gradient_check;
pub use icp::{icp_rigid_align, procrustes, refine_cameras, IcpResult, RefineReport};
pub use metrics::{depth_meters, e_depth, e_normal, eikonal_deviation, DEPTH_MISMATCH_M};
pub use precond::smooth_gradient;
pub use prune::prune_inconsistent_triangles;
