//! Tetrahedral signed-distance reconstruction from normal maps.
//!
//! A signed distance field is stored as one value per vertex of a fixed tetrahedral mesh.
//! [`isosurface::marching_tetrahedra`] turns it into a watertight triangle mesh, [`render`]
//! rasterizes camera-space normal maps from that mesh and backpropagates pixel gradients to
//! the triangle vertices, and [`optim::fit_sdf`] closes the loop by descending the
//! normal-map, silhouette, Eikonal and mean-curvature energies of [`energy`] with respect to
//! the per-vertex field values.
//!
//! The pieces are usable on their own:
//!
//! - [`mesh`]: grid-based band tetrahedralization of analytic template shapes and field I/O.
//! - [`isosurface`]: clamping, extraction and the sparse `∂v/∂φ` Jacobian.
//! - [`skinning`]: linear blend skinning of tet and triangle meshes in either ordering.
//! - [`render`]: camera model, scanline rasterizer, ray-cast oracle and PNG codecs.
//! - [`energy`]: every loss term with an analytic gradient.
//! - [`optim`]: the fitting loop, evaluation metrics, ICP camera refinement and pruning.

pub mod energy;
mod error;
pub mod isosurface;
pub mod mesh;
pub mod optim;
pub mod render;
pub mod skinning;

pub use error::{Error, Result};

/// Positions and directions are plain double-precision 3-vectors throughout.
pub type Vec3 = nalgebra::Vector3<f64>;
