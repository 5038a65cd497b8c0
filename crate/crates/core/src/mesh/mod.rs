//! Tetrahedral volume meshes, analytic templates and per-vertex scalar fields.

mod field;
pub mod io;
mod template;
pub(crate) use template::distance_to_segment;
mod tet;

pub use field::{sample_exact_sdf, ScalarField};
pub use template::{Capsule, TemplateShape};
pub use tet::{average_edge_length, build_band_tetmesh, TetMesh, LOCAL_EDGES};


