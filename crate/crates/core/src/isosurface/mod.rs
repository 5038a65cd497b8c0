//! Marching tetrahedra on a fixed tet mesh and the derivative of its output vertices with
//! respect to the per-vertex field.

mod export;
mod jacobian;
mod march;
mod trimesh;

pub use export::{write_obj, write_provenance};
pub use jacobian::{mt_vertex_jacobian, JacobianEntry, SparseJacobian};
pub use march::{clamp_small_phi, marching_tetrahedra, EPS_CLAMP, EPS_GRAD};
pub use trimesh::{EdgeCrossing, TriMesh};
