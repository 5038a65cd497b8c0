//! Linear blend skinning of tet and triangle meshes.
//!
//! A deformed point is `p + sum_j w_j (M_j p - p)` where `M_j = T_j(theta) * rest_j^-1`
//! maps rest space to posed space for joint `j`. With weights summing to one this equals
//! the textbook `sum_j w_j T_j u^j`, and the rest pose reproduces the input bit for bit.

mod jacobian;
mod rigid;
mod skin;
mod weights;

pub use jacobian::{skinned_vertex_jacobian, SkinOrder};
pub use rigid::{Joint, Pose, RigidTransform, Skeleton};
pub use skin::{march_skinned, skin_tet_vertices, skin_tet_vjp_pose, skin_triangle_mesh, PoseGrad};
pub use weights::{compute_skin_weights, interpolate_tri_weights, SkinWeights};
