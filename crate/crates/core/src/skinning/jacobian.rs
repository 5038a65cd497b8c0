use rayon::prelude::*;

use super::skin::skin_tet_vertices;
use super::{interpolate_tri_weights, Pose, SkinWeights, Skeleton};
use crate::isosurface::{mt_vertex_jacobian, JacobianEntry, SparseJacobian, TriMesh};
use crate::mesh::{ScalarField, TetMesh};
use crate::{Error, Result};

/// Order of skinning and extraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkinOrder {
    /// Extract on the rest mesh, then skin the triangle vertices.
    MarchThenSkin,
    /// Skin the tet vertices, then extract.
    SkinThenMarch,
}

/// `∂v_i / ∂phi` of skinned triangle vertices, laid out like [`mt_vertex_jacobian`].
///
/// `tri` must be the extraction of `field` on the rest mesh (its provenance is shared by
/// both orderings).
#[allow(clippy::too_many_arguments)]
pub fn skinned_vertex_jacobian(
    order: SkinOrder,
    mesh: &TetMesh,
    field: &ScalarField,
    tri: &TriMesh,
    w: &SkinWeights,
    skel: &Skeleton,
    pose: &Pose,
    eps_grad: f64,
) -> Result<SparseJacobian> {
    match order {
        SkinOrder::SkinThenMarch => {
            let posed = mesh.with_vertices(skin_tet_vertices(mesh, w, skel, pose)?)?;
            mt_vertex_jacobian(&posed, field, tri, eps_grad)
        }
        SkinOrder::MarchThenSkin => {
            // Reuses the extraction Jacobian's clamp checks and provenance validation.
            let rest = mt_vertex_jacobian(mesh, field, tri, eps_grad)?;
            if w.num_rows() != field.len() {
                return Err(Error::LengthMismatch {
                    expected: field.len(),
                    got: w.num_rows(),
                });
            }
            let rel = pose.relative(skel)?;
            let u = mesh.vertices();
            let entries = tri
                .provenance
                .par_iter()
                .enumerate()
                .map(|(i, c)| {
                    let (k1, k2) = (c.k1 as usize, c.k2 as usize);
                    let (p1, p2) = (field[k1], field[k2]);
                    let g2 = (p1 - p2) * (p1 - p2);
                    // t = phi1 / (phi1 - phi2) and its partials.
                    let dt = [-p2 / g2, p1 / g2];
                    let v = tri.vertices[i];
                    let wi = interpolate_tri_weights(field, (c.k1, c.k2), w);
                    // ∂v/∂t = sum_j (w2j - w1j)(M_j v - v) + sum_j w_ij R_j (u2 - u1).
                    let du = u[k2] - u[k1];
                    let mut dvdt = du;
                    for (j, m) in rel.iter().enumerate() {
                        let dw = w.row(k2)[j] - w.row(k1)[j];
                        if dw != 0.0 && !m.is_identity() {
                            dvdt += (m.apply(&v) - v) * dw;
                        }
                        if !m.is_identity() {
                            dvdt += (m.rotation * du - du) * wi[j];
                        }
                    }
                    [
                        JacobianEntry {
                            vertex: i as u32,
                            tet_vertex: c.k1,
                            d: dvdt * dt[0],
                        },
                        JacobianEntry {
                            vertex: i as u32,
                            tet_vertex: c.k2,
                            d: dvdt * dt[1],
                        },
                    ]
                })
                .collect::<Vec<_>>();
            debug_assert_eq!(rest.entries.len(), 2 * entries.len());
            Ok(SparseJacobian {
                entries: entries.into_iter().flatten().collect(),
            })
        }
    }
}
