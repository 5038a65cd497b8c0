use rayon::prelude::*;

use super::TriMesh;
use crate::mesh::{ScalarField, TetMesh};
use crate::{Error, Result, Vec3};

/// `∂v_i / ∂phi_k` for one triangle vertex and one tet vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianEntry {
    pub vertex: u32,
    pub tet_vertex: u32,
    pub d: Vec3,
}

/// Two entries per triangle vertex, stored at `2i` (for `k1`) and `2i + 1` (for `k2`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseJacobian {
    pub entries: Vec<JacobianEntry>,
}

impl SparseJacobian {
    pub fn num_vertices(&self) -> usize {
        self.entries.len() / 2
    }

    /// Vector-Jacobian product: pulls per-vertex gradients `∂L/∂v_i` back to `∂L/∂phi_k`.
    ///
    /// Accumulates in entry order, so the result is reproducible bit for bit.
    pub fn vjp(&self, vertex_grads: &[Vec3], num_phi: usize) -> Result<Vec<f64>> {
        if vertex_grads.len() != self.num_vertices() {
            return Err(Error::LengthMismatch {
                expected: self.num_vertices(),
                got: vertex_grads.len(),
            });
        }
        let mut out = vec![0.0; num_phi];
        for e in &self.entries {
            out[e.tet_vertex as usize] += e.d.dot(&vertex_grads[e.vertex as usize]);
        }
        Ok(out)
    }
}

/// Analytic Jacobian of the zero-crossing vertices:
///
/// ```text
/// ∂v/∂phi_k1 = phi_k2 (u_k1 - u_k2) / (phi_k1 - phi_k2)^2
/// ∂v/∂phi_k2 = phi_k1 (u_k2 - u_k1) / (phi_k1 - phi_k2)^2
/// ```
///
/// Fails when a parent edge's value gap is below `2 * eps_grad`.
pub fn mt_vertex_jacobian(
    mesh: &TetMesh,
    field: &ScalarField,
    tri: &TriMesh,
    eps_grad: f64,
) -> Result<SparseJacobian> {
    field.check_len(mesh)?;
    if !tri.has_provenance() {
        return Err(Error::MissingProvenance);
    }
    let phi = field.values();
    let u = mesh.vertices();
    let min_gap = 2.0 * eps_grad;
    let entries = tri
        .provenance
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let (p1, p2) = (phi[c.k1 as usize], phi[c.k2 as usize]);
            let gap = p1 - p2;
            // A small tolerance absorbs the rounding of values clamped to exactly ±eps_grad.
            if gap.abs() < min_gap * (1.0 - 1e-12) {
                return Err(Error::GradientClampViolated {
                    edge: c.edge as usize,
                    gap: gap.abs(),
                    min: min_gap,
                });
            }
            let du = u[c.k1 as usize] - u[c.k2 as usize];
            let inv = 1.0 / (gap * gap);
            Ok([
                JacobianEntry {
                    vertex: i as u32,
                    tet_vertex: c.k1,
                    d: du * (p2 * inv),
                },
                JacobianEntry {
                    vertex: i as u32,
                    tet_vertex: c.k2,
                    d: -du * (p1 * inv),
                },
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseJacobian {
        entries: entries.into_iter().flatten().collect(),
    })
}
