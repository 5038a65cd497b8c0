use rayon::prelude::*;

use super::{interpolate_tri_weights, Pose, RigidTransform, SkinWeights, Skeleton};
use crate::isosurface::{marching_tetrahedra, TriMesh};
use crate::mesh::{ScalarField, TetMesh};
use crate::{Error, Result, Vec3};

/// `p + sum_j w_j (M_j p - p)`.
fn blend(p: &Vec3, weights: &[f64], rel: &[RigidTransform]) -> Vec3 {
    let mut out = *p;
    for (w, m) in weights.iter().zip(rel) {
        if *w != 0.0 && !m.is_identity() {
            out += (m.apply(p) - p) * *w;
        }
    }
    out
}

fn check_rows(w: &SkinWeights, rows: usize, skel: &Skeleton) -> Result<()> {
    if w.num_rows() != rows {
        return Err(Error::LengthMismatch {
            expected: rows,
            got: w.num_rows(),
        });
    }
    if w.num_joints() != skel.num_joints() {
        return Err(Error::LengthMismatch {
            expected: skel.num_joints(),
            got: w.num_joints(),
        });
    }
    Ok(())
}

/// Skinned tet-mesh vertex positions `u_k(theta)`.
pub fn skin_tet_vertices(mesh: &TetMesh, w: &SkinWeights, skel: &Skeleton, pose: &Pose) -> Result<Vec<Vec3>> {
    check_rows(w, mesh.num_vertices(), skel)?;
    let rel = pose.relative(skel)?;
    Ok(mesh
        .vertices()
        .par_iter()
        .enumerate()
        .map(|(k, u)| blend(u, w.row(k), &rel))
        .collect())
}

/// Gradient with respect to one joint transform: translation, and a rotation tangent
/// `omega` for the left perturbation `T_j -> (exp([omega]x) R_j, t_j)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PoseGrad {
    pub translation: Vec3,
    pub rotation: Vec3,
}

/// Pulls per-vertex gradients of [`skin_tet_vertices`] back to the pose transforms.
pub fn skin_tet_vjp_pose(
    mesh: &TetMesh,
    w: &SkinWeights,
    skel: &Skeleton,
    pose: &Pose,
    vertex_grads: &[Vec3],
) -> Result<Vec<PoseGrad>> {
    check_rows(w, mesh.num_vertices(), skel)?;
    if vertex_grads.len() != mesh.num_vertices() {
        return Err(Error::LengthMismatch {
            expected: mesh.num_vertices(),
            got: vertex_grads.len(),
        });
    }
    pose.relative(skel)?;
    let rest_inv: Vec<RigidTransform> = skel.joints().iter().map(|j| j.rest.inverse()).collect();
    let mut out = vec![PoseGrad::default(); skel.num_joints()];
    for (k, (u, g)) in mesh.vertices().iter().zip(vertex_grads).enumerate() {
        for (j, &wk) in w.row(k).iter().enumerate() {
            if wk == 0.0 {
                continue;
            }
            let local = pose.transforms[j].rotation * rest_inv[j].apply(u);
            out[j].translation += g * wk;
            out[j].rotation += local.cross(g) * wk;
        }
    }
    Ok(out)
}

/// Option 1, march then skin: each vertex uses weights and rest position interpolated along
/// its parent edge, `v_i = sum_j w_ij T_j v_i^j`.
pub fn skin_triangle_mesh(
    tri: &TriMesh,
    field: &ScalarField,
    w: &SkinWeights,
    skel: &Skeleton,
    pose: &Pose,
) -> Result<TriMesh> {
    if !tri.has_provenance() {
        return Err(Error::MissingProvenance);
    }
    check_rows(w, field.len(), skel)?;
    let rel = pose.relative(skel)?;
    let vertices = tri
        .vertices
        .par_iter()
        .zip(&tri.provenance)
        .map(|(v, c)| blend(v, &interpolate_tri_weights(field, (c.k1, c.k2), w), &rel))
        .collect();
    Ok(TriMesh {
        vertices,
        ..tri.clone()
    })
}

/// Option 2, skin then march: extracts the zero level set from the skinned tet mesh.
pub fn march_skinned(
    mesh: &TetMesh,
    field: &ScalarField,
    w: &SkinWeights,
    skel: &Skeleton,
    pose: &Pose,
) -> Result<TriMesh> {
    let posed = mesh.with_vertices(skin_tet_vertices(mesh, w, skel, pose)?)?;
    marching_tetrahedra(&posed, field)
}
