use rayon::prelude::*;

use super::Skeleton;
use crate::mesh::{distance_to_segment, ScalarField, TetMesh};
use crate::{Error, Result};

/// Regularizer of the inverse-square kernel `1 / (d^2 + KERNEL_EPS)`.
const KERNEL_EPS: f64 = 1e-6;

/// Row-major per-vertex joint weights; rows are nonnegative and sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct SkinWeights {
    num_joints: usize,
    data: Vec<f64>,
}

impl SkinWeights {
    pub fn new(num_joints: usize, data: Vec<f64>) -> Result<Self> {
        if num_joints == 0 || !data.len().is_multiple_of(num_joints) {
            return Err(Error::InvalidArgument("weight table does not tile into rows".into()));
        }
        let w = Self { num_joints, data };
        for k in 0..w.num_rows() {
            let row = w.row(k);
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("weight row {k} is not a partition of unity")));
            }
        }
        Ok(w)
    }

    /// Every vertex bound entirely to joint `j`.
    pub fn constant(num_rows: usize, num_joints: usize, j: usize) -> Self {
        let mut data = vec![0.0; num_rows * num_joints];
        for k in 0..num_rows {
            data[k * num_joints + j] = 1.0;
        }
        Self { num_joints, data }
    }

    pub fn num_joints(&self) -> usize {
        self.num_joints
    }

    pub fn num_rows(&self) -> usize {
        self.data.len() / self.num_joints
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.num_joints..(k + 1) * self.num_joints]
    }
}

/// Inverse-square distance-to-bone weights, `w_kj ∝ 1 / (d(u_k, bone_j)^2 + 1e-6)`,
/// normalized per row. Rows whose kernel sum is not finite fall back to uniform weights.
pub fn compute_skin_weights(mesh: &TetMesh, skel: &Skeleton) -> SkinWeights {
    let nj = skel.num_joints();
    let segments: Vec<_> = skel.joints().iter().map(|j| j.segment()).collect();
    let data = mesh
        .vertices()
        .par_iter()
        .flat_map_iter(|u| {
            let raw: Vec<f64> = segments
                .iter()
                .map(|(a, b)| {
                    let d = distance_to_segment(u, a, b);
                    1.0 / (d * d + KERNEL_EPS)
                })
                .collect();
            let sum: f64 = raw.iter().sum();
            if sum.is_finite() && sum > 0.0 {
                raw.into_iter().map(|x| x / sum).collect::<Vec<_>>()
            } else {
                vec![1.0 / nj as f64; nj]
            }
        })
        .collect();
    SkinWeights {
        num_joints: nj,
        data,
    }
}

/// Weights at the zero crossing of edge `(k1, k2)`, interpolated with the crossing's
/// coefficients: `w = -phi2/(phi1 - phi2) w_k1 + phi1/(phi1 - phi2) w_k2`.
pub fn interpolate_tri_weights(field: &ScalarField, (k1, k2): (u32, u32), w: &SkinWeights) -> Vec<f64> {
    let (p1, p2) = (field[k1 as usize], field[k2 as usize]);
    let t = p1 / (p1 - p2);
    w.row(k1 as usize)
        .iter()
        .zip(w.row(k2 as usize))
        .map(|(a, b)| (1.0 - t) * a + t * b)
        .collect()
}
