use crate::energy::GradientOperator;
use crate::mesh::{ScalarField, TetMesh};
use crate::render::{Camera, NormalMap};
use crate::{Error, Result};

/// Depth substituted where exactly one map covers a pixel, in meters.
pub const DEPTH_MISMATCH_M: f64 = 0.2;

/// `1/(W H) sum_p (1/2 (1 - n_pred . n_target))^2`. The dot is -1 where exactly one map
/// covers the pixel and 1 where neither does.
pub fn e_normal(pred: &NormalMap, target: &NormalMap) -> Result<f64> {
    if pred.dims() != target.dims() {
        return Err(Error::DimensionMismatch {
            left: pred.dims(),
            right: target.dims(),
        });
    }
    let sum: f64 = pred
        .pixels()
        .iter()
        .zip(target.pixels())
        .map(|(a, b)| {
            let dot = match (a, b) {
                // identical normals score exactly zero despite rounding in the dot product
                (Some(a), Some(b)) if a.normal == b.normal => 1.0,
                (Some(a), Some(b)) => a.normal.dot(&b.normal),
                (None, None) => 1.0,
                _ => -1.0,
            };
            let e = 0.5 * (1.0 - dot);
            e * e
        })
        .sum();
    Ok(sum / pred.pixels().len() as f64)
}

/// Camera depth in meters per pixel, recovered from the stored `z'`.
pub fn depth_meters(nm: &NormalMap, cam: &Camera) -> Vec<Option<f64>> {
    nm.pixels()
        .iter()
        .map(|p| p.and_then(|f| f.depth).map(|z| cam.depth_from_ndc(z)))
        .collect()
}

/// `1/(W H) sum_p (d_pred - d_target)^2` in square meters, with a 0.2 m error where exactly
/// one map has depth.
pub fn e_depth(pred: &[Option<f64>], target: &[Option<f64>]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch {
            expected: target.len(),
            got: pred.len(),
        });
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => (a - b) * (a - b),
            (None, None) => 0.0,
            _ => DEPTH_MISMATCH_M * DEPTH_MISMATCH_M,
        })
        .sum();
    Ok(sum / pred.len().max(1) as f64)
}

/// Mean over tets of `| |grad phi|^2 - 1 |`.
pub fn eikonal_deviation(op: &GradientOperator, mesh: &TetMesh, field: &ScalarField) -> f64 {
    let phi = field.values();
    let sum: f64 = mesh
        .tets()
        .iter()
        .enumerate()
        .map(|(t, tet)| (op.apply(t, &tet.map(|k| phi[k as usize])).norm_squared() - 1.0).abs())
        .sum();
    sum / mesh.num_tets().max(1) as f64
}
