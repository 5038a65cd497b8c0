use crate::render::NormalMap;
use crate::{Error, Result, Vec3};

/// Normal-map loss value and its per-pixel gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalLoss {
    pub value: f64,
    /// `∂L/∂n` per pixel in row-major order; zero outside the shared coverage.
    pub pixel_grads: Vec<Vec3>,
    /// Number of pixels covered by both maps.
    pub count: usize,
}

/// Mean of `1/2 |n_pred - n_target|^2` over pixels covered by both maps. Pixels covered by
/// only one map are left to the silhouette losses.
pub fn normal_map_loss(pred: &NormalMap, target: &NormalMap) -> Result<NormalLoss> {
    if pred.dims() != target.dims() {
        return Err(Error::DimensionMismatch {
            left: pred.dims(),
            right: target.dims(),
        });
    }
    let count = pred
        .pixels()
        .iter()
        .zip(target.pixels())
        .filter(|(a, b)| a.is_some() && b.is_some())
        .count();
    let inv = if count > 0 { 1.0 / count as f64 } else { 0.0 };
    let mut value = 0.0;
    let pixel_grads = pred
        .pixels()
        .iter()
        .zip(target.pixels())
        .map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => {
                let d = a.normal - b.normal;
                value += 0.5 * d.norm_squared() * inv;
                d * inv
            }
            _ => Vec3::zeros(),
        })
        .collect();
    Ok(NormalLoss {
        value,
        pixel_grads,
        count,
    })
}
