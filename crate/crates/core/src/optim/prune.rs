use crate::isosurface::TriMesh;
use crate::render::{rasterize, Camera, NormalMap};
use crate::{Error, Result};

/// Removes visible triangles whose rendered pixels disagree with `target` by more than
/// `tol_deg` on average. Pixels the target leaves uncovered count as 180 degrees. Triangles
/// that render no pixel are kept. The result may have holes.
pub fn prune_inconsistent_triangles(tri: &TriMesh, cam: &Camera, target: &NormalMap, tol_deg: f64) -> Result<TriMesh> {
    if !(tol_deg > 0.0) {
        return Err(Error::InvalidArgument("pruning tolerance must be positive".into()));
    }
    if target.dims() != (cam.width(), cam.height()) {
        return Err(Error::DimensionMismatch {
            left: target.dims(),
            right: (cam.width(), cam.height()),
        });
    }
    let nm = rasterize(tri, cam)?;
    let mut sum = vec![0.0; tri.triangles.len()];
    let mut count = vec![0usize; tri.triangles.len()];
    for (p, t) in nm.pixels().iter().zip(target.pixels()) {
        let Some(p) = p else { continue };
        let k = p.source.expect("rasterized fragments carry provenance").triangle as usize;
        let err = match t {
            Some(t) => p.normal.dot(&t.normal).clamp(-1.0, 1.0).acos().to_degrees(),
            None => 180.0,
        };
        sum[k] += err;
        count[k] += 1;
    }
    Ok(tri.retain_triangles(|k| count[k] == 0 || sum[k] / count[k] as f64 <= tol_deg))
}
