use crate::isosurface::TriMesh;
use crate::{Error, Result, Vec3};

const MIN_NORMAL_NORM: f64 = 1e-12;

/// Un-normalized vertex normals: the sum of `(v2 - v1) × (v3 - v1)` over incident faces.
/// The factor ½ of the triangle area cancels on normalization and is dropped.
pub fn area_weighted_normals(tri: &TriMesh) -> Vec<Vec3> {
    let mut n = vec![Vec3::zeros(); tri.vertices.len()];
    for (t, face) in tri.triangles.iter().enumerate() {
        let nf = tri.face_normal(t);
        for &i in face {
            n[i as usize] += nf;
        }
    }
    n
}

/// Area-averaged unit vertex normals.
///
/// Vertices not referenced by any triangle get a zero normal; a referenced vertex whose
/// summed normal vanishes is an error.
pub fn vertex_normals(tri: &TriMesh) -> Result<Vec<Vec3>> {
    let mut referenced = vec![false; tri.vertices.len()];
    for face in &tri.triangles {
        for &i in face {
            referenced[i as usize] = true;
        }
    }
    area_weighted_normals(tri)
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            if !referenced[i] {
                Ok(Vec3::zeros())
            } else if n.norm() < MIN_NORMAL_NORM {
                Err(Error::DegenerateNormal(i))
            } else {
                Ok(n.normalize())
            }
        })
        .collect()
}
