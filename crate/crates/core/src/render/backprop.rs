use rayon::prelude::*;

use super::normal_map::NormalMap;
use super::normals::area_weighted_normals;
use super::raster::area_2d;
use super::Camera;
use crate::isosurface::TriMesh;
use crate::{Error, Result, Vec3};

/// Gradient contributions of one pixel: world-space position and unit-normal gradients
/// for the three corners of its triangle.
struct PixelGrad {
    face: [u32; 3],
    dpos: [Vec3; 3],
    dnormal: [Vec3; 3],
}

/// Pulls per-pixel gradients `dL/dn` (camera space, one per pixel in row-major order)
/// back to world-space vertex gradients `dL/dv`.
///
/// Differentiates the pixel normal through the perspective-correct barycentrics, the
/// projection and the area-weighted vertex normals. Coverage is held fixed, so pixels that
/// would change triangle under a perturbation contribute nothing extra. Accumulation runs
/// in pixel order, then triangle order, and is reproducible.
pub fn backprop_pixels(
    tri: &TriMesh,
    cam: &Camera,
    nm: &NormalMap,
    pixel_grads: &[Vec3],
) -> Result<Vec<Vec3>> {
    if pixel_grads.len() != nm.pixels().len() {
        return Err(Error::LengthMismatch {
            expected: nm.pixels().len(),
            got: pixel_grads.len(),
        });
    }
    if nm.dims() != (cam.width(), cam.height()) {
        return Err(Error::DimensionMismatch {
            left: nm.dims(),
            right: (cam.width(), cam.height()),
        });
    }
    let raw_normals = area_weighted_normals(tri);
    let unit: Vec<Vec3> = raw_normals
        .iter()
        .map(|n| if n.norm() > 0.0 { n.normalize() } else { Vec3::zeros() })
        .collect();
    let r = cam.rotation();
    let (fx, fy) = cam.focal();
    let w = nm.width();

    let contributions = nm
        .pixels()
        .par_iter()
        .zip(pixel_grads.par_iter())
        .enumerate()
        .filter(|(_, (p, g))| p.is_some() && **g != Vec3::zeros())
        .map(|(i, (p, g))| {
            let p = p.as_ref().unwrap();
            let src = p.source.ok_or(Error::MissingFragment(i % w, i / w))?;
            let face = *tri
                .triangles
                .get(src.triangle as usize)
                .ok_or(Error::MissingFragment(i % w, i / w))?;
            let n: [Vec3; 3] = face.map(|k| unit[k as usize]);
            let vc: [Vec3; 3] = face.map(|k| cam.to_camera(&tri.vertices[k as usize]));
            let s: [[f64; 2]; 3] = vc.map(|v| {
                let q = cam.project_unchecked(&v);
                [q.x, q.y]
            });
            let z = [vc[0].z, vc[1].z, vc[2].z];
            let q = [(i % w) as f64 + 0.5, (i / w) as f64 + 0.5];
            let area = [
                area_2d(q, s[1], s[2]),
                area_2d(q, s[2], s[0]),
                area_2d(q, s[0], s[1]),
            ];
            let alpha = [z[1] * z[2] * area[0], z[2] * z[0] * area[1], z[0] * z[1] * area[2]];

            // Normalization and rotation: n_pix = R m / |m|.
            let m = n[0] * alpha[0] + n[1] * alpha[1] + n[2] * alpha[2];
            let mn = m.norm();
            let mh = m / mn;
            let gl = r.transpose() * g;
            let gm = (gl - mh * mh.dot(&gl)) / mn;
            let dalpha = [n[0].dot(&gm), n[1].dot(&gm), n[2].dot(&gm)];
            let dnormal = [gm * alpha[0], gm * alpha[1], gm * alpha[2]];

            // Barycentrics: alpha_i = z_j z_k A(q, s_j, s_k).
            let mut dz = [0.0; 3];
            let mut ds = [[0.0; 2]; 3];
            for i0 in 0..3 {
                let (j, k) = ((i0 + 1) % 3, (i0 + 2) % 3);
                dz[j] += dalpha[i0] * z[k] * area[i0];
                dz[k] += dalpha[i0] * z[j] * area[i0];
                let da = dalpha[i0] * z[j] * z[k];
                let (b, c) = (s[j], s[k]);
                ds[j][0] += da * -0.5 * (c[1] - q[1]);
                ds[j][1] += da * 0.5 * (c[0] - q[0]);
                ds[k][0] += da * 0.5 * (b[1] - q[1]);
                ds[k][1] += da * -0.5 * (b[0] - q[0]);
            }

            // Projection: x' = -fx x / z + cx, y' = -fy y / z + cy.
            let dpos = [0, 1, 2].map(|j| {
                let v = vc[j];
                let dvc = Vec3::new(
                    -fx / v.z * ds[j][0],
                    -fy / v.z * ds[j][1],
                    dz[j] + (fx * v.x * ds[j][0] + fy * v.y * ds[j][1]) / (v.z * v.z),
                );
                r.transpose() * dvc
            });
            Ok(PixelGrad { face, dpos, dnormal })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut grad = vec![Vec3::zeros(); tri.vertices.len()];
    let mut dunit = vec![Vec3::zeros(); tri.vertices.len()];
    for c in &contributions {
        for j in 0..3 {
            grad[c.face[j] as usize] += c.dpos[j];
            dunit[c.face[j] as usize] += c.dnormal[j];
        }
    }

    // Vertex normals: n_hat = n / |n|, n = sum of face normals (v2 - v1) × (v3 - v1).
    let draw: Vec<Vec3> = raw_normals
        .iter()
        .zip(&dunit)
        .map(|(n, g)| {
            let len = n.norm();
            if len > 0.0 && *g != Vec3::zeros() {
                let nh = n / len;
                (g - nh * nh.dot(g)) / len
            } else {
                Vec3::zeros()
            }
        })
        .collect();
    for face in &tri.triangles {
        let gf: Vec3 = face.iter().map(|&k| draw[k as usize]).sum();
        if gf == Vec3::zeros() {
            continue;
        }
        let [a, b, c] = face.map(|k| tri.vertices[k as usize]);
        let (e1, e2) = (b - a, c - a);
        let de1 = e2.cross(&gf);
        let de2 = gf.cross(&e1);
        grad[face[1] as usize] += de1;
        grad[face[2] as usize] += de2;
        grad[face[0] as usize] -= de1 + de2;
    }
    Ok(grad)
}
