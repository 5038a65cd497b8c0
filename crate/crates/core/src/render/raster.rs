use rayon::prelude::*;

use super::normal_map::{Fragment, FragmentSource, NormalMap};
use super::normals::vertex_normals;
use super::Camera;
use crate::isosurface::TriMesh;
use crate::{Error, Result, Vec3};

/// Rows per parallel work item.
const BAND_ROWS: usize = 8;

/// Signed screen area of `(p, b, c)`; positive for triangles facing the camera
/// (screen `y` points down).
#[inline]
pub fn area_2d(p: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    -0.5 * ((b[0] - p[0]) * (c[1] - p[1]) - (b[1] - p[1]) * (c[0] - p[0]))
}

/// Per-vertex projection: screen point and camera depth, or `None` outside `[near, far]`.
pub(crate) fn project_vertices(tri: &TriMesh, cam: &Camera) -> Vec<Option<(Vec3, f64)>> {
    tri.vertices
        .par_iter()
        .map(|v| {
            let vc = cam.to_camera(v);
            (vc.z >= cam.near() && vc.z <= cam.far()).then(|| (cam.project_unchecked(&vc), vc.z))
        })
        .collect()
}

struct Setup {
    p: [[f64; 2]; 3],
    zs: [f64; 3],
    area: f64,
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

/// Pixel-index range whose centres `i + 0.5` fall inside `[lo, hi]`, clipped to `[0, n)`.
fn pixel_span(lo: f64, hi: f64, n: usize) -> Option<(usize, usize)> {
    let a = (lo - 0.5).ceil().max(0.0);
    let b = (hi - 0.5).floor().min(n as f64 - 1.0);
    (a <= b).then_some((a as usize, b as usize))
}

fn setup(face: &[u32; 3], proj: &[Option<(Vec3, f64)>], w: usize, h: usize) -> Option<Setup> {
    let [a, b, c] = face.map(|i| proj[i as usize]);
    let (a, b, c) = (a?, b?, c?);
    let p = [[a.0.x, a.0.y], [b.0.x, b.0.y], [c.0.x, c.0.y]];
    let area = area_2d(p[0], p[1], p[2]);
    if !(area > 0.0) {
        return None;
    }
    let (x0, x1) = pixel_span(
        p[0][0].min(p[1][0]).min(p[2][0]),
        p[0][0].max(p[1][0]).max(p[2][0]),
        w,
    )?;
    let (y0, y1) = pixel_span(
        p[0][1].min(p[1][1]).min(p[2][1]),
        p[0][1].max(p[1][1]).max(p[2][1]),
        h,
    )?;
    Some(Setup {
        p,
        zs: [a.0.z, b.0.z, c.0.z],
        area,
        x0,
        x1,
        y0,
        y1,
    })
}

/// Visibility pass: for each pixel, the winning `(z', triangle)`.
///
/// Triangles facing away, with any vertex outside `[near, far]`, or covering no pixel
/// centre are skipped. A pixel centre on a shared edge belongs to both triangles; ties in
/// depth go to the lower triangle index.
pub fn rasterize_ids(tri: &TriMesh, cam: &Camera) -> Vec<Option<(f64, u32)>> {
    let (w, h) = (cam.width(), cam.height());
    let proj = project_vertices(tri, cam);
    let setups: Vec<Option<Setup>> = tri
        .triangles
        .par_iter()
        .map(|f| setup(f, &proj, w, h))
        .collect();
    let nbands = h.div_ceil(BAND_ROWS);
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); nbands];
    for (t, s) in setups.iter().enumerate() {
        if let Some(s) = s {
            for bin in &mut bins[s.y0 / BAND_ROWS..=s.y1 / BAND_ROWS] {
                bin.push(t as u32);
            }
        }
    }
    let mut ids: Vec<Option<(f64, u32)>> = vec![None; w * h];
    ids.par_chunks_mut(BAND_ROWS * w)
        .zip(bins.par_iter())
        .enumerate()
        .for_each(|(band, (buf, bin))| {
            let row0 = band * BAND_ROWS;
            let row1 = (row0 + BAND_ROWS).min(h) - 1;
            for &t in bin {
                let s = setups[t as usize].as_ref().unwrap();
                for y in s.y0.max(row0)..=s.y1.min(row1) {
                    let py = y as f64 + 0.5;
                    let row = &mut buf[(y - row0) * w..(y - row0 + 1) * w];
                    for (x, slot) in row.iter_mut().enumerate().take(s.x1 + 1).skip(s.x0) {
                        let q = [x as f64 + 0.5, py];
                        let a0 = area_2d(q, s.p[1], s.p[2]);
                        let a1 = area_2d(q, s.p[2], s.p[0]);
                        let a2 = area_2d(q, s.p[0], s.p[1]);
                        if a0 < 0.0 || a1 < 0.0 || a2 < 0.0 {
                            continue;
                        }
                        let z = (a0 * s.zs[0] + a1 * s.zs[1] + a2 * s.zs[2]) / s.area;
                        let wins = match *slot {
                            None => true,
                            Some((bz, bt)) => z < bz || (z == bz && t < bt),
                        };
                        if wins {
                            *slot = Some((z, t));
                        }
                    }
                }
            }
        });
    ids
}

/// Coverage mask of [`rasterize_ids`].
pub fn rasterize_coverage(tri: &TriMesh, cam: &Camera) -> Vec<bool> {
    rasterize_ids(tri, cam).iter().map(Option::is_some).collect()
}

/// Perspective-correct un-normalized barycentrics `alpha_i = z_j z_k Area2D(p, v'_j, v'_k)`
/// at screen point `p`, with camera depths `z`.
pub(crate) fn alphas_at(q: [f64; 2], s: &[[f64; 2]; 3], z: &[f64; 3]) -> [f64; 3] {
    [
        z[1] * z[2] * area_2d(q, s[1], s[2]),
        z[2] * z[0] * area_2d(q, s[2], s[0]),
        z[0] * z[1] * area_2d(q, s[0], s[1]),
    ]
}

/// Rasterizes `tri` into a camera-space normal map using area-averaged vertex normals.
pub fn rasterize(tri: &TriMesh, cam: &Camera) -> Result<NormalMap> {
    let normals = vertex_normals(tri)?;
    rasterize_with_normals(tri, &normals, cam)
}

/// As [`rasterize`], with caller-supplied unit world-space vertex normals.
pub fn rasterize_with_normals(tri: &TriMesh, normals: &[Vec3], cam: &Camera) -> Result<NormalMap> {
    if normals.len() != tri.vertices.len() {
        return Err(Error::LengthMismatch {
            expected: tri.vertices.len(),
            got: normals.len(),
        });
    }
    let w = cam.width();
    let ids = rasterize_ids(tri, cam);
    let r = cam.rotation();
    let pixels = ids
        .par_iter()
        .enumerate()
        .map(|(i, id)| {
            let Some((depth, t)) = *id else {
                return Ok(None);
            };
            let face = tri.triangles[t as usize];
            let vc = face.map(|k| cam.to_camera(&tri.vertices[k as usize]));
            let s = vc.map(|v| {
                let p = cam.project_unchecked(&v);
                [p.x, p.y]
            });
            let q = [(i % w) as f64 + 0.5, (i / w) as f64 + 0.5];
            let alphas = alphas_at(q, &s, &[vc[0].z, vc[1].z, vc[2].z]);
            let m: Vec3 = (0..3).map(|j| normals[face[j] as usize] * alphas[j]).sum();
            let norm = m.norm();
            if !(norm > 0.0) {
                return Err(Error::DegenerateNormal(face[0] as usize));
            }
            Ok(Some(Fragment {
                normal: r * (m / norm),
                depth: Some(depth.clamp(0.0, 1.0)),
                source: Some(FragmentSource { triangle: t, alphas }),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormalMap::from_pixels(w, cam.height(), pixels))
}
