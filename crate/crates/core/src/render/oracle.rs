use rayon::prelude::*;

use super::normal_map::{Fragment, FragmentSource, NormalMap};
use super::normals::vertex_normals;
use super::Camera;
use crate::isosurface::TriMesh;
use crate::{Result, Vec3};

/// Reference renderer: casts a ray through every pixel centre and shades the nearest hit.
///
/// Visibility follows the rasterizer's rules (camera-facing triangles with all vertices
/// inside `[near, far]`). Barycentrics are ratios of world-space sub-triangle areas.
pub fn raytrace_oracle(tri: &TriMesh, cam: &Camera) -> Result<NormalMap> {
    render(tri, cam, true)
}

/// As [`raytrace_oracle`] but keeps the raw sub-triangle areas as weights, skipping the
/// division by the full triangle area. The normalized normal is unchanged.
pub fn raytrace_oracle_unnormalized(tri: &TriMesh, cam: &Camera) -> Result<NormalMap> {
    render(tri, cam, false)
}

/// Ray/triangle intersection distance, two-sided.
fn intersect(o: &Vec3, d: &Vec3, [a, b, c]: [Vec3; 3]) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pv = d.cross(&e2);
    let det = e1.dot(&pv);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let tv = o - a;
    let u = tv.dot(&pv) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qv = tv.cross(&e1);
    let v = d.dot(&qv) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&qv) * inv;
    (t > 0.0).then_some(t)
}

fn render(tri: &TriMesh, cam: &Camera, normalize: bool) -> Result<NormalMap> {
    let normals = vertex_normals(tri)?;
    let (w, h) = (cam.width(), cam.height());
    let eye = cam.eye();
    let visible: Vec<u32> = (0..tri.triangles.len())
        .filter(|&t| {
            let c = tri.corners(t);
            let depth_ok = c.iter().all(|v| {
                let z = cam.to_camera(v).z;
                z >= cam.near() && z <= cam.far()
            });
            depth_ok && tri.face_normal(t).dot(&(c[0] - eye)) < 0.0
        })
        .map(|t| t as u32)
        .collect();
    let r = cam.rotation();
    let pixels = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (o, d) = cam.ray_through((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
            let mut best: Option<(f64, u32)> = None;
            for &t in &visible {
                if let Some(dist) = intersect(&o, &d, tri.corners(t as usize)) {
                    if best.is_none_or(|(bd, _)| dist < bd) {
                        best = Some((dist, t));
                    }
                }
            }
            let (dist, t) = best?;
            let p = o + d * dist;
            let [a, b, c] = tri.corners(t as usize);
            let mut alphas = [
                0.5 * (b - p).cross(&(c - p)).norm(),
                0.5 * (c - p).cross(&(a - p)).norm(),
                0.5 * (a - p).cross(&(b - p)).norm(),
            ];
            if normalize {
                let total = 0.5 * (b - a).cross(&(c - a)).norm();
                alphas = alphas.map(|x| x / total);
            }
            let face = tri.triangles[t as usize];
            let m: Vec3 = (0..3).map(|j| normals[face[j] as usize] * alphas[j]).sum();
            let z = cam.to_camera(&p).z;
            let (n, f) = (cam.near(), cam.far());
            Some(Fragment {
                normal: r * m.normalize(),
                depth: Some(f * (z - n) / ((f - n) * z)),
                source: Some(FragmentSource { triangle: t, alphas }),
            })
        })
        .collect();
    Ok(NormalMap::from_pixels(w, h, pixels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::rasterize;
    use crate::render::shapes::icosphere;
    use nalgebra::Matrix3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cam(w: usize, h: usize) -> Camera {
        Camera::new(Matrix3::identity(), Vec3::zeros(), 0.1, 10.0, 1.0, w as f64 / h as f64, w, h).unwrap()
    }

    #[test]
    fn straight_ahead_barycentrics_sum_to_one() {
        let tri = TriMesh::from_raw(
            vec![Vec3::new(-1.0, -1.0, 2.0), Vec3::new(0.0, 1.0, 2.0), Vec3::new(1.0, -1.0, 2.0)],
            vec![[0, 1, 2]],
        );
        let nm = raytrace_oracle(&tri, &cam(9, 9)).unwrap();
        let centre = nm.get(4, 4).unwrap();
        let s: f64 = centre.source.unwrap().alphas.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(nm.get(0, 0).is_none(), "corner ray misses");
    }

    #[test]
    fn denominators_do_not_change_normals() {
        let sphere = icosphere(2, 1.0, Vec3::new(0.0, 0.0, 4.0));
        let c = cam(40, 40);
        let a = raytrace_oracle(&sphere, &c).unwrap();
        let b = raytrace_oracle_unnormalized(&sphere, &c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let covered: Vec<usize> = (0..a.pixels().len()).filter(|&i| a.is_covered(i)).collect();
        for _ in 0..100 {
            let i = covered[rng.random_range(0..covered.len())];
            assert!((a.normal(i).unwrap() - b.normal(i).unwrap()).amax() <= 1e-12);
        }
    }

    #[test]
    fn matches_rasterizer_on_sphere() {
        let sphere = icosphere(3, 1.0, Vec3::new(0.0, 0.0, 3.0));
        let c = cam(64, 64);
        let ray = raytrace_oracle(&sphere, &c).unwrap();
        let ras = rasterize(&sphere, &c).unwrap();
        let mut mismatch = 0;
        for (a, b) in ray.pixels().iter().zip(ras.pixels()) {
            match (a, b) {
                (Some(a), Some(b)) => {
                    assert!((a.normal - b.normal).amax() <= 1e-6);
                    assert!((a.depth.unwrap() - b.depth.unwrap()).abs() <= 1e-9);
                }
                (None, None) => {}
                _ => mismatch += 1,
            }
        }
        assert!(mismatch as f64 <= 0.005 * ray.coverage_count() as f64);
    }
}
