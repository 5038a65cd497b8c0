use nalgebra::{Matrix3, SVD};
use rayon::prelude::*;

use crate::isosurface::TriMesh;
use crate::render::Camera;
use crate::skinning::RigidTransform;
use crate::{Error, Result, Vec3};

/// Outcome of rigid registration.
#[derive(Clone, Debug, PartialEq)]
pub struct IcpResult {
    /// Maps source points onto the destination.
    pub transform: RigidTransform,
    /// RMS nearest-neighbour distance after the final transform.
    pub rms: f64,
    pub iterations: usize,
}

fn centroid(p: &[Vec3]) -> Vec3 {
    p.iter().sum::<Vec3>() / p.len() as f64
}

fn check_spread(p: &[Vec3], what: &str) -> Result<()> {
    if p.len() < 3 {
        return Err(Error::DegeneratePoints(format!("{what}: fewer than three points")));
    }
    let c = centroid(p);
    let cov: Matrix3<f64> = p.iter().map(|q| (q - c) * (q - c).transpose()).sum();
    let s = cov.symmetric_eigenvalues();
    let (lo, hi) = (s.min(), s.max());
    // Second-largest eigenvalue = trace - largest - smallest.
    let mid = cov.trace() - lo - hi;
    if !(hi > 0.0) || mid <= 1e-12 * hi {
        return Err(Error::DegeneratePoints(format!("{what}: points are collinear")));
    }
    Ok(())
}

/// Least-squares rigid transform taking `src[i]` to `dst[i]` (orthogonal Procrustes on the
/// cross-covariance).
pub fn procrustes(src: &[Vec3], dst: &[Vec3]) -> Result<RigidTransform> {
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch {
            expected: src.len(),
            got: dst.len(),
        });
    }
    check_spread(src, "source")?;
    let (cs, cd) = (centroid(src), centroid(dst));
    let h: Matrix3<f64> = src.iter().zip(dst).map(|(s, d)| (s - cs) * (d - cd).transpose()).sum();
    let svd = SVD::new(h, true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let v = vt.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let r = v * Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * u.transpose();
    Ok(RigidTransform::new(r, cd - r * cs))
}

fn nearest(dst: &[Vec3], p: &Vec3) -> (usize, f64) {
    dst.iter()
        .enumerate()
        .map(|(i, q)| (i, (q - p).norm_squared()))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
}

/// Iterative closest point: alternates brute-force nearest-neighbour matching with a
/// Procrustes fit until the RMS distance changes by less than `tol`.
pub fn icp_rigid_align(src: &[Vec3], dst: &[Vec3], max_iters: usize, tol: f64) -> Result<IcpResult> {
    check_spread(src, "source")?;
    check_spread(dst, "destination")?;
    let mut total = RigidTransform::identity();
    let mut prev = f64::INFINITY;
    let mut rms = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..max_iters.max(1) {
        iterations = it + 1;
        let moved: Vec<Vec3> = src.iter().map(|p| total.apply(p)).collect();
        let matches: Vec<(usize, f64)> = moved.par_iter().map(|p| nearest(dst, p)).collect();
        rms = (matches.iter().map(|m| m.1).sum::<f64>() / src.len() as f64).sqrt();
        if (prev - rms).abs() < tol {
            break;
        }
        prev = rms;
        let targets: Vec<Vec3> = matches.iter().map(|m| dst[m.0]).collect();
        total = procrustes(&moved, &targets)?.compose(&total);
    }
    Ok(IcpResult {
        transform: total,
        rms,
        iterations,
    })
}

/// Result of [`refine_cameras`].
#[derive(Clone, Debug)]
pub struct RefineReport {
    pub cameras: Vec<Camera>,
    /// Mean RMS distance of each mesh to the reference before each outer iteration, plus
    /// the final value.
    pub rms_history: Vec<f64>,
}

/// Aligns each per-view mesh to `meshes[reference]` and moves its camera by the inverse of
/// the alignment, so the view's geometry lands on the reference. Repeats until the largest
/// translation update falls below `tol`.
pub fn refine_cameras(
    meshes: &[TriMesh],
    cameras: &[Camera],
    reference: usize,
    max_outer: usize,
    tol: f64,
) -> Result<RefineReport> {
    if meshes.len() != cameras.len() {
        return Err(Error::LengthMismatch {
            expected: cameras.len(),
            got: meshes.len(),
        });
    }
    let dst = &meshes
        .get(reference)
        .ok_or_else(|| Error::InvalidArgument(format!("reference view {reference} out of range")))?
        .vertices;
    let mut cams = cameras.to_vec();
    let mut points: Vec<Vec<Vec3>> = meshes.iter().map(|m| m.vertices.clone()).collect();
    let mut rms_history = Vec::new();
    let mean_rms = |points: &[Vec<Vec3>]| -> f64 {
        let others: Vec<f64> = (0..points.len())
            .filter(|&v| v != reference)
            .map(|v| {
                let s: f64 = points[v].par_iter().map(|p| nearest(dst, p).1).sum();
                (s / points[v].len().max(1) as f64).sqrt()
            })
            .collect();
        others.iter().sum::<f64>() / others.len().max(1) as f64
    };
    for _ in 0..max_outer.max(1) {
        rms_history.push(mean_rms(&points));
        let mut largest: f64 = 0.0;
        for v in 0..cams.len() {
            if v == reference {
                continue;
            }
            let a = icp_rigid_align(&points[v], dst, 100, 1e-14)?.transform;
            // New camera sees a mesh point v' where the old camera saw a^-1 v'.
            let ainv = a.inverse();
            let r = cams[v].rotation() * ainv.rotation;
            let t = cams[v].rotation() * ainv.translation + cams[v].translation();
            cams[v] = cams[v].with_pose(r, t)?;
            for p in &mut points[v] {
                *p = a.apply(p);
            }
            largest = largest.max(a.translation.norm());
        }
        if largest < tol {
            break;
        }
    }
    rms_history.push(mean_rms(&points));
    Ok(RefineReport { cameras: cams, rms_history })
}
