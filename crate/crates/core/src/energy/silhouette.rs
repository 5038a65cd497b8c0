use std::collections::BTreeSet;

use super::EnergyResult;
use crate::isosurface::{marching_tetrahedra, TriMesh};
use crate::mesh::{ScalarField, TetMesh};
use crate::render::{rasterize_ids, Camera, NormalMap};
use crate::{Error, Result};

/// Tet vertices to push outward (`shrink`) or inward (`expand`), sorted ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SilhouetteSets {
    pub shrink: Vec<u32>,
    pub expand: Vec<u32>,
}

/// Classifies silhouette mismatches between a prediction rendered from `(tri, cam)` and a
/// target map.
///
/// Shrink: negative vertices of the tets owning triangles seen at pixels covered by the
/// prediction but not the target.
///
/// Expand: positive vertices of every surface-crossing tet are temporarily set to `-eps_s`,
/// the inflated surface is extracted and rendered, and for pixels covered by the target and
/// the inflated surface but not the prediction, the flipped vertices of the owning tet are
/// collected. The temporary field is discarded.
pub fn silhouette_sets(
    pred: &NormalMap,
    target: &NormalMap,
    mesh: &TetMesh,
    field: &ScalarField,
    tri: &TriMesh,
    cam: &Camera,
    eps_s: f64,
) -> Result<SilhouetteSets> {
    if pred.dims() != target.dims() {
        return Err(Error::DimensionMismatch {
            left: pred.dims(),
            right: target.dims(),
        });
    }
    if pred.dims() != (cam.width(), cam.height()) {
        return Err(Error::DimensionMismatch {
            left: pred.dims(),
            right: (cam.width(), cam.height()),
        });
    }
    field.check_len(mesh)?;
    if tri.source_tet.len() != tri.triangles.len() {
        return Err(Error::MissingProvenance);
    }
    let phi = field.values();
    let w = pred.width();

    let mut shrink = BTreeSet::new();
    for (i, (p, t)) in pred.pixels().iter().zip(target.pixels()).enumerate() {
        if let (Some(p), None) = (p, t) {
            let src = p.source.ok_or(Error::MissingFragment(i % w, i / w))?;
            let tet = mesh.tets()[tri.source_tet[src.triangle as usize] as usize];
            shrink.extend(tet.iter().copied().filter(|&k| phi[k as usize] < 0.0));
        }
    }

    let needs_expand = pred
        .pixels()
        .iter()
        .zip(target.pixels())
        .any(|(p, t)| p.is_none() && t.is_some());
    let mut expand = BTreeSet::new();
    if needs_expand {
        let mut temp = phi.to_vec();
        for &t in &tri.source_tet {
            for &k in &mesh.tets()[t as usize] {
                if phi[k as usize] > 0.0 {
                    temp[k as usize] = -eps_s;
                }
            }
        }
        let temp = ScalarField::new(temp)?;
        let inflated = marching_tetrahedra(mesh, &temp)?;
        let ids = rasterize_ids(&inflated, cam);
        for (i, id) in ids.iter().enumerate() {
            let Some((_, t)) = id else { continue };
            if pred.pixels()[i].is_none() && target.pixels()[i].is_some() {
                let tet = mesh.tets()[inflated.source_tet[*t as usize] as usize];
                expand.extend(
                    tet.iter()
                        .copied()
                        .filter(|&k| phi[k as usize] > 0.0 && temp[k as usize] < 0.0),
                );
            }
        }
    }
    Ok(SilhouetteSets {
        shrink: shrink.into_iter().collect(),
        expand: expand.into_iter().collect(),
    })
}

fn pull_toward(field: &ScalarField, set: &[u32], goal: f64) -> EnergyResult {
    let mut out = EnergyResult::zero(field.len());
    for &k in set {
        let d = field[k as usize] - goal;
        out.value += 0.5 * d * d;
        out.grad_phi[k as usize] += d;
    }
    out
}

/// `1/2 sum_{k in set} (phi_k - eps_s)^2`: drives the set outside the surface.
pub fn shrink_loss(field: &ScalarField, set: &[u32], eps_s: f64) -> EnergyResult {
    pull_toward(field, set, eps_s)
}

/// `1/2 sum_{k in set} (phi_k + eps_s)^2`: drives the set inside the surface.
pub fn expand_loss(field: &ScalarField, set: &[u32], eps_s: f64) -> EnergyResult {
    pull_toward(field, set, -eps_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isosurface::{clamp_small_phi, EPS_GRAD};
    use crate::mesh::{build_band_tetmesh, sample_exact_sdf, TemplateShape};
    use crate::render::rasterize;
    use crate::Vec3;

    #[test]
    fn loss_examples() {
        let f = ScalarField::new(vec![-0.01, 0.02, 0.3]).unwrap();
        assert_eq!(shrink_loss(&f, &[], 5e-3).value, 0.0);
        let s = shrink_loss(&f, &[0], 5e-3);
        assert!((s.value - 1.125e-4).abs() < 1e-18);
        assert!((s.grad_phi[0] + 0.015).abs() < 1e-15);
        assert_eq!(&s.grad_phi[1..], &[0.0, 0.0]);
        let e = expand_loss(&f, &[1], 5e-3);
        assert!((e.value - 3.125e-4).abs() < 1e-18);
        assert!((e.grad_phi[1] - 0.025).abs() < 1e-15);
        assert_eq!(e.grad_phi[0], 0.0);
    }

    struct Scene {
        mesh: TetMesh,
        cam: Camera,
    }

    fn scene() -> Scene {
        let mesh = build_band_tetmesh(&TemplateShape::sphere(Vec3::zeros(), 0.5), 0.08, 0.25).unwrap();
        let cam = Camera::look_at(Vec3::new(0.0, 0.0, -3.0), Vec3::zeros(), Vec3::y(), 0.1, 10.0, 0.5, 48, 48).unwrap();
        Scene { mesh, cam }
    }

    fn render_sphere(s: &Scene, r: f64) -> (ScalarField, TriMesh, NormalMap) {
        let phi = clamp_small_phi(&sample_exact_sdf(&TemplateShape::sphere(Vec3::zeros(), r), &s.mesh), EPS_GRAD).unwrap();
        let tri = marching_tetrahedra(&s.mesh, &phi).unwrap();
        let nm = rasterize(&tri, &s.cam).unwrap();
        (phi, tri, nm)
    }

    #[test]
    fn matching_silhouettes_give_empty_sets() {
        let s = scene();
        let (phi, tri, nm) = render_sphere(&s, 0.5);
        let sets = silhouette_sets(&nm, &nm, &s.mesh, &phi, &tri, &s.cam, 0.04).unwrap();
        assert_eq!(sets, SilhouetteSets::default());
    }

    #[test]
    fn larger_prediction_shrinks() {
        let s = scene();
        let (phi, tri, pred) = render_sphere(&s, 0.55);
        let (_, _, target) = render_sphere(&s, 0.45);
        let sets = silhouette_sets(&pred, &target, &s.mesh, &phi, &tri, &s.cam, 0.04).unwrap();
        // Brute-force classification of the mismatch pixels.
        let mut expected = BTreeSet::new();
        for (p, t) in pred.pixels().iter().zip(target.pixels()) {
            if let (Some(p), None) = (p, t) {
                let tet = s.mesh.tets()[tri.source_tet[p.source.unwrap().triangle as usize] as usize];
                expected.extend(tet.into_iter().filter(|&k| phi[k as usize] < 0.0));
            }
        }
        assert!(!expected.is_empty());
        assert_eq!(sets.shrink, expected.into_iter().collect::<Vec<_>>());
        assert!(sets.expand.is_empty());
    }

    #[test]
    fn smaller_prediction_expands() {
        let s = scene();
        let (phi, tri, pred) = render_sphere(&s, 0.45);
        let (_, _, target) = render_sphere(&s, 0.55);
        assert!(pred.pixels().iter().zip(target.pixels()).any(|(p, t)| p.is_none() && t.is_some()));
        let sets = silhouette_sets(&pred, &target, &s.mesh, &phi, &tri, &s.cam, 0.04).unwrap();
        assert!(sets.shrink.is_empty());
        assert!(!sets.expand.is_empty());
        // Every member is currently outside and adjacent to the surface.
        let crossing: BTreeSet<u32> = tri.source_tet.iter().flat_map(|&t| s.mesh.tets()[t as usize]).collect();
        for k in &sets.expand {
            assert!(phi[*k as usize] > 0.0);
            assert!(crossing.contains(k));
        }
    }
}
