use rayon::prelude::*;

use super::{EdgeCrossing, TriMesh};
use crate::mesh::{ScalarField, TetMesh};
use crate::{Error, Result};

/// Clamp used before extraction so no triangle vertex lands on a tet vertex.
pub const EPS_CLAMP: f64 = 1e-8;

/// Larger clamp that keeps the `1 / (phi_k1 - phi_k2)^2` Jacobian coefficients bounded.
pub const EPS_GRAD: f64 = 1e-4;

/// Replaces every `|phi| < eps` by `eps * sign(phi)`, with `sign(0) = +1`.
pub fn clamp_small_phi(field: &ScalarField, eps: f64) -> Result<ScalarField> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("clamp epsilon must be positive".into()));
    }
    field.map(|v| {
        if v.abs() < eps {
            if v < 0.0 {
                -eps
            } else {
                eps
            }
        } else {
            v
        }
    })
}

fn local_edge(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => unreachable!("not a tet edge"),
    }
}

fn is_odd_permutation(p: &[usize; 4]) -> bool {
    let mut inversions = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

/// Extracts the zero level set of `field` as a triangle mesh.
///
/// One vertex is placed on every sign-change edge by linear interpolation, numbered in edge
/// ordinal order. A tet with three crossings emits one triangle; one with four crossings
/// emits a quad split along the diagonal joining its lowest- and highest-numbered crossing
/// edges. Triangles are wound so normals point from `phi < 0` toward `phi > 0`; the winding
/// comes from the sign pattern and the positive tet orientation, never from floating-point
/// normals, so tiny triangles are oriented as reliably as large ones.
pub fn marching_tetrahedra(mesh: &TetMesh, field: &ScalarField) -> Result<TriMesh> {
    field.check_len(mesh)?;
    let phi = field.values();
    if let Some(k) = phi.iter().position(|v| v.abs() < EPS_CLAMP) {
        return Err(Error::UnclampedField {
            vertex: k,
            value: phi[k],
            eps: EPS_CLAMP,
        });
    }

    let u = mesh.vertices();
    let mut edge_vertex = vec![u32::MAX; mesh.num_edges()];
    let mut vertices = Vec::new();
    let mut provenance = Vec::new();
    for (e, &[k1, k2]) in mesh.edges().iter().enumerate() {
        let (p1, p2) = (phi[k1 as usize], phi[k2 as usize]);
        if (p1 < 0.0) != (p2 < 0.0) {
            let lambda1 = -p2 / (p1 - p2);
            let lambda2 = p1 / (p1 - p2);
            edge_vertex[e] = vertices.len() as u32;
            vertices.push(u[k1 as usize] * lambda1 + u[k2 as usize] * lambda2);
            provenance.push(EdgeCrossing {
                edge: e as u32,
                k1,
                k2,
                weight: lambda2,
            });
        }
    }

    let per_tet: Vec<([[u32; 3]; 2], usize)> = (0..mesh.num_tets())
        .into_par_iter()
        .map(|t| tet_triangles(mesh, phi, &edge_vertex, t))
        .collect();

    let mut triangles = Vec::new();
    let mut source_tet = Vec::new();
    for (t, (tris, n)) in per_tet.into_iter().enumerate() {
        for tri in &tris[..n] {
            triangles.push(*tri);
            source_tet.push(t as u32);
        }
    }

    Ok(TriMesh {
        vertices,
        triangles,
        provenance,
        source_tet,
    })
}

fn tet_triangles(mesh: &TetMesh, phi: &[f64], edge_vertex: &[u32], t: usize) -> ([[u32; 3]; 2], usize) {
    let tet = mesh.tets()[t];
    let tet_edges = mesh.tet_edges()[t];
    let negative = tet.map(|k| phi[k as usize] < 0.0);
    let num_negative = negative.iter().filter(|&&n| n).count();
    let crossing = |i: usize, j: usize| edge_vertex[tet_edges[local_edge(i, j)] as usize];
    let ordinal = |i: usize, j: usize| tet_edges[local_edge(i, j)];
    let mut out = [[0u32; 3]; 2];

    match num_negative {
        1 | 3 => {
            let odd_is_negative = num_negative == 1;
            let a = (0..4).find(|&l| negative[l] == odd_is_negative).unwrap();
            let mut rest = (0..4).filter(|&l| l != a);
            let mut p = [a, rest.next().unwrap(), rest.next().unwrap(), rest.next().unwrap()];
            if is_odd_permutation(&p) {
                p.swap(2, 3);
            }
            // (ab, ac, ad) faces away from a for an even ordering of a positive tet.
            let mut tri = [crossing(p[0], p[1]), crossing(p[0], p[2]), crossing(p[0], p[3])];
            if !odd_is_negative {
                tri.swap(1, 2);
            }
            out[0] = tri;
            (out, 1)
        }
        2 => {
            let mut neg = (0..4).filter(|&l| negative[l]);
            let mut pos = (0..4).filter(|&l| !negative[l]);
            let mut p = [
                neg.next().unwrap(),
                neg.next().unwrap(),
                pos.next().unwrap(),
                pos.next().unwrap(),
            ];
            if is_odd_permutation(&p) {
                p.swap(2, 3);
            }
            let [a, b, c, d] = p;
            // Outward cycle for an even ordering with negatives a, b.
            let cycle = [(a, c), (a, d), (b, d), (b, c)];
            let ords = cycle.map(|(i, j)| ordinal(i, j));
            let lowest = (0..4).min_by_key(|&i| ords[i]).unwrap();
            let q = cycle.map(|(i, j)| crossing(i, j));
            // The lowest and highest edges are always opposite in the cycle.
            let s = lowest % 2;
            out[0] = [q[s], q[s + 1], q[s + 2]];
            out[1] = [q[s], q[s + 2], q[(s + 3) % 4]];
            (out, 2)
        }
        _ => (out, 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_band_tetmesh, sample_exact_sdf, TemplateShape};
    use crate::Vec3;

    fn unit_tet() -> TetMesh {
        TetMesh::new(
            vec![
                Vec3::zeros(),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap()
    }

    fn field(v: &[f64]) -> ScalarField {
        ScalarField::new(v.to_vec()).unwrap()
    }

    #[test]
    fn clamp_examples() {
        let f = clamp_small_phi(&field(&[1e-10, -0.5, 0.0, -1e-12]), 1e-8).unwrap();
        assert_eq!(f.values(), &[1e-8, -0.5, 1e-8, -1e-8]);
        assert!(clamp_small_phi(&f, 0.0).is_err());
    }

    #[test]
    fn single_negative_corner() {
        let tri = marching_tetrahedra(&unit_tet(), &field(&[-1.0, 1.0, 1.0, 1.0])).unwrap();
        assert_eq!(tri.triangles.len(), 1);
        let mut got = tri.vertices.clone();
        got.sort_by(|a, b| a.as_slice().partial_cmp(b.as_slice()).unwrap());
        assert_eq!(
            got,
            vec![Vec3::new(0.0, 0.0, 0.5), Vec3::new(0.0, 0.5, 0.0), Vec3::new(0.5, 0.0, 0.0)]
        );
        // normal points away from the negative corner
        assert!(tri.face_normal(0).dot(&Vec3::new(1.0, 1.0, 1.0)) > 0.0);
    }

    #[test]
    fn quad_split_uses_lowest_to_highest_edge() {
        let mesh = unit_tet();
        let tri = marching_tetrahedra(&mesh, &field(&[-1.0, -1.0, 1.0, 1.0])).unwrap();
        assert_eq!(tri.triangles.len(), 2);
        // Crossings sit on edges (0,2), (0,3), (1,2), (1,3): ordinals 1, 2, 3, 4.
        let edges: Vec<u32> = tri.provenance.iter().map(|p| p.edge).collect();
        assert_eq!(edges, vec![1, 2, 3, 4]);
        let v02 = 0u32; // vertex on the lowest edge
        let v13 = 3u32; // vertex on the highest edge
        for t in &tri.triangles {
            assert!(t.contains(&v02) && t.contains(&v13), "diagonal missing in {t:?}");
        }
        for t in 0..2 {
            let n = tri.face_normal(t);
            // positives (vertices 2, 3) lie toward +y +z
            assert!(n.dot(&Vec3::new(0.0, 1.0, 1.0)) > 0.0);
        }
    }

    #[test]
    fn every_sign_pattern_is_outward() {
        let mesh = unit_tet();
        for mask in 1..15u32 {
            let phi: Vec<f64> = (0..4)
                .map(|i| if mask >> i & 1 == 1 { -0.3 - 0.1 * i as f64 } else { 0.7 + 0.05 * i as f64 })
                .collect();
            let f = field(&phi);
            let tri = marching_tetrahedra(&mesh, &f).unwrap();
            for t in 0..tri.triangles.len() {
                let [a, b, c] = tri.corners(t);
                let centroid = (a + b + c) / 3.0;
                let n = tri.face_normal(t).normalize();
                let interp = |p: Vec3| {
                    // linear interpolant on the unit tet
                    phi[0] + (phi[1] - phi[0]) * p.x + (phi[2] - phi[0]) * p.y + (phi[3] - phi[0]) * p.z
                };
                assert!(interp(centroid + n * 1e-3) > interp(centroid), "mask {mask:04b}");
            }
        }
    }

    #[test]
    fn rejects_unclamped_and_mismatched() {
        let mesh = unit_tet();
        assert!(matches!(
            marching_tetrahedra(&mesh, &field(&[-1.0, 0.0, 1.0, 1.0])),
            Err(Error::UnclampedField { vertex: 1, .. })
        ));
        assert!(matches!(
            marching_tetrahedra(&mesh, &field(&[-1.0, 1.0, 1.0])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn sphere_is_closed_genus_zero() {
        let shape = TemplateShape::sphere(Vec3::zeros(), 0.5);
        let mesh = build_band_tetmesh(&shape, 0.1, 0.1).unwrap();
        let phi = clamp_small_phi(&sample_exact_sdf(&shape, &mesh), EPS_CLAMP).unwrap();
        let tri = marching_tetrahedra(&mesh, &phi).unwrap();
        assert!(tri.is_watertight());
        assert_eq!(tri.euler_characteristic(), 2);
        let area = tri.area();
        let exact = 4.0 * std::f64::consts::PI * 0.25;
        assert!((area - exact).abs() / exact < 0.05, "area {area} vs {exact}");
    }

    #[test]
    fn negation_flips_orientation_only() {
        let shape = TemplateShape::capsule(Vec3::zeros(), Vec3::new(0.3, 0.1, 0.0), 0.2);
        let mesh = build_band_tetmesh(&shape, 0.08, 0.1).unwrap();
        let phi = clamp_small_phi(&sample_exact_sdf(&shape, &mesh), EPS_CLAMP).unwrap();
        let a = marching_tetrahedra(&mesh, &phi).unwrap();
        let b = marching_tetrahedra(&mesh, &phi.map(|v| -v).unwrap()).unwrap();
        assert_eq!(a.vertices, b.vertices);
        assert_eq!(a.triangles.len(), b.triangles.len());
        let sorted = |m: &TriMesh| {
            let mut v: Vec<[u32; 3]> = m
                .triangles
                .iter()
                .map(|t| {
                    let mut s = *t;
                    s.sort_unstable();
                    s
                })
                .collect();
            v.sort_unstable();
            v
        };
        assert_eq!(sorted(&a), sorted(&b));
        let directed = |m: &TriMesh| {
            let mut e: Vec<[u32; 2]> =
                m.triangles.iter().flat_map(|t| [[t[0], t[1]], [t[1], t[2]], [t[2], t[0]]]).collect();
            e.sort_unstable();
            e
        };
        let mut reversed: Vec<[u32; 2]> = directed(&b).into_iter().map(|[x, y]| [y, x]).collect();
        reversed.sort_unstable();
        assert_eq!(directed(&a), reversed);
    }
}
