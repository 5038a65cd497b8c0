use std::collections::HashMap;

use crate::Vec3;

/// Where a triangle-mesh vertex came from: the tet edge it sits on and its interpolation
/// weight, `v = (1 - weight) * u[k1] + weight * u[k2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeCrossing {
    pub edge: u32,
    pub k1: u32,
    pub k2: u32,
    pub weight: f64,
}

/// Triangle mesh with optional marching-tetrahedra provenance.
///
/// Meshes produced by [`marching_tetrahedra`](super::marching_tetrahedra) carry one
/// [`EdgeCrossing`] per vertex and one source tet per triangle; meshes built from raw arrays
/// leave both empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub provenance: Vec<EdgeCrossing>,
    pub source_tet: Vec<u32>,
}

impl TriMesh {
    pub fn from_raw(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        Self {
            vertices,
            triangles,
            ..Self::default()
        }
    }

    pub fn has_provenance(&self) -> bool {
        !self.vertices.is_empty() && self.provenance.len() == self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.vertices[i as usize])
    }

    /// Un-normalized face normal `(v2 - v1) × (v3 - v1)`.
    pub fn face_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    /// Counts how often each undirected edge is used.
    pub fn edge_use_counts(&self) -> HashMap<[u32; 2], usize> {
        let mut uses = HashMap::new();
        for tri in &self.triangles {
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                let e = if tri[a] < tri[b] { [tri[a], tri[b]] } else { [tri[b], tri[a]] };
                *uses.entry(e).or_insert(0) += 1;
            }
        }
        uses
    }

    /// Every undirected edge shared by exactly two triangles, traversed once in each
    /// direction (consistent orientation).
    pub fn is_watertight(&self) -> bool {
        let mut directed: HashMap<[u32; 2], usize> = HashMap::new();
        for tri in &self.triangles {
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                *directed.entry([tri[a], tri[b]]).or_insert(0) += 1;
            }
        }
        directed
            .iter()
            .all(|(&[a, b], &n)| n == 1 && directed.get(&[b, a]) == Some(&1))
    }

    /// `V - E + F` over referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for tri in &self.triangles {
            for &i in tri {
                used[i as usize] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edge_use_counts().len() as i64 + self.triangles.len() as i64
    }

    /// Surface area.
    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| 0.5 * self.face_normal(t).norm()).sum()
    }

    /// Keeps the triangles for which `keep` is true; vertices and provenance are untouched.
    pub fn retain_triangles(&self, keep: impl Fn(usize) -> bool) -> Self {
        let kept: Vec<usize> = (0..self.triangles.len()).filter(|&t| keep(t)).collect();
        Self {
            vertices: self.vertices.clone(),
            triangles: kept.iter().map(|&t| self.triangles[t]).collect(),
            provenance: self.provenance.clone(),
            source_tet: if self.source_tet.len() == self.triangles.len() {
                kept.iter().map(|&t| self.source_tet[t]).collect()
            } else {
                Vec::new()
            },
        }
    }

    /// Applies `f` to every vertex position.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            ..self.clone()
        }
    }
}
