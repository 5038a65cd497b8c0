use crate::mesh::TemplateShape;
use crate::{Error, Result, Vec3};

/// Local vertex pairs of the six edges of a tetrahedron, in the order used by
/// [`TetMesh::tet_edges`].
pub const LOCAL_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

const MIN_TET_VOLUME: f64 = 1e-15;

/// Fixed-topology tetrahedral mesh with a deterministic global edge numbering.
///
/// Edges are the sorted, deduplicated vertex pairs `(k1, k2)` with `k1 < k2`; an edge's
/// ordinal is its position in that list. The numbering depends on topology alone, so two
/// meshes with the same tets share byte-identical edge tables.
#[derive(Clone, Debug, PartialEq)]
pub struct TetMesh {
    vertices: Vec<Vec3>,
    tets: Vec<[u32; 4]>,
    edges: Vec<[u32; 2]>,
    tet_edges: Vec<[u32; 6]>,
    neighbor_offsets: Vec<u32>,
    neighbors: Vec<u32>,
    avg_edge_length: f64,
}

impl TetMesh {
    /// Builds a mesh from raw arrays. Negatively oriented tets are flipped by swapping their
    /// last two vertices; degenerate tets are rejected.
    pub fn new(vertices: Vec<Vec3>, mut tets: Vec<[u32; 4]>) -> Result<Self> {
        if vertices.is_empty() || tets.is_empty() {
            return Err(Error::InvalidArgument("tet mesh must have vertices and tets".into()));
        }
        if let Some(p) = vertices.iter().find(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite(format!("vertex position {p:?}")));
        }
        let n = vertices.len();
        for (t, tet) in tets.iter_mut().enumerate() {
            if tet.iter().any(|&k| k as usize >= n) {
                return Err(Error::InvalidArgument(format!("tet {t} references a missing vertex")));
            }
            let vol = signed_volume(&tet.map(|k| vertices[k as usize]));
            if vol.abs() <= MIN_TET_VOLUME {
                return Err(Error::DegenerateTet(t));
            }
            if vol < 0.0 {
                tet.swap(2, 3);
            }
        }

        let mut edges: Vec<[u32; 2]> = tets
            .iter()
            .flat_map(|t| LOCAL_EDGES.map(|(a, b)| ordered(t[a], t[b])))
            .collect();
        edges.sort_unstable();
        edges.dedup();

        let tet_edges = tets
            .iter()
            .map(|t| {
                LOCAL_EDGES.map(|(a, b)| {
                    edges.binary_search(&ordered(t[a], t[b])).expect("edge was collected") as u32
                })
            })
            .collect();

        let mut degree = vec![0u32; n + 1];
        for e in &edges {
            degree[e[0] as usize + 1] += 1;
            degree[e[1] as usize + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let neighbor_offsets = degree;
        let mut fill = neighbor_offsets.clone();
        let mut neighbors = vec![0u32; 2 * edges.len()];
        for e in &edges {
            for (a, b) in [(e[0], e[1]), (e[1], e[0])] {
                neighbors[fill[a as usize] as usize] = b;
                fill[a as usize] += 1;
            }
        }

        let avg_edge_length = edges
            .iter()
            .map(|e| (vertices[e[0] as usize] - vertices[e[1] as usize]).norm())
            .sum::<f64>()
            / edges.len() as f64;

        Ok(Self {
            vertices,
            tets,
            edges,
            tet_edges,
            neighbor_offsets,
            neighbors,
            avg_edge_length,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[u32; 4]] {
        &self.tets
    }

    /// Global edge list, sorted lexicographically.
    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    /// Per-tet edge ordinals in [`LOCAL_EDGES`] order.
    pub fn tet_edges(&self) -> &[[u32; 6]] {
        &self.tet_edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// One-ring neighbours of vertex `k`, ascending.
    pub fn neighbors(&self, k: usize) -> &[u32] {
        &self.neighbors[self.neighbor_offsets[k] as usize..self.neighbor_offsets[k + 1] as usize]
    }

    /// Ordinal of the edge joining `a` and `b`, if it exists.
    pub fn edge_ordinal(&self, a: u32, b: u32) -> Option<usize> {
        self.edges.binary_search(&ordered(a, b)).ok()
    }

    pub fn tet_positions(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|k| self.vertices[k as usize])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        signed_volume(&self.tet_positions(t))
    }

    /// Mean length over the deduplicated edge list.
    pub fn average_edge_length(&self) -> f64 {
        self.avg_edge_length
    }

    /// Same topology with every vertex moved; used for skinning.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::LengthMismatch {
                expected: self.vertices.len(),
                got: vertices.len(),
            });
        }
        Self::new(vertices, self.tets.clone())
    }

    /// Point-in-tet test by barycentric coordinates with a small tolerance.
    pub fn tet_contains(&self, t: usize, p: &Vec3, tol: f64) -> bool {
        let [a, b, c, d] = self.tet_positions(t);
        let vol = signed_volume(&[a, b, c, d]);
        let bary = [
            signed_volume(&[*p, b, c, d]),
            signed_volume(&[a, *p, c, d]),
            signed_volume(&[a, b, *p, d]),
            signed_volume(&[a, b, c, *p]),
        ];
        bary.iter().all(|w| w / vol >= -tol)
    }
}

/// Mean edge length of a mesh; identical to [`TetMesh::average_edge_length`].
pub fn average_edge_length(mesh: &TetMesh) -> f64 {
    mesh.average_edge_length()
}

pub(crate) fn signed_volume(p: &[Vec3; 4]) -> f64 {
    (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0])) / 6.0
}

/// Six tets around the main diagonal of a cube whose corner `c` has offset
/// `(c >> 2 & 1, c >> 1 & 1, c & 1)`. Each tet walks from corner 0 to corner 7 along the
/// axes in one of the six orders.
pub(crate) fn split_cube(corners: &[u32; 8]) -> [[u32; 4]; 6] {
    const AXIS_ORDERS: [[usize; 3]; 6] =
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    AXIS_ORDERS.map(|order| {
        let mut c = 0usize;
        let mut tet = [corners[0]; 4];
        for (step, axis) in order.into_iter().enumerate() {
            c |= 4 >> axis;
            tet[step + 1] = corners[c];
        }
        tet
    })
}

fn ordered(a: u32, b: u32) -> [u32; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Tetrahedralizes the grid cells touched by the inflated template.
///
/// The grid covers the template bounds padded by `inflation` plus one cell. A cell is kept
/// when `shape.sdf - inflation < 0` at any of its corners, and every kept cube is split
/// into six tets sharing the main diagonal from its minimum to its maximum corner, so
/// faces conform across neighbouring cubes.
pub fn build_band_tetmesh(shape: &TemplateShape, cell_size: f64, inflation: f64) -> Result<TetMesh> {
    if !(cell_size > 0.0) || !cell_size.is_finite() {
        return Err(Error::InvalidArgument("cell size must be positive".into()));
    }
    if !(inflation >= 0.0) || !inflation.is_finite() {
        return Err(Error::InvalidArgument("inflation must be non-negative".into()));
    }
    shape.validate()?;

    let (lo, hi) = shape.bounding_box();
    let pad = inflation + cell_size;
    let origin = lo.add_scalar(-pad);
    let dims: [usize; 3] = std::array::from_fn(|a| {
        let cells = ((hi[a] - lo[a] + 2.0 * pad) / cell_size).ceil();
        (cells as usize).max(1)
    });
    let corner_dims = dims.map(|d| d + 1);
    let corner_index = |i: usize, j: usize, k: usize| (i * corner_dims[1] + j) * corner_dims[2] + k;
    let corner_pos = |i: usize, j: usize, k: usize| {
        origin + Vec3::new(i as f64, j as f64, k as f64) * cell_size
    };

    let num_corners = corner_dims.iter().product::<usize>();
    let mut inside = vec![false; num_corners];
    for i in 0..corner_dims[0] {
        for j in 0..corner_dims[1] {
            for k in 0..corner_dims[2] {
                inside[corner_index(i, j, k)] = shape.sdf(&corner_pos(i, j, k)) - inflation < 0.0;
            }
        }
    }

    let mut cells = Vec::new();
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                let any_inside = (0..8).any(|c| {
                    inside[corner_index(i + (c >> 2 & 1), j + (c >> 1 & 1), k + (c & 1))]
                });
                if any_inside {
                    cells.push([i, j, k]);
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::EmptyDomain);
    }

    // Number only the corners that some kept cell uses, in grid order.
    let mut used = vec![false; num_corners];
    for &[i, j, k] in &cells {
        for c in 0..8 {
            used[corner_index(i + (c >> 2 & 1), j + (c >> 1 & 1), k + (c & 1))] = true;
        }
    }
    let mut vertex_of = vec![u32::MAX; num_corners];
    let mut vertices = Vec::new();
    for i in 0..corner_dims[0] {
        for j in 0..corner_dims[1] {
            for k in 0..corner_dims[2] {
                let c = corner_index(i, j, k);
                if used[c] {
                    vertex_of[c] = vertices.len() as u32;
                    vertices.push(corner_pos(i, j, k));
                }
            }
        }
    }

    let mut tets = Vec::with_capacity(cells.len() * 6);
    for &[i, j, k] in &cells {
        let corners: [u32; 8] = std::array::from_fn(|c| {
            vertex_of[corner_index(i + (c >> 2 & 1), j + (c >> 1 & 1), k + (c & 1))]
        });
        tets.extend(split_cube(&corners));
    }
    TetMesh::new(vertices, tets)
}
