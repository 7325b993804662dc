//! Triangular meshes of the square (-1,1)², their dual graph, and the
//! piecewise constant / piecewise linear field containers living on them.

mod generate;
mod io;

use std::collections::HashMap;

use crate::error::{Error, Result};

pub use generate::{generate_diagonal_mesh, generate_square_mesh, MAX_JITTER};
pub use io::{
    field_to_string, load_field, load_mesh, mesh_to_string, parse_field, parse_mesh, save_field,
    save_mesh, FieldKind,
};

/// Minimal admissible triangle area.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

/// An edge shared by two triangles. `left < right` always holds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteriorEdge {
    pub vertices: [usize; 2],
    pub length: f64,
    pub left: usize,
    pub right: usize,
}

/// An edge on the boundary of the domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub length: f64,
    pub triangle: usize,
}

/// One entry of the dual adjacency of a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DualLink {
    pub neighbor: usize,
    /// Index into [`TriMesh::interior_edges`].
    pub edge: usize,
}

/// A conforming triangulation together with its derived geometry and topology.
///
/// Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    interior_edges: Vec<InteriorEdge>,
    boundary_edges: Vec<BoundaryEdge>,
    areas: Vec<f64>,
    dual_offsets: Vec<usize>,
    dual_links: Vec<DualLink>,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl TriMesh {
    /// Builds a mesh from raw vertex coordinates and triangle connectivity.
    ///
    /// Clockwise triangles are reoriented. Fails on out-of-range indices,
    /// degenerate triangles and non-manifold edges.
    pub fn from_parts(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        let mut tris = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        for (t, &[i, j, k]) in triangles.iter().enumerate() {
            if i >= nv || j >= nv || k >= nv {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t} references a vertex beyond {nv}"
                )));
            }
            if i == j || j == k || i == k {
                return Err(Error::DegenerateTriangle {
                    triangle: t,
                    area: 0.0,
                });
            }
            let a = signed_area(vertices[i], vertices[j], vertices[k]);
            if a.abs() < MIN_TRIANGLE_AREA {
                return Err(Error::DegenerateTriangle {
                    triangle: t,
                    area: a.abs(),
                });
            }
            if a > 0.0 {
                tris.push([i, j, k]);
            } else {
                tris.push([i, k, j]);
            }
            areas.push(a.abs());
        }

        // Edge (sorted vertex pair) -> incident triangles, in first-seen order.
        let mut edge_map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        let mut edge_order = Vec::new();
        for (t, tri) in tris.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let entry = edge_map.entry(key).or_insert_with(|| {
                    edge_order.push(key);
                    Vec::new()
                });
                entry.push(t);
            }
        }

        let mut interior_edges = Vec::new();
        let mut boundary_edges = Vec::new();
        for key in edge_order {
            let owners = &edge_map[&key];
            let length = distance(vertices[key.0], vertices[key.1]);
            match owners.as_slice() {
                [t] => boundary_edges.push(BoundaryEdge {
                    vertices: [key.0, key.1],
                    length,
                    triangle: *t,
                }),
                [a, b] => interior_edges.push(InteriorEdge {
                    vertices: [key.0, key.1],
                    length,
                    left: (*a).min(*b),
                    right: (*a).max(*b),
                }),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "edge ({}, {}) is shared by {} triangles",
                        key.0,
                        key.1,
                        owners.len()
                    )))
                }
            }
        }
        // Deterministic edge order independent of hashing.
        interior_edges.sort_by_key(|e| (e.left, e.right));
        boundary_edges.sort_by_key(|e| (e.triangle, e.vertices));

        let nt = tris.len();
        let mut counts = vec![0usize; nt + 1];
        for e in &interior_edges {
            counts[e.left + 1] += 1;
            counts[e.right + 1] += 1;
        }
        for t in 0..nt {
            counts[t + 1] += counts[t];
        }
        let dual_offsets = counts.clone();
        let mut fill = counts;
        let mut dual_links = vec![
            DualLink {
                neighbor: 0,
                edge: 0
            };
            2 * interior_edges.len()
        ];
        for (idx, e) in interior_edges.iter().enumerate() {
            dual_links[fill[e.left]] = DualLink {
                neighbor: e.right,
                edge: idx,
            };
            fill[e.left] += 1;
            dual_links[fill[e.right]] = DualLink {
                neighbor: e.left,
                edge: idx,
            };
            fill[e.right] += 1;
        }

        Ok(TriMesh {
            vertices,
            triangles: tris,
            interior_edges,
            boundary_edges,
            areas,
            dual_offsets,
            dual_links,
        })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn interior_edges(&self) -> &[InteriorEdge] {
        &self.interior_edges
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Number of distinct edges, interior and boundary.
    pub fn num_edges(&self) -> usize {
        self.interior_edges.len() + self.boundary_edges.len()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Dual neighbors of triangle `t`.
    pub fn neighbors(&self, t: usize) -> &[DualLink] {
        &self.dual_links[self.dual_offsets[t]..self.dual_offsets[t + 1]]
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let (va, vb, vc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(va[0] + vb[0] + vc[0]) / 3.0, (va[1] + vb[1] + vc[1]) / 3.0]
    }

    /// Vertices lying on a boundary edge.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            mask[e.vertices[0]] = true;
            mask[e.vertices[1]] = true;
        }
        mask
    }

    /// Membership mask for a triangle set.
    pub fn mask(&self, subset: &TriangleSet) -> Vec<bool> {
        let mut mask = vec![false; self.num_triangles()];
        for &t in subset.as_slice() {
            mask[t] = true;
        }
        mask
    }

    /// Relative perimeter of a triangle set given as a membership mask.
    pub fn perimeter_of_mask(&self, mask: &[bool]) -> f64 {
        self.interior_edges
            .iter()
            .filter(|e| mask[e.left] != mask[e.right])
            .map(|e| e.length)
            .sum()
    }

    /// Relative perimeter Per(E, Ω): total length of interior edges with
    /// exactly one incident triangle in `subset`. Boundary edges are free.
    pub fn perimeter(&self, subset: &TriangleSet) -> f64 {
        self.perimeter_of_mask(&self.mask(subset))
    }

    /// Discrete total variation of a piecewise constant field.
    pub fn tv_p0(&self, u: &P0Field) -> f64 {
        assert_eq!(u.len(), self.num_triangles(), "P0 field size mismatch");
        let v = u.values();
        self.interior_edges
            .iter()
            .map(|e| e.length * (v[e.left] - v[e.right]).abs())
            .sum()
    }

    /// Sum of per-triangle values over a subset.
    pub fn sum_over(&self, subset: &TriangleSet, per_triangle: &[f64]) -> f64 {
        subset.as_slice().iter().map(|&t| per_triangle[t]).sum()
    }
}

/// A set of triangles, stored as sorted unique indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriangleSet(Vec<usize>);

impl TriangleSet {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        TriangleSet(indices)
    }

    pub fn empty() -> Self {
        TriangleSet(Vec::new())
    }

    pub fn all(num_triangles: usize) -> Self {
        TriangleSet((0..num_triangles).collect())
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        TriangleSet(
            mask.iter()
                .enumerate()
                .filter_map(|(t, &m)| m.then_some(t))
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, t: usize) -> bool {
        self.0.binary_search(&t).is_ok()
    }

    pub fn is_subset_of(&self, other: &TriangleSet) -> bool {
        self.0.iter().all(|&t| other.contains(t))
    }

    /// Checks every index against the triangle count.
    pub fn validate(&self, num_triangles: usize) -> Result<()> {
        match self.0.last() {
            Some(&t) if t >= num_triangles => Err(Error::InvalidArgument(format!(
                "triangle index {t} out of range ({num_triangles} triangles)"
            ))),
            _ => Ok(()),
        }
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl FromIterator<usize> for TriangleSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        TriangleSet::new(iter.into_iter().collect())
    }
}

macro_rules! field_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(values: Vec<f64>) -> Self {
                $name(values)
            }

            pub fn zeros(len: usize) -> Self {
                $name(vec![0.0; len])
            }

            pub fn values(&self) -> &[f64] {
                &self.0
            }

            pub fn values_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }

            pub fn into_values(self) -> Vec<f64> {
                self.0
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn scaled(&self, c: f64) -> Self {
                $name(self.0.iter().map(|v| c * v).collect())
            }

            /// `self += c * other`
            pub fn axpy(&mut self, c: f64, other: &Self) {
                assert_eq!(self.0.len(), other.0.len());
                for (a, b) in self.0.iter_mut().zip(&other.0) {
                    *a += c * b;
                }
            }
        }
    };
}

field_type!(
    /// One value per triangle.
    P0Field
);
field_type!(
    /// One value per vertex.
    P1Field
);

impl P0Field {
    pub fn indicator(mesh: &TriMesh, subset: &TriangleSet) -> Self {
        let mut v = vec![0.0; mesh.num_triangles()];
        for &t in subset.as_slice() {
            v[t] = 1.0;
        }
        P0Field(v)
    }

    /// Evaluates `f` at triangle centroids.
    pub fn from_centroids(mesh: &TriMesh, f: impl Fn(f64, f64) -> f64) -> Self {
        P0Field(
            (0..mesh.num_triangles())
                .map(|t| {
                    let [x, y] = mesh.centroid(t);
                    f(x, y)
                })
                .collect(),
        )
    }
}

impl P1Field {
    /// Nodal interpolation of `f`.
    pub fn from_vertices(mesh: &TriMesh, f: impl Fn(f64, f64) -> f64) -> Self {
        P1Field(mesh.vertices().iter().map(|&[x, y]| f(x, y)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_mesh() -> TriMesh {
        generate_square_mesh(1, 0.0, 0).unwrap()
    }

    #[test]
    fn single_cell_geometry() {
        let m = unit_mesh();
        assert_eq!(m.num_triangles(), 4);
        assert_eq!(m.num_vertices(), 5);
        assert_eq!(m.interior_edges().len(), 4);
        for e in m.interior_edges() {
            assert!((e.length - 2f64.sqrt()).abs() < 1e-15);
        }
        for t in 0..4 {
            assert_eq!(m.neighbors(t).len(), 2);
        }
    }

    #[test]
    fn perimeter_trivial_cases() {
        let m = unit_mesh();
        assert_eq!(m.perimeter(&TriangleSet::all(4)), 0.0);
        assert_eq!(m.perimeter(&TriangleSet::empty()), 0.0);
        let p = m.perimeter(&TriangleSet::new(vec![2]));
        assert!((p - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tv_of_indicator_is_perimeter() {
        let m = generate_square_mesh(6, 0.2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let set: TriangleSet = (0..m.num_triangles())
                .filter(|_| rng.gen_bool(0.4))
                .collect();
            let tv = m.tv_p0(&P0Field::indicator(&m, &set));
            assert_eq!(tv, m.perimeter(&set));
        }
    }

    #[test]
    fn tv_of_constant_is_zero() {
        let m = generate_square_mesh(5, 0.1, 1).unwrap();
        let u = P0Field::new(vec![3.5; m.num_triangles()]);
        assert_eq!(m.tv_p0(&u), 0.0);
    }

    #[test]
    fn tv_of_disjoint_combination() {
        // Oracle: sum of λ_j·Per(E_j) over random disjoint labels.
        let m = generate_square_mesh(8, 0.15, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let labels: Vec<usize> = (0..m.num_triangles())
                .map(|_| rng.gen_range(0..4))
                .collect();
            let lambdas = [
                0.0,
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.1..2.0),
            ];
            let u = P0Field::new(labels.iter().map(|&l| lambdas[l]).collect());
            // With disjoint sets, TV = Σ_j λ_j Per(E_j) only when no two labelled
            // sets touch; compare against the edgewise formula otherwise.
            let touching = m.interior_edges().iter().any(|e| {
                labels[e.left] != labels[e.right] && labels[e.left] != 0 && labels[e.right] != 0
            });
            let per_sum: f64 = (1..4)
                .map(|l| {
                    let set: TriangleSet =
                        (0..m.num_triangles()).filter(|&t| labels[t] == l).collect();
                    lambdas[l] * m.perimeter(&set)
                })
                .sum();
            let tv = m.tv_p0(&u);
            if touching {
                assert!(tv <= per_sum + 1e-12);
            } else {
                assert!((tv - per_sum).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tv_of_separated_sets_is_additive() {
        let m = generate_square_mesh(8, 0.0, 0).unwrap();
        // Two sets in opposite corners, far apart.
        let a: TriangleSet = (0..m.num_triangles())
            .filter(|&t| {
                let [x, y] = m.centroid(t);
                x < -0.5 && y < -0.5
            })
            .collect();
        let b: TriangleSet = (0..m.num_triangles())
            .filter(|&t| {
                let [x, y] = m.centroid(t);
                x > 0.5 && y > 0.5
            })
            .collect();
        let mut u = P0Field::indicator(&m, &a).scaled(1.5);
        u.axpy(0.25, &P0Field::indicator(&m, &b));
        let expected = 1.5 * m.perimeter(&a) + 0.25 * m.perimeter(&b);
        assert!((m.tv_p0(&u) - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_triangle() {
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        let err = TriMesh::from_parts(verts, vec![[0, 1, 2]]).unwrap_err();
        assert!(matches!(err, Error::DegenerateTriangle { triangle: 0, .. }));
    }

    #[test]
    fn reorients_clockwise_triangles() {
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let m = TriMesh::from_parts(verts, vec![[0, 2, 1]]).unwrap();
        let [a, b, c] = m.triangles()[0];
        assert!(signed_area(m.vertices()[a], m.vertices()[b], m.vertices()[c]) > 0.0);
    }
}
