use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TriMesh;
use crate::error::{Error, Result};

/// Largest admissible relative jitter.
pub const MAX_JITTER: f64 = 0.3;

/// Crisscross triangulation of (-1,1)² with `n × n` cells, each split into
/// four triangles around its center vertex.
///
/// Interior vertices are displaced by a seeded pseudorandom offset of length
/// at most `jitter · h / 2` (h = 2/n, well inside the `jitter · h` bound),
/// mirrored across both coordinate axes so the mesh keeps the symmetry of the
/// square. Boundary vertices stay fixed and vertices on an axis only move
/// along it.
pub fn generate_square_mesh(n: usize, jitter: f64, seed: u64) -> Result<TriMesh> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "subdivision count must be >= 1".into(),
        ));
    }
    if !(0.0..=MAX_JITTER).contains(&jitter) {
        return Err(Error::InvalidArgument(format!(
            "jitter {jitter} outside [0, {MAX_JITTER}]"
        )));
    }
    let h = 2.0 / n as f64;
    let radius = 0.5 * jitter * h;
    // Half-cell lattice: corners at even (X, Y), centers at odd; 0..=2n.
    let m = 2 * n;
    let coord = |k: usize| -1.0 + k as f64 * (h / 2.0);

    let corner_index = |i: usize, j: usize| j * (n + 1) + i;
    let center_index = |i: usize, j: usize| (n + 1) * (n + 1) + j * n + i;

    let mut lattice = Vec::with_capacity((n + 1) * (n + 1) + n * n);
    for j in 0..=n {
        for i in 0..=n {
            lattice.push((2 * i, 2 * j));
        }
    }
    for j in 0..n {
        for i in 0..n {
            lattice.push((2 * i + 1, 2 * j + 1));
        }
    }

    // Draw one offset per symmetry orbit, in a fixed lattice order.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offsets = std::collections::BTreeMap::new();
    let mut canonical: Vec<(usize, usize)> = lattice
        .iter()
        .map(|&(x, y)| (x.min(m - x), y.min(m - y)))
        .collect();
    canonical.sort_unstable();
    canonical.dedup();
    for key in canonical {
        let (x, y) = key;
        let on_boundary = x == 0 || y == 0;
        let offset = if radius == 0.0 || on_boundary {
            [0.0, 0.0]
        } else {
            // Uniform in the disc of the given radius.
            let r = radius * rng.gen::<f64>().sqrt();
            let phi = rng.gen::<f64>() * std::f64::consts::TAU;
            [r * phi.cos(), r * phi.sin()]
        };
        offsets.insert(key, offset);
    }

    let vertices: Vec<[f64; 2]> = lattice
        .iter()
        .map(|&(x, y)| {
            let key = (x.min(m - x), y.min(m - y));
            let [dx, dy] = offsets[&key];
            let sx = match x.cmp(&n) {
                std::cmp::Ordering::Less => 1.0,
                std::cmp::Ordering::Equal => 0.0,
                std::cmp::Ordering::Greater => -1.0,
            };
            let sy = match y.cmp(&n) {
                std::cmp::Ordering::Less => 1.0,
                std::cmp::Ordering::Equal => 0.0,
                std::cmp::Ordering::Greater => -1.0,
            };
            [coord(x) + sx * dx, coord(y) + sy * dy]
        })
        .collect();

    let mut triangles = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            let c = center_index(i, j);
            let sw = corner_index(i, j);
            let se = corner_index(i + 1, j);
            let ne = corner_index(i + 1, j + 1);
            let nw = corner_index(i, j + 1);
            triangles.push([sw, se, c]);
            triangles.push([se, ne, c]);
            triangles.push([ne, nw, c]);
            triangles.push([nw, sw, c]);
        }
    }
    TriMesh::from_parts(vertices, triangles)
}

/// Structured triangulation of (-1,1)² with `nx × ny` cells, each cut along
/// its south-west/north-east diagonal. Produces `2·nx·ny` triangles; handy
/// for meshes small enough to enumerate every triangle subset.
pub fn generate_diagonal_mesh(nx: usize, ny: usize) -> Result<TriMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("cell counts must be >= 1".into()));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([
                -1.0 + 2.0 * i as f64 / nx as f64,
                -1.0 + 2.0 * j as f64 / ny as f64,
            ]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::from_parts(vertices, triangles)
}
