use super::linalg::CsrMatrix;
use crate::error::{Error, Result};
use crate::mesh::{TriMesh, MIN_TRIANGLE_AREA};

/// P1 stiffness and mass matrices plus the P0→P1 load matrix, with the
/// interior blocks needed for homogeneous Dirichlet conditions.
#[derive(Clone, Debug)]
pub struct FemAssembly {
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    load: CsrMatrix,
    boundary: Vec<bool>,
    interior: Vec<usize>,
    stiffness_ii: CsrMatrix,
    mass_ii: CsrMatrix,
    load_i: CsrMatrix,
}

pub fn assemble(mesh: &TriMesh) -> Result<FemAssembly> {
    let nv = mesh.num_vertices();
    let nt = mesh.num_triangles();
    let mut a = Vec::with_capacity(9 * nt);
    let mut m = Vec::with_capacity(9 * nt);
    let mut l = Vec::with_capacity(3 * nt);
    let pts = mesh.vertices();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = tri.map(|v| pts[v]);
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
        if !(area.abs() >= MIN_TRIANGLE_AREA) {
            return Err(Error::DegenerateTriangle { triangle: t, area });
        }
        let area = area.abs();
        // ∇φ_i = (b_i, c_i) / (2·area)
        let mut b = [0.0; 3];
        let mut c = [0.0; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            b[i] = p[j][1] - p[k][1];
            c[i] = p[k][0] - p[j][0];
        }
        for i in 0..3 {
            for j in 0..3 {
                a.push((tri[i], tri[j], (b[i] * b[j] + c[i] * c[j]) / (4.0 * area)));
                let mij = if i == j { area / 6.0 } else { area / 12.0 };
                m.push((tri[i], tri[j], mij));
            }
            l.push((tri[i], t, area / 3.0));
        }
    }
    let stiffness = CsrMatrix::from_triplets(nv, nv, &a);
    let mass = CsrMatrix::from_triplets(nv, nv, &m);
    let load = CsrMatrix::from_triplets(nv, nt, &l);

    let boundary = mesh.boundary_vertex_mask();
    let interior: Vec<usize> = (0..nv).filter(|&v| !boundary[v]).collect();
    let stiffness_ii = stiffness.principal_submatrix(&interior);
    let mass_ii = mass.principal_submatrix(&interior);
    let load_i = {
        let mut trip = Vec::with_capacity(3 * nt);
        for (r, &v) in interior.iter().enumerate() {
            trip.extend(load.row(v).map(|(t, val)| (r, t, val)));
        }
        CsrMatrix::from_triplets(interior.len(), nt, &trip)
    };
    Ok(FemAssembly {
        stiffness,
        mass,
        load,
        boundary,
        interior,
        stiffness_ii,
        mass_ii,
        load_i,
    })
}

impl FemAssembly {
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// `(M01)_{i,T} = ∫_T φ_i dx`
    pub fn load(&self) -> &CsrMatrix {
        &self.load
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior
    }

    pub fn stiffness_interior(&self) -> &CsrMatrix {
        &self.stiffness_ii
    }

    pub fn mass_interior(&self) -> &CsrMatrix {
        &self.mass_ii
    }

    /// Interior rows of the load matrix.
    pub fn load_interior(&self) -> &CsrMatrix {
        &self.load_i
    }

    pub(crate) fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&v| full[v]).collect()
    }

    pub(crate) fn extend(&self, interior_values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.boundary.len()];
        for (&v, &x) in self.interior.iter().zip(interior_values) {
            out[v] = x;
        }
        out
    }
}
