//! Exhaustive minimization of `−Σ_{T∈E} c_T + Per(E)` for tiny meshes.

use tvfcgcg::mesh::{TriMesh, TriangleSet};
use tvfcgcg::{Error, Result};

/// Largest mesh the enumeration accepts.
pub const MAX_ORACLE_TRIANGLES: usize = 22;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleCut {
    pub energy: f64,
    /// Union of all subsets attaining the minimum (within `tie_tol`).
    pub maximal_minimizer: TriangleSet,
    pub minimizers: usize,
}

pub fn brute_force_cut(mesh: &TriMesh, weights: &[f64], tie_tol: f64) -> Result<OracleCut> {
    let n = mesh.num_triangles();
    if n > MAX_ORACLE_TRIANGLES {
        return Err(Error::InvalidArgument(format!(
            "mesh has {n} triangles; enumeration is limited to {MAX_ORACLE_TRIANGLES}"
        )));
    }
    if weights.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {n} triangles",
            weights.len()
        )));
    }
    let energy_of = |bits: u32| -> f64 {
        let gain: f64 = (0..n)
            .filter(|&t| bits >> t & 1 == 1)
            .map(|t| weights[t])
            .sum();
        let per: f64 = mesh
            .interior_edges()
            .iter()
            .filter(|e| (bits >> e.left & 1) != (bits >> e.right & 1))
            .map(|e| e.length)
            .sum();
        per - gain
    };
    let energies: Vec<f64> = (0..1u32 << n).map(energy_of).collect();
    let best = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut union = 0u32;
    let mut count = 0;
    for (bits, &e) in energies.iter().enumerate() {
        if e <= best + tie_tol {
            union |= bits as u32;
            count += 1;
        }
    }
    Ok(OracleCut {
        energy: best,
        maximal_minimizer: (0..n).filter(|&t| union >> t & 1 == 1).collect(),
        minimizers: count,
    })
}
