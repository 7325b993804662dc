use super::solve_mincut;
use crate::error::{Error, Result};
use crate::mesh::{TriMesh, TriangleSet};

/// Relative (to `Σ|c_T|`) gain below which a zero-perimeter set is treated
/// as having no gain.
pub const ZERO_PERIMETER_GAIN_RTOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DinkelbachStatus {
    Converged,
    /// The best set has zero relative perimeter (the whole domain) and
    /// positive gain, so its ratio is unbounded.
    Degenerate,
    /// Iteration cap hit; the best set found so far is returned.
    MaxIterReached,
}

#[derive(Clone, Debug)]
pub struct DinkelbachOutcome {
    pub subset: TriangleSet,
    /// `Σ_{T∈E} c_T / Per(E, Ω)`; infinite when degenerate.
    pub ratio: f64,
    /// Number of cut problems solved, including the initial one.
    pub cuts: usize,
    pub status: DinkelbachStatus,
}

/// Maximizes `Σ_{T∈E} c_T / Per(E, Ω)` by a Dinkelbach iteration.
///
/// Starts from the minimizer of `−Σ c + Per` (one cut), then repeatedly sets
/// `α = Per(E)/Σ_E c` and replaces `E` by the maximal minimizer of
/// `−α Σ_E c + Per(E)` until the ratio stops improving by more than `tol`
/// (relative).
pub fn dinkelbach_insert(
    mesh: &TriMesh,
    weights: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<DinkelbachOutcome> {
    if !weights.iter().any(|&c| c > 0.0) {
        return Err(Error::NoAdmissibleSet);
    }
    let first = solve_mincut(mesh, weights)?;
    let start = if mesh.sum_over(&first.subset, weights) > 0.0 {
        first.subset
    } else {
        (0..mesh.num_triangles())
            .filter(|&t| weights[t] > 0.0)
            .collect()
    };
    let mut outcome = dinkelbach_from(mesh, weights, start, tol, max_iter)?;
    outcome.cuts += 1;
    Ok(outcome)
}

/// Dinkelbach iteration from a given set with positive gain. The returned
/// cut count excludes whatever produced `start`.
pub fn dinkelbach_from(
    mesh: &TriMesh,
    weights: &[f64],
    start: TriangleSet,
    tol: f64,
    max_iter: usize,
) -> Result<DinkelbachOutcome> {
    let ratio_of =
        |set: &TriangleSet| -> (f64, f64) { (mesh.sum_over(set, weights), mesh.perimeter(set)) };
    let (gain, per) = ratio_of(&start);
    if gain <= 0.0 {
        return Err(Error::InvalidArgument(
            "Dinkelbach start set must have positive gain".into(),
        ));
    }
    let scale: f64 = weights.iter().map(|c| c.abs()).sum();
    let mut current = start;
    let mut current_gain = gain;
    let mut current_per = per;
    let mut cuts = 0;
    for _ in 0..max_iter {
        if current_per == 0.0 {
            return Ok(DinkelbachOutcome {
                subset: current,
                ratio: f64::INFINITY,
                cuts,
                status: DinkelbachStatus::Degenerate,
            });
        }
        let alpha = current_per / current_gain;
        let w: Vec<f64> = weights.iter().map(|c| alpha * c).collect();
        let sol = solve_mincut(mesh, &w)?;
        cuts += 1;
        let (gain, per) = ratio_of(&sol.subset);
        // A zero-perimeter set (Ω) only counts if its gain is not round-off.
        let improves = if per == 0.0 {
            gain > ZERO_PERIMETER_GAIN_RTOL * scale
        } else {
            gain > 0.0 && gain * current_per > current_gain * per * (1.0 + tol)
        };
        if !improves {
            return Ok(DinkelbachOutcome {
                ratio: current_gain / current_per,
                subset: current,
                cuts,
                status: DinkelbachStatus::Converged,
            });
        }
        current = sol.subset;
        current_gain = gain;
        current_per = per;
    }
    let ratio = if current_per == 0.0 {
        f64::INFINITY
    } else {
        current_gain / current_per
    };
    Ok(DinkelbachOutcome {
        subset: current,
        ratio,
        cuts,
        status: DinkelbachStatus::MaxIterReached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_diagonal_mesh, generate_square_mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force_ratio(mesh: &TriMesh, w: &[f64]) -> (f64, TriangleSet) {
        let n = mesh.num_triangles();
        let mut best = (f64::NEG_INFINITY, TriangleSet::empty());
        for bits in 1u32..(1 << n) {
            let mask: Vec<bool> = (0..n).map(|t| bits >> t & 1 == 1).collect();
            let per = mesh.perimeter_of_mask(&mask);
            let gain: f64 = (0..n).filter(|&t| mask[t]).map(|t| w[t]).sum();
            if per > 0.0 && gain > 0.0 && gain / per > best.0 {
                best = (gain / per, TriangleSet::from_mask(&mask));
            }
        }
        best
    }

    #[test]
    fn matches_exhaustive_ratio_on_tiny_meshes() {
        let mesh = generate_diagonal_mesh(3, 2).unwrap();
        assert_eq!(mesh.num_triangles(), 12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            // Non-positive total gain keeps Ω (ratio +∞) out of play.
            let mut w: Vec<f64> = (0..12)
                .map(|t| {
                    let [x, _] = mesh.centroid(t);
                    if x < -0.4 {
                        -1.0
                    } else {
                        rng.gen_range(-1.0..2.0)
                    }
                })
                .collect();
            let total: f64 = w.iter().sum();
            if total > 0.0 {
                w.iter_mut().for_each(|c| *c -= total / 12.0 + 0.01);
            }
            let (ratio, set) = brute_force_ratio(&mesh, &w);
            let out = dinkelbach_insert(&mesh, &w, 1e-12, 100).unwrap();
            assert_eq!(out.status, DinkelbachStatus::Converged);
            assert!(
                (out.ratio - ratio).abs() <= 1e-9 * ratio.abs(),
                "{} vs {}",
                out.ratio,
                ratio
            );
            let found = mesh.sum_over(&set, &w) / mesh.perimeter(&set);
            assert!((found - out.ratio).abs() <= 1e-9 * ratio.abs());
        }
    }

    #[test]
    fn two_clusters_pick_the_denser() {
        let mesh = generate_square_mesh(2, 0.0, 0).unwrap();
        // Cluster A: one cell's triangles, strongly positive; B: single
        // triangle elsewhere, weakly positive.
        let mut w = vec![-1.5; 16];
        w[..4].fill(3.0);
        w[13] = 0.4;
        let (ratio, set) = brute_force_ratio(&mesh, &w);
        let out = dinkelbach_insert(&mesh, &w, 1e-12, 100).unwrap();
        assert_eq!(out.subset, set);
        assert!((out.ratio - ratio).abs() < 1e-9 * ratio);
        assert!(out.subset.as_slice().iter().all(|&t| t < 4));
    }

    #[test]
    fn uniform_gain_is_degenerate() {
        let mesh = generate_square_mesh(3, 0.1, 0).unwrap();
        let w: Vec<f64> = mesh.areas().to_vec();
        let out = dinkelbach_insert(&mesh, &w, 1e-10, 50).unwrap();
        assert_eq!(out.status, DinkelbachStatus::Degenerate);
        assert_eq!(out.subset.len(), mesh.num_triangles());
        assert!(out.ratio.is_infinite());
    }

    #[test]
    fn non_positive_weights_have_no_admissible_set() {
        let mesh = generate_square_mesh(2, 0.0, 0).unwrap();
        let err = dinkelbach_insert(&mesh, &[-1.0; 16], 1e-10, 10).unwrap_err();
        assert!(matches!(err, Error::NoAdmissibleSet));
    }

    #[test]
    fn iteration_cap_is_flagged() {
        let mesh = generate_square_mesh(4, 0.1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w: Vec<f64> = (0..mesh.num_triangles())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let out = dinkelbach_insert(&mesh, &w, 1e-12, 0).unwrap();
        assert_eq!(out.status, DinkelbachStatus::MaxIterReached);
        assert_eq!(out.cuts, 1);
    }
}
