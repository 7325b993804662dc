//! Fully-corrective coefficient update.
//!
//! Minimizes `(1/2α)(λᵀGλ − 2bᵀλ + ‖y_d‖²) + πᵀλ` subject to `λ_j ≥ 0`,
//! optionally leaving one index free, with a primal active-set method.
//! Indices held at their bound are exactly zero, so pruning needs no
//! threshold.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// KKT tolerance in gradient units used for active-set decisions.
pub const KKT_TOLERANCE: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct ReducedProblem {
    /// Gram matrix of observations in the mass inner product, row-major.
    pub gram: DMatrix<f64>,
    /// `b_j = (o_j, y_d)_M`
    pub linear: DVector<f64>,
    pub perimeters: DVector<f64>,
    pub alpha: f64,
    /// `‖y_d‖²_M`; only shifts the objective value.
    pub target_norm2: f64,
    /// Index whose coefficient may take either sign.
    pub free_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients {
    pub lambda: Vec<f64>,
    pub objective: f64,
    /// Largest KKT violation of the gradient, in objective units.
    pub kkt_residual: f64,
    pub iterations: usize,
    /// A face system had to be regularized.
    pub regularized: bool,
    /// The iteration cap was hit before the KKT conditions were met.
    pub capped: bool,
}

impl ReducedProblem {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.gram.nrows() != n || self.gram.ncols() != n || self.perimeters.len() != n {
            return Err(Error::InvalidArgument(
                "reduced problem dimensions disagree".into(),
            ));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArgument("alpha must be positive".into()));
        }
        if self.free_index.is_some_and(|f| f >= n) {
            return Err(Error::InvalidArgument("free index out of range".into()));
        }
        if self.perimeters.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidArgument(
                "perimeters must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn objective(&self, lambda: &[f64]) -> f64 {
        let l = DVector::from_column_slice(lambda);
        let quad = l.dot(&(&self.gram * &l));
        (quad - 2.0 * self.linear.dot(&l) + self.target_norm2) / (2.0 * self.alpha)
            + self.perimeters.dot(&l)
    }

    /// `(1/α)(Gλ − b) + π`
    pub fn gradient(&self, lambda: &[f64]) -> Vec<f64> {
        let l = DVector::from_column_slice(lambda);
        let g = (&self.gram * &l - &self.linear) / self.alpha + &self.perimeters;
        g.as_slice().to_vec()
    }

    /// Largest violation of the KKT conditions at `lambda`.
    pub fn kkt_residual(&self, lambda: &[f64]) -> f64 {
        let g = self.gradient(lambda);
        (0..self.dim())
            .map(|j| {
                if Some(j) == self.free_index || lambda[j] > 0.0 {
                    g[j].abs()
                } else {
                    (-g[j]).max(0.0) + (-lambda[j]).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    fn is_constrained(&self, j: usize) -> bool {
        Some(j) != self.free_index
    }
}

/// Solves the reduced problem, starting from `warm` (projected onto the
/// feasible set) or from zero.
pub fn solve_coeffs(rp: &ReducedProblem, warm: Option<&[f64]>) -> Result<Coefficients> {
    rp.validate()?;
    let n = rp.dim();
    let mut lambda: Vec<f64> = match warm {
        Some(w) if w.len() == n => w.to_vec(),
        Some(_) => return Err(Error::InvalidArgument("warm start has wrong length".into())),
        None => vec![0.0; n],
    };
    for (j, l) in lambda.iter_mut().enumerate() {
        if !l.is_finite() || (rp.is_constrained(j) && *l <= 0.0) {
            *l = 0.0;
        }
    }
    if n == 0 {
        return Ok(Coefficients {
            lambda,
            objective: rp.target_norm2 / (2.0 * rp.alpha),
            kkt_residual: 0.0,
            iterations: 0,
            regularized: false,
            capped: false,
        });
    }

    // Work in α-scaled units: minimize ½λᵀGλ − cᵀλ with c = b − απ.
    let c: DVector<f64> = &rp.linear - &rp.perimeters * rp.alpha;
    // Multipliers are compared in gradient units, (1/α)(Gλ − b) + π, with a
    // floor at the round-off level of the α-scaled quantities.
    let scale = c.amax().max(rp.gram.diagonal().amax());
    let tol = (KKT_TOLERANCE * rp.alpha).max(16.0 * f64::EPSILON * scale);
    let mut at_bound: Vec<bool> = (0..n)
        .map(|j| rp.is_constrained(j) && lambda[j] == 0.0)
        .collect();
    let mut regularized = false;
    let max_iter = 100 * n.max(1);
    let mut iterations = 0;
    let mut capped = true;

    while iterations < max_iter {
        iterations += 1;
        let free: Vec<usize> = (0..n).filter(|&j| !at_bound[j]).collect();
        let target = face_minimizer(&rp.gram, &c, &free, &mut regularized)?;
        let mut step_max = 1.0;
        let mut blocking = None;
        for (k, &j) in free.iter().enumerate() {
            let d = target[k] - lambda[j];
            if rp.is_constrained(j) && d < 0.0 {
                let t = lambda[j] / -d;
                if t < step_max {
                    step_max = t;
                    blocking = Some(j);
                }
            }
        }
        for (k, &j) in free.iter().enumerate() {
            lambda[j] += step_max * (target[k] - lambda[j]);
        }
        if let Some(j) = blocking {
            lambda[j] = 0.0;
            at_bound[j] = true;
            continue;
        }
        // Face optimum reached; release the first bound index whose
        // multiplier has the wrong sign (Bland's rule).
        let lam = DVector::from_column_slice(&lambda);
        let grad = &rp.gram * &lam - &c;
        match (0..n).find(|&j| at_bound[j] && grad[j] < -tol) {
            Some(j) => at_bound[j] = false,
            None => {
                capped = false;
                break;
            }
        }
    }
    let objective = rp.objective(&lambda);
    let kkt_residual = rp.kkt_residual(&lambda);
    Ok(Coefficients {
        lambda,
        objective,
        kkt_residual,
        iterations,
        regularized,
        capped,
    })
}

/// Minimizer of ½λᵀGλ − cᵀλ over the free coordinates with the others at
/// zero, by Cholesky with two steps of iterative refinement.
fn face_minimizer(
    g: &DMatrix<f64>,
    c: &DVector<f64>,
    free: &[usize],
    regularized: &mut bool,
) -> Result<Vec<f64>> {
    if free.is_empty() {
        return Ok(Vec::new());
    }
    let m = free.len();
    let sub = DMatrix::from_fn(m, m, |r, s| g[(free[r], free[s])]);
    let rhs = DVector::from_fn(m, |r, _| c[free[r]]);
    let trace = sub.trace();
    let mut shift = 0.0;
    let mut system = sub.clone();
    let chol = loop {
        if let Some(ch) = system.clone().cholesky() {
            break ch;
        }
        shift = if shift == 0.0 {
            1e-12 * trace.max(f64::MIN_POSITIVE) / m as f64
        } else {
            shift * 100.0
        };
        if !shift.is_finite() || shift > trace.abs().max(1.0) {
            return Err(Error::LinearSolver(
                "coefficient Gram matrix cannot be factored".into(),
            ));
        }
        *regularized = true;
        system = &sub + DMatrix::identity(m, m) * shift;
    };
    let mut x = chol.solve(&rhs);
    for _ in 0..2 {
        let r = &rhs - &system * &x;
        x += chol.solve(&r);
    }
    Ok(x.as_slice().to_vec())
}

/// Drops entries whose coefficient is exactly zero, keeping order. The entry
/// at `keep` (the Ω atom) is never dropped.
pub fn prune<T>(lambda: &[f64], entries: Vec<T>, keep: Option<usize>) -> (Vec<T>, Vec<f64>) {
    assert_eq!(lambda.len(), entries.len());
    let mut kept = Vec::with_capacity(entries.len());
    let mut kept_lambda = Vec::with_capacity(entries.len());
    for (j, e) in entries.into_iter().enumerate() {
        if lambda[j] != 0.0 || Some(j) == keep {
            kept.push(e);
            kept_lambda.push(lambda[j]);
        }
    }
    (kept, kept_lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(
        gram: DMatrix<f64>,
        b: Vec<f64>,
        pi: Vec<f64>,
        alpha: f64,
        free: Option<usize>,
    ) -> ReducedProblem {
        ReducedProblem {
            gram,
            linear: DVector::from_vec(b),
            perimeters: DVector::from_vec(pi),
            alpha,
            target_norm2: 1.0,
            free_index: free,
        }
    }

    fn random_instance(rng: &mut impl Rng, dim: usize, free: Option<usize>) -> ReducedProblem {
        let a = DMatrix::from_fn(dim + 2, dim, |_, _| rng.gen_range(-1.0..1.0));
        let gram = a.transpose() * &a + DMatrix::identity(dim, dim) * 0.05;
        let b = (0..dim).map(|_| rng.gen_range(-1.0..1.5)).collect();
        let pi = (0..dim)
            .map(|j| {
                if Some(j) == free {
                    0.0
                } else {
                    rng.gen_range(0.0..2.0)
                }
            })
            .collect();
        problem(gram, b, pi, rng.gen_range(0.05..1.0), free)
    }

    /// Projected gradient with step 1/L, run far past convergence.
    fn projected_gradient(rp: &ReducedProblem) -> Vec<f64> {
        let n = rp.dim();
        let lip = rp.gram.symmetric_eigenvalues().amax() / rp.alpha;
        let mut x = vec![0.0; n];
        for _ in 0..200_000 {
            let g = rp.gradient(&x);
            let mut moved = 0.0f64;
            for j in 0..n {
                let mut v = x[j] - g[j] / lip;
                if rp.is_constrained(j) {
                    v = v.max(0.0);
                }
                moved = moved.max((v - x[j]).abs());
                x[j] = v;
            }
            if moved < 1e-15 {
                break;
            }
        }
        x
    }

    #[test]
    fn scalar_closed_form() {
        for (g, b, pi, alpha) in [
            (2.0, 1.0, 3.0, 0.1),
            (0.5, 0.2, 1.0, 1.0),
            (4.0, -1.0, 0.0, 0.3),
        ] {
            let rp = problem(
                DMatrix::from_element(1, 1, g),
                vec![b],
                vec![pi],
                alpha,
                None,
            );
            let sol = solve_coeffs(&rp, None).unwrap();
            let expect = f64::max(0.0, (b - alpha * pi) / g);
            assert!((sol.lambda[0] - expect).abs() <= 1e-12 * expect.max(1.0));
            if expect == 0.0 {
                assert_eq!(sol.lambda[0], 0.0);
            }
        }
    }

    #[test]
    fn matches_projected_gradient_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..60 {
            let dim = 1 + trial % 8;
            let free = (trial % 3 == 0).then_some(0);
            let rp = random_instance(&mut rng, dim, free);
            let warm: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
            let sol = solve_coeffs(&rp, (trial % 2 == 0).then_some(warm.as_slice())).unwrap();
            assert!(!sol.capped);
            let oracle = rp.objective(&projected_gradient(&rp));
            assert!(
                (sol.objective - oracle).abs() <= 1e-9 * oracle.abs().max(1.0),
                "{} vs {oracle}",
                sol.objective
            );
            assert!(sol.objective <= oracle + 1e-12 * oracle.abs().max(1.0));
            assert!(sol.kkt_residual <= 1e-9, "{}", sol.kkt_residual);
        }
    }

    #[test]
    fn bound_coefficients_are_exact_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut zeros = 0;
        for _ in 0..30 {
            let rp = random_instance(&mut rng, 6, None);
            let sol = solve_coeffs(&rp, None).unwrap();
            let g = rp.gradient(&sol.lambda);
            for (&l, &gj) in sol.lambda.iter().zip(&g) {
                assert!(l >= 0.0);
                if l == 0.0 {
                    zeros += 1;
                    assert!(gj >= -1e-9);
                }
            }
        }
        assert!(zeros > 0);
    }

    #[test]
    fn prune_then_resolve_keeps_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let rp = loop {
            let rp = random_instance(&mut rng, 7, Some(0));
            if solve_coeffs(&rp, None).unwrap().lambda[1..].contains(&0.0) {
                break rp;
            }
        };
        let sol = solve_coeffs(&rp, None).unwrap();
        let (kept, lam) = prune(&sol.lambda, (0..7).collect::<Vec<usize>>(), Some(0));
        assert!(kept.len() < 7 && kept[0] == 0);
        assert!(lam.iter().skip(1).all(|&l| l > 0.0));
        let sub = ReducedProblem {
            gram: DMatrix::from_fn(kept.len(), kept.len(), |r, s| rp.gram[(kept[r], kept[s])]),
            linear: DVector::from_fn(kept.len(), |r, _| rp.linear[kept[r]]),
            perimeters: DVector::from_fn(kept.len(), |r, _| rp.perimeters[kept[r]]),
            free_index: Some(0),
            ..rp.clone()
        };
        let again = solve_coeffs(&sub, Some(&lam)).unwrap();
        assert!((again.objective - sol.objective).abs() <= 1e-12 * sol.objective.abs().max(1.0));
    }

    #[test]
    fn prune_keeps_order_and_protected_entry() {
        let (e, l) = prune(&[0.0, 1.0, 0.0, 2.0], vec!['a', 'b', 'c', 'd'], Some(0));
        assert_eq!(e, vec!['a', 'b', 'd']);
        assert_eq!(l, vec![0.0, 1.0, 2.0]);
        let (e, _) = prune(&[1.0, 2.0], vec![1, 2], None);
        assert_eq!(e, vec![1, 2]);
    }

    #[test]
    fn singular_gram_is_regularized() {
        // Two identical atoms.
        let gram = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let rp = problem(gram, vec![2.0, 2.0], vec![0.5, 0.5], 1.0, None);
        let sol = solve_coeffs(&rp, Some(&[1.0, 1.0])).unwrap();
        let total = sol.lambda[0] + sol.lambda[1];
        // One-dimensional optimum: s = b − απ = 1.5 in the common direction.
        assert!((total - 1.5).abs() < 1e-6, "{total}");
        assert!(sol.regularized);
    }

    #[test]
    fn free_index_may_go_negative() {
        let rp = problem(
            DMatrix::from_element(1, 1, 1.0),
            vec![-2.0],
            vec![0.0],
            1.0,
            Some(0),
        );
        let sol = solve_coeffs(&rp, None).unwrap();
        assert!((sol.lambda[0] + 2.0).abs() < 1e-14);
    }
}
