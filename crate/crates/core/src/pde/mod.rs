//! P1 finite element control-to-observation operators.
//!
//! Controls are P0 fields, states are P1 fields with homogeneous Dirichlet
//! conditions. Two operators are provided:
//!
//! * elliptic: `-Δy = u`, discretely `A_II y_I = (M01 u)_I`;
//! * parabolic: `∂_t y - Δy + ½y = 0` with initial value `u`, observed at
//!   the final time after `N` implicit Euler steps with
//!   `S = M_II + τ(A_II + ½M_II)`, `τ = T/N`.
//!
//! Adjoints are exact transposes of the discrete forward maps with respect
//! to the P1 mass inner product, and return the per-triangle integrals
//! `∫_T q dx` that the cut weights need.

mod assembly;
pub mod linalg;
mod target;

use std::sync::atomic::{AtomicUsize, Ordering};

pub use assembly::{assemble, FemAssembly};
pub use target::{phantom_control, ControlSource, TargetSpec};

use crate::error::{Error, Result};
use crate::mesh::{P0Field, P1Field, TriMesh, TriangleSet};
use linalg::{CsrMatrix, EnvelopeCholesky};

/// Parabolic reaction coefficient in `S = M + τ(A + cM)`.
pub const PARABOLIC_REACTION: f64 = 0.5;

/// Relative residual above which a linear solve is reported as failed.
const SOLVE_RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PdeVariant {
    Elliptic,
    Parabolic { horizon: f64, steps: usize },
}

#[derive(Debug)]
pub struct PdeProblem {
    mesh: TriMesh,
    fem: FemAssembly,
    variant: PdeVariant,
    alpha: f64,
    target: P1Field,
    nonneg: bool,
    include_omega: bool,
    /// `A_II` (elliptic) or `S` (parabolic).
    system: CsrMatrix,
    factor: EnvelopeCholesky,
    solves: AtomicUsize,
}

impl PdeProblem {
    /// Assembles and factors the operator. The target starts at zero; see
    /// [`PdeProblem::set_target`].
    pub fn new(mesh: TriMesh, variant: PdeVariant, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if let PdeVariant::Parabolic { horizon, steps } = variant {
            if !(horizon > 0.0 && horizon.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "time horizon must be positive, got {horizon}"
                )));
            }
            if steps == 0 {
                return Err(Error::InvalidArgument(
                    "number of time steps must be >= 1".into(),
                ));
            }
        }
        let fem = assemble(&mesh)?;
        if fem.interior_vertices().is_empty() {
            return Err(Error::InvalidArgument(
                "mesh has no interior vertices".into(),
            ));
        }
        let system = match variant {
            PdeVariant::Elliptic => fem.stiffness_interior().clone(),
            PdeVariant::Parabolic { horizon, steps } => {
                let tau = horizon / steps as f64;
                fem.mass_interior().linear_combination(
                    1.0 + tau * PARABOLIC_REACTION,
                    fem.stiffness_interior(),
                    tau,
                )
            }
        };
        let factor = EnvelopeCholesky::factor(&system)?;
        let target = P1Field::zeros(mesh.num_vertices());
        Ok(PdeProblem {
            mesh,
            fem,
            variant,
            alpha,
            target,
            nonneg: true,
            include_omega: false,
            system,
            factor,
            solves: AtomicUsize::new(0),
        })
    }

    pub fn with_target(mut self, target: P1Field) -> Result<Self> {
        self.set_target(target)?;
        Ok(self)
    }

    pub fn set_target(&mut self, target: P1Field) -> Result<()> {
        if target.len() != self.mesh.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "target has {} values, mesh has {} vertices",
                target.len(),
                self.mesh.num_vertices()
            )));
        }
        if target.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "target contains non-finite values".into(),
            ));
        }
        self.target = target;
        Ok(())
    }

    /// Resolves a target specification, computing `K u_d` if needed.
    pub fn set_target_spec(&mut self, spec: &TargetSpec) -> Result<()> {
        let target = spec.resolve(&self.mesh, |u| self.forward(u))?;
        self.set_target(target)
    }

    pub fn with_nonneg(mut self, nonneg: bool) -> Self {
        self.nonneg = nonneg;
        self
    }

    pub fn with_include_omega(mut self, include_omega: bool) -> Self {
        self.include_omega = include_omega;
        self
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn assembly(&self) -> &FemAssembly {
        &self.fem
    }

    pub fn variant(&self) -> PdeVariant {
        self.variant
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn target(&self) -> &P1Field {
        &self.target
    }

    /// Whether the coefficient of Ω (if present) is constrained to be ≥ 0.
    pub fn nonneg(&self) -> bool {
        self.nonneg
    }

    pub fn include_omega(&self) -> bool {
        self.include_omega
    }

    /// Number of forward and adjoint PDE solves performed so far. A
    /// parabolic solve counts once regardless of the number of time steps.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn forward(&self, u: &P0Field) -> Result<P1Field> {
        match self.variant {
            PdeVariant::Elliptic => self.elliptic_forward(u),
            PdeVariant::Parabolic { .. } => self.parabolic_forward(u),
        }
    }

    /// Per-triangle integrals of `K* z`.
    pub fn adjoint_integrals(&self, z: &P1Field) -> Result<Vec<f64>> {
        match self.variant {
            PdeVariant::Elliptic => self.elliptic_adjoint_integrals(z),
            PdeVariant::Parabolic { .. } => self.parabolic_adjoint_integrals(z),
        }
    }

    pub fn forward_indicator(&self, set: &TriangleSet) -> Result<P1Field> {
        self.forward(&P0Field::indicator(&self.mesh, set))
    }

    pub fn elliptic_forward(&self, u: &P0Field) -> Result<P1Field> {
        self.expect_elliptic()?;
        self.check_p0(u)?;
        self.solves.fetch_add(1, Ordering::Relaxed);
        let rhs = self.fem.load_interior().mul_vec(u.values());
        let y = self.solve(&rhs)?;
        Ok(P1Field::new(self.fem.extend(&y)))
    }

    pub fn elliptic_adjoint_integrals(&self, z: &P1Field) -> Result<Vec<f64>> {
        self.expect_elliptic()?;
        self.check_p1(z)?;
        self.solves.fetch_add(1, Ordering::Relaxed);
        let rhs = self.fem.restrict(&self.fem.mass().mul_vec(z.values()));
        let q = self.solve(&rhs)?;
        Ok(self.fem.load_interior().transpose_mul_vec(&q))
    }

    pub fn parabolic_forward(&self, u: &P0Field) -> Result<P1Field> {
        let steps = self.expect_parabolic()?;
        self.check_p0(u)?;
        self.solves.fetch_add(1, Ordering::Relaxed);
        let mut y = self.solve(&self.fem.load_interior().mul_vec(u.values()))?;
        for _ in 1..steps {
            y = self.solve(&self.fem.mass_interior().mul_vec(&y))?;
        }
        Ok(P1Field::new(self.fem.extend(&y)))
    }

    pub fn parabolic_adjoint_integrals(&self, z: &P1Field) -> Result<Vec<f64>> {
        let steps = self.expect_parabolic()?;
        self.check_p1(z)?;
        self.solves.fetch_add(1, Ordering::Relaxed);
        let rhs = self.fem.restrict(&self.fem.mass().mul_vec(z.values()));
        let mut w = self.solve(&rhs)?;
        for _ in 1..steps {
            w = self.solve(&self.fem.mass_interior().mul_vec(&w))?;
        }
        Ok(self.fem.load_interior().transpose_mul_vec(&w))
    }

    /// `aᵀ M b`, summed over the upper triangle of M so that swapping the
    /// arguments gives a bit-identical result.
    pub fn observation_inner(&self, a: &P1Field, b: &P1Field) -> f64 {
        let (a, b) = (a.values(), b.values());
        let m = self.fem.mass();
        let mut sum = 0.0;
        for i in 0..m.rows() {
            for (j, v) in m.row(i) {
                if j == i {
                    sum += v * (a[i] * b[i]);
                } else if j > i {
                    sum += v * (a[i] * b[j] + a[j] * b[i]);
                }
            }
        }
        sum
    }

    /// `(1/2α) ‖y − y_d‖²_M`
    pub fn data_misfit(&self, y: &P1Field) -> f64 {
        let mut r = y.clone();
        r.axpy(-1.0, &self.target);
        self.observation_inner(&r, &r) / (2.0 * self.alpha)
    }

    /// Per-triangle integrals of the dual variable `p = (1/α) K*(y_d − y)`.
    /// One adjoint solve.
    pub fn dual_weights(&self, y: &P1Field) -> Result<Vec<f64>> {
        let mut z = self.target.clone();
        z.axpy(-1.0, y);
        let mut w = self.adjoint_integrals(&z)?;
        w.iter_mut().for_each(|v| *v /= self.alpha);
        Ok(w)
    }

    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let x = self.factor.solve(rhs);
        let ax = self.system.mul_vec(&x);
        let res = ax
            .iter()
            .zip(rhs)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
        if !res.is_finite() || res > SOLVE_RESIDUAL_LIMIT * norm.max(f64::MIN_POSITIVE) && res > 0.0
        {
            return Err(Error::LinearSolver(format!(
                "linear solve failed: residual norm {res:e} for right-hand side norm {norm:e}"
            )));
        }
        Ok(x)
    }

    fn expect_elliptic(&self) -> Result<()> {
        match self.variant {
            PdeVariant::Elliptic => Ok(()),
            _ => Err(Error::InvalidArgument(
                "operation requires the elliptic variant".into(),
            )),
        }
    }

    fn expect_parabolic(&self) -> Result<usize> {
        match self.variant {
            PdeVariant::Parabolic { steps, .. } => Ok(steps),
            _ => Err(Error::InvalidArgument(
                "operation requires the parabolic variant".into(),
            )),
        }
    }

    fn check_p0(&self, u: &P0Field) -> Result<()> {
        if u.len() != self.mesh.num_triangles() {
            return Err(Error::InvalidArgument(format!(
                "control has {} values, mesh has {} triangles",
                u.len(),
                self.mesh.num_triangles()
            )));
        }
        Ok(())
    }

    fn check_p1(&self, z: &P1Field) -> Result<()> {
        if z.len() != self.mesh.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "state has {} values, mesh has {} vertices",
                z.len(),
                self.mesh.num_vertices()
            )));
        }
        Ok(())
    }
}

/// Degree-5 (7-point) triangle quadrature in barycentric coordinates.
const QUAD5: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// `‖y_h − f‖_{L²(Ω)}` for a P1 field and a smooth function.
pub fn l2_error(mesh: &TriMesh, y: &P1Field, f: impl Fn(f64, f64) -> f64) -> f64 {
    let pts = mesh.vertices();
    let mut sum = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.areas()[t];
        for (bary, w) in QUAD5 {
            let mut x = 0.0;
            let mut yy = 0.0;
            let mut val = 0.0;
            for i in 0..3 {
                x += bary[i] * pts[tri[i]][0];
                yy += bary[i] * pts[tri[i]][1];
                val += bary[i] * y.values()[tri[i]];
            }
            sum += w * area * (val - f(x, yy)).powi(2);
        }
    }
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_square_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_p0(rng: &mut impl Rng, n: usize) -> P0Field {
        P0Field::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn random_p1(rng: &mut impl Rng, n: usize) -> P1Field {
        P1Field::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn parabolic(n: usize, steps: usize) -> PdeProblem {
        let mesh = generate_square_mesh(n, 0.2, 4).unwrap();
        PdeProblem::new(
            mesh,
            PdeVariant::Parabolic {
                horizon: 0.02,
                steps,
            },
            1e-4,
        )
        .unwrap()
    }

    #[test]
    fn zero_control_gives_zero_state() {
        let mesh = generate_square_mesh(4, 0.1, 1).unwrap();
        for variant in [
            PdeVariant::Elliptic,
            PdeVariant::Parabolic {
                horizon: 0.02,
                steps: 9,
            },
        ] {
            let p = PdeProblem::new(mesh.clone(), variant, 1e-4).unwrap();
            let y = p.forward(&P0Field::zeros(mesh.num_triangles())).unwrap();
            assert!(y.values().iter().all(|&v| v == 0.0));
            let q = p
                .adjoint_integrals(&P1Field::zeros(mesh.num_vertices()))
                .unwrap();
            assert!(q.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn forward_is_linear() {
        let mesh = generate_square_mesh(6, 0.2, 2).unwrap();
        let nt = mesh.num_triangles();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for variant in [
            PdeVariant::Elliptic,
            PdeVariant::Parabolic {
                horizon: 0.02,
                steps: 9,
            },
        ] {
            let p = PdeProblem::new(mesh.clone(), variant, 1e-4).unwrap();
            let (u1, u2) = (random_p0(&mut rng, nt), random_p0(&mut rng, nt));
            let mut sum = u1.clone();
            sum.axpy(1.0, &u2);
            let mut expect = p.forward(&u1).unwrap();
            expect.axpy(1.0, &p.forward(&u2).unwrap());
            let got = p.forward(&sum).unwrap();
            let scale = expect.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
            for (a, b) in got.values().iter().zip(expect.values()) {
                assert!((a - b).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn adjoint_identity_both_variants() {
        let mesh = generate_square_mesh(8, 0.25, 5).unwrap();
        let (nt, nv) = (mesh.num_triangles(), mesh.num_vertices());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for variant in [
            PdeVariant::Elliptic,
            PdeVariant::Parabolic {
                horizon: 0.02,
                steps: 9,
            },
        ] {
            let p = PdeProblem::new(mesh.clone(), variant, 1e-4).unwrap();
            for _ in 0..10 {
                let u = random_p0(&mut rng, nt);
                let z = random_p1(&mut rng, nv);
                let lhs = p.observation_inner(&p.forward(&u).unwrap(), &z);
                let rhs: f64 = u
                    .values()
                    .iter()
                    .zip(p.adjoint_integrals(&z).unwrap())
                    .map(|(a, b)| a * b)
                    .sum();
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()),
                    "{lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn single_step_is_a_shifted_elliptic_solve() {
        let p = parabolic(5, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_p0(&mut rng, p.mesh().num_triangles());
        let y = p.parabolic_forward(&u).unwrap();
        // S y_I = (M01 u)_I, checked by applying S independently of the solver.
        let fem = p.assembly();
        let tau = 0.02;
        let y_i = fem.restrict(y.values());
        let lhs: Vec<f64> = fem
            .mass_interior()
            .mul_vec(&y_i)
            .iter()
            .zip(fem.stiffness_interior().mul_vec(&y_i))
            .map(|(m, a)| m * (1.0 + 0.5 * tau) + tau * a)
            .collect();
        let rhs = fem.load_interior().mul_vec(u.values());
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn parabolic_map_contracts_in_mass_norm() {
        let p = parabolic(8, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let u = random_p0(&mut rng, p.mesh().num_triangles());
            let y = p.forward(&u).unwrap();
            // ‖u‖²_{L²} bounds the mass norm of its L² projection onto P1.
            let u_norm2: f64 = u
                .values()
                .iter()
                .zip(p.mesh().areas())
                .map(|(v, a)| v * v * a)
                .sum();
            assert!(p.observation_inner(&y, &y) <= u_norm2);
        }
    }

    #[test]
    fn elliptic_maximum_principle() {
        let mesh = generate_square_mesh(10, 0.0, 0).unwrap();
        let p = PdeProblem::new(mesh.clone(), PdeVariant::Elliptic, 1e-4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = P0Field::new(
            (0..mesh.num_triangles())
                .map(|_| rng.gen_range(0.0..1.0))
                .collect(),
        );
        let y = p.forward(&u).unwrap();
        assert!(y.values().iter().all(|&v| v >= -1e-10));
    }

    #[test]
    fn manufactured_solution_converges_at_second_order() {
        let exact = |x: f64, y: f64| (1.0 - x * x) * (1.0 - y * y);
        let rhs = |x: f64, y: f64| 2.0 * (1.0 - x * x) + 2.0 * (1.0 - y * y);
        let errors: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&n| {
                let mesh = generate_square_mesh(n, 0.0, 0).unwrap();
                let p = PdeProblem::new(mesh.clone(), PdeVariant::Elliptic, 1.0).unwrap();
                let y = p.forward(&P0Field::from_centroids(&mesh, rhs)).unwrap();
                l2_error(&mesh, &y, exact)
            })
            .collect();
        for w in errors.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.8, "{errors:?}");
        }
    }

    #[test]
    fn observation_inner_basics() {
        let p = parabolic(4, 3);
        let nv = p.mesh().num_vertices();
        let ones = P1Field::new(vec![1.0; nv]);
        assert!((p.observation_inner(&ones, &ones) - 4.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, b) = (random_p1(&mut rng, nv), random_p1(&mut rng, nv));
        assert_eq!(p.observation_inner(&a, &b), p.observation_inner(&b, &a));
    }

    #[test]
    fn solve_counter_and_variant_checks() {
        let p = parabolic(3, 2);
        let u = P0Field::zeros(p.mesh().num_triangles());
        p.forward(&u).unwrap();
        p.dual_weights(&P1Field::zeros(p.mesh().num_vertices()))
            .unwrap();
        assert_eq!(p.solve_count(), 2);
        assert!(p.elliptic_forward(&u).is_err());
        assert!(p.forward(&P0Field::zeros(3)).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        let mesh = generate_square_mesh(2, 0.0, 0).unwrap();
        assert!(PdeProblem::new(mesh.clone(), PdeVariant::Elliptic, 0.0).is_err());
        assert!(PdeProblem::new(
            mesh.clone(),
            PdeVariant::Parabolic {
                horizon: 0.0,
                steps: 3
            },
            1.0
        )
        .is_err());
        assert!(PdeProblem::new(
            mesh,
            PdeVariant::Parabolic {
                horizon: 1.0,
                steps: 0
            },
            1.0
        )
        .is_err());
    }
}
