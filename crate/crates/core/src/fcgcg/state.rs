use nalgebra::{DMatrix, DVector};

use crate::coeff::{prune, ReducedProblem};
use crate::mesh::{P0Field, P1Field, TriMesh, TriangleSet};
use crate::pde::PdeProblem;

/// One atom `λ_j 𝟙_{E_j}` of the iterate.
#[derive(Clone, Debug)]
pub struct ActiveEntry {
    pub subset: TriangleSet,
    pub perimeter: f64,
    /// `K 𝟙_{E_j}`
    pub observation: P1Field,
    pub lambda: f64,
}

/// Active set with the Gram matrix and right-hand side of the coefficient
/// problem kept in sync with the entries.
#[derive(Clone, Debug)]
pub struct ActiveSetState {
    entries: Vec<ActiveEntry>,
    /// The first entry is Ω and is never pruned.
    has_omega: bool,
    gram: DMatrix<f64>,
    linear: Vec<f64>,
    target_norm2: f64,
}

impl ActiveSetState {
    pub(crate) fn new(problem: &PdeProblem) -> Self {
        ActiveSetState {
            entries: Vec::new(),
            has_omega: false,
            gram: DMatrix::zeros(0, 0),
            linear: Vec::new(),
            target_norm2: problem.observation_inner(problem.target(), problem.target()),
        }
    }

    pub fn entries(&self) -> &[ActiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_omega(&self) -> bool {
        self.has_omega
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lambda).collect()
    }

    pub fn position(&self, subset: &TriangleSet) -> Option<usize> {
        self.entries.iter().position(|e| &e.subset == subset)
    }

    /// Appends an entry with coefficient zero and extends the cached Gram
    /// matrix.
    pub(crate) fn push(
        &mut self,
        problem: &PdeProblem,
        subset: TriangleSet,
        perimeter: f64,
        observation: P1Field,
    ) {
        let n = self.entries.len();
        let mut gram = DMatrix::zeros(n + 1, n + 1);
        gram.view_mut((0, 0), (n, n)).copy_from(&self.gram);
        for (i, e) in self.entries.iter().enumerate() {
            let g = problem.observation_inner(&e.observation, &observation);
            gram[(i, n)] = g;
            gram[(n, i)] = g;
        }
        gram[(n, n)] = problem.observation_inner(&observation, &observation);
        self.gram = gram;
        self.linear
            .push(problem.observation_inner(&observation, problem.target()));
        if n == 0 && subset.len() == problem.mesh().num_triangles() && problem.include_omega() {
            self.has_omega = true;
        }
        self.entries.push(ActiveEntry {
            subset,
            perimeter,
            observation,
            lambda: 0.0,
        });
    }

    pub(crate) fn reduced_problem(&self, problem: &PdeProblem) -> ReducedProblem {
        ReducedProblem {
            gram: self.gram.clone(),
            linear: DVector::from_vec(self.linear.clone()),
            perimeters: DVector::from_iterator(
                self.len(),
                self.entries.iter().map(|e| e.perimeter),
            ),
            alpha: problem.alpha(),
            target_norm2: self.target_norm2,
            free_index: (self.has_omega && !problem.nonneg()).then_some(0),
        }
    }

    /// Installs new coefficients and drops entries whose coefficient is
    /// exactly zero (except Ω).
    pub(crate) fn update(&mut self, lambda: &[f64]) {
        let keep = self.has_omega.then_some(0);
        let indices: Vec<usize> = (0..self.len()).collect();
        let (kept, kept_lambda) = prune(lambda, indices, keep);
        self.gram = DMatrix::from_fn(kept.len(), kept.len(), |r, c| self.gram[(kept[r], kept[c])]);
        self.linear = kept.iter().map(|&j| self.linear[j]).collect();
        let mut old: Vec<Option<ActiveEntry>> = std::mem::take(&mut self.entries)
            .into_iter()
            .map(Some)
            .collect();
        self.entries = kept
            .iter()
            .zip(kept_lambda)
            .map(|(&j, l)| {
                let mut e = old[j].take().expect("index kept twice");
                e.lambda = l;
                e
            })
            .collect();
    }

    /// `y = Σ λ_j o_j`, no PDE solve.
    pub fn state(&self, num_vertices: usize) -> P1Field {
        let mut y = P1Field::zeros(num_vertices);
        for e in &self.entries {
            if e.lambda != 0.0 {
                y.axpy(e.lambda, &e.observation);
            }
        }
        y
    }

    /// `u = Σ λ_j 𝟙_{E_j}`
    pub fn control(&self, mesh: &TriMesh) -> P0Field {
        let mut u = vec![0.0; mesh.num_triangles()];
        for e in &self.entries {
            for &t in e.subset.as_slice() {
                u[t] += e.lambda;
            }
        }
        P0Field::new(u)
    }

    /// `Σ λ_j Per(E_j)`
    pub fn weighted_perimeter(&self) -> f64 {
        self.entries.iter().map(|e| e.lambda * e.perimeter).sum()
    }
}
