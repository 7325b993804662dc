//! The outer fully-corrective conditional gradient loop.
//!
//! Each iteration evaluates the dual weights `∫_T p_k` with one adjoint
//! solve, computes the maximal minimizer `Ē_k` of `−∫_E p_k + Per(E)` with
//! one graph cut, splits it into edge-connected components, inserts the new
//! ones (one forward solve each), re-optimizes all coefficients and prunes
//! the zeros. The state `y_k` is rebuilt from cached observations.

mod output;
mod state;
mod trace;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff::solve_coeffs;
use crate::cut::{decompose, dinkelbach_from, solve_mincut};
use crate::error::{Error, Result};
use crate::mesh::{P0Field, P1Field, TriangleSet};
use crate::pde::PdeProblem;

pub use output::{write_run, RunSummary};
pub use state::{ActiveEntry, ActiveSetState};
pub use trace::{
    residual_curve, IterationRecord, LogLinearFit, ResidualCurve, SolverTrace, TRACE_HEADER,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InsertionMode {
    /// Insert the components of one maximal minimizer per iteration.
    #[default]
    Onecut,
    /// Insert one ratio-maximizing set found by a Dinkelbach iteration.
    Dinkelbach,
}

impl FromStr for InsertionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onecut" => Ok(InsertionMode::Onecut),
            "dinkelbach" => Ok(InsertionMode::Dinkelbach),
            _ => Err(Error::Config(format!(
                "unknown mode `{s}` (expected onecut or dinkelbach)"
            ))),
        }
    }
}

impl fmt::Display for InsertionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InsertionMode::Onecut => "onecut",
            InsertionMode::Dinkelbach => "dinkelbach",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Stop once `j_k ≤ tolerance`.
    pub tolerance: f64,
    pub max_iter: usize,
    pub mode: InsertionMode,
    /// Relative ratio tolerance of the Dinkelbach inner loop.
    pub dinkelbach_tolerance: f64,
    pub dinkelbach_max_iter: usize,
    /// Solve the observations of new components concurrently.
    pub parallel: bool,
    /// Record wall-clock times; when off, `wall_ms` is 0 and the trace is
    /// fully reproducible.
    pub wall_time: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-10,
            max_iter: 1000,
            mode: InsertionMode::Onecut,
            dinkelbach_tolerance: 1e-12,
            dinkelbach_max_iter: 200,
            parallel: true,
            wall_time: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIterations,
    /// The insertion step could not change the iterate (all components
    /// already active, or all pruned again): the indicator sits below the
    /// coefficient solver's accuracy but above the tolerance.
    Stagnated,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub u: P0Field,
    pub y: P1Field,
    pub state: ActiveSetState,
    pub trace: SolverTrace,
    pub status: RunStatus,
    /// `∫_T p` at the returned iterate.
    pub final_weights: Vec<f64>,
    pub mode: InsertionMode,
}

impl RunOutput {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    pub fn iterations(&self) -> usize {
        self.trace.rows.len().saturating_sub(1)
    }

    pub fn final_objective(&self) -> f64 {
        self.trace.rows.last().map_or(f64::NAN, |r| r.objective)
    }
}

/// What one call to [`Solver::step`] did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    Finished(RunStatus),
}

pub struct Solver<'a> {
    problem: &'a PdeProblem,
    options: SolverOptions,
    state: ActiveSetState,
    y: P1Field,
    trace: SolverTrace,
    k: usize,
    solves_base: usize,
    cuts: usize,
    started: Instant,
    last_weights: Vec<f64>,
    finished: Option<RunStatus>,
}

impl<'a> Solver<'a> {
    /// Starts from `u_0 = 0`. With Ω in the active set its observation is
    /// computed here (one forward solve, counted as setup) and `u_0` becomes
    /// the best constant.
    pub fn new(problem: &'a PdeProblem, options: SolverOptions) -> Result<Self> {
        if !(options.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                options.tolerance
            )));
        }
        let started = Instant::now();
        let before = problem.solve_count();
        let mut state = ActiveSetState::new(problem);
        if problem.include_omega() {
            let omega = TriangleSet::all(problem.mesh().num_triangles());
            let obs = problem.forward_indicator(&omega)?;
            state.push(problem, omega, 0.0, obs);
            // Optimize λ_Ω right away so that u_0 already balances the mean.
            let coeffs = solve_coeffs(&state.reduced_problem(problem), None)?;
            state.update(&coeffs.lambda);
        }
        let setup = problem.solve_count() - before;
        let y = state.state(problem.mesh().num_vertices());
        Ok(Solver {
            problem,
            options,
            state,
            y,
            trace: SolverTrace {
                rows: Vec::new(),
                setup_pde_solves: setup,
            },
            k: 0,
            solves_base: problem.solve_count(),
            cuts: 0,
            started,
            last_weights: Vec::new(),
            finished: None,
        })
    }

    pub fn state(&self) -> &ActiveSetState {
        &self.state
    }

    pub fn trace(&self) -> &SolverTrace {
        &self.trace
    }

    pub fn iterate(&self) -> P0Field {
        self.state.control(self.problem.mesh())
    }

    /// One iteration. On error the solver state is left unchanged.
    pub fn step(&mut self) -> Result<StepOutcome> {
        if let Some(status) = self.finished {
            return Ok(StepOutcome::Finished(status));
        }
        let problem = self.problem;
        let mesh = problem.mesh();
        let weights = problem.dual_weights(&self.y)?;
        let cut = solve_mincut(mesh, &weights)?;
        let mut cuts = 1;
        let indicator = -cut.energy;

        let u = self.state.control(mesh);
        let misfit = problem.data_misfit(&self.y);
        let surrogate = self.state.weighted_perimeter();
        let mut record = IterationRecord {
            k: self.k,
            objective: misfit + mesh.tv_p0(&u),
            misfit,
            surrogate,
            indicator,
            n_components: 0,
            duplicates: 0,
            active_size: self.state.len(),
            pde_solves: 0,
            cuts: 0,
            wall_ms: 0.0,
            stationarity: self.stationarity(&weights),
            dual_mass: weights.iter().sum(),
            worst_component_energy: f64::NEG_INFINITY,
        };

        let finish = if indicator <= self.options.tolerance {
            Some(RunStatus::Converged)
        } else if self.k >= self.options.max_iter {
            Some(RunStatus::MaxIterations)
        } else {
            None
        };
        if let Some(status) = finish {
            self.commit_row(record, cuts);
            self.last_weights = weights;
            self.finished = Some(status);
            info!(
                "k={} finished: {:?}, J={:.12e}, j_k={:.3e}",
                self.k,
                status,
                misfit + mesh.tv_p0(&u),
                indicator
            );
            return Ok(StepOutcome::Finished(status));
        }

        let candidates: Vec<TriangleSet> = match self.options.mode {
            InsertionMode::Onecut => decompose(mesh, &cut.subset),
            InsertionMode::Dinkelbach => {
                let outcome = dinkelbach_from(
                    mesh,
                    &weights,
                    cut.subset.clone(),
                    self.options.dinkelbach_tolerance,
                    self.options.dinkelbach_max_iter,
                )?;
                cuts += outcome.cuts;
                debug!(
                    "dinkelbach: ratio {:.6e} after {} cuts ({:?})",
                    outcome.ratio, outcome.cuts, outcome.status
                );
                vec![outcome.subset]
            }
        };
        record.worst_component_energy = candidates
            .iter()
            .map(|c| mesh.perimeter(c) - mesh.sum_over(c, &weights))
            .fold(f64::NEG_INFINITY, f64::max);
        let (fresh, duplicates): (Vec<TriangleSet>, Vec<TriangleSet>) = candidates
            .into_iter()
            .partition(|c| self.state.position(c).is_none());
        record.n_components = fresh.len();
        record.duplicates = duplicates.len();

        if fresh.is_empty() {
            self.commit_row(record, cuts);
            self.last_weights = weights;
            self.finished = Some(RunStatus::Stagnated);
            return Ok(StepOutcome::Finished(RunStatus::Stagnated));
        }

        let observations: Vec<P1Field> = if self.options.parallel {
            fresh
                .par_iter()
                .map(|s| problem.forward_indicator(s))
                .collect::<Result<_>>()?
        } else {
            fresh
                .iter()
                .map(|s| problem.forward_indicator(s))
                .collect::<Result<_>>()?
        };
        let mut next = self.state.clone();
        for (set, obs) in fresh.into_iter().zip(observations) {
            let per = mesh.perimeter(&set);
            next.push(problem, set, per, obs);
        }
        let rp = next.reduced_problem(problem);
        let warm = next.lambdas();
        let coeffs = solve_coeffs(&rp, Some(&warm))?;
        if coeffs.capped || coeffs.regularized {
            log::warn!(
                "k={}: coefficient solve {} (KKT residual {:.3e})",
                self.k,
                if coeffs.capped {
                    "hit its iteration cap"
                } else {
                    "needed regularization"
                },
                coeffs.kkt_residual
            );
        }
        next.update(&coeffs.lambda);
        if next.len() == self.state.len()
            && next
                .entries()
                .iter()
                .zip(self.state.entries())
                .all(|(a, b)| a.subset == b.subset && a.lambda == b.lambda)
        {
            // Every inserted set was pruned again and nothing moved.
            self.commit_row(record, cuts);
            self.last_weights = weights;
            self.finished = Some(RunStatus::Stagnated);
            return Ok(StepOutcome::Finished(RunStatus::Stagnated));
        }

        debug!(
            "k={} J={:.12e} j_k={:.3e} inserted={} active={}",
            self.k,
            record.objective,
            indicator,
            record.n_components,
            next.len()
        );
        self.commit_row(record, cuts);
        self.y = next.state(mesh.num_vertices());
        self.state = next;
        self.last_weights = weights;
        self.k += 1;
        Ok(StepOutcome::Continue)
    }

    fn commit_row(&mut self, mut record: IterationRecord, cuts: usize) {
        self.cuts += cuts;
        record.cuts = self.cuts;
        record.pde_solves = self.problem.solve_count() - self.solves_base;
        record.wall_ms = if self.options.wall_time {
            self.started.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        self.trace.rows.push(record);
    }

    fn stationarity(&self, weights: &[f64]) -> f64 {
        let mesh = self.problem.mesh();
        self.state
            .entries()
            .iter()
            .enumerate()
            .filter(|&(j, e)| !(self.state.has_omega() && j == 0) && e.lambda > 0.0)
            .map(|(_, e)| {
                (mesh.sum_over(&e.subset, weights) - e.perimeter).abs() / (1.0 + e.perimeter)
            })
            .fold(0.0, f64::max)
    }

    pub fn run(mut self) -> Result<RunOutput> {
        let status = loop {
            if let StepOutcome::Finished(status) = self.step()? {
                break status;
            }
        };
        Ok(RunOutput {
            u: self.state.control(self.problem.mesh()),
            y: self.y,
            state: self.state,
            trace: self.trace,
            status,
            final_weights: self.last_weights,
            mode: self.options.mode,
        })
    }
}

pub fn run(problem: &PdeProblem, options: SolverOptions) -> Result<RunOutput> {
    Solver::new(problem, options)?.run()
}

/// Runs both insertion modes on the same problem, one-cut first.
pub fn run_comparison(
    problem: &PdeProblem,
    options: SolverOptions,
) -> Result<(RunOutput, RunOutput)> {
    let onecut = run(
        problem,
        SolverOptions {
            mode: InsertionMode::Onecut,
            ..options.clone()
        },
    )?;
    let dinkelbach = run(
        problem,
        SolverOptions {
            mode: InsertionMode::Dinkelbach,
            ..options
        },
    )?;
    Ok((onecut, dinkelbach))
}
