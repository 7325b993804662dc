//! Fully-corrective conditional gradient for total-variation regularized
//! linear inverse problems on triangulations of the square.
//!
//! The control is piecewise constant on triangles. Each outer iteration
//! finds a new set by a single minimum cut, splits it into connected
//! components, and re-optimizes all coefficients of the active sets.
//!
//! ```no_run
//! use tvfcgcg::{generate_square_mesh, run, PdeProblem, PdeVariant, SolverOptions, TargetSpec};
//!
//! let mesh = generate_square_mesh(16, 0.1, 1)?;
//! let mut problem = PdeProblem::new(mesh, PdeVariant::Elliptic, 1e-4)?.with_include_omega(true);
//! problem.set_target_spec(&"indicator 0 0 1 1".parse::<TargetSpec>()?)?;
//! let out = run(&problem, SolverOptions::default())?;
//! println!("J = {}", out.final_objective());
//! # Ok::<(), tvfcgcg::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeff;
pub mod cut;
pub mod error;
pub mod fcgcg;
pub mod mesh;
pub mod pde;

pub use coeff::{solve_coeffs, Coefficients, ReducedProblem};
pub use cut::{decompose, solve_mincut, CutSolution};
pub use error::{Error, Result};
pub use fcgcg::{
    run, run_comparison, InsertionMode, RunOutput, RunStatus, Solver, SolverOptions, SolverTrace,
};
pub use mesh::{generate_square_mesh, P0Field, P1Field, TriMesh, TriangleSet};
pub use pde::{PdeProblem, PdeVariant, TargetSpec};
