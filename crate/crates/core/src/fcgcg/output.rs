use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{InsertionMode, RunOutput, RunStatus};
use crate::error::{Error, Result};
use crate::mesh::{save_field, save_mesh, FieldKind, TriMesh};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub converged: bool,
    pub status: RunStatus,
    pub mode: InsertionMode,
    pub iterations: usize,
    pub final_objective: f64,
    pub final_indicator: f64,
    pub pde_solves: usize,
    pub setup_pde_solves: usize,
    pub cuts: usize,
    pub active_size: usize,
    /// Largest `J(u_{k+1}) − J(u_k)` along the trace.
    pub max_objective_increase: Option<f64>,
    pub max_stationarity: f64,
    pub wall_ms: f64,
}

impl RunSummary {
    pub fn from_output(out: &RunOutput) -> Self {
        let last = out.trace.rows.last();
        RunSummary {
            converged: out.converged(),
            status: out.status,
            mode: out.mode,
            iterations: out.iterations(),
            final_objective: out.final_objective(),
            final_indicator: last.map_or(f64::NAN, |r| r.indicator),
            pde_solves: last.map_or(0, |r| r.pde_solves),
            setup_pde_solves: out.trace.setup_pde_solves,
            cuts: last.map_or(0, |r| r.cuts),
            active_size: out.state.len(),
            max_objective_increase: (out.trace.rows.len() > 1).then(|| out.trace.max_increase()),
            max_stationarity: out
                .trace
                .rows
                .iter()
                .map(|r| r.stationarity)
                .fold(0.0, f64::max),
            wall_ms: last.map_or(0.0, |r| r.wall_ms),
        }
    }
}

/// Writes `trace.csv`, `summary.json`, `mesh.trimesh` and, if requested,
/// `solution.p0field` and `state.p1field` into `dir`.
pub fn write_run(
    dir: &Path,
    mesh: &TriMesh,
    out: &RunOutput,
    emit_fields: bool,
) -> Result<RunSummary> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let trace_path = dir.join("trace.csv");
    fs::write(&trace_path, out.trace.to_csv()).map_err(|e| Error::io(&trace_path, e))?;
    let summary = RunSummary::from_output(out);
    let summary_path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&summary_path, json + "\n").map_err(|e| Error::io(&summary_path, e))?;
    save_mesh(mesh, dir.join("mesh.trimesh"))?;
    if emit_fields {
        save_field(FieldKind::P0, out.u.values(), dir.join("solution.p0field"))?;
        save_field(FieldKind::P1, out.y.values(), dir.join("state.p1field"))?;
    }
    Ok(summary)
}
