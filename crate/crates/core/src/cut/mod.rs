//! Exact minimization of `E ↦ −Σ_{T∈E} c_T + Per(E, Ω)` over triangle sets
//! by a minimum s-t cut on the dual graph.
//!
//! Node layout: triangles `0..n`, then the source `n` and the sink `n + 1`.
//! Sink-side triangles form the returned set. A triangle with `c_T > 0` is
//! joined to the sink, one with `c_T < 0` to the source, and every interior
//! mesh edge becomes a pair of antiparallel arcs carrying its length.
//! Capacities are fixed-point integers so the flow computation is exact.

mod bk;
mod decompose;
mod dinkelbach;
mod edmonds_karp;

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mesh::{TriMesh, TriangleSet};

pub use decompose::{decompose, residual_scc_components};
pub use dinkelbach::{dinkelbach_from, dinkelbach_insert, DinkelbachOutcome, DinkelbachStatus};

/// Target magnitude of the largest fixed-point capacity.
pub const CAPACITY_TARGET: f64 = (1u64 << 40) as f64;
/// Upper bound on the total capacity, keeping every flow sum inside `i64`.
const TOTAL_CAPACITY_LIMIT: f64 = (1u64 << 61) as f64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MaxFlowAlgorithm {
    /// Boykov–Kolmogorov search trees, reused across augmentations.
    #[default]
    BoykovKolmogorov,
    /// Breadth-first augmenting paths. Slow; kept as a cross-check.
    EdmondsKarp,
}

/// Fixed-point s-t graph for one cut problem.
#[derive(Clone, Debug)]
pub struct CutGraph {
    num_triangles: usize,
    scale: f64,
    /// Per triangle: `> 0` source arc capacity, `< 0` negated sink arc capacity.
    terminal: Vec<i64>,
    /// Per interior mesh edge: (left, right, capacity of each direction).
    links: Vec<(usize, usize, i64)>,
}

impl CutGraph {
    /// Quantizes the weights and edge lengths of `mesh` into a cut graph.
    pub fn build(mesh: &TriMesh, weights: &[f64]) -> Result<Self> {
        if weights.len() != mesh.num_triangles() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} triangles",
                weights.len(),
                mesh.num_triangles()
            )));
        }
        if let Some(t) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight of triangle {t} is not finite"
            )));
        }
        let scale = choose_scale(mesh, weights)?;
        let terminal = weights.iter().map(|&c| -quantize(c, scale)).collect();
        let links = mesh
            .interior_edges()
            .iter()
            .map(|e| (e.left, e.right, quantize(e.length, scale)))
            .collect();
        Ok(CutGraph {
            num_triangles: mesh.num_triangles(),
            scale,
            terminal,
            links,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn num_triangles(&self) -> usize {
        self.num_triangles
    }

    pub fn source(&self) -> usize {
        self.num_triangles
    }

    pub fn sink(&self) -> usize {
        self.num_triangles + 1
    }

    /// Quantized weight `c_T` of a triangle.
    pub fn weight_fixed(&self, t: usize) -> i64 {
        -self.terminal[t]
    }

    pub fn terminal_capacities(&self) -> &[i64] {
        &self.terminal
    }

    pub fn links(&self) -> &[(usize, usize, i64)] {
        &self.links
    }

    /// Σ_T max(c_T, 0) in fixed point: the constant offset between cut value
    /// and energy.
    pub fn positive_weight_total(&self) -> i64 {
        self.terminal.iter().filter(|&&c| c < 0).map(|&c| -c).sum()
    }

    /// Energy of a set in fixed-point units, evaluated directly.
    pub fn energy_fixed(&self, in_set: &[bool]) -> i64 {
        let gain: i64 = (0..self.num_triangles)
            .filter(|&t| in_set[t])
            .map(|t| self.weight_fixed(t))
            .sum();
        let per: i64 = self
            .links
            .iter()
            .filter(|&&(a, b, _)| in_set[a] != in_set[b])
            .map(|&(_, _, c)| c)
            .sum();
        per - gain
    }

    /// Capacity of the s-t cut whose sink side is `in_set`.
    pub fn cut_value(&self, in_set: &[bool]) -> i64 {
        let terminal: i64 = self
            .terminal
            .iter()
            .enumerate()
            .map(|(t, &c)| match (c > 0, in_set[t]) {
                (true, true) => c,
                (false, false) if c < 0 => -c,
                _ => 0,
            })
            .sum();
        let links: i64 = self
            .links
            .iter()
            .filter(|&&(a, b, _)| in_set[a] != in_set[b])
            .map(|&(_, _, c)| c)
            .sum();
        terminal + links
    }

    /// DIMACS max-flow text (`p max`, `n`, `a` lines, 1-based node ids).
    pub fn to_dimacs(&self) -> String {
        let n = self.num_triangles + 2;
        let arcs = self.terminal.iter().filter(|&&c| c != 0).count() + 2 * self.links.len();
        let mut out = format!("p max {n} {arcs}\n");
        let _ = writeln!(out, "n {} s", self.source() + 1);
        let _ = writeln!(out, "n {} t", self.sink() + 1);
        for (t, &c) in self.terminal.iter().enumerate() {
            if c > 0 {
                let _ = writeln!(out, "a {} {} {c}", self.source() + 1, t + 1);
            } else if c < 0 {
                let _ = writeln!(out, "a {} {} {}", t + 1, self.sink() + 1, -c);
            }
        }
        for &(a, b, c) in &self.links {
            let _ = writeln!(out, "a {} {} {c}", a + 1, b + 1);
            let _ = writeln!(out, "a {} {} {c}", b + 1, a + 1);
        }
        out
    }

    fn solve_flow(&self, algorithm: MaxFlowAlgorithm) -> FlowResult {
        match algorithm {
            MaxFlowAlgorithm::BoykovKolmogorov => bk::max_flow(self),
            MaxFlowAlgorithm::EdmondsKarp => edmonds_karp::max_flow(self),
        }
    }
}

fn quantize(x: f64, scale: f64) -> i64 {
    (x * scale).round() as i64
}

fn choose_scale(mesh: &TriMesh, weights: &[f64]) -> Result<f64> {
    let max_weight = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let max_length = mesh
        .interior_edges()
        .iter()
        .fold(0.0f64, |m, e| m.max(e.length));
    let max_cap = max_weight.max(max_length);
    if max_cap == 0.0 {
        return Ok(1.0);
    }
    let mut scale = CAPACITY_TARGET / max_cap;
    let total = weights.iter().map(|w| w.abs()).sum::<f64>()
        + 2.0 * mesh.interior_edges().iter().map(|e| e.length).sum::<f64>();
    if total * scale > TOTAL_CAPACITY_LIMIT {
        scale = TOTAL_CAPACITY_LIMIT / total;
    }
    if scale * max_cap < 1.0 {
        return Err(Error::CapacityOverflow(format!(
            "no fixed-point scale represents capacities up to {max_cap:e} with total {total:e}"
        )));
    }
    Ok(scale)
}

/// Residual capacities left on the link arcs after a max-flow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkResidual {
    /// Per interior edge: [left → right, right → left].
    pub per_edge: Vec<[i64; 2]>,
}

/// Raw max-flow output shared by both algorithms.
pub(crate) struct FlowResult {
    pub flow: i64,
    /// Remaining capacity of s→T (positive) or T→t (negative) per triangle.
    pub terminal_residual: Vec<i64>,
    pub link_residual: Vec<[i64; 2]>,
}

/// A maximal minimizer of the prescribed curvature energy.
#[derive(Clone, Debug)]
pub struct CutSolution {
    /// The maximal minimizing set (sink side of the minimum cut).
    pub subset: TriangleSet,
    /// `−Σ_{T∈E} c_T + Per(E, Ω)` evaluated in floating point.
    pub energy: f64,
    /// The same energy in fixed-point units, `max_flow − Σ max(c_T, 0)`.
    pub energy_fixed: i64,
    pub max_flow: i64,
    pub scale: f64,
    pub residual: LinkResidual,
}

/// Solves the cut problem with the default max-flow algorithm.
pub fn solve_mincut(mesh: &TriMesh, weights: &[f64]) -> Result<CutSolution> {
    solve_mincut_with(mesh, weights, MaxFlowAlgorithm::default())
}

pub fn solve_mincut_with(
    mesh: &TriMesh,
    weights: &[f64],
    algorithm: MaxFlowAlgorithm,
) -> Result<CutSolution> {
    let graph = CutGraph::build(mesh, weights)?;
    let flow = graph.solve_flow(algorithm);

    // Nodes reachable from s in the residual graph form the minimal source
    // side; everything else is the maximal minimizer.
    let n = mesh.num_triangles();
    let mut reached = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&t| flow.terminal_residual[t] > 0).collect();
    for &t in &queue {
        reached[t] = true;
    }
    while let Some(t) = queue.pop_front() {
        for link in mesh.neighbors(t) {
            let j = link.neighbor;
            if reached[j] {
                continue;
            }
            let r = flow.link_residual[link.edge];
            let forward = if graph.links[link.edge].0 == t {
                r[0]
            } else {
                r[1]
            };
            if forward > 0 {
                reached[j] = true;
                queue.push_back(j);
            }
        }
    }
    let in_set: Vec<bool> = reached.iter().map(|r| !r).collect();
    let subset = TriangleSet::from_mask(&in_set);
    let energy = mesh.perimeter_of_mask(&in_set) - mesh.sum_over(&subset, weights);
    Ok(CutSolution {
        subset,
        energy,
        energy_fixed: flow.flow - graph.positive_weight_total(),
        max_flow: flow.flow,
        scale: graph.scale,
        residual: LinkResidual {
            per_edge: flow.link_residual,
        },
    })
}
