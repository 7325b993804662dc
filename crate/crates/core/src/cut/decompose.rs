use std::collections::VecDeque;

use super::CutSolution;
use crate::mesh::{TriMesh, TriangleSet};

/// Splits a triangle set into its edge-connected components.
///
/// Two triangles belong to the same component iff they are joined by a chain
/// of set members sharing interior edges. The components partition `subset`
/// and their perimeters add up exactly to the perimeter of `subset`, since no
/// edge is shared between different components. Components are ordered by
/// their smallest triangle index. Runs in O(#triangles + #edges).
pub fn decompose(mesh: &TriMesh, subset: &TriangleSet) -> Vec<TriangleSet> {
    let n = mesh.num_triangles();
    let mut label = vec![usize::MAX; n];
    let member = mesh.mask(subset);
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for &seed in subset.as_slice() {
        if label[seed] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut comp = vec![seed];
        label[seed] = id;
        queue.push_back(seed);
        while let Some(t) = queue.pop_front() {
            for link in mesh.neighbors(t) {
                let j = link.neighbor;
                if member[j] && label[j] == usize::MAX {
                    label[j] = id;
                    comp.push(j);
                    queue.push_back(j);
                }
            }
        }
        components.push(TriangleSet::new(comp));
    }
    components
}

/// Strongly connected components of the residual graph restricted to the
/// triangles of the cut solution's set.
///
/// Used as a diagnostic against [`decompose`]: the partition is never
/// coarser than the edge-connected components, and is strictly finer when a
/// saturated link leaves only one residual direction between two members.
pub fn residual_scc_components(mesh: &TriMesh, cut: &CutSolution) -> Vec<TriangleSet> {
    let n = mesh.num_triangles();
    let member_mask = mesh.mask(&cut.subset);
    let member = &member_mask;
    let edges = mesh.interior_edges();
    let successors = |t: usize| {
        mesh.neighbors(t).iter().filter_map(move |link| {
            let j = link.neighbor;
            if !member[j] {
                return None;
            }
            let r = cut.residual.per_edge[link.edge];
            let forward = if edges[link.edge].left == t {
                r[0]
            } else {
                r[1]
            };
            (forward > 0).then_some(j)
        })
    };

    // Iterative Tarjan.
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut components = Vec::new();
    for &root in cut.subset.as_slice() {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, successors(root).collect(), 0));
        while let Some(top) = call.len().checked_sub(1) {
            let v = call[top].0;
            let pos = call[top].2;
            if pos < call[top].1.len() {
                let w = call[top].1[pos];
                call[top].2 += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, successors(w).collect(), 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some((parent, _, _)) = call.last() {
                    low[*parent] = low[*parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    components.push(TriangleSet::new(comp));
                }
            }
        }
    }
    components.sort();
    components
}
