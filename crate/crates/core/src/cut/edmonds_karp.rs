//! Shortest-augmenting-path max-flow on an explicit s-t graph.

use std::collections::VecDeque;

use super::{CutGraph, FlowResult};

struct Arc {
    to: usize,
    cap: i64,
}

pub(super) fn max_flow(g: &CutGraph) -> FlowResult {
    let n = g.num_triangles();
    let (s, t) = (g.source(), g.sink());
    let mut arcs: Vec<Arc> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + 2];
    let mut add = |arcs: &mut Vec<Arc>, u: usize, v: usize, cap: i64, rev: i64| -> usize {
        let id = arcs.len();
        arcs.push(Arc { to: v, cap });
        arcs.push(Arc { to: u, cap: rev });
        adj[u].push(id);
        adj[v].push(id + 1);
        id
    };

    let mut link_ids = Vec::with_capacity(g.links().len());
    for &(a, b, c) in g.links() {
        link_ids.push(add(&mut arcs, a, b, c, c));
    }
    let mut terminal_ids = vec![None; n];
    for (i, &c) in g.terminal_capacities().iter().enumerate() {
        if c > 0 {
            terminal_ids[i] = Some(add(&mut arcs, s, i, c, 0));
        } else if c < 0 {
            terminal_ids[i] = Some(add(&mut arcs, i, t, -c, 0));
        }
    }

    let mut flow = 0i64;
    let mut pred = vec![usize::MAX; n + 2];
    loop {
        pred.fill(usize::MAX);
        let mut queue = VecDeque::from([s]);
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &a in &adj[u] {
                let v = arcs[a].to;
                if arcs[a].cap > 0 && v != s && pred[v] == usize::MAX {
                    pred[v] = a;
                    if v == t {
                        found = true;
                        break;
                    }
                    queue.push_back(v);
                }
            }
            if found {
                break;
            }
        }
        if !found {
            break;
        }
        let mut bottleneck = i64::MAX;
        let mut v = t;
        while v != s {
            let a = pred[v];
            bottleneck = bottleneck.min(arcs[a].cap);
            v = arcs[a ^ 1].to;
        }
        let mut v = t;
        while v != s {
            let a = pred[v];
            arcs[a].cap -= bottleneck;
            arcs[a ^ 1].cap += bottleneck;
            v = arcs[a ^ 1].to;
        }
        flow += bottleneck;
    }

    let terminal_residual = g
        .terminal_capacities()
        .iter()
        .zip(&terminal_ids)
        .map(|(&c, id)| match id {
            Some(a) if c > 0 => arcs[*a].cap,
            Some(a) => -arcs[*a].cap,
            None => 0,
        })
        .collect();
    let link_residual = link_ids
        .iter()
        .map(|&a| [arcs[a].cap, arcs[a + 1].cap])
        .collect();
    FlowResult {
        flow,
        terminal_residual,
        link_residual,
    }
}
