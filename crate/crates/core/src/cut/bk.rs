//! Boykov–Kolmogorov augmenting-path max-flow.
//!
//! Two search trees grow from the terminals; after each augmentation the
//! trees are repaired by adopting orphans instead of being rebuilt, which is
//! what makes the method fast on grid-like graphs. Terminal arcs are folded
//! into a signed per-node residual (`tr_cap > 0`: from the source,
//! `tr_cap < 0`: to the sink).

use std::collections::VecDeque;

use super::{CutGraph, FlowResult};

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;
const INF_DIST: u32 = u32::MAX;

struct Graph {
    // Arc pairs: 2e is left→right, 2e + 1 is right→left; sister = a ^ 1.
    head: Vec<u32>,
    r_cap: Vec<i64>,
    adj_start: Vec<u32>,
    adj: Vec<u32>,

    tr_cap: Vec<i64>,
    parent: Vec<u32>,
    is_sink: Vec<bool>,
    ts: Vec<u64>,
    dist: Vec<u32>,
    queued: Vec<bool>,

    active: VecDeque<u32>,
    orphans: VecDeque<u32>,
    time: u64,
    flow: i64,
}

impl Graph {
    fn new(g: &CutGraph) -> Self {
        let n = g.num_triangles();
        let m = g.links().len();
        let mut head = Vec::with_capacity(2 * m);
        let mut r_cap = Vec::with_capacity(2 * m);
        let mut degree = vec![0u32; n + 1];
        for &(a, b, c) in g.links() {
            head.push(b as u32);
            r_cap.push(c);
            head.push(a as u32);
            r_cap.push(c);
            degree[a + 1] += 1;
            degree[b + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let adj_start = degree.clone();
        let mut fill = degree;
        let mut adj = vec![0u32; 2 * m];
        for (e, &(a, b, _)) in g.links().iter().enumerate() {
            adj[fill[a] as usize] = 2 * e as u32;
            fill[a] += 1;
            adj[fill[b] as usize] = 2 * e as u32 + 1;
            fill[b] += 1;
        }
        Graph {
            head,
            r_cap,
            adj_start,
            adj,
            tr_cap: g.terminal_capacities().to_vec(),
            parent: vec![NONE; n],
            is_sink: vec![false; n],
            ts: vec![0; n],
            dist: vec![0; n],
            queued: vec![false; n],
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
            flow: 0,
        }
    }

    fn arcs(&self, i: u32) -> std::ops::Range<usize> {
        self.adj_start[i as usize] as usize..self.adj_start[i as usize + 1] as usize
    }

    fn set_active(&mut self, i: u32) {
        if !self.queued[i as usize] {
            self.queued[i as usize] = true;
            self.active.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<u32> {
        while let Some(i) = self.active.pop_front() {
            self.queued[i as usize] = false;
            if self.parent[i as usize] != NONE {
                return Some(i);
            }
        }
        None
    }

    fn orphan_front(&mut self, i: u32) {
        self.parent[i as usize] = ORPHAN;
        self.orphans.push_front(i);
    }

    fn orphan_rear(&mut self, i: u32) {
        self.parent[i as usize] = ORPHAN;
        self.orphans.push_back(i);
    }

    fn init_trees(&mut self) {
        for i in 0..self.tr_cap.len() {
            let c = self.tr_cap[i];
            if c != 0 {
                self.is_sink[i] = c < 0;
                self.parent[i] = TERMINAL;
                self.ts[i] = 0;
                self.dist[i] = 1;
                self.set_active(i as u32);
            }
        }
    }

    /// Grows the tree of `i`; returns an arc from the source tree into the
    /// sink tree if the trees touch.
    fn grow(&mut self, i: u32) -> Option<u32> {
        let iu = i as usize;
        for k in self.arcs(i) {
            let a = self.adj[k];
            let residual = if self.is_sink[iu] {
                self.r_cap[(a ^ 1) as usize]
            } else {
                self.r_cap[a as usize]
            };
            if residual == 0 {
                continue;
            }
            let j = self.head[a as usize];
            let ju = j as usize;
            if self.parent[ju] == NONE {
                self.is_sink[ju] = self.is_sink[iu];
                self.parent[ju] = a ^ 1;
                self.ts[ju] = self.ts[iu];
                self.dist[ju] = self.dist[iu] + 1;
                self.set_active(j);
            } else if self.is_sink[ju] != self.is_sink[iu] {
                return Some(if self.is_sink[iu] { a ^ 1 } else { a });
            } else if self.ts[ju] <= self.ts[iu] && self.dist[ju] > self.dist[iu] {
                // Shorter path to the terminal through i.
                self.parent[ju] = a ^ 1;
                self.ts[ju] = self.ts[iu];
                self.dist[ju] = self.dist[iu] + 1;
            }
        }
        None
    }

    fn augment(&mut self, middle: u32) {
        let tail = self.head[(middle ^ 1) as usize];
        let front = self.head[middle as usize];

        let mut bottleneck = self.r_cap[middle as usize];
        let mut i = tail;
        loop {
            let a = self.parent[i as usize];
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.r_cap[(a ^ 1) as usize]);
            i = self.head[a as usize];
        }
        bottleneck = bottleneck.min(self.tr_cap[i as usize]);
        let mut i = front;
        loop {
            let a = self.parent[i as usize];
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.r_cap[a as usize]);
            i = self.head[a as usize];
        }
        bottleneck = bottleneck.min(-self.tr_cap[i as usize]);

        self.r_cap[(middle ^ 1) as usize] += bottleneck;
        self.r_cap[middle as usize] -= bottleneck;

        let mut i = tail;
        loop {
            let a = self.parent[i as usize];
            if a == TERMINAL {
                break;
            }
            self.r_cap[a as usize] += bottleneck;
            self.r_cap[(a ^ 1) as usize] -= bottleneck;
            if self.r_cap[(a ^ 1) as usize] == 0 {
                self.orphan_front(i);
            }
            i = self.head[a as usize];
        }
        self.tr_cap[i as usize] -= bottleneck;
        if self.tr_cap[i as usize] == 0 {
            self.orphan_front(i);
        }

        let mut i = front;
        loop {
            let a = self.parent[i as usize];
            if a == TERMINAL {
                break;
            }
            self.r_cap[(a ^ 1) as usize] += bottleneck;
            self.r_cap[a as usize] -= bottleneck;
            if self.r_cap[a as usize] == 0 {
                self.orphan_front(i);
            }
            i = self.head[a as usize];
        }
        self.tr_cap[i as usize] += bottleneck;
        if self.tr_cap[i as usize] == 0 {
            self.orphan_front(i);
        }

        self.flow += bottleneck;
    }

    /// Distance from `j` to its terminal along parent links, or `INF_DIST`
    /// if the path runs into an orphan. Stamps visited nodes with the
    /// current time.
    fn origin_distance(&mut self, j: u32) -> u32 {
        let mut d: u32 = 0;
        let mut k = j;
        loop {
            let ku = k as usize;
            if self.ts[ku] == self.time {
                d += self.dist[ku];
                break;
            }
            let a = self.parent[ku];
            d += 1;
            if a == TERMINAL {
                self.ts[ku] = self.time;
                self.dist[ku] = 1;
                break;
            }
            if a == ORPHAN {
                return INF_DIST;
            }
            k = self.head[a as usize];
        }
        let mut k = j;
        let mut dk = d;
        while self.ts[k as usize] != self.time {
            self.ts[k as usize] = self.time;
            self.dist[k as usize] = dk;
            dk -= 1;
            k = self.head[self.parent[k as usize] as usize];
        }
        d
    }

    fn adopt(&mut self, i: u32) {
        let iu = i as usize;
        let sink_tree = self.is_sink[iu];
        let mut best_arc = NONE;
        let mut best_dist = INF_DIST;
        for k in self.arcs(i) {
            let a0 = self.adj[k];
            // A parent j must be able to push into i (source tree) or
            // receive from i (sink tree).
            let residual = if sink_tree {
                self.r_cap[a0 as usize]
            } else {
                self.r_cap[(a0 ^ 1) as usize]
            };
            if residual == 0 {
                continue;
            }
            let j = self.head[a0 as usize];
            let ju = j as usize;
            if self.is_sink[ju] != sink_tree || self.parent[ju] == NONE {
                continue;
            }
            let d = self.origin_distance(j);
            if d < best_dist {
                best_dist = d;
                best_arc = a0;
            }
        }

        if best_arc != NONE {
            self.parent[iu] = best_arc;
            self.ts[iu] = self.time;
            self.dist[iu] = best_dist + 1;
            return;
        }

        self.parent[iu] = NONE;
        for k in self.arcs(i) {
            let a0 = self.adj[k];
            let j = self.head[a0 as usize];
            let ju = j as usize;
            let a = self.parent[ju];
            if self.is_sink[ju] != sink_tree || a == NONE {
                continue;
            }
            let residual = if sink_tree {
                self.r_cap[a0 as usize]
            } else {
                self.r_cap[(a0 ^ 1) as usize]
            };
            if residual > 0 {
                self.set_active(j);
            }
            if a != TERMINAL && a != ORPHAN && self.head[a as usize] == i {
                self.orphan_rear(j);
            }
        }
    }

    fn run(&mut self) {
        self.init_trees();
        let mut current: Option<u32> = None;
        loop {
            let i = match current.take().filter(|&i| self.parent[i as usize] != NONE) {
                Some(i) => i,
                None => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };
            let middle = self.grow(i);
            self.time += 1;
            if let Some(arc) = middle {
                current = Some(i);
                self.augment(arc);
                while let Some(o) = self.orphans.pop_front() {
                    self.adopt(o);
                }
            }
        }
    }
}

pub(super) fn max_flow(g: &CutGraph) -> FlowResult {
    let mut graph = Graph::new(g);
    graph.run();
    let link_residual = (0..g.links().len())
        .map(|e| [graph.r_cap[2 * e], graph.r_cap[2 * e + 1]])
        .collect();
    FlowResult {
        flow: graph.flow,
        terminal_residual: graph.tr_cap,
        link_residual,
    }
}
