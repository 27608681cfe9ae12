//! Primal network simplex for the balanced transportation problem.
//!
//! Sources `0..m`, sinks `m..m+n`, and an artificial root `m+n`. The starting basis is the
//! strongly feasible tree of artificial arcs; leaving arcs follow Cunningham's rule so the
//! method cannot cycle. Tree indices are rebuilt from the basis after every pivot.

use std::collections::VecDeque;

use crate::error::{Error, Result};

const MAX_PIVOTS_PER_NODE: usize = 2000;

/// Optimal flow and dual potentials of a transportation problem.
#[derive(Clone, Debug)]
pub struct TransportSolution {
    pub cost: f64,
    /// `(source, sink, flow)` of every basic arc with positive flow.
    pub plan: Vec<(usize, usize, f64)>,
    /// Potentials with `pot_sink - pot_source <= c` for every pair, equality on the plan.
    pub source_potential: Vec<f64>,
    pub sink_potential: Vec<f64>,
}

struct Tree {
    parent: Vec<usize>,
    pred: Vec<usize>,
    /// Arc of `pred` points from the node to its parent.
    up: Vec<bool>,
    depth: Vec<usize>,
    pot: Vec<f64>,
    flow: Vec<f64>,
}

pub fn solve_transport(
    supply: &[f64],
    demand: &[f64],
    cost: impl Fn(usize, usize) -> f64,
) -> Result<TransportSolution> {
    let m = supply.len();
    let n = demand.len();
    let nodes = m + n + 1;
    let root = m + n;
    let real_arcs = m * n;
    let mut max_cost = 0.0f64;
    for i in 0..m {
        for j in 0..n {
            max_cost = max_cost.max(cost(i, j).abs());
        }
    }
    let art_cost = (max_cost + 1.0) * nodes as f64;
    let endpoints = |arc: usize| -> (usize, usize) {
        if arc < real_arcs {
            (arc / n, m + arc % n)
        } else {
            let v = arc - real_arcs;
            if v < m {
                (v, root)
            } else {
                (root, v)
            }
        }
    };
    let arc_cost = |arc: usize| -> f64 {
        if arc < real_arcs {
            cost(arc / n, arc % n)
        } else {
            art_cost
        }
    };

    // basis: one arc per non-root node, with its flow
    let mut basis: Vec<(usize, f64)> =
        (0..m).map(|i| (real_arcs + i, supply[i])).chain((0..n).map(|j| (real_arcs + m + j, demand[j]))).collect();

    let rebuild = |basis: &[(usize, f64)]| -> Tree {
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
        for (k, &(arc, _)) in basis.iter().enumerate() {
            let (a, b) = endpoints(arc);
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        let mut tree = Tree {
            parent: vec![usize::MAX; nodes],
            pred: vec![usize::MAX; nodes],
            up: vec![false; nodes],
            depth: vec![0; nodes],
            pot: vec![0.0; nodes],
            flow: vec![0.0; nodes],
        };
        let mut seen = vec![false; nodes];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(w, k) in &adj[v] {
                if seen[w] {
                    continue;
                }
                seen[w] = true;
                let (arc, flow) = basis[k];
                let (tail, _) = endpoints(arc);
                tree.parent[w] = v;
                tree.pred[w] = arc;
                tree.up[w] = tail == w;
                tree.depth[w] = tree.depth[v] + 1;
                tree.flow[w] = flow;
                // tree arcs have zero reduced cost c + pot[tail] - pot[head]
                tree.pot[w] = if tree.up[w] { tree.pot[v] - arc_cost(arc) } else { tree.pot[v] + arc_cost(arc) };
                queue.push_back(w);
            }
        }
        tree
    };

    let mut tree = rebuild(&basis);
    let block = ((real_arcs as f64).sqrt() as usize).max(10).min(real_arcs.max(1));
    let mut next_arc = 0usize;
    let eps = 1e-12 * (max_cost + 1.0);
    let max_pivots = MAX_PIVOTS_PER_NODE * nodes;
    let mut pivots = 0usize;
    loop {
        // block search pricing over the real arcs
        let mut entering = None;
        let mut best = -eps;
        let mut scanned = 0usize;
        while scanned < real_arcs {
            let end = (scanned + block).min(real_arcs);
            for _ in scanned..end {
                let arc = next_arc;
                next_arc = if next_arc + 1 == real_arcs { 0 } else { next_arc + 1 };
                let (tail, head) = endpoints(arc);
                let rc = arc_cost(arc) + tree.pot[tail] - tree.pot[head];
                if rc < best {
                    best = rc;
                    entering = Some(arc);
                }
            }
            scanned = end;
            if entering.is_some() {
                break;
            }
        }
        let Some(arc_in) = entering else { break };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::NotConverged { what: "network simplex", iterations: pivots });
        }
        let (first, second) = endpoints(arc_in);
        // join node
        let (mut a, mut b) = (first, second);
        while a != b {
            if tree.depth[a] >= tree.depth[b] {
                a = tree.parent[a];
            } else {
                b = tree.parent[b];
            }
        }
        let join = a;
        // leaving arc, Cunningham's rule
        let mut delta = f64::INFINITY;
        let mut out_node = usize::MAX;
        let mut u = first;
        while u != join {
            if tree.up[u] && tree.flow[u] < delta {
                delta = tree.flow[u];
                out_node = u;
            }
            u = tree.parent[u];
        }
        let mut u = second;
        while u != join {
            if !tree.up[u] && tree.flow[u] <= delta {
                delta = tree.flow[u];
                out_node = u;
            }
            u = tree.parent[u];
        }
        if out_node == usize::MAX {
            return Err(Error::InvalidArgument("transportation problem is unbounded".into()));
        }
        // augment along the cycle
        if delta > 0.0 {
            let mut u = first;
            while u != join {
                tree.flow[u] += if tree.up[u] { -delta } else { delta };
                u = tree.parent[u];
            }
            let mut u = second;
            while u != join {
                tree.flow[u] += if tree.up[u] { delta } else { -delta };
                u = tree.parent[u];
            }
        }
        let arc_out = tree.pred[out_node];
        let mut new_basis = Vec::with_capacity(basis.len());
        for v in 0..nodes {
            if v == root {
                continue;
            }
            if v == out_node {
                new_basis.push((arc_in, delta));
            } else {
                new_basis.push((tree.pred[v], tree.flow[v]));
            }
        }
        debug_assert!(new_basis.iter().all(|&(arc, _)| arc != arc_out));
        basis = new_basis;
        tree = rebuild(&basis);
    }

    let mut cost_total = 0.0;
    let mut plan = Vec::new();
    for &(arc, flow) in &basis {
        if arc < real_arcs && flow > 0.0 {
            let (i, j) = (arc / n, arc % n);
            cost_total += flow * cost(i, j);
            plan.push((i, j, flow));
        }
    }
    Ok(TransportSolution {
        cost: cost_total,
        plan,
        source_potential: tree.pot[..m].to_vec(),
        sink_potential: tree.pot[m..m + n].to_vec(),
    })
}
