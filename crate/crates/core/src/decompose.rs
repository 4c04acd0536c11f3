//! Path decomposition of edge flows and short-path filtering.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{CapGraph, Demand};
use crate::link_cut::LinkCut;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PathRec {
    pub lambda: i64,
    pub source: usize,
    pub sink: usize,
    pub weight: i64,
}

/// `flow = circulation + Σ λ_i · (simple source_i → sink_i path)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathDecompRep {
    pub circulation: Vec<i64>,
    pub paths: Vec<PathRec>,
    /// Explicit edge lists, when requested.
    pub witnesses: Option<Vec<Vec<usize>>>,
}

impl PathDecompRep {
    pub fn value(&self) -> i64 {
        self.paths.iter().map(|p| p.lambda).sum()
    }
}

/// Decompose a nonnegative edge flow with a link-cut forest.
///
/// Every vertex links to the head of its next out-edge with remaining flow;
/// closing a cycle cancels it into the circulation, and reaching a vertex
/// with unmet inflow emits a path.
pub fn path_decompose(g: &CapGraph, flow: &[i64], weights: &[i64], record_paths: bool) -> Result<PathDecompRep> {
    let n = g.n;
    let m = g.m();
    if flow.len() != m || weights.len() != m {
        return Err(Error::InvalidArgument("flow/weight length mismatch".into()));
    }
    let mut rem = vec![0i64; m];
    let mut circ = vec![0i64; m];
    for (e, ed) in g.edges.iter().enumerate() {
        if flow[e] < 0 {
            return Err(Error::InvalidArgument(format!("negative flow on edge {e}")));
        }
        if ed.is_loop() {
            circ[e] = flow[e];
        } else {
            rem[e] = flow[e];
        }
    }
    let (start, out) = crate::graph::csr(n, g.edges.iter().map(|e| e.tail), m);
    let mut ptr: Vec<usize> = start[..n].to_vec();
    let net = g.net_out(flow);
    let mut exc: Vec<i64> = net.iter().map(|&x| x.max(0)).collect();
    let mut def: Vec<i64> = net.iter().map(|&x| (-x).max(0)).collect();
    let mut parent_edge = vec![NONE; n];
    let mut lct = LinkCut::new(n);
    let mut paths = Vec::new();
    let mut witnesses = record_paths.then(Vec::new);

    let tree_edges = |lct: &mut LinkCut, parent_edge: &[usize], x: usize| -> Vec<usize> {
        let nodes = lct.path_nodes(x);
        nodes[1..].iter().rev().map(|&v| parent_edge[v]).collect()
    };
    let cut_zeros = |lct: &mut LinkCut, parent_edge: &mut [usize], x: usize| loop {
        if lct.path_min(x) != 0 {
            break;
        }
        let y = lct.argmin(x);
        lct.cut(y);
        parent_edge[y] = NONE;
    };

    for s in 0..n {
        while exc[s] > 0 {
            let r = lct.find_root(s);
            if r != s && def[r] > 0 {
                let lam = lct.path_min(s).min(exc[s]).min(def[r]);
                let weight = lct.path_weight(s);
                if let Some(ws) = witnesses.as_mut() {
                    ws.push(tree_edges(&mut lct, &parent_edge, s));
                }
                lct.path_add(s, -lam);
                exc[s] -= lam;
                def[r] -= lam;
                paths.push(PathRec { lambda: lam, source: s, sink: r, weight });
                cut_zeros(&mut lct, &mut parent_edge, s);
                continue;
            }
            while ptr[r] < start[r + 1] && rem[out[ptr[r]]] == 0 {
                ptr[r] += 1;
            }
            if ptr[r] == start[r + 1] {
                return Err(Error::Conservation(r));
            }
            let e = out[ptr[r]];
            let x = g.edges[e].head;
            if lct.find_root(x) == r {
                let mu = rem[e].min(lct.path_min(x));
                for te in tree_edges(&mut lct, &parent_edge, x) {
                    circ[te] += mu;
                }
                circ[e] += mu;
                rem[e] -= mu;
                lct.path_add(x, -mu);
                cut_zeros(&mut lct, &mut parent_edge, x);
            } else {
                lct.link(r, x, rem[e], weights[e]);
                parent_edge[r] = e;
                rem[e] = 0;
                ptr[r] += 1;
            }
        }
    }
    for v in 0..n {
        if parent_edge[v] != NONE {
            rem[parent_edge[v]] = lct.value(v);
        }
    }
    for e in 0..m {
        circ[e] += rem[e];
    }
    Ok(PathDecompRep { circulation: circ, paths, witnesses })
}

/// Keep paths of weight at most `threshold`.
///
/// Returns the kept representation, the kept edge flow (no circulation) and
/// the part of `d` that the kept flow leaves unrouted.
pub fn filter_short_paths(
    g: &CapGraph,
    flow: &[i64],
    rep: &PathDecompRep,
    threshold: i64,
    d: &Demand,
) -> Result<(PathDecompRep, Vec<i64>, Demand)> {
    let m = g.m();
    let mut kept_flow: Vec<i64> = (0..m).map(|e| flow[e] - rep.circulation[e]).collect();
    let mut kept = PathDecompRep { circulation: vec![0; m], paths: Vec::new(), witnesses: rep.witnesses.as_ref().map(|_| Vec::new()) };
    for (i, p) in rep.paths.iter().enumerate() {
        if p.weight <= threshold {
            kept.paths.push(*p);
            if let (Some(k), Some(w)) = (kept.witnesses.as_mut(), rep.witnesses.as_ref()) {
                k.push(w[i].clone());
            }
        } else {
            let w = rep
                .witnesses
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("dropping a path requires recorded witnesses".into()))?;
            for &e in &w[i] {
                kept_flow[e] -= p.lambda;
            }
        }
    }
    let residual = d.residual(&g.net_out(&kept_flow));
    Ok((kept, kept_flow, residual))
}
