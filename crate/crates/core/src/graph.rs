//! Capacitated digraphs, scaled demands and flows, cuts and the feasibility checker.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub cap: i64,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }
}

/// Directed multigraph with integer capacities. Edges are addressed by position.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CapGraph {
    pub n: usize,
    pub edges: Vec<Edge>,
}

impl CapGraph {
    pub fn new(n: usize) -> Self {
        CapGraph { n, edges: Vec::new() }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize, i64)]) -> Self {
        let mut g = CapGraph::new(n);
        for &(u, v, c) in edges {
            g.add_edge(u, v, c);
        }
        g
    }

    pub fn add_edge(&mut self, tail: usize, head: usize, cap: i64) -> usize {
        assert!(tail < self.n && head < self.n, "edge endpoint out of range");
        self.edges.push(Edge { tail, head, cap });
        self.edges.len() - 1
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn total_cap(&self) -> i128 {
        self.edges.iter().filter(|e| !e.is_loop()).map(|e| e.cap as i128).sum()
    }

    pub fn max_cap(&self) -> i64 {
        self.edges.iter().map(|e| e.cap).max().unwrap_or(0)
    }

    pub fn reversed(&self) -> CapGraph {
        CapGraph {
            n: self.n,
            edges: self
                .edges
                .iter()
                .map(|e| Edge { tail: e.head, head: e.tail, cap: e.cap })
                .collect(),
        }
    }

    /// Outgoing edge ids per vertex in CSR form: `(start, ids)`.
    pub fn out_csr(&self) -> (Vec<usize>, Vec<usize>) {
        csr(self.n, self.edges.iter().map(|e| e.tail), self.m())
    }

    /// Net outflow per vertex of an edge flow; self-loops are ignored.
    pub fn net_out(&self, flow: &[i64]) -> Vec<i64> {
        let mut out = vec![0i64; self.n];
        for (e, &f) in self.edges.iter().zip(flow) {
            if !e.is_loop() {
                out[e.tail] += f;
                out[e.head] -= f;
            }
        }
        out
    }

    /// Vertices reachable from `s` along edges accepted by `ok`.
    pub fn reachable(&self, s: usize, ok: impl Fn(usize) -> bool) -> Vec<bool> {
        let (start, ids) = self.out_csr();
        let mut seen = vec![false; self.n];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &e in &ids[start[u]..start[u + 1]] {
                let v = self.edges[e].head;
                if !seen[v] && ok(e) {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Capacity of edges from `side` to its complement and back.
    pub fn cut_capacity(&self, side: &[bool]) -> (i64, i64) {
        let mut fwd = 0i64;
        let mut bwd = 0i64;
        for e in &self.edges {
            if side[e.tail] && !side[e.head] {
                fwd += e.cap;
            } else if !side[e.tail] && side[e.head] {
                bwd += e.cap;
            }
        }
        (fwd, bwd)
    }

    /// `vol_F(v)`: total capacity of non-loop edges of `f` incident to each vertex.
    pub fn volume(&self, f: &[bool]) -> Vec<i64> {
        let mut vol = vec![0i64; self.n];
        for (e, &inf) in self.edges.iter().zip(f) {
            if inf && !e.is_loop() {
                vol[e.tail] += e.cap;
                vol[e.head] += e.cap;
            }
        }
        vol
    }
}

pub(crate) fn csr(n: usize, keys: impl Iterator<Item = usize>, m: usize) -> (Vec<usize>, Vec<usize>) {
    let keys: Vec<usize> = keys.collect();
    let mut start = vec![0usize; n + 1];
    for &k in &keys {
        start[k + 1] += 1;
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut ids = vec![0usize; m];
    for (e, &k) in keys.iter().enumerate() {
        ids[fill[k]] = e;
        fill[k] += 1;
    }
    (start, ids)
}

/// Source and sink masses in units of `1/scale`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demand {
    pub scale: i64,
    pub sources: Vec<i64>,
    pub sinks: Vec<i64>,
}

impl Demand {
    pub fn zero(n: usize, scale: i64) -> Self {
        Demand { scale, sources: vec![0; n], sinks: vec![0; n] }
    }

    pub fn st(n: usize, s: usize, t: usize, amount: i64, scale: i64) -> Self {
        let mut d = Demand::zero(n, scale);
        d.sources[s] = amount;
        d.sinks[t] = amount;
        d
    }

    pub fn total_sources(&self) -> i64 {
        self.sources.iter().sum()
    }

    pub fn total_sinks(&self) -> i64 {
        self.sinks.iter().sum()
    }

    pub fn is_diffusion(&self) -> bool {
        self.total_sources() <= self.total_sinks()
    }

    pub fn is_zero(&self) -> bool {
        self.sources.iter().all(|&x| x == 0) && self.sinks.iter().all(|&x| x == 0)
    }

    /// `(Δ_f, ∇_f)` for a flow with the given net outflow.
    pub fn residual(&self, net_out: &[i64]) -> Demand {
        let n = self.sources.len();
        let mut r = Demand::zero(n, self.scale);
        for u in 0..n {
            let x = self.sources[u] - self.sinks[u] - net_out[u];
            r.sources[u] = x.max(0);
            r.sinks[u] = (-x).max(0);
        }
        r
    }

    /// `|f| = Σ (Δ(u) − Δ_f(u))`.
    pub fn routed(&self, net_out: &[i64]) -> i64 {
        let r = self.residual(net_out);
        self.total_sources() - r.total_sources()
    }
}

/// Edge flow in units of `1/scale`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaledFlow {
    pub scale: i64,
    pub values: Vec<i64>,
}

impl ScaledFlow {
    pub fn zero(m: usize, scale: i64) -> Self {
        ScaledFlow { scale, values: vec![0; m] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutResult {
    pub side: Vec<bool>,
    pub forward: i64,
    pub backward: i64,
    pub vol_side: i64,
    pub vol_rest: i64,
}

impl CutResult {
    pub fn from_side(g: &CapGraph, side: Vec<bool>, f: &[bool]) -> Self {
        let (forward, backward) = g.cut_capacity(&side);
        let vol = g.volume(f);
        let vol_side = (0..g.n).filter(|&v| side[v]).map(|v| vol[v]).sum();
        let vol_rest = (0..g.n).filter(|&v| !side[v]).map(|v| vol[v]).sum();
        CutResult { side, forward, backward, vol_side, vol_rest }
    }

    pub fn min_vol(&self) -> i64 {
        self.vol_side.min(self.vol_rest)
    }

    pub fn is_proper(&self) -> bool {
        self.side.iter().any(|&x| x) && !self.side.iter().all(|&x| x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub ok: bool,
    pub violation: Option<String>,
}

impl Verdict {
    fn fail(msg: String) -> Self {
        Verdict { ok: false, violation: Some(msg) }
    }
}

/// Feasibility at congestion `κ_num/κ_den`; capacities are taken at scale 1.
pub fn check_feasible(g: &CapGraph, d: &Demand, f: &ScaledFlow, kappa_num: i64, kappa_den: i64) -> Result<Verdict> {
    check_feasible_scaled(g, 1, d, f, kappa_num, kappa_den)
}

/// Like [`check_feasible`] for graphs whose stored capacities are pre-multiplied by `cap_scale`.
pub fn check_feasible_scaled(
    g: &CapGraph,
    cap_scale: i64,
    d: &Demand,
    f: &ScaledFlow,
    kappa_num: i64,
    kappa_den: i64,
) -> Result<Verdict> {
    if d.scale != f.scale {
        return Err(Error::ScaleMismatch { demand: d.scale, flow: f.scale });
    }
    if kappa_den <= 0 || kappa_num < 0 {
        return Err(Error::InvalidArgument("congestion must be a nonnegative fraction".into()));
    }
    if f.values.len() != g.m() {
        return Ok(Verdict::fail(format!("flow has {} entries, graph has {} edges", f.values.len(), g.m())));
    }
    for (i, (e, &x)) in g.edges.iter().zip(&f.values).enumerate() {
        if x < 0 {
            return Ok(Verdict::fail(format!("negative flow {x} on edge {i}")));
        }
        if e.is_loop() {
            continue;
        }
        let lhs = x as i128 * cap_scale as i128 * kappa_den as i128;
        let rhs = kappa_num as i128 * e.cap as i128 * f.scale as i128;
        if lhs > rhs {
            return Ok(Verdict::fail(format!(
                "capacity violated on edge {i} ({}->{}): flow {x}/{} exceeds {}/{} x cap {}",
                e.tail, e.head, f.scale, kappa_num, kappa_den, e.cap
            )));
        }
    }
    let net = g.net_out(&f.values);
    for u in 0..g.n {
        if net[u] > d.sources[u] {
            return Ok(Verdict::fail(format!(
                "conservation violated at vertex {u}: net outflow {} exceeds source {}",
                net[u], d.sources[u]
            )));
        }
        if -net[u] > d.sinks[u] {
            return Ok(Verdict::fail(format!(
                "conservation violated at vertex {u}: net inflow {} exceeds sink {}",
                -net[u], d.sinks[u]
            )));
        }
    }
    Ok(Verdict { ok: true, violation: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_flow_feasible_and_residual_is_input() {
        let g = CapGraph::from_edges(3, &[(0, 1, 2), (1, 2, 2)]);
        let d = Demand::st(3, 0, 2, 5, 1);
        let f = ScaledFlow::zero(2, 1);
        assert!(check_feasible(&g, &d, &f, 1, 1).unwrap().ok);
        assert_eq!(d.residual(&g.net_out(&f.values)), d);
    }

    #[test]
    fn single_edge_capacity_boundary() {
        let g = CapGraph::from_edges(2, &[(0, 1, 5)]);
        let d = Demand::st(2, 0, 1, 10, 1);
        let ok = ScaledFlow { scale: 1, values: vec![5] };
        let bad = ScaledFlow { scale: 1, values: vec![6] };
        assert!(check_feasible(&g, &d, &ok, 1, 1).unwrap().ok);
        assert!(!check_feasible(&g, &d, &bad, 1, 1).unwrap().ok);
    }

    #[test]
    fn scale_mismatch_is_error() {
        let g = CapGraph::from_edges(2, &[(0, 1, 5)]);
        let d = Demand::st(2, 0, 1, 10, 2);
        let f = ScaledFlow::zero(1, 1);
        assert!(check_feasible(&g, &d, &f, 1, 1).is_err());
    }

    #[test]
    fn routed_value_two_ways() {
        let g = CapGraph::from_edges(3, &[(0, 1, 3), (1, 2, 3)]);
        let d = Demand::st(3, 0, 2, 4, 1);
        let net = g.net_out(&[3, 3]);
        let r = d.residual(&net);
        assert_eq!(d.routed(&net), 3);
        assert_eq!(d.total_sinks() - r.total_sinks(), 3);
    }

    #[test]
    fn cut_capacities() {
        let g = CapGraph::from_edges(3, &[(0, 1, 3), (1, 0, 2), (1, 2, 7)]);
        let c = CutResult::from_side(&g, vec![true, false, false], &[true, true, true]);
        assert_eq!((c.forward, c.backward), (3, 2));
        assert_eq!((c.vol_side, c.vol_rest), (5, 19));
    }
}
