//! Star shortcuts over a hierarchy, the induced weight function and splitting.
//!
//! All capacities of a [`ShortcutGraph`] are stored at scale `q` (capacity
//! scale `ψ = 1/q`): a base edge of capacity `c` is stored as `c·q`, and a star
//! leaf edge whose real capacity is `ψ·Σc` is stored as `Σc`.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{overflow, Error, Result};
use crate::graph::CapGraph;
use crate::hierarchy::{respecting_order, Hierarchy, RespectingOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeKind {
    Base(usize),
    /// Leaf to root.
    Up { star: usize, leaf: usize },
    /// Root to leaf.
    Down { star: usize, leaf: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Leaf {
    pub v: usize,
    pub up: usize,
    pub down: usize,
    /// Sum of the base capacities merged into this leaf (the stored star capacity).
    pub cap: i64,
    pub base_edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Star {
    pub level: u32,
    pub comp: u32,
    pub root: usize,
    /// `|V(C)|`, the weight of every edge of the star.
    pub size: usize,
    pub leaves: Vec<Leaf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShortcutGraph {
    /// Number of base vertices; Steiner roots follow.
    pub n: usize,
    pub q: i64,
    pub skip_top: bool,
    pub base: CapGraph,
    /// Base edges first (same ids as in `base`), then star edges. Capacities at scale `q`.
    pub graph: CapGraph,
    pub kind: Vec<EdgeKind>,
    pub stars: Vec<Star>,
    pub hierarchy: Hierarchy,
    pub order: RespectingOrder,
    /// Set on the edge-reversed view used for backward matchings.
    pub reversed: bool,
    #[serde(skip)]
    leaf_index: HashMap<(u32, u32, usize), (usize, usize)>,
    w: Vec<i64>,
}

/// Maps a piece of a split back into its parent shortcut graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    /// Piece base vertex to parent base vertex.
    pub vertex: Vec<usize>,
    /// Piece edge (base or star) to parent edge.
    pub edge: Vec<usize>,
}

impl Embedding {
    pub fn identity(sg: &ShortcutGraph) -> Self {
        Embedding { vertex: (0..sg.n).collect(), edge: (0..sg.graph.m()).collect() }
    }

    /// `outer ∘ self`: from this piece straight into the parent of `outer`.
    pub fn then(&self, outer: &Embedding) -> Embedding {
        Embedding {
            vertex: self.vertex.iter().map(|&v| outer.vertex[v]).collect(),
            edge: self.edge.iter().map(|&e| outer.edge[e]).collect(),
        }
    }

    /// Add a piece flow onto a parent flow.
    pub fn push_flow(&self, piece: &[i64], parent: &mut [i64]) {
        for (e, &f) in piece.iter().enumerate() {
            parent[self.edge[e]] += f;
        }
    }
}

pub fn build_shortcut(g: &CapGraph, h: &Hierarchy, q: i64, skip_top: bool) -> Result<ShortcutGraph> {
    if q < 1 {
        return Err(Error::InvalidArgument("capacity scale denominator must be positive".into()));
    }
    if h.n != g.n || h.level.len() != g.m() {
        return Err(Error::InvalidArgument("hierarchy does not match graph".into()));
    }
    let order = respecting_order(h)?;
    let n = g.n;
    let mut graph = CapGraph::new(n);
    let mut kind = Vec::with_capacity(g.m());
    for (e, ed) in g.edges.iter().enumerate() {
        let c = ed.cap.checked_mul(q).ok_or_else(|| overflow("base capacity times q"))?;
        graph.add_edge(ed.tail, ed.head, c);
        kind.push(EdgeKind::Base(e));
    }

    // (level, comp) -> tail -> merged edges
    let top = if skip_top { h.levels.saturating_sub(1) } else { h.levels };
    let mut groups: Vec<((u32, u32), Vec<(usize, usize)>)> = Vec::new();
    let mut group_of: HashMap<(u32, u32), usize> = HashMap::new();
    for (e, ed) in g.edges.iter().enumerate() {
        let i = h.level[e];
        if ed.is_loop() || i > top {
            continue;
        }
        let ci = h.comp[i as usize][ed.tail];
        if ci != h.comp[i as usize][ed.head] {
            continue;
        }
        let key = (i, ci);
        let gi = *group_of.entry(key).or_insert_with(|| {
            groups.push((key, Vec::new()));
            groups.len() - 1
        });
        groups[gi].1.push((ed.tail, e));
    }
    groups.sort_by_key(|(k, _)| *k);

    let mut sizes: Vec<Vec<usize>> = Vec::with_capacity(top as usize + 1);
    for i in 0..=top as usize {
        let mut s = vec![0usize; h.count[i]];
        for v in 0..n {
            s[h.comp[i][v] as usize] += 1;
        }
        sizes.push(s);
    }

    let mut stars = Vec::with_capacity(groups.len());
    let mut leaf_index = HashMap::new();
    graph.n = n + groups.len();
    for (si, ((i, ci), mut members)) in groups.into_iter().enumerate() {
        let root = n + si;
        members.sort_unstable();
        let mut leaves: Vec<Leaf> = Vec::new();
        for (v, e) in members {
            match leaves.last_mut() {
                Some(l) if l.v == v => {
                    l.cap = l.cap.checked_add(g.edges[e].cap).ok_or_else(|| overflow("star capacity"))?;
                    l.base_edges.push(e);
                }
                _ => leaves.push(Leaf { v, up: 0, down: 0, cap: g.edges[e].cap, base_edges: vec![e] }),
            }
        }
        for (li, l) in leaves.iter_mut().enumerate() {
            l.up = graph.add_edge(l.v, root, l.cap);
            kind.push(EdgeKind::Up { star: si, leaf: li });
            l.down = graph.add_edge(root, l.v, l.cap);
            kind.push(EdgeKind::Down { star: si, leaf: li });
            leaf_index.insert((i, ci, l.v), (si, li));
        }
        stars.push(Star { level: i, comp: ci, root, size: sizes[i as usize][ci as usize], leaves });
    }

    let mut sg = ShortcutGraph {
        n,
        q,
        skip_top,
        base: g.clone(),
        graph,
        kind,
        stars,
        hierarchy: h.clone(),
        order,
        reversed: false,
        leaf_index,
        w: Vec::new(),
    };
    sg.w = sg.compute_weights();
    Ok(sg)
}

impl ShortcutGraph {
    pub fn base_m(&self) -> usize {
        self.base.m()
    }

    pub fn total_n(&self) -> usize {
        self.graph.n
    }

    pub fn is_star_edge(&self, e: usize) -> bool {
        e >= self.base.m()
    }

    /// τ of a base vertex; in the reversed view the order is mirrored.
    pub fn tau(&self, v: usize) -> usize {
        if self.reversed {
            self.n - 1 - self.order.tau[v]
        } else {
            self.order.tau[v]
        }
    }

    /// Star and leaf index of the leaf `v` of the level-`i` star on component `comp`.
    pub fn leaf(&self, i: u32, comp: u32, v: usize) -> Option<(usize, usize)> {
        self.leaf_index.get(&(i, comp, v)).copied()
    }

    /// `w_H`: base edges `|τ(u) − τ(v)|` (self-loops 1), star edges `|V(C)|`.
    pub fn weights(&self) -> &[i64] {
        &self.w
    }

    fn compute_weights(&self) -> Vec<i64> {
        self.kind
            .iter()
            .enumerate()
            .map(|(e, k)| match *k {
                EdgeKind::Base(_) => {
                    let ed = &self.graph.edges[e];
                    (self.order.tau[ed.tail] as i64 - self.order.tau[ed.head] as i64).abs().max(1)
                }
                EdgeKind::Up { star, .. } | EdgeKind::Down { star, .. } => self.stars[star].size as i64,
            })
            .collect()
    }

    /// `Σ_e 1/w(e)` split into base and star parts.
    pub fn harmonic_sums(&self) -> (f64, f64) {
        let w = self.weights();
        let mut base = 0.0;
        let mut star = 0.0;
        for (e, &x) in w.iter().enumerate() {
            if self.is_star_edge(e) {
                star += 1.0 / x as f64;
            } else if !self.graph.edges[e].is_loop() {
                base += 1.0 / x as f64;
            }
        }
        (base, star)
    }

    /// Edge-reversed view. Star up edges become root-to-leaf and vice versa;
    /// `kind` keeps naming the original orientation.
    pub fn reversed(&self) -> ShortcutGraph {
        let mut r = self.clone();
        r.graph = self.graph.reversed();
        r.base = self.base.reversed();
        r.reversed = !self.reversed;
        r
    }

    /// Induced shortcut graphs on `side` and its complement, with embeddings into `self`.
    pub fn split(&self, side: &[bool]) -> Result<[(ShortcutGraph, Embedding); 2]> {
        if side.len() != self.n {
            return Err(Error::InvalidArgument("split side must cover base vertices only".into()));
        }
        let k = side.iter().filter(|&&x| x).count();
        if k == 0 || k == self.n {
            return Err(Error::InvalidArgument("split side must be nonempty and proper".into()));
        }
        Ok([self.piece(side, true)?, self.piece(side, false)?])
    }

    fn piece(&self, side: &[bool], want: bool) -> Result<(ShortcutGraph, Embedding)> {
        let vertex: Vec<usize> = (0..self.n).filter(|&v| side[v] == want).collect();
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in vertex.iter().enumerate() {
            local[v] = i;
        }
        // Work in the original orientation, then re-reverse if needed.
        let base = if self.reversed { self.base.reversed() } else { self.base.clone() };
        let mut sub = CapGraph::new(vertex.len());
        let mut edge = Vec::new();
        let mut level = Vec::new();
        for (e, ed) in base.edges.iter().enumerate() {
            if side[ed.tail] == want && side[ed.head] == want {
                sub.add_edge(local[ed.tail], local[ed.head], ed.cap);
                edge.push(e);
                level.push(self.hierarchy.level[e]);
            }
        }
        let h = Hierarchy::new(&sub, level, self.hierarchy.levels)?;
        let mut p = build_shortcut(&sub, &h, self.q, self.skip_top)?;
        for st in &p.stars {
            let i = st.level as usize;
            for l in &st.leaves {
                let v = vertex[l.v];
                let (ps, pl) = self
                    .leaf(st.level, self.hierarchy.comp[i][v], v)
                    .ok_or_else(|| Error::NonLaminar("piece star has no parent leaf".into()))?;
                debug_assert!(l.cap <= self.stars[ps].leaves[pl].cap);
                edge.push(self.stars[ps].leaves[pl].up);
                edge.push(self.stars[ps].leaves[pl].down);
            }
        }
        if self.reversed {
            p = p.reversed();
        }
        Ok((p, Embedding { vertex, edge }))
    }
}
