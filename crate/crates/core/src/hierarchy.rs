//! Level functions, per-level strongly connected components and respecting orders.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::CapGraph;
use crate::scc::scc;

/// Hierarchy induced by a level function.
///
/// Edges whose level exceeds `levels` are outside the hierarchy (the current
/// top-level edges during construction) and belong to no component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hierarchy {
    pub n: usize,
    pub levels: u32,
    pub level: Vec<u32>,
    /// `comp[i][v]`: id of the level-`i` component of `v`, `0 ≤ i ≤ levels`.
    /// Ids are topological within each level.
    pub comp: Vec<Vec<u32>>,
    pub count: Vec<usize>,
}

impl Hierarchy {
    pub fn new(g: &CapGraph, level: Vec<u32>, levels: u32) -> Result<Self> {
        if level.len() != g.m() {
            return Err(Error::InvalidArgument("one level per edge required".into()));
        }
        if level.iter().any(|&l| l == 0) {
            return Err(Error::InvalidArgument("edge levels start at 1".into()));
        }
        let n = g.n;
        let mut comp = vec![(0..n as u32).collect::<Vec<u32>>()];
        let mut count = vec![n];
        for i in 1..=levels {
            let (ids, k) = scc(g, |e| level[e] <= i);
            comp.push(ids);
            count.push(k);
        }
        Ok(Hierarchy { n, levels, level, comp, count })
    }

    /// Hierarchy with every edge on level 1 and no level above it excluded.
    pub fn flat(g: &CapGraph) -> Result<Self> {
        Hierarchy::new(g, vec![1; g.m()], 1)
    }

    /// Member lists of the level-`i` components, indexed by component id.
    pub fn members(&self, i: u32) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count[i as usize]];
        for v in 0..self.n {
            out[self.comp[i as usize][v] as usize].push(v);
        }
        out
    }

    /// Every level-`i` component lies inside one level-`(i+1)` component.
    pub fn check_laminar(&self) -> Result<()> {
        for i in 0..self.levels as usize {
            let mut parent = vec![u32::MAX; self.count[i]];
            for v in 0..self.n {
                let c = self.comp[i][v] as usize;
                let p = self.comp[i + 1][v];
                if parent[c] == u32::MAX {
                    parent[c] = p;
                } else if parent[c] != p {
                    return Err(Error::NonLaminar(format!("level-{i} component {c} spans two level-{} components", i + 1)));
                }
            }
        }
        Ok(())
    }

    /// Restriction to the vertices `keep` (in the given order): levels are
    /// inherited by the edges of the induced subgraph `sub`.
    pub fn restrict(&self, sub: &CapGraph, sub_level: Vec<u32>) -> Result<Self> {
        Hierarchy::new(sub, sub_level, self.levels)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RespectingOrder {
    pub tau: Vec<usize>,
    pub inv: Vec<usize>,
}

/// Sort vertices by their component ids from the top level down, then by id.
///
/// With topological ids per level this makes every component contiguous and
/// orders reachable components first.
pub fn respecting_order(h: &Hierarchy) -> Result<RespectingOrder> {
    h.check_laminar()?;
    let mut inv: Vec<usize> = (0..h.n).collect();
    let top = h.levels as usize;
    inv.sort_by(|&a, &b| {
        for i in (1..=top).rev() {
            let c = h.comp[i][a].cmp(&h.comp[i][b]);
            if c != std::cmp::Ordering::Equal {
                return c;
            }
        }
        a.cmp(&b)
    });
    let mut tau = vec![0usize; h.n];
    for (r, &v) in inv.iter().enumerate() {
        tau[v] = r;
    }
    Ok(RespectingOrder { tau, inv })
}
