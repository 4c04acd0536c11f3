//! Bottom-up hierarchy construction and the flow-unfolding structure.

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{overflow, Error, Result};
use crate::expander::{route_respecting_demand, weak_expander_decomposition, DecompEvent, DecompResult};
use crate::graph::{CapGraph, Demand};
use crate::hierarchy::Hierarchy;
use crate::profile::{Profile, Scales};
use crate::shortcut::{build_shortcut, EdgeKind, ShortcutGraph};

/// Round `r`: `H^(r)` (top level `r`), `G_{A^(r)}` and the decomposition of `E_r^(r)`.
#[derive(Debug, Clone)]
pub struct RoundSnapshot {
    pub round: u32,
    pub hierarchy: Hierarchy,
    pub sg: ShortcutGraph,
    pub top_cap: i128,
    /// `None` for the final snapshot, whose top level is empty.
    pub decomp: Option<DecompResult>,
}

#[derive(Debug, Clone)]
pub struct BuiltHierarchy {
    pub g: CapGraph,
    pub scales: Scales,
    pub profile: Profile,
    /// `snapshots[r - 1]` is round `r`; the last one is final.
    pub snapshots: Vec<RoundSnapshot>,
}

impl BuiltHierarchy {
    pub fn last(&self) -> &RoundSnapshot {
        self.snapshots.last().unwrap()
    }

    pub fn final_sg(&self) -> &ShortcutGraph {
        &self.last().sg
    }

    pub fn level(&self) -> &[u32] {
        &self.last().hierarchy.level
    }

    /// Rounds whose decomposition ran.
    pub fn rounds(&self) -> u32 {
        self.snapshots.len() as u32 - 1
    }

    pub fn snapshot(&self, r: u32) -> &RoundSnapshot {
        &self.snapshots[r as usize - 1]
    }

    pub fn contraction_holds(&self) -> bool {
        self.snapshots.windows(2).all(|w| 10 * w[1].top_cap <= 9 * w[0].top_cap) && self.last().top_cap == 0
    }

    pub fn degraded_leaves(&self) -> usize {
        self.snapshots.iter().filter_map(|s| s.decomp.as_ref()).map(|d| d.degraded()).sum()
    }
}

fn top_set(level: &[u32], r: u32) -> Vec<bool> {
    level.iter().map(|&l| l == r).collect()
}

fn cap_of(g: &CapGraph, set: &[bool]) -> i128 {
    g.edges.iter().zip(set).filter(|(_, &x)| x).map(|(e, _)| e.cap as i128).sum()
}

/// Run decomposition rounds until the top level is empty.
///
/// `L` fixes `ψ` and `z`; rounds stop early when the top empties and continue
/// past `L` only if contraction stalled (reported through `contraction_holds`).
pub fn build_hierarchy(g: &CapGraph, profile: &Profile, rng: &mut ChaCha8Rng) -> Result<BuiltHierarchy> {
    let scales = Scales::new(g.total_cap(), profile.phi_rand_den)?;
    let params = profile.decomp(&scales);
    let mut level = vec![1u32; g.m()];
    let mut snapshots = Vec::new();
    let limit = 4 * scales.levels + 16;
    for r in 1.. {
        let hierarchy = Hierarchy::new(g, level.clone(), r)?;
        let sg = build_shortcut(g, &hierarchy, scales.q, true)?;
        let top = top_set(&level, r);
        let top_cap = cap_of(g, &top);
        if top_cap == 0 || r > limit {
            if top_cap != 0 {
                return Err(Error::RoutingFailed(format!("top level still holds capacity {top_cap} after {limit} rounds")));
            }
            snapshots.push(RoundSnapshot { round: r, hierarchy, sg, top_cap, decomp: None });
            break;
        }
        let decomp = weak_expander_decomposition(&sg, &top, &params, rng)?;
        for (e, l) in level.iter_mut().enumerate() {
            if decomp.e_next[e] {
                *l = r + 1;
            }
        }
        snapshots.push(RoundSnapshot { round: r, hierarchy, sg, top_cap, decomp: Some(decomp) });
    }
    Ok(BuiltHierarchy { g: g.clone(), scales, profile: *profile, snapshots })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnfoldStep {
    pub round: u32,
    /// Congestion numerator over `z` after this level.
    pub kappa: i64,
    pub star_flow: i64,
    pub route_mult: i64,
}

/// Realized congestion numerator over `z` of a scale-`z` flow on `sg`.
pub fn congestion(sg: &ShortcutGraph, f: &[i64]) -> i64 {
    sg.graph
        .edges
        .iter()
        .zip(f)
        .filter(|(e, &x)| x > 0 && !e.is_loop())
        .map(|(e, &x)| {
            let num = x as i128 * sg.q as i128;
            ((num + e.cap as i128 - 1) / e.cap as i128) as i64
        })
        .max()
        .unwrap_or(0)
}

/// Replace level-`r` star traffic of a scale-`z` flow on `G_{A^(r+1)}` by routes
/// inside round `r`'s leaves; the result lives on `G_{A^(r)}`.
pub fn unfold_one_level(bh: &BuiltHierarchy, r: u32, f: &[i64], kappa: i64) -> Result<(Vec<i64>, UnfoldStep)> {
    let hi = &bh.snapshot(r + 1).sg;
    let lo_snap = bh.snapshot(r);
    let lo = &lo_snap.sg;
    let decomp = lo_snap.decomp.as_ref().ok_or_else(|| Error::InvalidArgument(format!("round {r} has no decomposition")))?;
    let z = bh.scales.z;
    if f.len() != hi.graph.m() {
        return Err(Error::InvalidArgument("flow does not match the round graph".into()));
    }
    let net = hi.graph.net_out(f);
    if (hi.n..hi.graph.n).any(|v| net[v] != 0) {
        return Err(Error::InvalidArgument("flow demand touches a Steiner root".into()));
    }
    let n = bh.g.n;
    let leaf_of = decomp.leaf_of(n);
    let mut local = vec![usize::MAX; n];
    for l in &decomp.leaves {
        for (i, &v) in l.vertices.iter().enumerate() {
            local[v] = i;
        }
    }
    let mut demands: Vec<Option<Demand>> = vec![None; decomp.leaves.len()];
    let mut out = vec![0i64; lo.graph.m()];
    let mut star_flow = 0i64;
    let mut star_net = vec![0i64; n];
    for (e, &x) in f.iter().enumerate() {
        if x == 0 {
            continue;
        }
        match hi.kind[e] {
            EdgeKind::Base(b) => out[b] += x,
            EdgeKind::Up { star, leaf } | EdgeKind::Down { star, leaf } => {
                let st = &hi.stars[star];
                let v = st.leaves[leaf].v;
                let up = matches!(hi.kind[e], EdgeKind::Up { .. });
                if st.level == r {
                    star_flow += x;
                    star_net[v] += if up { x } else { -x };
                } else {
                    let i = st.level;
                    let (ps, pl) = lo
                        .leaf(i, lo.hierarchy.comp[i as usize][v], v)
                        .ok_or_else(|| Error::NonLaminar(format!("level-{i} leaf {v} has no counterpart in round {r}")))?;
                    let pleaf = &lo.stars[ps].leaves[pl];
                    out[if up { pleaf.up } else { pleaf.down }] += x;
                }
            }
        }
    }
    for v in 0..n {
        if star_net[v] == 0 {
            continue;
        }
        let li = leaf_of[v];
        let leaf = &decomp.leaves[li];
        let d = demands[li].get_or_insert_with(|| Demand::zero(leaf.piece.graph.n, z));
        if star_net[v] > 0 {
            d.sources[local[v]] += star_net[v];
        } else {
            d.sinks[local[v]] -= star_net[v];
        }
    }
    let mut route_mult = 0;
    for (li, d) in demands.iter().enumerate() {
        let Some(d) = d else { continue };
        if d.total_sources() != d.total_sinks() {
            return Err(Error::NonLaminar(format!("level-{r} star traffic is unbalanced inside leaf {li}")));
        }
        let leaf = &decomp.leaves[li];
        let routed = route_respecting_demand(leaf, d, 1)?;
        route_mult = route_mult.max(routed.mult);
        leaf.embed.push_flow(&routed.flow.values, &mut out);
    }
    let kappa2 = congestion(lo, &out).max(kappa);
    Ok((out, UnfoldStep { round: r, kappa: kappa2, star_flow, route_mult }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Unfolded {
    /// On the edges of `G`, scale `z`.
    pub flow: Vec<i64>,
    pub kappa: i64,
    pub steps: Vec<UnfoldStep>,
}

/// Map a scale-`z` flow on the final shortcut graph down to `G`.
pub fn unfold(bh: &BuiltHierarchy, f: &[i64]) -> Result<Unfolded> {
    let top = bh.snapshots.len() as u32;
    let mut kappa = congestion(bh.final_sg(), f);
    let mut cur = f.to_vec();
    let mut steps = Vec::new();
    for r in (1..top).rev() {
        let (next, step) = unfold_one_level(bh, r, &cur, kappa)?;
        kappa = step.kappa;
        cur = next;
        steps.push(step);
    }
    debug_assert_eq!(cur.len(), bh.g.m());
    Ok(Unfolded { flow: cur, kappa, steps })
}

/// Scale a flow at `q` to `z`.
pub fn to_z(bh: &BuiltHierarchy, f: &[i64]) -> Result<Vec<i64>> {
    let k = bh.scales.z / bh.scales.q;
    f.iter().map(|&x| x.checked_mul(k).ok_or_else(|| overflow("flow at scale z"))).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct StarDump {
    pub level: u32,
    pub comp: u32,
    pub root: usize,
    pub size: usize,
    /// `(leaf, capacity at scale q)`.
    pub leaves: Vec<(usize, i64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundDump {
    pub round: u32,
    pub top_cap: i128,
    pub next_cap: Option<i128>,
    pub leaves: usize,
    pub depth: u32,
    pub events: Vec<DecompEvent>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyDump {
    pub n: usize,
    pub m: usize,
    pub levels: u32,
    pub l: u32,
    pub q: i64,
    pub z: i64,
    pub level: Vec<u32>,
    /// `comp[i][v]` for `i = 0..=levels`.
    pub comp: Vec<Vec<u32>>,
    pub tau: Vec<usize>,
    pub stars: Vec<StarDump>,
    pub rounds: Vec<RoundDump>,
}

impl BuiltHierarchy {
    pub fn dump(&self) -> HierarchyDump {
        let last = self.last();
        let sg = &last.sg;
        HierarchyDump {
            n: self.g.n,
            m: self.g.m(),
            levels: last.hierarchy.levels,
            l: self.scales.levels,
            q: self.scales.q,
            z: self.scales.z,
            level: last.hierarchy.level.clone(),
            comp: last.hierarchy.comp.clone(),
            tau: sg.order.tau.clone(),
            stars: sg
                .stars
                .iter()
                .map(|s| StarDump {
                    level: s.level,
                    comp: s.comp,
                    root: s.root,
                    size: s.size,
                    leaves: s.leaves.iter().map(|l| (l.v, l.cap)).collect(),
                })
                .collect(),
            rounds: self
                .snapshots
                .iter()
                .map(|s| RoundDump {
                    round: s.round,
                    top_cap: s.top_cap,
                    next_cap: s.decomp.as_ref().map(|d| d.next_cap),
                    leaves: s.decomp.as_ref().map_or(0, |d| d.leaves.len()),
                    depth: s.decomp.as_ref().map_or(0, |d| d.depth),
                    events: s.decomp.as_ref().map_or_else(Vec::new, |d| d.log.clone()),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{check_feasible, ScaledFlow};
    use crate::profile::ProfileKind;
    use crate::scc::scc;
    use rand::{Rng, SeedableRng};

    fn build(g: &CapGraph, seed: u64) -> BuiltHierarchy {
        let p = Profile::new(ProfileKind::Practical, g.n);
        build_hierarchy(g, &p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn dag_finishes_in_one_round() {
        let g = CapGraph::from_edges(4, &[(0, 1, 3), (1, 2, 1), (0, 3, 2), (3, 2, 2)]);
        let bh = build(&g, 1);
        assert_eq!(bh.rounds(), 1);
        assert!(bh.level().iter().all(|&l| l == 1));
        assert!(bh.contraction_holds());
        assert!(bh.final_sg().stars.is_empty());
    }

    #[test]
    fn two_cycle_gets_one_star() {
        let g = CapGraph::from_edges(2, &[(0, 1, 1), (1, 0, 1)]);
        let bh = build(&g, 2);
        assert_eq!(bh.level(), &[1, 1]);
        let last = bh.last();
        assert_eq!(last.hierarchy.count[1], 1);
        assert_eq!(last.sg.stars.len(), 1);
        assert_eq!(last.sg.stars[0].level, 1);
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CapGraph {
        let mut g = CapGraph::new(n);
        for _ in 0..m {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if u != v {
                g.add_edge(u, v, rng.gen_range(1..=(n * n) as i64));
            }
        }
        g
    }

    #[test]
    fn random_round_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..6 {
            let g = random_graph(&mut rng, 20, 70);
            let bh = build(&g, rng.gen());
            assert!(bh.contraction_holds());
            for w in bh.snapshots.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let r = a.round;
                for e in 0..g.m() {
                    let (la, lb) = (a.hierarchy.level[e], b.hierarchy.level[e]);
                    assert!(lb == la || lb == r + 1);
                }
                for i in 1..r as usize {
                    for u in 0..g.n {
                        for v in 0..g.n {
                            if b.hierarchy.comp[i][u] == b.hierarchy.comp[i][v] {
                                assert_eq!(a.hierarchy.comp[i][u], a.hierarchy.comp[i][v]);
                            }
                        }
                    }
                }
                // Recompute the level-r components directly.
                let (ids, _) = scc(&g, |e| b.hierarchy.level[e] <= r);
                for u in 0..g.n {
                    for v in 0..g.n {
                        assert_eq!(ids[u] == ids[v], b.hierarchy.comp[r as usize][u] == b.hierarchy.comp[r as usize][v]);
                    }
                }
            }
        }
    }

    #[test]
    fn base_only_flow_unfolds_to_itself() {
        let g = CapGraph::from_edges(3, &[(0, 1, 4), (1, 2, 4), (2, 0, 4)]);
        let bh = build(&g, 3);
        let sg = bh.final_sg();
        let mut f = vec![0i64; sg.graph.m()];
        f[0] = bh.scales.z;
        f[1] = bh.scales.z;
        let u = unfold(&bh, &f).unwrap();
        assert_eq!(u.flow, vec![bh.scales.z, bh.scales.z, 0]);
        assert_eq!(unfold(&bh, &vec![0; sg.graph.m()]).unwrap().flow, vec![0, 0, 0]);
    }

    #[test]
    fn star_round_trip_unfolds_feasibly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let g = random_graph(&mut rng, 10, 30);
            let bh = build(&g, rng.gen());
            let sg = bh.final_sg();
            let Some(st) = sg.stars.iter().find(|s| s.leaves.len() >= 2) else { continue };
            let (a, b) = (&st.leaves[0], &st.leaves[1]);
            // Saturate a → root → b at the star's capacity, scale z.
            let x = a.cap.min(b.cap) * (bh.scales.z / bh.scales.q);
            let mut f = vec![0i64; sg.graph.m()];
            f[a.up] = x;
            f[b.down] = x;
            let u = unfold(&bh, &f).unwrap();
            let mut d = Demand::zero(g.n, bh.scales.z);
            d.sources[a.v] = x;
            d.sinks[b.v] = x;
            assert_eq!(d.residual(&g.net_out(&u.flow)).is_zero(), true);
            let net = g.net_out(&u.flow);
            for v in 0..g.n {
                assert_eq!(net[v], d.sources[v] - d.sinks[v]);
            }
            let verdict = check_feasible(&g, &d, &ScaledFlow { scale: bh.scales.z, values: u.flow.clone() }, u.kappa, bh.scales.z)
                .unwrap();
            assert!(verdict.ok, "{:?}", verdict.violation);
        }
    }

    #[test]
    fn dump_is_json() {
        let g = CapGraph::from_edges(3, &[(0, 1, 1), (1, 0, 1), (1, 2, 1)]);
        let bh = build(&g, 0);
        let s = serde_json::to_string(&bh.dump()).unwrap();
        assert!(s.contains("\"stars\""));
    }
}
