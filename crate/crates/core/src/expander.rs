//! One round of weak expander decomposition and routing inside certified leaves.

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cut_matching::{crossing, non_stop_cmg, CmgOutcome, CmgParams, CmgWitness};
use crate::error::{overflow, Error, Result};
use crate::graph::{CapGraph, Demand, ScaledFlow};
use crate::push_relabel::{weighted_push_relabel, WeightFn};
use crate::shortcut::{Embedding, ShortcutGraph};
use crate::sparse_cut::height;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecompParams {
    pub cmg: CmgParams,
    /// Pieces deeper than this become degraded leaves.
    pub max_depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Cut,
    Leaf,
    /// No top-level volume in the piece.
    Trivial,
    /// Game starved or depth exhausted: all of `F` kept without a certificate.
    Degraded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecompEvent {
    pub depth: u32,
    pub vertices: usize,
    pub vol: i64,
    pub kind: NodeKind,
    /// Capacity of the cut edges moved up, real units.
    pub moved: i128,
}

#[derive(Debug, Clone)]
pub struct LeafRecord {
    /// Base vertices of the round graph, in piece order.
    pub vertices: Vec<usize>,
    pub piece: ShortcutGraph,
    /// Piece edges into the round's shortcut graph.
    pub embed: Embedding,
    /// Base edge ids of `F′`.
    pub certified: Vec<usize>,
    pub h_leaf: i64,
    pub witness: Option<CmgWitness>,
    pub kind: NodeKind,
}

#[derive(Debug, Clone)]
pub struct DecompResult {
    pub e_next: Vec<bool>,
    pub leaves: Vec<LeafRecord>,
    pub log: Vec<DecompEvent>,
    pub depth: u32,
    pub phi_den: i64,
    pub top_cap: i128,
    pub next_cap: i128,
}

impl DecompResult {
    pub fn contraction_holds(&self) -> bool {
        10 * self.next_cap <= 9 * self.top_cap
    }

    /// Leaf index of every base vertex.
    pub fn leaf_of(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for (i, l) in self.leaves.iter().enumerate() {
            for &v in &l.vertices {
                out[v] = i;
            }
        }
        out
    }

    pub fn degraded(&self) -> usize {
        self.leaves.iter().filter(|l| l.kind == NodeKind::Degraded).count()
    }
}

/// `F′`: edges of `f` with no endpoint in `U = {v : 2d′(v) ≤ scale·vol_F(v)}`.
/// Self-loops of `f` are always kept.
pub fn vertex_weight_to_edges(g: &CapGraph, f: &[bool], d_prime: &[i64], scale: i64) -> Result<Vec<bool>> {
    let vol = g.volume(f);
    if d_prime.len() != g.n || f.len() != g.m() {
        return Err(Error::InvalidArgument("measure or edge set does not match the graph".into()));
    }
    let total_d: i128 = d_prime.iter().map(|&x| x as i128).sum();
    let total_vol: i128 = vol.iter().map(|&x| x as i128).sum();
    if 5 * total_d < 4 * scale as i128 * total_vol {
        return Err(Error::Refused("measure keeps less than 4/5 of the volume".into()));
    }
    let in_u: Vec<bool> = (0..g.n).map(|v| 2 * d_prime[v] as i128 <= scale as i128 * vol[v] as i128).collect();
    Ok(g.edges
        .iter()
        .zip(f)
        .map(|(e, &inf)| inf && (e.is_loop() || (!in_u[e.tail] && !in_u[e.head])))
        .collect())
}

fn cap_of(g: &CapGraph, set: &[bool]) -> i128 {
    g.edges.iter().zip(set).filter(|(_, &x)| x).map(|(e, _)| e.cap as i128).sum()
}

/// Decompose the top-level edges `e_top` of `sg` (a round graph without top stars).
pub fn weak_expander_decomposition(
    sg: &ShortcutGraph,
    e_top: &[bool],
    p: &DecompParams,
    rng: &mut ChaCha8Rng,
) -> Result<DecompResult> {
    let m = sg.base_m();
    if e_top.len() != m {
        return Err(Error::InvalidArgument("top edge set must cover the base edges".into()));
    }
    let mut e_next = vec![false; m];
    let mut leaves = Vec::new();
    let mut log = Vec::new();
    let mut max_depth = 0;
    let mut stack = vec![(sg.clone(), Embedding::identity(sg), 0u32)];
    while let Some((piece, embed, depth)) = stack.pop() {
        max_depth = max_depth.max(depth);
        let f: Vec<bool> = (0..piece.base_m()).map(|e| e_top[embed.edge[e]]).collect();
        let vol: i64 = piece.base.volume(&f).iter().sum();
        let mut event = DecompEvent { depth, vertices: piece.n, vol, kind: NodeKind::Trivial, moved: 0 };
        let leaf = |piece: ShortcutGraph, embed: Embedding, keep: &[bool], witness, kind| -> Result<LeafRecord> {
            let h_leaf = height(&piece, &f, p.cmg.kappa(), &p.cmg.cut)?;
            let certified = (0..piece.base_m()).filter(|&e| keep[e]).map(|e| embed.edge[e]).collect();
            Ok(LeafRecord { vertices: embed.vertex.clone(), piece, embed, certified, h_leaf, witness, kind })
        };
        if vol == 0 {
            leaves.push(leaf(piece, embed, &f, None, NodeKind::Trivial)?);
            log.push(event);
            continue;
        }
        let outcome = if depth > p.max_depth {
            CmgOutcome::Starved { witness: empty_witness(&piece), last_cut: None }
        } else {
            non_stop_cmg(&piece, &f, &p.cmg, rng)?
        };
        let side = match outcome {
            CmgOutcome::Cut(c) => Some(c.side),
            CmgOutcome::Certified(w) => {
                let keep = vertex_weight_to_edges(&piece.base, &f, &w.alive, piece.q)?;
                for e in 0..piece.base_m() {
                    if f[e] && !keep[e] {
                        e_next[embed.edge[e]] = true;
                        event.moved += piece.base.edges[e].cap as i128;
                    }
                }
                event.kind = NodeKind::Leaf;
                leaves.push(leaf(piece, embed, &keep, Some(w), NodeKind::Leaf)?);
                log.push(event);
                continue;
            }
            CmgOutcome::Starved { witness, last_cut } => {
                let proper = last_cut.filter(|s| {
                    let k = s[..piece.n].iter().filter(|&&x| x).count();
                    k > 0 && k < piece.n
                });
                if proper.is_none() {
                    event.kind = NodeKind::Degraded;
                    leaves.push(leaf(piece, embed, &f, Some(witness), NodeKind::Degraded)?);
                    log.push(event);
                    continue;
                }
                proper
            }
        };
        let side = side.unwrap();
        // Move the cheaper crossing direction's base edges up.
        let (out_cap, in_cap) = crossing(&piece, &side);
        let leaving = out_cap <= in_cap;
        for e in 0..piece.base_m() {
            let ed = &piece.base.edges[e];
            let crosses = if leaving { side[ed.tail] && !side[ed.head] } else { !side[ed.tail] && side[ed.head] };
            if crosses {
                e_next[embed.edge[e]] = true;
                event.moved += ed.cap as i128;
            }
        }
        event.kind = NodeKind::Cut;
        log.push(event);
        let [(a, ea), (b, eb)] = piece.split(&side[..piece.n])?;
        stack.push((b, eb.then(&embed), depth + 1));
        stack.push((a, ea.then(&embed), depth + 1));
    }
    let top_cap = cap_of(&sg.base, e_top);
    let next_cap = cap_of(&sg.base, &e_next);
    Ok(DecompResult { e_next, leaves, log, depth: max_depth, phi_den: p.cmg.phi_den, top_cap, next_cap })
}

fn empty_witness(piece: &ShortcutGraph) -> CmgWitness {
    CmgWitness { rounds: Vec::new(), d: vec![0; piece.n], alive: vec![0; piece.n], removed: 0, mass: Vec::new() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Routed {
    /// On `leaf.piece.graph` edges, at the demand's scale.
    pub flow: ScaledFlow,
    /// Sum of the per-round capacity multipliers: congestion is at most `mult`.
    pub mult: i64,
    pub rounds: u32,
}

/// Route a demand on the leaf's base vertices inside its piece.
///
/// Push-relabel rounds on the remaining demand each get fresh capacity
/// `mult·c`; after `⌈log₂ n⌉ + 2` rounds without finishing, or on a round that
/// routes nothing, `mult` and the height double. Terminates whenever the
/// demand is routable in the piece at all.
pub fn route_respecting_demand(leaf: &LeafRecord, d: &Demand, mult: i64) -> Result<Routed> {
    let sg = &leaf.piece;
    let g = &sg.graph;
    if d.sources.len() != g.n || (sg.n..g.n).any(|v| d.sources[v] != 0 || d.sinks[v] != 0) {
        return Err(Error::InvalidArgument("demand must live on the leaf's base vertices".into()));
    }
    if d.scale % sg.q != 0 {
        return Err(Error::ScaleMismatch { demand: d.scale, flow: sg.q });
    }
    if d.total_sources() != d.total_sinks() {
        return Err(Error::InvalidArgument("leaf demand must be balanced".into()));
    }
    let unit = d.scale / sg.q;
    let w = sg.weights().to_vec();
    let mut h = leaf.h_leaf.max(1);
    let mut mult = mult.max(1);
    let mut acc = vec![0i64; g.m()];
    let mut rem = d.clone();
    let per_level = (usize::BITS - sg.n.leading_zeros()) + 2;
    let mut rounds = 0u32;
    let mut tries = 0;
    let mut stalls = 0;
    let mut spent = 0i64;
    while rem.total_sources() > 0 {
        if stalls > 64 {
            return Err(Error::RoutingFailed("demand not routable inside its leaf".into()));
        }
        if tries == per_level {
            mult = mult.checked_mul(2).ok_or_else(|| overflow("routing multiplier"))?;
            tries = 0;
        }
        let caps: Vec<i64> = g
            .edges
            .iter()
            .map(|e| e.cap.checked_mul(unit).and_then(|x| x.checked_mul(mult)).ok_or_else(|| overflow("routing capacity")))
            .collect::<Result<_>>()?;
        let pr = weighted_push_relabel(g, &caps, &rem, &WeightFn::new(w.clone(), h))?;
        rounds += 1;
        tries += 1;
        if pr.value == 0 {
            stalls += 1;
            h = h.saturating_mul(2).min(i64::MAX / 64);
            mult = mult.checked_mul(2).ok_or_else(|| overflow("routing multiplier"))?;
            tries = 0;
            continue;
        }
        spent = spent.checked_add(mult).ok_or_else(|| overflow("routing multiplier"))?;
        for e in 0..g.m() {
            acc[e] += pr.flow.values[e];
        }
        rem = rem.residual(&g.net_out(&pr.flow.values));
    }
    Ok(Routed { flow: ScaledFlow { scale: d.scale, values: acc }, mult: spent, rounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::check_feasible_scaled;
    use crate::hierarchy::Hierarchy;
    use crate::shortcut::build_shortcut;
    use crate::sparse_cut::CutParams;
    use rand::{Rng, SeedableRng};

    fn params() -> DecompParams {
        DecompParams {
            cmg: CmgParams { phi_den: 16, delta_den: 8, rounds: 16, sketch_dim: 8, cut: CutParams::new(2) },
            max_depth: 40,
        }
    }

    fn round_sg(g: &CapGraph) -> ShortcutGraph {
        let h = Hierarchy::flat(g).unwrap();
        build_shortcut(g, &h, 2, true).unwrap()
    }

    fn clique(g: &mut CapGraph, vs: &[usize], cap: i64) {
        for &u in vs {
            for &v in vs {
                if u != v {
                    g.add_edge(u, v, cap);
                }
            }
        }
    }

    #[test]
    fn full_measure_keeps_everything() {
        let g = CapGraph::from_edges(3, &[(0, 1, 2), (1, 2, 3), (2, 0, 1)]);
        let f = vec![true; 3];
        let vol = g.volume(&f);
        assert_eq!(vertex_weight_to_edges(&g, &f, &vol, 1).unwrap(), f);
    }

    #[test]
    fn zeroed_vertex_drops_its_edges() {
        let g = CapGraph::from_edges(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1), (0, 2, 1), (3, 3, 5)]);
        let f = vec![true; 6];
        let mut d = g.volume(&f);
        d[1] = 0;
        let keep = vertex_weight_to_edges(&g, &f, &d, 1).unwrap();
        assert_eq!(keep, vec![false, false, true, true, true, true]);
    }

    #[test]
    fn low_mass_is_refused() {
        let g = CapGraph::from_edges(2, &[(0, 1, 10)]);
        let r = vertex_weight_to_edges(&g, &[true], &[7, 8], 1);
        assert!(matches!(r, Err(Error::Refused(_))));
    }

    #[test]
    fn random_measure_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..200 {
            let n = 20;
            let mut g = CapGraph::new(n);
            for _ in 0..60 {
                let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
                if u != v {
                    g.add_edge(u, v, rng.gen_range(1..20));
                }
            }
            let f: Vec<bool> = (0..g.m()).map(|_| rng.gen_bool(0.7)).collect();
            let vol = g.volume(&f);
            let total: i64 = vol.iter().sum();
            if total == 0 {
                continue;
            }
            // Remove 15% of the mass greedily from random vertices.
            let mut d = vol.clone();
            let mut cut = (total * 15) / 100;
            while cut > 0 {
                let v = rng.gen_range(0..n);
                let x = d[v].min(cut).min(rng.gen_range(1..=10));
                d[v] -= x;
                cut -= x;
            }
            let keep = vertex_weight_to_edges(&g, &f, &d, 1).unwrap();
            let vk = g.volume(&keep);
            for v in 0..n {
                assert!(vk[v] <= 2 * d[v]);
            }
            assert!(5 * cap_of(&g, &keep) >= cap_of(&g, &f));
        }
    }

    #[test]
    fn empty_top_set() {
        let g = CapGraph::from_edges(3, &[(0, 1, 1), (1, 2, 1)]);
        let sg = round_sg(&g);
        let r = weak_expander_decomposition(&sg, &[false, false], &params(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(r.e_next.iter().all(|&x| !x));
        assert!(r.leaves.iter().all(|l| l.certified.is_empty()));
        assert!(r.contraction_holds());
    }

    #[test]
    fn expander_needs_no_recursion() {
        let mut g = CapGraph::new(6);
        clique(&mut g, &[0, 1, 2, 3, 4, 5], 3);
        let sg = round_sg(&g);
        let f = vec![true; g.m()];
        let r = weak_expander_decomposition(&sg, &f, &params(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(r.leaves.len(), 1);
        assert_eq!(r.depth, 0);
        let kept: i128 = r.leaves[0].certified.iter().map(|&e| g.edges[e].cap as i128).sum();
        assert!(5 * kept >= cap_of(&g, &f));
        assert!(r.contraction_holds());
    }

    #[test]
    fn barbell_cuts_one_direction_of_bridge() {
        let mut g = CapGraph::new(10);
        clique(&mut g, &[0, 1, 2, 3, 4], 200);
        clique(&mut g, &[5, 6, 7, 8, 9], 200);
        let b1 = g.add_edge(0, 5, 1);
        let b2 = g.add_edge(5, 0, 2);
        let sg = round_sg(&g);
        let f = vec![true; g.m()];
        let r = weak_expander_decomposition(&sg, &f, &params(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(r.log[0].kind, NodeKind::Cut);
        assert!(r.e_next[b1]);
        assert!(!r.e_next[b2]);
        assert_eq!(r.next_cap, 1);
        let leaf_of = r.leaf_of(10);
        assert!((0..5).all(|v| leaf_of[v] == leaf_of[0]));
        assert!((5..10).all(|v| leaf_of[v] == leaf_of[5]));
        assert_ne!(leaf_of[0], leaf_of[5]);
    }

    #[test]
    fn random_rounds_refine_into_leaves() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..10 {
            let n = 12;
            let mut g = CapGraph::new(n);
            for _ in 0..40 {
                let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
                g.add_edge(u, v, rng.gen_range(1..30));
            }
            let sg = round_sg(&g);
            let f = vec![true; g.m()];
            let r = weak_expander_decomposition(&sg, &f, &params(), &mut rng).unwrap();
            assert!(r.contraction_holds(), "{} > 0.9 {}", r.next_cap, r.top_cap);
            // SCCs of G without E_next stay inside one leaf.
            let (ids, _) = crate::scc::scc(&g, |e| !r.e_next[e]);
            let leaf_of = r.leaf_of(n);
            for u in 0..n {
                for v in 0..n {
                    if ids[u] == ids[v] {
                        assert_eq!(leaf_of[u], leaf_of[v]);
                    }
                }
            }
            // Each top edge is cut, certified once, or crosses leaves.
            let mut seen = vec![0; g.m()];
            for l in &r.leaves {
                for &e in &l.certified {
                    seen[e] += 1;
                }
            }
            for e in 0..g.m() {
                assert!(seen[e] <= 1);
                assert!(!(seen[e] == 1 && r.e_next[e]));
                let ed = &g.edges[e];
                if seen[e] == 0 && !r.e_next[e] {
                    assert_ne!(leaf_of[ed.tail], leaf_of[ed.head]);
                }
            }
        }
    }

    #[test]
    fn routing_in_a_leaf() {
        let mut g = CapGraph::new(5);
        clique(&mut g, &[0, 1, 2, 3, 4], 2);
        let sg = round_sg(&g);
        let f = vec![true; g.m()];
        let r = weak_expander_decomposition(&sg, &f, &params(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let leaf = &r.leaves[0];
        let z = 40 * sg.q;
        let zero = Demand::zero(leaf.piece.graph.n, z);
        let out = route_respecting_demand(leaf, &zero, 1).unwrap();
        assert!(out.flow.values.iter().all(|&x| x == 0));

        // Full volume demand from 0,1 to 3,4.
        let vol = leaf.piece.base.volume(&f);
        let mut d = Demand::zero(leaf.piece.graph.n, z);
        d.sources[0] = vol[0] * z;
        d.sources[1] = vol[1] * z;
        d.sinks[3] = vol[3] * z;
        d.sinks[4] = vol[4] * z;
        let out = route_respecting_demand(leaf, &d, 1).unwrap();
        let v = check_feasible_scaled(&leaf.piece.graph, sg.q, &d, &out.flow, out.mult, 1).unwrap();
        assert!(v.ok, "{:?}", v.violation);
        assert!(d.residual(&leaf.piece.graph.net_out(&out.flow.values)).is_zero());
    }
}
