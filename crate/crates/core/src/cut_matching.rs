//! Non-stop cut-matching game with a flow-based matching player.
//!
//! Measures are stored at the shortcut scale `q`, so `d = q·vol_F`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::decompose::PathRec;
use crate::error::{Error, Result};
use crate::graph::Demand;
use crate::shortcut::ShortcutGraph;
use crate::sparse_cut::{flow_with_short_decomposition, CutParams, LayerCut};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CmgParams {
    /// Sparsity `φ = 1/phi_den`; the matching player uses `κ = 50·phi_den`.
    pub phi_den: i64,
    /// Balance `δ = 1/delta_den`.
    pub delta_den: i64,
    pub rounds: u32,
    pub sketch_dim: usize,
    pub cut: CutParams,
}

impl CmgParams {
    pub fn kappa(&self) -> i64 {
        50 * self.phi_den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatchEdge {
    pub from: usize,
    pub to: usize,
    pub cap: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BiMatching {
    /// `P → Q`.
    pub forward: Vec<MatchEdge>,
    /// `Q → P`.
    pub backward: Vec<MatchEdge>,
    pub d_prime: Vec<i64>,
    pub d_forward: Vec<i64>,
    pub d_backward: Vec<i64>,
    pub forward_paths: Vec<PathRec>,
    pub backward_paths: Vec<PathRec>,
    /// Unmatched mass of the worse direction, scale `q`.
    pub slack: i64,
    /// Sparse cut seen by either direction, too unbalanced to return; Steiner roots included.
    pub unbalanced_cut: Option<Vec<bool>>,
}

/// A balanced sparse cut found by the matching player.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BalancedCut {
    /// Over all vertices of the shortcut graph the player ran on (Steiner roots included).
    pub side: Vec<bool>,
    pub vol_side: i64,
    pub vol_rest: i64,
    /// Stored (scale `q`) capacity of shortcut-graph edges `S → S̄` and `S̄ → S`.
    pub out_cap: i128,
    pub in_cap: i128,
    pub reversed_run: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchOutcome {
    Cut(BalancedCut),
    Matching(BiMatching),
}

fn balanced_cut(sg: &ShortcutGraph, c: &LayerCut, reversed_run: bool) -> BalancedCut {
    let (out_cap, in_cap) = crossing(sg, &c.side);
    BalancedCut { side: c.side.clone(), vol_side: c.vol_side, vol_rest: c.vol_rest, out_cap, in_cap, reversed_run }
}

/// Stored capacity of `sg.graph` edges leaving and entering `side`.
pub fn crossing(sg: &ShortcutGraph, side: &[bool]) -> (i128, i128) {
    sg.graph.edges.iter().fold((0i128, 0i128), |(o, i), e| match (side[e.tail], side[e.head]) {
        (true, false) => (o + e.cap as i128, i),
        (false, true) => (o, i + e.cap as i128),
        _ => (o, i),
    })
}

/// One oracle call: route `1_P d′ → 1_Q d′` forward and in the reversed graph.
pub fn matching_player(
    sg: &ShortcutGraph,
    terminal: &[bool],
    p_side: &[bool],
    d_prime: &[i64],
    params: &CmgParams,
) -> Result<MatchOutcome> {
    matching_player_rev(sg, &sg.reversed(), terminal, p_side, d_prime, params)
}

fn matching_player_rev(
    sg: &ShortcutGraph,
    rev: &ShortcutGraph,
    terminal: &[bool],
    p_side: &[bool],
    d_prime: &[i64],
    params: &CmgParams,
) -> Result<MatchOutcome> {
    let n = sg.n;
    if p_side.len() != n || d_prime.len() != n {
        return Err(Error::InvalidArgument("bipartition must cover exactly the base vertices".into()));
    }
    let vol = sg.base.volume(terminal);
    let vol_total: i64 = vol.iter().sum();
    let mut dem = Demand::zero(sg.graph.n, sg.q);
    for v in 0..n {
        if p_side[v] {
            dem.sources[v] = d_prime[v];
        } else {
            dem.sinks[v] = d_prime[v];
        }
    }
    let kappa = params.kappa();
    let mut runs = Vec::with_capacity(2);
    let mut unbalanced = None;
    for (graph, reversed_run) in [(sg, false), (rev, true)] {
        let r = flow_with_short_decomposition(graph, terminal, &dem, kappa, &params.cut)?;
        if let Some(c) = r.cut() {
            if 2 * params.delta_den as i128 * c.min_vol() as i128 >= vol_total as i128 && c.min_vol() > 0 {
                return Ok(MatchOutcome::Cut(balanced_cut(sg, c, reversed_run)));
            }
            unbalanced = Some(c.side.clone());
        }
        runs.push(r);
    }
    let bwd = runs.pop().unwrap();
    let fwd = runs.pop().unwrap();
    let matched = |paths: &[PathRec]| {
        let mut d = vec![0i64; n];
        for p in paths {
            d[p.source] += p.lambda;
            d[p.sink] += p.lambda;
        }
        d
    };
    let d_forward = matched(&fwd.paths);
    let d_backward = matched(&bwd.paths);
    let total: i64 = d_prime.iter().sum();
    let slack = (total - d_forward.iter().sum::<i64>()).max(total - d_backward.iter().sum::<i64>());
    Ok(MatchOutcome::Matching(BiMatching {
        forward: fwd.paths.iter().map(|p| MatchEdge { from: p.source, to: p.sink, cap: p.lambda }).collect(),
        backward: bwd.paths.iter().map(|p| MatchEdge { from: p.sink, to: p.source, cap: p.lambda }).collect(),
        d_prime: d_prime.to_vec(),
        d_forward,
        d_backward,
        forward_paths: fwd.paths,
        backward_paths: bwd.paths,
        slack,
        unbalanced_cut: unbalanced,
    }))
}

/// Projection state of the cut player: one sketch row per vertex.
#[derive(Debug, Clone)]
pub struct CutPlayer {
    rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    pub p_side: Vec<bool>,
    pub d_prime: Vec<i64>,
    /// The vertex whose measure was reduced to restore balance, with the reduction.
    pub shrunk: Option<(usize, i64)>,
}

impl CutPlayer {
    pub fn new(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let rows = (0..n).map(|_| (0..dim.max(1)).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        CutPlayer { rows }
    }

    /// Measure-balanced split at the weighted median of a fresh random projection.
    pub fn step(&self, alive: &[i64], rng: &mut ChaCha8Rng) -> Result<Bipartition> {
        let n = alive.len();
        let total: i64 = alive.iter().sum();
        if total == 0 {
            return Err(Error::InvalidArgument("cut player needs a nonzero alive measure".into()));
        }
        let dim = self.rows[0].len();
        let dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let proj: Vec<f64> = self.rows.iter().map(|r| r.iter().zip(&dir).map(|(a, b)| a * b).sum()).collect();
        let mut order: Vec<usize> = (0..n).filter(|&v| alive[v] > 0).collect();
        order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]).then(a.cmp(&b)));

        let mut before = 0i64;
        let mut pos = 0;
        while 2 * (before + alive[order[pos]]) < total {
            before += alive[order[pos]];
            pos += 1;
        }
        let x = order[pos];
        let after = total - before - alive[x];
        let mut p_side = vec![false; n];
        let mut d_prime = alive.to_vec();
        let dx;
        if 2 * alive[x] >= total {
            p_side[x] = true;
            dx = before + after;
        } else {
            for &v in &order[..pos] {
                p_side[v] = true;
            }
            if before <= after {
                p_side[x] = true;
                dx = after - before;
            } else {
                dx = before - after;
            }
        }
        d_prime[x] = dx;
        let shrunk = if dx < alive[x] { Some((x, alive[x] - dx)) } else { None };
        Ok(Bipartition { p_side, d_prime, shrunk })
    }

    /// Averaging step along each matching edge, forward matching first.
    pub fn mix(&mut self, m: &BiMatching, alive: &[i64]) {
        for e in m.forward.iter().chain(&m.backward) {
            let (u, v) = (e.from, e.to);
            if alive[u] == 0 || alive[v] == 0 || u == v {
                continue;
            }
            let au = (e.cap as f64 / (2.0 * alive[u] as f64)).min(0.5);
            let av = (e.cap as f64 / (2.0 * alive[v] as f64)).min(0.5);
            for k in 0..self.rows[u].len() {
                let (yu, yv) = (self.rows[u][k], self.rows[v][k]);
                self.rows[u][k] = yu + au * (yv - yu);
                self.rows[v][k] = yv + av * (yu - yv);
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CmgWitness {
    pub rounds: Vec<BiMatching>,
    /// `q·vol_F`.
    pub d: Vec<i64>,
    /// Final alive measure `d̃`.
    pub alive: Vec<i64>,
    pub removed: usize,
    /// Alive mass after each round.
    pub mass: Vec<i64>,
}

impl CmgWitness {
    pub fn retained(&self) -> bool {
        8 * self.alive.iter().map(|&x| x as i128).sum::<i128>() >= 7 * self.d.iter().map(|&x| x as i128).sum::<i128>()
    }

    /// Every edge of `W`, forward and backward matchings of all rounds.
    pub fn edges(&self) -> impl Iterator<Item = &MatchEdge> {
        self.rounds.iter().flat_map(|r| r.forward.iter().chain(&r.backward))
    }

    /// Exhaustive check that every vertex set `A` has `W`-capacity at least
    /// `min(d̃(A), d̃(Ā))/phi_w_den` leaving and entering it. Needs `n ≤ 20`.
    pub fn expands(&self, phi_w_den: i64) -> bool {
        let n = self.alive.len();
        assert!(n <= 20, "exhaustive expansion check is exponential");
        let edges: Vec<&MatchEdge> = self.edges().collect();
        let total: i64 = self.alive.iter().sum();
        for mask in 1u32..(1u32 << n) - 1 {
            let inside = |v: usize| mask >> v & 1 == 1;
            let da: i64 = (0..n).filter(|&v| inside(v)).map(|v| self.alive[v]).sum();
            let need = da.min(total - da) as i128;
            if need == 0 {
                continue;
            }
            let (mut out, mut inn) = (0i128, 0i128);
            for e in &edges {
                match (inside(e.from), inside(e.to)) {
                    (true, false) => out += e.cap as i128,
                    (false, true) => inn += e.cap as i128,
                    _ => {}
                }
            }
            if out * (phi_w_den as i128) < need || inn * (phi_w_den as i128) < need {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
pub enum CmgOutcome {
    Certified(CmgWitness),
    Cut(BalancedCut),
    /// Ran all rounds but kept less than 7/8 of the mass.
    Starved { witness: CmgWitness, last_cut: Option<Vec<bool>> },
}

/// Certify most of `d = q·vol_F` as expanding, or return a balanced sparse cut.
pub fn non_stop_cmg(sg: &ShortcutGraph, terminal: &[bool], params: &CmgParams, rng: &mut ChaCha8Rng) -> Result<CmgOutcome> {
    let n = sg.n;
    let d: Vec<i64> = sg.base.volume(terminal).iter().map(|&x| x * sg.q).collect();
    if d.iter().all(|&x| x == 0) {
        return Err(Error::InvalidArgument("cut-matching game needs a nonzero measure".into()));
    }
    let rev = sg.reversed();
    let mut player = CutPlayer::new(n, params.sketch_dim, rng);
    let mut alive = d.clone();
    let mut rounds = Vec::new();
    let mut mass = Vec::new();
    let mut removed = 0;
    let mut last_cut = None;
    for _ in 0..params.rounds {
        if alive.iter().filter(|&&x| x > 0).count() <= 1 {
            break;
        }
        let bp = player.step(&alive, rng)?;
        let m = match matching_player_rev(sg, &rev, terminal, &bp.p_side, &bp.d_prime, params)? {
            MatchOutcome::Cut(c) => return Ok(CmgOutcome::Cut(c)),
            MatchOutcome::Matching(m) => m,
        };
        if m.unbalanced_cut.is_some() {
            last_cut = m.unbalanced_cut.clone();
        }
        let mut next = vec![0i64; n];
        for v in 0..n {
            let mut x = m.d_forward[v].min(m.d_backward[v]);
            if let Some((s, amount)) = bp.shrunk {
                if s == v {
                    x = (x + amount).min(alive[v]);
                }
            }
            debug_assert!(x <= alive[v]);
            if alive[v] > 0 && 2 * x < d[v] {
                removed += 1;
                x = 0;
            }
            next[v] = x;
        }
        player.mix(&m, &alive);
        alive = next;
        mass.push(alive.iter().sum());
        rounds.push(m);
    }
    let witness = CmgWitness { rounds, d, alive, removed, mass };
    if witness.retained() {
        Ok(CmgOutcome::Certified(witness))
    } else {
        Ok(CmgOutcome::Starved { witness, last_cut })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CapGraph;
    use crate::hierarchy::Hierarchy;
    use crate::shortcut::build_shortcut;
    use rand::SeedableRng;

    fn params(rounds: u32) -> CmgParams {
        CmgParams { phi_den: 16, delta_den: 8, rounds, sketch_dim: 8, cut: CutParams::new(2) }
    }

    fn top_level_sg(g: &CapGraph) -> (ShortcutGraph, Vec<bool>) {
        // All edges on the top level: no stars, every edge terminal.
        let h = Hierarchy::flat(g).unwrap();
        let sg = build_shortcut(g, &h, 2, true).unwrap();
        (sg, vec![true; g.m()])
    }

    fn complete(n: usize, cap: i64) -> CapGraph {
        let mut g = CapGraph::new(n);
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    g.add_edge(u, v, cap);
                }
            }
        }
        g
    }

    #[test]
    fn cut_player_two_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cp = CutPlayer::new(2, 4, &mut rng);
        let b = cp.step(&[5, 5], &mut rng).unwrap();
        assert_ne!(b.p_side[0], b.p_side[1]);
        assert_eq!(b.d_prime, vec![5, 5]);
        assert!(b.shrunk.is_none());
    }

    #[test]
    fn cut_player_heavy_vertex_alone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cp = CutPlayer::new(4, 4, &mut rng);
        let b = cp.step(&[3, 1, 1, 1], &mut rng).unwrap();
        let p: i64 = (0..4).filter(|&v| b.p_side[v]).map(|v| b.d_prime[v]).sum();
        let q: i64 = (0..4).filter(|&v| !b.p_side[v]).map(|v| b.d_prime[v]).sum();
        assert_eq!((p, q), (3, 3));
        let heavy_side = b.p_side[0];
        assert!((1..4).all(|v| b.p_side[v] != heavy_side));
    }

    #[test]
    fn cut_player_balances_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..100 {
            let cp = CutPlayer::new(16, 6, &mut rng);
            let alive: Vec<i64> = (0..16).map(|_| rng.gen_range(0..20)).collect();
            if alive.iter().sum::<i64>() == 0 {
                continue;
            }
            let b = cp.step(&alive, &mut rng).unwrap();
            let p: i64 = (0..16).filter(|&v| b.p_side[v]).map(|v| b.d_prime[v]).sum();
            let q: i64 = (0..16).filter(|&v| !b.p_side[v]).map(|v| b.d_prime[v]).sum();
            assert_eq!(p, q);
            assert!((0..16).all(|v| b.d_prime[v] <= alive[v]));
        }
    }

    #[test]
    fn complete_graph_perfect_matching() {
        let g = complete(6, 4);
        let (sg, f) = top_level_sg(&g);
        let d: Vec<i64> = sg.base.volume(&f).iter().map(|&x| x * sg.q).collect();
        let p_side = vec![true, true, true, false, false, false];
        match matching_player(&sg, &f, &p_side, &d, &params(1)).unwrap() {
            MatchOutcome::Matching(m) => {
                assert_eq!(m.slack, 0);
                assert_eq!(m.d_forward, d);
                assert_eq!(m.d_backward, d);
                assert!(m.forward.iter().all(|e| p_side[e.from] && !p_side[e.to]));
                assert!(m.backward.iter().all(|e| !p_side[e.from] && p_side[e.to]));
            }
            MatchOutcome::Cut(_) => panic!("complete graph has no sparse cut"),
        }
    }

    #[test]
    fn disconnected_halves_give_zero_cut() {
        let mut g = complete(3, 2);
        let h = complete(3, 2);
        g.n = 6;
        for e in &h.edges {
            g.add_edge(e.tail + 3, e.head + 3, e.cap);
        }
        let (sg, f) = top_level_sg(&g);
        let d: Vec<i64> = sg.base.volume(&f).iter().map(|&x| x * sg.q).collect();
        let p_side = vec![true, true, true, false, false, false];
        match matching_player(&sg, &f, &p_side, &d, &params(1)).unwrap() {
            MatchOutcome::Cut(c) => {
                assert_eq!((c.out_cap, c.in_cap), (0, 0));
                assert_eq!(c.vol_side, c.vol_rest);
            }
            MatchOutcome::Matching(_) => panic!("expected a cut"),
        }
    }

    #[test]
    fn expander_is_certified() {
        let g = complete(8, 3);
        let (sg, f) = top_level_sg(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        match non_stop_cmg(&sg, &f, &params(12), &mut rng).unwrap() {
            CmgOutcome::Certified(w) => {
                assert!(w.retained());
                assert_eq!(w.alive, w.d);
                for pair in w.mass.windows(2) {
                    assert!(pair[1] <= pair[0]);
                }
                assert!(w.expands(4));
            }
            other => panic!("expected certification, got {other:?}"),
        }
    }

    #[test]
    fn barbell_cut_at_bridge() {
        // Bridge sparsity 1/8000, well below 1/κ.
        let n = 5;
        let mut g = CapGraph::new(2 * n);
        for side in 0..2 {
            for u in 0..n {
                for v in 0..n {
                    if u != v {
                        g.add_edge(side * n + u, side * n + v, 200);
                    }
                }
            }
        }
        g.add_edge(0, n, 1);
        g.add_edge(n, 0, 1);
        let (sg, f) = top_level_sg(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        match non_stop_cmg(&sg, &f, &params(30), &mut rng).unwrap() {
            CmgOutcome::Cut(c) => {
                let left: Vec<bool> = c.side[..2 * n].to_vec();
                let expect: Vec<bool> = (0..2 * n).map(|v| v < n).collect();
                let flipped: Vec<bool> = expect.iter().map(|&x| !x).collect();
                assert!(left == expect || left == flipped, "{left:?}");
                assert_eq!(c.out_cap, 2);
            }
            other => panic!("expected the bridge cut, got {other:?}"),
        }
    }
}
