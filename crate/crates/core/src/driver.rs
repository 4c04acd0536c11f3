//! Approximate and exact maximum flow on top of the hierarchy.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::builder::{build_hierarchy, to_z, unfold, Unfolded};
use crate::dimacs::MAX_CAP;
use crate::error::{overflow, Error, Result};
use crate::graph::{check_feasible, CapGraph, Demand, ScaledFlow};
use crate::profile::{Profile, ProfileKind};
use crate::rounding::round_st_flow_up;
use crate::sparse_cut::{approx_maxflow_shortcut, CutParams};

#[derive(Debug, Clone, Serialize)]
pub struct ApproxResult {
    /// Integral flow on `G`.
    pub flow: Vec<i64>,
    pub value: i64,
    /// `S_A ∩ V`.
    pub side: Vec<bool>,
    pub cut_cap: i64,
    /// `|f_A|` at scale `q`.
    pub shortcut_value: i64,
    pub q: i64,
    pub z: i64,
    /// The divisor applied after unfolding, `max(3, ⌈κ/z⌉)`.
    pub divisor: i64,
    pub unfolded: Unfolded,
    pub hierarchy_rounds: u32,
    pub degraded_leaves: usize,
    #[serde(skip)]
    pub times: PhaseTimes,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    pub hierarchy: Duration,
    pub shortcut_flow: Duration,
    pub unfold: Duration,
}

impl PhaseTimes {
    fn add(&mut self, o: &PhaseTimes) {
        self.hierarchy += o.hierarchy;
        self.shortcut_flow += o.shortcut_flow;
        self.unfold += o.unfold;
    }
}

impl ApproxResult {
    /// The unfolded flow routes `|f_A|·z/q` from `s` to `t` within congestion 3.
    pub fn unfold_within(&self, g: &CapGraph, s: usize, t: usize, kappa: i64) -> Result<bool> {
        let amount = self.shortcut_value * (self.z / self.q);
        let d = Demand::st(g.n, s, t, amount, self.z);
        let f = ScaledFlow { scale: self.z, values: self.unfolded.flow.clone() };
        let exact = g.net_out(&f.values)[s] == amount;
        Ok(exact && check_feasible(g, &d, &f, kappa * self.z, self.z)?.ok)
    }
}

fn check_terminals(g: &CapGraph, s: usize, t: usize) -> Result<()> {
    if s == t {
        return Err(Error::InvalidArgument("source equals sink".into()));
    }
    if s >= g.n || t >= g.n {
        return Err(Error::InvalidArgument("terminal out of range".into()));
    }
    Ok(())
}

/// One constant-approximate round: hierarchy, shortcut flow, unfold, scale down, round.
pub fn approx_maxflow(g: &CapGraph, s: usize, t: usize, profile: &Profile, rng: &mut ChaCha8Rng) -> Result<ApproxResult> {
    check_terminals(g, s, t)?;
    let mut times = PhaseTimes::default();
    let clock = Instant::now();
    let bh = build_hierarchy(g, profile, rng)?;
    times.hierarchy = clock.elapsed();

    let clock = Instant::now();
    let sg = bh.final_sg();
    let st = approx_maxflow_shortcut(sg, s, t, &CutParams::new(bh.scales.levels as i64))?;
    times.shortcut_flow = clock.elapsed();

    let clock = Instant::now();
    let fz = to_z(&bh, &st.flow)?;
    let unfolded = unfold(&bh, &fz)?;
    let z = bh.scales.z;
    let divisor = 3.max((unfolded.kappa + z - 1) / z);
    let scale = z.checked_mul(divisor).ok_or_else(|| overflow("unfold divisor"))?;
    let flow = round_st_flow_up(g, &unfolded.flow, s, t, scale)?;
    times.unfold = clock.elapsed();

    let value = g.net_out(&flow)[s];
    let side = st.side[..g.n].to_vec();
    let cut_cap = g.cut_capacity(&side).0;
    Ok(ApproxResult {
        flow,
        value,
        side,
        cut_cap,
        shortcut_value: st.value,
        q: bh.scales.q,
        z,
        divisor,
        unfolded,
        hierarchy_rounds: bh.rounds(),
        degraded_leaves: bh.degraded_leaves(),
        times,
    })
}

/// Residual arcs: `(tail, head, capacity, edge, forward)`.
fn residual(g: &CapGraph, x: &[i64], clamp: i64) -> (CapGraph, Vec<(usize, bool)>) {
    let mut r = CapGraph::new(g.n);
    let mut map = Vec::new();
    for (e, ed) in g.edges.iter().enumerate() {
        if ed.is_loop() {
            continue;
        }
        if ed.cap - x[e] > 0 {
            r.add_edge(ed.tail, ed.head, (ed.cap - x[e]).min(clamp));
            map.push((e, true));
        }
        if x[e] > 0 {
            r.add_edge(ed.head, ed.tail, x[e].min(clamp));
            map.push((e, false));
        }
    }
    (r, map)
}

fn apply(x: &mut [i64], map: &[(usize, bool)], f: &[i64]) {
    for (a, &(e, fwd)) in map.iter().enumerate() {
        if fwd {
            x[e] += f[a];
        } else {
            x[e] -= f[a];
        }
    }
}

/// Bottleneck augmenting path by BFS; returns the amount pushed.
fn augment_once(g: &CapGraph, x: &mut [i64], s: usize, t: usize) -> i64 {
    let (r, map) = residual(g, x, i64::MAX);
    let (start, ids) = r.out_csr();
    let mut pred = vec![usize::MAX; r.n];
    let mut seen = vec![false; r.n];
    seen[s] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &a in &ids[start[u]..start[u + 1]] {
            let v = r.edges[a].head;
            if !seen[v] {
                seen[v] = true;
                pred[v] = a;
                queue.push_back(v);
            }
        }
    }
    if !seen[t] {
        return 0;
    }
    let mut path = Vec::new();
    let mut v = t;
    while v != s {
        path.push(pred[v]);
        v = r.edges[pred[v]].tail;
    }
    let b = path.iter().map(|&a| r.edges[a].cap).min().unwrap();
    let mut f = vec![0i64; r.m()];
    for a in path {
        f[a] = b;
    }
    apply(x, &map, &f);
    b
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Stats {
    /// Flow routed by each approximate round.
    pub routed: Vec<i64>,
    pub fallback_steps: u32,
    pub scaling_levels: u32,
    pub degraded_leaves: usize,
    /// Largest `⌈κ/z⌉` seen while unfolding.
    pub max_unfold_congestion: i64,
    pub unfold_within_3: bool,
    #[serde(skip)]
    pub times: PhaseTimes,
}

/// Residual rounds on `g` with all capacities at most `max(n², m)`.
fn exact_core(g: &CapGraph, s: usize, t: usize, profile: &Profile, rng: &mut ChaCha8Rng, stats: &mut Stats) -> Result<Vec<i64>> {
    let mut x = vec![0i64; g.m()];
    loop {
        let (r, map) = residual(g, &x, i64::MAX);
        if !r.reachable(s, |_| true)[t] {
            return Ok(x);
        }
        let a = approx_maxflow(&r, s, t, profile, rng)?;
        stats.times.add(&a.times);
        stats.degraded_leaves += a.degraded_leaves;
        stats.max_unfold_congestion = stats.max_unfold_congestion.max((a.unfolded.kappa + a.z - 1) / a.z);
        if !a.unfold_within(&r, s, t, 3)? {
            stats.unfold_within_3 = false;
        }
        if a.value > 0 {
            apply(&mut x, &map, &a.flow);
            stats.routed.push(a.value);
        } else {
            stats.routed.push(0);
            stats.fallback_steps += 1;
            if augment_once(g, &mut x, s, t) == 0 {
                return Err(Error::RoutingFailed("residual path vanished during fallback".into()));
            }
        }
    }
}

/// Bit-scaling plan: level `j` is the input with every capacity shifted right by `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScalingPlan {
    pub shifts: u32,
    /// Largest capacity the core solver accepts, `max(n², m)`.
    pub limit: i64,
}

impl ScalingPlan {
    pub fn is_identity(&self) -> bool {
        self.shifts == 0
    }

    pub fn level(&self, g: &CapGraph, j: u32) -> CapGraph {
        let mut h = g.clone();
        for e in &mut h.edges {
            e.cap >>= j;
        }
        h
    }
}

/// Coarsest level of the bit-scaling plan, whose capacities are at most `max(n², m)`.
pub fn normalize_capacities(g: &CapGraph) -> Result<(CapGraph, ScalingPlan)> {
    if g.edges.iter().any(|e| e.cap < 0 || e.cap > MAX_CAP) {
        return Err(overflow("capacity outside [0, 2^62]"));
    }
    let n2 = (g.n as i64).checked_mul(g.n as i64).ok_or_else(|| overflow("n²"))?;
    let limit = n2.max(g.m() as i64).max(1);
    let mut shifts = 0;
    while g.max_cap() >> shifts > limit {
        shifts += 1;
    }
    let plan = ScalingPlan { shifts, limit };
    Ok((plan.level(g, shifts), plan))
}

/// Solve the coarsest level, then per finer level double the flow and fix the residual.
fn solve_scaled(g: &CapGraph, s: usize, t: usize, profile: &Profile, rng: &mut ChaCha8Rng, stats: &mut Stats) -> Result<Vec<i64>> {
    let (coarse, plan) = normalize_capacities(g)?;
    stats.scaling_levels = plan.shifts;
    let mut x = exact_core(&coarse, s, t, profile, rng, stats)?;
    for j in (0..plan.shifts).rev() {
        let level = plan.level(g, j);
        for v in &mut x {
            *v *= 2;
        }
        // The residual optimum is at most m, so capacities above m never bind.
        let (r, map) = residual(&level, &x, g.m().max(1) as i64);
        let fr = exact_core(&r, s, t, profile, rng, stats)?;
        apply(&mut x, &map, &fr);
    }
    Ok(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub value: i64,
    /// Integral flow per input edge.
    pub flow: Vec<i64>,
    /// Vertices reachable from `s` in the final residual graph.
    pub cut: Vec<usize>,
    pub cut_capacity: i64,
    pub rounds: usize,
    pub stats: Stats,
    pub seed: u64,
    pub profile: ProfileKind,
}

/// Exact maximum flow with a certifying minimum cut.
pub fn exact_maxflow(g: &CapGraph, s: usize, t: usize, kind: ProfileKind, seed: u64) -> Result<SolveReport> {
    check_terminals(g, s, t)?;
    if g.edges.iter().any(|e| e.cap < 0) {
        return Err(Error::InvalidArgument("negative capacity".into()));
    }
    let profile = Profile::new(kind, g.n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = Stats { unfold_within_3: true, ..Stats::default() };
    let x = solve_scaled(g, s, t, &profile, &mut rng, &mut stats)?;

    let net = g.net_out(&x);
    for v in 0..g.n {
        if v != s && v != t && net[v] != 0 {
            return Err(Error::Conservation(v));
        }
    }
    let value = net[s];
    let (r, _) = residual(g, &x, i64::MAX);
    let side = r.reachable(s, |_| true);
    let cut_capacity = g.cut_capacity(&side).0;
    if cut_capacity != value || side[t] {
        return Err(Error::RoutingFailed(format!("flow {value} does not match cut {cut_capacity}")));
    }
    Ok(SolveReport {
        value,
        flow: x,
        cut: (0..g.n).filter(|&v| side[v]).collect(),
        cut_capacity,
        rounds: stats.routed.len(),
        stats,
        seed,
        profile: kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::oracle_maxflow;
    use rand::Rng;

    fn practical(n: usize) -> Profile {
        Profile::new(ProfileKind::Practical, n)
    }

    #[test]
    fn single_edge_approx() {
        let g = CapGraph::from_edges(2, &[(0, 1, 6)]);
        let a = approx_maxflow(&g, 0, 1, &practical(2), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(a.shortcut_value, 6 * a.q);
        assert_eq!(a.value, 2);
        assert_eq!(a.divisor, 3);
        assert!(a.cut_cap <= 41 * 6);
        assert!(a.unfold_within(&g, 0, 1, 3).unwrap());
    }

    #[test]
    fn disconnected_terminals() {
        let g = CapGraph::from_edges(3, &[(0, 1, 6)]);
        let a = approx_maxflow(&g, 0, 2, &practical(3), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!((a.value, a.cut_cap), (0, 0));
        let r = exact_maxflow(&g, 0, 2, ProfileKind::Practical, 0).unwrap();
        assert_eq!((r.value, r.cut_capacity), (0, 0));
    }

    #[test]
    fn path_bottleneck() {
        let g = CapGraph::from_edges(4, &[(0, 1, 5), (1, 2, 3), (2, 3, 9)]);
        let r = exact_maxflow(&g, 0, 3, ProfileKind::Practical, 1).unwrap();
        assert_eq!(r.value, 3);
        assert_eq!(r.cut, vec![0, 1]);
    }

    #[test]
    fn same_terminal_rejected() {
        let g = CapGraph::from_edges(2, &[(0, 1, 1)]);
        assert!(exact_maxflow(&g, 1, 1, ProfileKind::Practical, 0).is_err());
    }

    #[test]
    fn big_capacities_use_scaling() {
        let g = CapGraph::from_edges(4, &[(0, 1, 1_000_000), (1, 3, 999_999), (0, 2, 77), (2, 3, 1_000_000), (1, 2, 5)]);
        let r = exact_maxflow(&g, 0, 3, ProfileKind::Practical, 2).unwrap();
        assert_eq!(r.value, oracle_maxflow(&g, 0, 3));
        assert!(r.stats.scaling_levels > 0);
    }

    #[test]
    fn plan_identity_and_one_halving() {
        let g = CapGraph::from_edges(3, &[(0, 1, 9), (1, 2, 4)]);
        let (h, plan) = normalize_capacities(&g).unwrap();
        assert!(plan.is_identity());
        assert_eq!(h, g);

        let g = CapGraph::from_edges(2, &[(0, 1, 8)]);
        let (h, plan) = normalize_capacities(&g).unwrap();
        assert_eq!(plan.shifts, 1);
        assert_eq!(h.edges[0].cap, 4);
        assert_eq!(exact_maxflow(&g, 0, 1, ProfileKind::Practical, 0).unwrap().value, 8);
        assert!(normalize_capacities(&CapGraph::from_edges(2, &[(0, 1, i64::MAX)])).is_err());
    }

    #[test]
    fn huge_caps_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 10;
        let mut g = CapGraph::new(n);
        for _ in 0..30 {
            g.add_edge(rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(1..=1_000_000_000));
        }
        let r = exact_maxflow(&g, 0, n - 1, ProfileKind::Practical, 4).unwrap();
        assert_eq!(r.value, oracle_maxflow(&g, 0, n - 1));
    }

    #[test]
    fn random_exact_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..30 {
            let n = rng.gen_range(2..12);
            let mut g = CapGraph::new(n);
            for _ in 0..rng.gen_range(0..40) {
                g.add_edge(rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(1..50));
            }
            let (s, t) = (0, n - 1);
            let r = exact_maxflow(&g, s, t, ProfileKind::Practical, rng.gen()).unwrap();
            assert_eq!(r.value, oracle_maxflow(&g, s, t));
            assert_eq!(r.cut_capacity, r.value);
        }
    }

    #[test]
    fn approx_ratio_and_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = rng.gen_range(2..15);
            let mut g = CapGraph::new(n);
            for _ in 0..rng.gen_range(1..50) {
                g.add_edge(rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(1..=(n * n) as i64));
            }
            let opt = oracle_maxflow(&g, 0, n - 1);
            let a = approx_maxflow(&g, 0, n - 1, &practical(n), &mut rng).unwrap();
            assert!(a.value <= opt && opt <= a.cut_cap);
            assert!(123 * (a.value + 1) >= opt, "{} vs {}", a.value, opt);
            assert!(a.cut_cap as i128 * a.q as i128 <= 41 * a.shortcut_value as i128 || a.shortcut_value == 0 && a.cut_cap == 0);
        }
    }

    #[test]
    fn seeds_are_deterministic() {
        let g = CapGraph::from_edges(4, &[(0, 1, 3), (1, 0, 2), (1, 2, 4), (2, 1, 1), (2, 3, 5), (0, 2, 2)]);
        let a = serde_json::to_string(&exact_maxflow(&g, 0, 3, ProfileKind::Practical, 7).unwrap()).unwrap();
        let b = serde_json::to_string(&exact_maxflow(&g, 0, 3, ProfileKind::Practical, 7).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
