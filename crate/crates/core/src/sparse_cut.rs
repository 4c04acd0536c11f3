//! Push-relabel on shortcut graphs with distance-layer cut extraction.
//!
//! Units: capacities, flows and demands live at the shortcut scale `q`;
//! volumes are real capacities and get multiplied by `q` when compared.

use serde::Serialize;

use crate::decompose::{filter_short_paths, path_decompose, PathRec};
use crate::error::{overflow, Error, Result};
use crate::graph::Demand;
use crate::push_relabel::{residual_distances, weighted_push_relabel_with, PhaseMode, PrOptions, WeightFn};
use crate::shortcut::{EdgeKind, ShortcutGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CutParams {
    /// The `L` of the height formula.
    pub levels: i64,
    /// Replaces the computed height when set.
    pub h_override: Option<i64>,
}

impl CutParams {
    pub fn new(levels: i64) -> Self {
        CutParams { levels: levels.max(1), h_override: None }
    }
}

/// A distance-layer cut `S_{≤i}` of the residual graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerCut {
    /// Over all vertices of the shortcut graph, Steiner roots included.
    pub side: Vec<bool>,
    pub layer: i64,
    /// Residual capacity leaving `S` (scale `q`).
    pub residual_out: i128,
    /// Same, ignoring arcs of terminal edges.
    pub residual_out_non_terminal: i128,
    /// `κ · c(E_{G_A}(S, S̄))` at scale `q`.
    pub kappa_cap_out: i128,
    pub vol_side: i64,
    pub vol_rest: i64,
    pub good_layers: i64,
}

impl LayerCut {
    pub fn min_vol(&self) -> i64 {
        self.vol_side.min(self.vol_rest)
    }

    pub fn base_side(&self, n: usize) -> Vec<bool> {
        self.side[..n].to_vec()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SparseCutOutput {
    /// Scale `q`, congestion `κ`.
    pub flow: Vec<i64>,
    pub value: i64,
    pub h: i64,
    pub kappa: i64,
    pub q: i64,
    pub mode: PhaseMode,
    pub edge_scans: u64,
    pub weight_sum: i128,
    pub cut: Option<LayerCut>,
    /// Largest saturated star capacity of one star (scale `q`).
    pub max_star_saturation: i128,
}

impl SparseCutOutput {
    /// `κ·c(S,S̄) ≤ 41|f| + min vol_F`, in scale-`q` integers.
    pub fn cut_bound_holds(&self) -> bool {
        match &self.cut {
            None => true,
            Some(c) => c.kappa_cap_out <= 41 * self.value as i128 + self.q as i128 * c.min_vol() as i128,
        }
    }

    /// The layer-minimization form over residual capacities with constant 40.
    pub fn residual_bound_holds(&self) -> bool {
        match &self.cut {
            None => true,
            Some(c) => c.residual_out <= 40 * self.value as i128 + self.q as i128 * c.min_vol() as i128,
        }
    }

    pub fn good_layers_hold(&self) -> bool {
        match &self.cut {
            None => true,
            Some(c) => 4 * c.good_layers >= self.h,
        }
    }

    pub fn star_saturation_holds(&self) -> bool {
        self.max_star_saturation <= 2 * self.value as i128
    }
}

fn bit_length(x: i128) -> i64 {
    (128 - x.leading_zeros()) as i64
}

/// `h = n·(6L·q + 100κ·⌈log M⌉)` with `M` the terminal capacity.
pub fn height(sg: &ShortcutGraph, terminal: &[bool], kappa: i64, p: &CutParams) -> Result<i64> {
    if let Some(h) = p.h_override {
        return Ok(h.max(1));
    }
    let m_f: i128 = sg
        .base
        .edges
        .iter()
        .zip(terminal)
        .filter(|(e, &t)| t && !e.is_loop())
        .map(|(e, _)| e.cap as i128)
        .sum();
    let h = sg.n.max(1) as i128 * (6 * p.levels as i128 * sg.q as i128 + 100 * kappa as i128 * bit_length(m_f) as i128);
    if h > (i64::MAX / 32) as i128 {
        return Err(overflow("sparse-cut height"));
    }
    Ok(h as i64)
}

pub fn sparse_cut(sg: &ShortcutGraph, terminal: &[bool], d: &Demand, kappa: i64, p: &CutParams) -> Result<SparseCutOutput> {
    if kappa <= 0 {
        return Err(Error::InvalidArgument("congestion κ must be positive".into()));
    }
    if !d.is_diffusion() {
        return Err(Error::InvalidArgument("sparse cut needs a diffusion demand".into()));
    }
    let g = &sg.graph;
    if terminal.len() != sg.base_m() || d.sources.len() != g.n {
        return Err(Error::InvalidArgument("terminal set or demand does not match the shortcut graph".into()));
    }
    if (sg.n..g.n).any(|v| d.sources[v] != 0 || d.sinks[v] != 0) {
        return Err(Error::InvalidArgument("demand on a Steiner root".into()));
    }
    let h = height(sg, terminal, kappa, p)?;
    let caps: Vec<i64> = g
        .edges
        .iter()
        .map(|e| e.cap.checked_mul(kappa).ok_or_else(|| overflow("κ times capacity")))
        .collect::<Result<_>>()?;
    let w = sg.weights();
    let wf = WeightFn::new(w.to_vec(), h);
    let pr = weighted_push_relabel_with(g, &caps, d, &wf, PrOptions { labels: false })?;
    let flow = pr.flow.values;
    let value = pr.value;
    let weight_sum: i128 = flow.iter().zip(w).map(|(&f, &x)| f as i128 * x as i128).sum();

    let mut max_star_saturation = 0i128;
    for st in &sg.stars {
        let mut sat = 0i128;
        for l in &st.leaves {
            for e in [l.up, l.down] {
                if caps[e] > 0 && flow[e] == caps[e] {
                    sat += caps[e] as i128;
                }
            }
        }
        max_star_saturation = max_star_saturation.max(sat);
    }

    let mut out = SparseCutOutput {
        flow,
        value,
        h,
        kappa,
        q: sg.q,
        mode: pr.mode,
        edge_scans: pr.edge_scans,
        weight_sum,
        cut: None,
        max_star_saturation,
    };
    if value < d.total_sources() {
        out.cut = Some(layer_cut(sg, terminal, d, &caps, &out.flow, w, value, h)?);
    }
    Ok(out)
}

/// `w_f`: forward arcs of non-terminal base edges moving forward in τ cost 0.
fn forward_weight(sg: &ShortcutGraph, terminal: &[bool], w: &[i64], e: usize) -> i64 {
    if let EdgeKind::Base(b) = sg.kind[e] {
        let ed = &sg.graph.edges[e];
        if !terminal[b] && sg.tau(ed.tail) < sg.tau(ed.head) {
            return 0;
        }
    }
    w[e]
}

#[allow(clippy::too_many_arguments)]
fn layer_cut(
    sg: &ShortcutGraph,
    terminal: &[bool],
    d: &Demand,
    caps: &[i64],
    flow: &[i64],
    w: &[i64],
    value: i64,
    h: i64,
) -> Result<LayerCut> {
    let g = &sg.graph;
    let res = d.residual(&g.net_out(flow));
    let s0: Vec<bool> = res.sources.iter().map(|&x| x > 0).collect();
    let dist = residual_distances(g, caps, flow, |e| forward_weight(sg, terminal, w, e), |e| w[e], &s0);

    let mut vals: Vec<i64> = dist.iter().copied().filter(|&x| x < h).collect();
    vals.sort_unstable();
    vals.dedup();
    let k = vals.len();
    let idx = |x: i64| vals.partition_point(|&v| v < x);

    // Difference arrays over layer indices: an arc a→b crosses S_{≤vals[j]} for idx(da) ≤ j < idx(db).
    let mut cross = vec![0i128; k + 1];
    let mut cross_nt = vec![0i128; k + 1];
    let mut add = |da: i64, db: i64, amount: i128, is_terminal: bool| {
        if da >= h || amount == 0 {
            return;
        }
        let (ja, jb) = (idx(da), idx(db).min(k));
        if ja < jb {
            cross[ja] += amount;
            cross[jb] -= amount;
            if !is_terminal {
                cross_nt[ja] += amount;
                cross_nt[jb] -= amount;
            }
        }
    };
    for (e, ed) in g.edges.iter().enumerate() {
        if ed.is_loop() {
            continue;
        }
        let is_t = matches!(sg.kind[e], EdgeKind::Base(b) if terminal[b]);
        add(dist[ed.tail], dist[ed.head], (caps[e] - flow[e]) as i128, is_t);
        add(dist[ed.head], dist[ed.tail], flow[e] as i128, is_t);
    }
    for j in 1..=k {
        cross[j] += cross[j - 1];
        cross_nt[j] += cross_nt[j - 1];
    }

    let vol = sg.base.volume(terminal);
    let total_vol: i64 = vol.iter().sum();
    let mut vol_le = vec![0i64; k];
    for v in 0..sg.n {
        if dist[v] < h {
            vol_le[idx(dist[v])] += vol[v];
        }
    }
    for j in 1..k {
        vol_le[j] += vol_le[j - 1];
    }

    let q = sg.q as i128;
    let mut best = 0usize;
    let mut best_obj = i128::MAX;
    let mut good = 0i64;
    for j in 0..k {
        let mv = vol_le[j].min(total_vol - vol_le[j]) as i128;
        let obj = cross[j] - q * mv;
        if obj < best_obj {
            best_obj = obj;
            best = j;
        }
        if cross_nt[j] <= 40 * value as i128 {
            let next = if j + 1 < k { vals[j + 1] } else { h };
            good += next.min(h) - vals[j];
        }
    }
    let thr = vals[best];
    let side: Vec<bool> = dist.iter().map(|&x| x <= thr).collect();
    if !side[..sg.n].iter().any(|&x| x) || side[..sg.n].iter().all(|&x| x) {
        return Err(Error::RoutingFailed("layer cut is not a proper base cut".into()));
    }
    let mut kappa_cap_out = 0i128;
    for (e, ed) in g.edges.iter().enumerate() {
        if side[ed.tail] && !side[ed.head] {
            kappa_cap_out += caps[e] as i128;
        }
    }
    let vol_side = vol_le[best];
    debug_assert!(dist.iter().zip(&res.sinks).all(|(&x, &s)| s == 0 || x > thr));
    Ok(LayerCut {
        side,
        layer: thr,
        residual_out: cross[best],
        residual_out_non_terminal: cross_nt[best],
        kappa_cap_out,
        vol_side,
        vol_rest: total_vol - vol_side,
        good_layers: good,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StFlow {
    pub flow: Vec<i64>,
    pub value: i64,
    pub side: Vec<bool>,
    pub cut_cap: i128,
    pub demand: i64,
    pub out: SparseCutOutput,
}

/// Constant-approximate maximum `s`-`t` flow and cut on a shortcut graph.
pub fn approx_maxflow_shortcut(sg: &ShortcutGraph, s: usize, t: usize, p: &CutParams) -> Result<StFlow> {
    if s == t {
        return Err(Error::InvalidArgument("source equals sink".into()));
    }
    if s >= sg.n || t >= sg.n {
        return Err(Error::InvalidArgument("terminals must be base vertices".into()));
    }
    let n = sg.n as i64;
    let u = sg.base.max_cap().max(1);
    // At least c(E) + 1, so multigraphs with m > n³ still leave a cut.
    let total = i64::try_from(sg.base.total_cap() + 1).map_err(|_| overflow("total capacity"))?;
    let amount = n
        .checked_mul(n)
        .and_then(|x| x.checked_mul(n))
        .and_then(|x| x.checked_mul(u))
        .map(|x| x.max(total))
        .and_then(|x| x.checked_mul(sg.q))
        .ok_or_else(|| overflow("n³U·q source demand"))?;
    let d = Demand::st(sg.graph.n, s, t, amount, sg.q);
    let none = vec![false; sg.base_m()];
    let out = sparse_cut(sg, &none, &d, 1, p)?;
    let cut = out.cut.as_ref().ok_or_else(|| Error::RoutingFailed("n³U demand fully routed".into()))?;
    Ok(StFlow {
        flow: out.flow.clone(),
        value: out.value,
        side: cut.side.clone(),
        cut_cap: cut.kappa_cap_out,
        demand: amount,
        out,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ShortFlow {
    /// Sum of the kept short flows, scale `q`.
    pub flow: Vec<i64>,
    pub paths: Vec<PathRec>,
    pub value: i64,
    /// Weight bound of every kept path.
    pub bound: i64,
    pub h: i64,
    pub rounds: u32,
    /// The last sparse-cut run when it routed less than half of what remained.
    pub last: Option<SparseCutOutput>,
    /// Demand left unrouted by `flow`.
    pub residual: Demand,
}

impl ShortFlow {
    pub fn cut(&self) -> Option<&LayerCut> {
        self.last.as_ref().and_then(|o| o.cut.as_ref())
    }
}

/// Repeated sparse cuts keeping only paths of weight at most `2·9h`.
pub fn flow_with_short_decomposition(
    sg: &ShortcutGraph,
    terminal: &[bool],
    d: &Demand,
    kappa: i64,
    p: &CutParams,
) -> Result<ShortFlow> {
    let g = &sg.graph;
    let h = height(sg, terminal, kappa, p)?;
    let bound = 18 * h;
    let w = sg.weights();
    let mut acc = vec![0i64; g.m()];
    let mut paths = Vec::new();
    let mut rem = d.clone();
    let mut rounds = 0u32;
    let mut last = None;
    while rem.total_sources() > 0 {
        rounds += 1;
        let out = sparse_cut(sg, terminal, &rem, kappa, p)?;
        let need = rem.total_sources();
        if 2 * (out.value as i128) < need as i128 {
            last = Some(out);
            break;
        }
        // Witness edge lists are only needed when some path gets dropped.
        let mut rep = path_decompose(g, &out.flow, w, false)?;
        if rep.paths.iter().any(|p| p.weight > bound) {
            rep = path_decompose(g, &out.flow, w, true)?;
        }
        let (kept, kept_flow, next) = filter_short_paths(g, &out.flow, &rep, bound, &rem)?;
        if kept.value() == 0 {
            return Err(Error::RoutingFailed("no short path survived the filter".into()));
        }
        for e in 0..g.m() {
            acc[e] += kept_flow[e];
        }
        paths.extend(kept.paths);
        rem = next;
    }
    let value = d.routed(&g.net_out(&acc));
    Ok(ShortFlow { flow: acc, paths, value, bound, h, rounds, last, residual: rem })
}
