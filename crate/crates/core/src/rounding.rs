//! Rounding a `1/z`-integral flow to an integral one by cancelling fractional cycles.

use crate::error::{Error, Result};
use crate::graph::{CapGraph, Demand};

const NONE: usize = usize::MAX;

/// Integral `f'` with `f'(e) ∈ {⌊f(e)/z⌋, ⌈f(e)/z⌉}` and net outflow `net(f)/z`.
///
/// `d` is the demand routed by `f`; its entries and the net outflow of `f`
/// must be multiples of `z`.
pub fn round_flow(g: &CapGraph, f: &[i64], d: &Demand, z: i64) -> Result<Vec<i64>> {
    if z <= 0 {
        return Err(Error::InvalidArgument("scale must be positive".into()));
    }
    if d.sources.iter().chain(&d.sinks).any(|&x| x % z != 0) {
        return Err(Error::InvalidArgument(format!("demand not divisible by {z}")));
    }
    let ends: Vec<(usize, usize)> = g.edges.iter().map(|e| (e.tail, e.head)).collect();
    round_residues(g.n, &ends, f, z, None)
}

/// Round an `s`-`t` flow so its value becomes `⌈value/z⌉`.
pub fn round_st_flow_up(g: &CapGraph, f: &[i64], s: usize, t: usize, z: i64) -> Result<Vec<i64>> {
    let mut ends: Vec<(usize, usize)> = g.edges.iter().map(|e| (e.tail, e.head)).collect();
    let mut f = f.to_vec();
    let value = g.net_out(&f)[s];
    if value < 0 {
        return Err(Error::InvalidArgument("negative s-t value".into()));
    }
    ends.push((t, s));
    f.push(value);
    let ret = ends.len() - 1;
    let mut out = round_residues(g.n, &ends, &f, z, Some(ret))?;
    out.pop();
    Ok(out)
}

fn round_residues(n: usize, ends: &[(usize, usize)], f: &[i64], z: i64, prefer: Option<usize>) -> Result<Vec<i64>> {
    let m = ends.len();
    let mut f = f.to_vec();
    let mut net = vec![0i64; n];
    for (e, &(u, v)) in ends.iter().enumerate() {
        if f[e] < 0 {
            return Err(Error::InvalidArgument(format!("negative flow on edge {e}")));
        }
        if u != v {
            net[u] += f[e];
            net[v] -= f[e];
        }
    }
    if let Some(v) = net.iter().position(|&x| x % z != 0) {
        return Err(Error::InvalidArgument(format!("net outflow at vertex {v} is not divisible by {z}")));
    }
    let frac = |f: &[i64], e: usize| f[e] % z != 0;
    let mut inc: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (e, &(u, v)) in ends.iter().enumerate() {
        if u != v && frac(&f, e) {
            inc[u].push((e, v));
            inc[v].push((e, u));
        }
    }
    let mut ptr = vec![0usize; n];
    let mut pos = vec![NONE; n];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        stack.push((root, NONE));
        pos[root] = 0;
        while let Some(&(v, arr)) = stack.last() {
            while ptr[v] < inc[v].len() && !frac(&f, inc[v][ptr[v]].0) {
                ptr[v] += 1;
            }
            let next = inc[v][ptr[v]..].iter().copied().find(|&(e, _)| e != arr && frac(&f, e));
            let Some((e, u)) = next else {
                if arr != NONE {
                    return Err(Error::InvalidArgument("fractional residues are not balanced".into()));
                }
                pos[v] = NONE;
                stack.pop();
                continue;
            };
            if pos[u] == NONE {
                pos[u] = stack.len();
                stack.push((u, e));
                continue;
            }
            // Cycle: stack[pos[u]..] followed by edge e back to u.
            let base = pos[u];
            let mut cyc: Vec<(usize, bool)> = Vec::new();
            for k in base + 1..stack.len() {
                let (x, a) = stack[k];
                let from = stack[k - 1].0;
                debug_assert!(ends[a].0 == from && ends[a].1 == x || ends[a].1 == from && ends[a].0 == x);
                cyc.push((a, ends[a].0 == from));
            }
            cyc.push((e, ends[e].0 == v));
            let pivot = match prefer.filter(|p| cyc.iter().any(|&(a, _)| a == *p)) {
                Some(p) => p,
                None => cyc.iter().map(|&(a, _)| a).min().expect("non-empty cycle"),
            };
            let pivot_fwd = cyc.iter().find(|&&(a, _)| a == pivot).expect("pivot on cycle").1;
            // Increase edges traversed in the pivot's direction, decrease the others.
            let mut eps = i64::MAX;
            for &(a, fwd) in &cyc {
                let r = f[a].rem_euclid(z);
                eps = eps.min(if fwd == pivot_fwd { z - r } else { r });
            }
            for &(a, fwd) in &cyc {
                if fwd == pivot_fwd {
                    f[a] += eps;
                } else {
                    f[a] -= eps;
                }
            }
            for k in base + 1..stack.len() {
                pos[stack[k].0] = NONE;
            }
            stack.truncate(base + 1);
        }
    }
    debug_assert!((0..m).all(|e| ends[e].0 == ends[e].1 || f[e] % z == 0));
    Ok((0..m).map(|e| f[e].div_euclid(z)).collect())
}
