//! Strongly connected components over a filtered edge set.

use crate::graph::CapGraph;

/// Component id per vertex and the component count.
///
/// Ids follow a topological order of the condensation: if `u` reaches `v`
/// and they lie in different components then `id(u) < id(v)`.
pub fn scc(g: &CapGraph, filter: impl Fn(usize) -> bool) -> (Vec<u32>, usize) {
    let n = g.n;
    let mut start = vec![0usize; n + 1];
    let mut kept = Vec::with_capacity(g.m());
    for (i, e) in g.edges.iter().enumerate() {
        if filter(i) {
            start[e.tail + 1] += 1;
            kept.push(i);
        }
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut adj = vec![0usize; kept.len()];
    for &i in &kept {
        let e = &g.edges[i];
        adj[fill[e.tail]] = e.head;
        fill[e.tail] += 1;
    }

    const UNSEEN: u32 = u32::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut next_index = 0u32;
    let mut count = 0u32;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, start[root]));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(top) = call.last_mut() {
            let v = top.0;
            if top.1 < start[v + 1] {
                let w = adj[top.1];
                top.1 += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, start[w]));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = count;
                        if w == v {
                            break;
                        }
                    }
                    count += 1;
                }
            }
        }
    }
    // Tarjan emits sink components first; flip to a topological numbering.
    for c in comp.iter_mut() {
        *c = count - 1 - *c;
    }
    (comp, count as usize)
}
