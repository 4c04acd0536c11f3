//! Reference max-flow solver used for differential testing.

use std::collections::VecDeque;

use crate::graph::CapGraph;

struct Arc {
    to: usize,
    rev: usize,
    cap: i64,
}

struct Dinic {
    g: Vec<Vec<Arc>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic { g: (0..n).map(|_| Vec::new()).collect(), level: vec![0; n], iter: vec![0; n] }
    }

    fn add(&mut self, u: usize, v: usize, cap: i64) {
        let ru = self.g[v].len();
        let rv = self.g[u].len();
        self.g[u].push(Arc { to: v, rev: ru, cap });
        self.g[v].push(Arc { to: u, rev: rv, cap: 0 });
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for a in &self.g[v] {
                if a.cap > 0 && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[v] + 1;
                    q.push_back(a.to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, f: i64) -> i64 {
        if v == t {
            return f;
        }
        while self.iter[v] < self.g[v].len() {
            let i = self.iter[v];
            let (to, cap) = (self.g[v][i].to, self.g[v][i].cap);
            if cap > 0 && self.level[v] < self.level[to] {
                let d = self.dfs(to, t, f.min(cap));
                if d > 0 {
                    self.g[v][i].cap -= d;
                    let r = self.g[v][i].rev;
                    self.g[to][r].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0
    }
}

/// Exact maximum `s`-`t` flow value by level-graph blocking flows.
pub fn oracle_maxflow(g: &CapGraph, s: usize, t: usize) -> i64 {
    if s == t {
        return 0;
    }
    let mut d = Dinic::new(g.n);
    for e in &g.edges {
        if e.tail != e.head {
            d.add(e.tail, e.head, e.cap);
        }
    }
    let mut flow = 0i64;
    loop {
        d.bfs(s);
        if d.level[t] < 0 {
            return flow;
        }
        d.iter.iter_mut().for_each(|x| *x = 0);
        loop {
            let f = d.dfs(s, t, i64::MAX);
            if f == 0 {
                break;
            }
            flow += f;
        }
    }
}
