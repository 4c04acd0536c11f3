//! Link-cut forest over rooted trees with path-min, path-add and path weight sums.
//!
//! Each non-root node carries the value and weight of the edge to its parent;
//! tree roots carry `INF` and weight 0.

const NIL: usize = usize::MAX;
pub const INF: i64 = i64::MAX;

pub struct LinkCut {
    ch: Vec<[usize; 2]>,
    par: Vec<usize>,
    val: Vec<i64>,
    mn: Vec<i64>,
    lazy: Vec<i64>,
    w: Vec<i64>,
    ws: Vec<i64>,
    buf: Vec<usize>,
}

impl LinkCut {
    pub fn new(n: usize) -> Self {
        LinkCut {
            ch: vec![[NIL; 2]; n],
            par: vec![NIL; n],
            val: vec![INF; n],
            mn: vec![INF; n],
            lazy: vec![0; n],
            w: vec![0; n],
            ws: vec![0; n],
            buf: Vec::new(),
        }
    }

    fn is_root(&self, x: usize) -> bool {
        let p = self.par[x];
        p == NIL || (self.ch[p][0] != x && self.ch[p][1] != x)
    }

    fn apply(&mut self, x: usize, d: i64) {
        if x == NIL {
            return;
        }
        if self.val[x] != INF {
            self.val[x] += d;
        }
        if self.mn[x] != INF {
            self.mn[x] += d;
        }
        self.lazy[x] += d;
    }

    fn push(&mut self, x: usize) {
        let d = self.lazy[x];
        if d != 0 {
            let [a, b] = self.ch[x];
            self.apply(a, d);
            self.apply(b, d);
            self.lazy[x] = 0;
        }
    }

    fn pull(&mut self, x: usize) {
        let mut mn = self.val[x];
        let mut ws = self.w[x];
        for c in self.ch[x] {
            if c != NIL {
                mn = mn.min(self.mn[c]);
                ws += self.ws[c];
            }
        }
        self.mn[x] = mn;
        self.ws[x] = ws;
    }

    fn rotate(&mut self, x: usize) {
        let p = self.par[x];
        let g = self.par[p];
        let dir = (self.ch[p][1] == x) as usize;
        if !self.is_root(p) {
            if self.ch[g][0] == p {
                self.ch[g][0] = x;
            } else {
                self.ch[g][1] = x;
            }
        }
        self.par[x] = g;
        let b = self.ch[x][dir ^ 1];
        self.ch[p][dir] = b;
        if b != NIL {
            self.par[b] = p;
        }
        self.ch[x][dir ^ 1] = p;
        self.par[p] = x;
        self.pull(p);
        self.pull(x);
    }

    fn splay(&mut self, x: usize) {
        self.buf.clear();
        let mut y = x;
        self.buf.push(y);
        while !self.is_root(y) {
            y = self.par[y];
            self.buf.push(y);
        }
        for i in (0..self.buf.len()).rev() {
            let z = self.buf[i];
            self.push(z);
        }
        while !self.is_root(x) {
            let p = self.par[x];
            if !self.is_root(p) {
                let g = self.par[p];
                if (self.ch[g][0] == p) == (self.ch[p][0] == x) {
                    self.rotate(p);
                } else {
                    self.rotate(x);
                }
            }
            self.rotate(x);
        }
    }

    fn access(&mut self, x: usize) {
        let mut last = NIL;
        let mut y = x;
        while y != NIL {
            self.splay(y);
            self.ch[y][1] = last;
            self.pull(y);
            last = y;
            y = self.par[y];
        }
        self.splay(x);
    }

    pub fn find_root(&mut self, x: usize) -> usize {
        self.access(x);
        let mut y = x;
        loop {
            self.push(y);
            match self.ch[y][0] {
                NIL => break,
                l => y = l,
            }
        }
        self.splay(y);
        y
    }

    /// Make tree root `x` a child of `p` through an edge of value `val` and weight `w`.
    pub fn link(&mut self, x: usize, p: usize, val: i64, w: i64) {
        self.access(x);
        debug_assert_eq!(self.ch[x][0], NIL, "link target must be a tree root");
        self.val[x] = val;
        self.w[x] = w;
        self.pull(x);
        self.par[x] = p;
    }

    /// Detach `x` from its parent.
    pub fn cut(&mut self, x: usize) {
        self.access(x);
        let l = self.ch[x][0];
        if l != NIL {
            self.par[l] = NIL;
            self.ch[x][0] = NIL;
        }
        self.val[x] = INF;
        self.w[x] = 0;
        self.pull(x);
    }

    pub fn path_min(&mut self, x: usize) -> i64 {
        self.access(x);
        self.mn[x]
    }

    pub fn path_weight(&mut self, x: usize) -> i64 {
        self.access(x);
        self.ws[x]
    }

    pub fn path_add(&mut self, x: usize, d: i64) {
        self.access(x);
        self.apply(x, d);
    }

    pub fn value(&mut self, x: usize) -> i64 {
        self.access(x);
        self.val[x]
    }

    /// The node closest to the root on the path of `x` whose value equals the path minimum.
    pub fn argmin(&mut self, x: usize) -> usize {
        self.access(x);
        let target = self.mn[x];
        let mut y = x;
        loop {
            self.push(y);
            let l = self.ch[y][0];
            if l != NIL && self.mn[l] == target {
                y = l;
            } else if self.val[y] == target {
                break;
            } else {
                y = self.ch[y][1];
            }
        }
        self.splay(y);
        y
    }

    /// Nodes on the path from the tree root down to `x`.
    pub fn path_nodes(&mut self, x: usize) -> Vec<usize> {
        self.access(x);
        let mut out = Vec::new();
        let mut stack = Vec::new();
        let mut y = x;
        loop {
            while y != NIL {
                self.push(y);
                stack.push(y);
                y = self.ch[y][0];
            }
            match stack.pop() {
                None => break,
                Some(z) => {
                    out.push(z);
                    y = self.ch[z][1];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_aggregates() {
        // 0 <- 1 <- 2 <- 3 (root 0)
        let mut t = LinkCut::new(4);
        t.link(1, 0, 5, 2);
        t.link(2, 1, 3, 4);
        t.link(3, 2, 7, 1);
        assert_eq!(t.find_root(3), 0);
        assert_eq!(t.path_min(3), 3);
        assert_eq!(t.path_weight(3), 7);
        assert_eq!(t.path_nodes(3), vec![0, 1, 2, 3]);
        t.path_add(3, -3);
        assert_eq!(t.argmin(3), 2);
        t.cut(2);
        assert_eq!(t.find_root(3), 2);
        assert_eq!(t.value(3), 4);
        assert_eq!(t.value(1), 2);
        assert_eq!(t.path_min(2), INF);
    }

    #[test]
    fn random_against_naive_parent_array() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 30;
        let mut t = LinkCut::new(n);
        let mut par = vec![usize::MAX; n];
        let mut val = vec![0i64; n];
        let root = |par: &Vec<usize>, mut x: usize| {
            while par[x] != usize::MAX {
                x = par[x];
            }
            x
        };
        for _ in 0..5000 {
            let x = rng.gen_range(0..n);
            match rng.gen_range(0..4) {
                0 => {
                    let y = rng.gen_range(0..n);
                    if par[x] == usize::MAX && root(&par, y) != x {
                        let v = rng.gen_range(1..100);
                        t.link(x, y, v, 1);
                        par[x] = y;
                        val[x] = v;
                    }
                }
                1 => {
                    if par[x] != usize::MAX {
                        t.cut(x);
                        par[x] = usize::MAX;
                    }
                }
                2 => {
                    let d = rng.gen_range(-5..5);
                    t.path_add(x, d);
                    let mut y = x;
                    while par[y] != usize::MAX {
                        val[y] += d;
                        y = par[y];
                    }
                }
                _ => {
                    let mut m = INF;
                    let mut w = 0;
                    let mut y = x;
                    while par[y] != usize::MAX {
                        m = m.min(val[y]);
                        w += 1;
                        y = par[y];
                    }
                    assert_eq!(t.path_min(x), m);
                    assert_eq!(t.path_weight(x), w);
                    assert_eq!(t.find_root(x), y);
                    for v in 0..n {
                        if par[v] != usize::MAX {
                            assert_eq!(t.value(v), val[v], "value of {v}");
                        }
                    }
                    if m != INF {
                        let a = t.argmin(x);
                        assert_eq!(val[a], m);
                        assert!(par[a] != usize::MAX);
                    }
                }
            }
        }
    }
}
