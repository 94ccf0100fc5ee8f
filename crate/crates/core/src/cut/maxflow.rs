//! Boykov–Kolmogorov max-flow with search-tree reuse.

use std::collections::VecDeque;

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;
const INFINITE_D: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    first: u32,
    /// Arc from this node to its tree parent, or one of the markers above.
    parent: u32,
    is_sink: bool,
    active: bool,
    /// Residual terminal capacity: positive toward the source, negative toward the sink.
    tr_cap: f64,
    ts: u32,
    dist: u32,
}

#[derive(Debug, Clone)]
struct Arc {
    head: u32,
    next: u32,
    r_cap: f64,
}

/// Directed graph with terminal capacities. Arcs come in sister pairs `2k`, `2k + 1`.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    flow: f64,
    queue: VecDeque<u32>,
    orphans: VecDeque<u32>,
    time: u32,
}

#[inline]
fn sister(a: u32) -> u32 {
    a ^ 1
}

impl FlowGraph {
    pub fn new(n: usize) -> Self {
        Self {
            nodes: vec![
                Node {
                    first: NONE,
                    parent: NONE,
                    is_sink: false,
                    active: false,
                    tr_cap: 0.0,
                    ts: 0,
                    dist: 0,
                };
                n
            ],
            arcs: Vec::new(),
            flow: 0.0,
            queue: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Adds source→i and i→sink capacities; the common part is routed immediately.
    pub fn add_tweights(&mut self, i: usize, source_cap: f64, sink_cap: f64) {
        let node = &mut self.nodes[i];
        let (mut cs, mut ct) = (source_cap, sink_cap);
        if node.tr_cap > 0.0 {
            cs += node.tr_cap;
        } else {
            ct -= node.tr_cap;
        }
        self.flow += cs.min(ct);
        node.tr_cap = cs - ct;
    }

    /// Adds arcs i→j with `cap` and j→i with `rev_cap`.
    pub fn add_edge(&mut self, i: usize, j: usize, cap: f64, rev_cap: f64) {
        assert!(i != j, "self loop");
        let a = self.arcs.len() as u32;
        self.arcs.push(Arc {
            head: j as u32,
            next: self.nodes[i].first,
            r_cap: cap,
        });
        self.arcs.push(Arc {
            head: i as u32,
            next: self.nodes[j].first,
            r_cap: rev_cap,
        });
        self.nodes[i].first = a;
        self.nodes[j].first = a + 1;
    }

    fn set_active(&mut self, i: u32) {
        let n = &mut self.nodes[i as usize];
        if !n.active {
            n.active = true;
            self.queue.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<u32> {
        while let Some(i) = self.queue.pop_front() {
            let n = &mut self.nodes[i as usize];
            n.active = false;
            if n.parent != NONE {
                return Some(i);
            }
        }
        None
    }

    fn arcs_of(&self, i: u32) -> impl Iterator<Item = u32> + '_ {
        let mut a = self.nodes[i as usize].first;
        std::iter::from_fn(move || {
            if a == NONE {
                None
            } else {
                let cur = a;
                a = self.arcs[a as usize].next;
                Some(cur)
            }
        })
    }

    fn head(&self, a: u32) -> u32 {
        self.arcs[a as usize].head
    }

    fn cap(&self, a: u32) -> f64 {
        self.arcs[a as usize].r_cap
    }

    /// Computes the maximum flow; returns its value.
    pub fn maxflow(&mut self) -> f64 {
        self.init();
        let mut current: Option<u32> = None;
        loop {
            let i = match current.take() {
                Some(i) => {
                    self.nodes[i as usize].active = false;
                    if self.nodes[i as usize].parent != NONE {
                        Some(i)
                    } else {
                        None
                    }
                }
                None => None,
            };
            let i = match i.or_else(|| self.next_active()) {
                Some(i) => i,
                None => break,
            };
            let found = self.grow(i);
            self.time += 1;
            if let Some(a) = found {
                // Keep `i` current so it is grown again before the queue advances.
                self.nodes[i as usize].active = true;
                current = Some(i);
                self.augment(a);
                self.adopt();
            }
        }
        self.flow
    }

    fn init(&mut self) {
        self.queue.clear();
        self.orphans.clear();
        self.time = 0;
        for i in 0..self.nodes.len() {
            let n = &mut self.nodes[i];
            n.active = false;
            n.ts = 0;
            if n.tr_cap > 0.0 {
                n.is_sink = false;
                n.parent = TERMINAL;
                n.dist = 1;
            } else if n.tr_cap < 0.0 {
                n.is_sink = true;
                n.parent = TERMINAL;
                n.dist = 1;
            } else {
                n.parent = NONE;
                continue;
            }
            self.set_active(i as u32);
        }
    }

    /// Expands the tree of `i`; returns the source-to-sink arc when the trees touch.
    fn grow(&mut self, i: u32) -> Option<u32> {
        let arcs: Vec<u32> = self.arcs_of(i).collect();
        let (ts_i, dist_i, sink_i) = {
            let n = &self.nodes[i as usize];
            (n.ts, n.dist, n.is_sink)
        };
        for a in arcs {
            let open = if sink_i { self.cap(sister(a)) } else { self.cap(a) };
            if open <= 0.0 {
                continue;
            }
            let j = self.head(a);
            let nj = &mut self.nodes[j as usize];
            if nj.parent == NONE {
                nj.is_sink = sink_i;
                nj.parent = sister(a);
                nj.ts = ts_i;
                nj.dist = dist_i + 1;
                self.set_active(j);
            } else if nj.is_sink != sink_i {
                return Some(if sink_i { sister(a) } else { a });
            } else if nj.ts <= ts_i && nj.dist > dist_i {
                nj.parent = sister(a);
                nj.ts = ts_i;
                nj.dist = dist_i + 1;
            }
        }
        None
    }

    fn make_orphan_front(&mut self, i: u32) {
        self.nodes[i as usize].parent = ORPHAN;
        self.orphans.push_front(i);
    }

    fn make_orphan_back(&mut self, i: u32) {
        self.nodes[i as usize].parent = ORPHAN;
        self.orphans.push_back(i);
    }

    /// Pushes the bottleneck along source-root → `a` → sink-root.
    fn augment(&mut self, middle: u32) {
        let mut bottleneck = self.cap(middle);
        let mut i = self.head(sister(middle));
        loop {
            let pa = self.nodes[i as usize].parent;
            if pa == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.cap(sister(pa)));
            i = self.head(pa);
        }
        bottleneck = bottleneck.min(self.nodes[i as usize].tr_cap);
        let mut i = self.head(middle);
        loop {
            let pa = self.nodes[i as usize].parent;
            if pa == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.cap(pa));
            i = self.head(pa);
        }
        bottleneck = bottleneck.min(-self.nodes[i as usize].tr_cap);

        self.arcs[sister(middle) as usize].r_cap += bottleneck;
        self.arcs[middle as usize].r_cap -= bottleneck;

        let mut i = self.head(sister(middle));
        loop {
            let pa = self.nodes[i as usize].parent;
            if pa == TERMINAL {
                break;
            }
            self.arcs[pa as usize].r_cap += bottleneck;
            self.arcs[sister(pa) as usize].r_cap -= bottleneck;
            let next = self.head(pa);
            if self.cap(sister(pa)) <= 0.0 {
                self.make_orphan_front(i);
            }
            i = next;
        }
        self.nodes[i as usize].tr_cap -= bottleneck;
        if self.nodes[i as usize].tr_cap <= 0.0 {
            self.make_orphan_front(i);
        }

        let mut i = self.head(middle);
        loop {
            let pa = self.nodes[i as usize].parent;
            if pa == TERMINAL {
                break;
            }
            self.arcs[sister(pa) as usize].r_cap += bottleneck;
            self.arcs[pa as usize].r_cap -= bottleneck;
            let next = self.head(pa);
            if self.cap(pa) <= 0.0 {
                self.make_orphan_front(i);
            }
            i = next;
        }
        self.nodes[i as usize].tr_cap += bottleneck;
        if self.nodes[i as usize].tr_cap >= 0.0 {
            self.make_orphan_front(i);
        }
        self.flow += bottleneck;
    }

    fn adopt(&mut self) {
        while let Some(i) = self.orphans.pop_front() {
            self.process_orphan(i);
        }
    }

    fn process_orphan(&mut self, i: u32) {
        let sink = self.nodes[i as usize].is_sink;
        let arcs: Vec<u32> = self.arcs_of(i).collect();
        let mut best: Option<(u32, u32)> = None;
        for &a0 in &arcs {
            // The candidate parent j must be able to send (source tree) or receive (sink tree).
            let open = if sink { self.cap(a0) } else { self.cap(sister(a0)) };
            if open <= 0.0 {
                continue;
            }
            let j0 = self.head(a0);
            let nj = &self.nodes[j0 as usize];
            if nj.is_sink != sink || nj.parent == NONE {
                continue;
            }
            let mut j = j0;
            let mut d: u32 = 0;
            loop {
                let n = &self.nodes[j as usize];
                if n.ts == self.time {
                    d = d.saturating_add(n.dist);
                    break;
                }
                let a = n.parent;
                d += 1;
                if a == TERMINAL {
                    let n = &mut self.nodes[j as usize];
                    n.ts = self.time;
                    n.dist = 1;
                    break;
                }
                if a == ORPHAN {
                    d = INFINITE_D;
                    break;
                }
                j = self.head(a);
            }
            if d < INFINITE_D {
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((a0, d));
                }
                let mut j = j0;
                while self.nodes[j as usize].ts != self.time {
                    let time = self.time;
                    let n = &mut self.nodes[j as usize];
                    n.ts = time;
                    n.dist = d;
                    d -= 1;
                    let pa = n.parent;
                    j = self.head(pa);
                }
            }
        }
        match best {
            Some((a0, d)) => {
                let n = &mut self.nodes[i as usize];
                n.parent = a0;
                n.ts = self.time;
                n.dist = d + 1;
            }
            None => {
                self.nodes[i as usize].parent = NONE;
                for &a0 in &arcs {
                    let j = self.head(a0);
                    let (j_sink, pa) = {
                        let n = &self.nodes[j as usize];
                        (n.is_sink, n.parent)
                    };
                    if j_sink != sink || pa == NONE {
                        continue;
                    }
                    let open = if sink { self.cap(a0) } else { self.cap(sister(a0)) };
                    if open > 0.0 {
                        self.set_active(j);
                    }
                    if pa != TERMINAL && pa != ORPHAN && self.head(pa) == i {
                        self.make_orphan_back(j);
                    }
                }
            }
        }
    }

    /// Nodes reachable from the source in the residual graph (after [`maxflow`](Self::maxflow)).
    pub fn source_side(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<u32> = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.tr_cap > 0.0 {
                seen[i] = true;
                stack.push(i as u32);
            }
        }
        while let Some(i) = stack.pop() {
            for a in self.arcs_of(i) {
                let j = self.head(a) as usize;
                if !seen[j] && self.cap(a) > 0.0 {
                    seen[j] = true;
                    stack.push(j as u32);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node() {
        let mut g = FlowGraph::new(1);
        g.add_tweights(0, 3.0, 5.0);
        assert_eq!(g.maxflow(), 3.0);
        assert_eq!(g.source_side(), vec![false]);
    }

    // Classic textbook network: s→0 (10), s→1 (10), 0→1 (2), 0→2 (4), 0→3 (8),
    // 1→3 (9), 3→2 (6), 2→t (10), 3→t (10). Max flow 19.
    #[test]
    fn textbook_network() {
        let mut g = FlowGraph::new(4);
        g.add_tweights(0, 10.0, 0.0);
        g.add_tweights(1, 10.0, 0.0);
        g.add_tweights(2, 0.0, 10.0);
        g.add_tweights(3, 0.0, 10.0);
        g.add_edge(0, 1, 2.0, 0.0);
        g.add_edge(0, 2, 4.0, 0.0);
        g.add_edge(0, 3, 8.0, 0.0);
        g.add_edge(1, 3, 9.0, 0.0);
        g.add_edge(3, 2, 6.0, 0.0);
        assert_eq!(g.maxflow(), 19.0);
    }

    #[test]
    fn chain_bottleneck() {
        let n = 50;
        let mut g = FlowGraph::new(n);
        g.add_tweights(0, 100.0, 0.0);
        g.add_tweights(n - 1, 0.0, 100.0);
        for i in 0..n - 1 {
            let c = if i == 17 { 3.0 } else { 7.0 };
            g.add_edge(i, i + 1, c, c);
        }
        assert_eq!(g.maxflow(), 3.0);
        let side = g.source_side();
        assert!(side[..=17].iter().all(|&s| s));
        assert!(side[18..].iter().all(|&s| !s));
    }

    #[test]
    fn repeated_tweights_accumulate() {
        let mut g = FlowGraph::new(2);
        g.add_tweights(0, 4.0, 1.0);
        g.add_tweights(0, 0.0, 2.0);
        g.add_tweights(1, 0.0, 2.0);
        g.add_edge(0, 1, 5.0, 0.0);
        // node 0: s 4, t 3 → 3 routed, residual s 1; then 0→1→t carries 1.
        assert_eq!(g.maxflow(), 4.0);
    }
}
