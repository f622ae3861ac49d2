use std::collections::VecDeque;

use crate::error::{Error, Result};

/// s-t network over `n` nodes: terminal capacities per node plus directed
/// node-node capacities stored as arc pairs.
#[derive(Debug, Clone, Default)]
pub struct FlowNetwork {
    source_cap: Vec<f64>,
    sink_cap: Vec<f64>,
    edges: Vec<(usize, usize, f64, f64)>,
}

/// Maximum flow and the source side of a minimum cut.
#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    pub value: f64,
    pub source_side: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        Self {
            source_cap: vec![0.0; n],
            sink_cap: vec![0.0; n],
            edges: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.source_cap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_cap.is_empty()
    }

    /// Adds `s -> i` and `i -> t` capacities.
    pub fn add_terminal(&mut self, i: usize, source: f64, sink: f64) {
        self.source_cap[i] += source;
        self.sink_cap[i] += sink;
    }

    /// Adds `a -> b` with capacity `cap` and `b -> a` with `rev_cap`.
    pub fn add_edge(&mut self, a: usize, b: usize, cap: f64, rev_cap: f64) {
        self.edges.push((a, b, cap, rev_cap));
    }

    pub fn source_cap(&self) -> &[f64] {
        &self.source_cap
    }

    pub fn sink_cap(&self) -> &[f64] {
        &self.sink_cap
    }

    pub fn edges(&self) -> &[(usize, usize, f64, f64)] {
        &self.edges
    }

    /// Capacity of the cut whose source side is `source_side`.
    pub fn cut_value(&self, source_side: &[bool]) -> f64 {
        let mut v = 0.0;
        for i in 0..self.len() {
            v += if source_side[i] { self.sink_cap[i] } else { self.source_cap[i] };
        }
        for &(a, b, c, r) in &self.edges {
            if source_side[a] && !source_side[b] {
                v += c;
            } else if source_side[b] && !source_side[a] {
                v += r;
            }
        }
        v
    }

    fn validate(&self) -> Result<()> {
        let ok = |c: f64| c.is_finite() && c >= 0.0;
        let n = self.len();
        if !self.source_cap.iter().chain(&self.sink_cap).all(|&c| ok(c))
            || !self.edges.iter().all(|&(a, b, c, r)| a < n && b < n && a != b && ok(c) && ok(r))
        {
            return Err(Error::InvalidParameter("flow capacities must be finite and non-negative".into()));
        }
        Ok(())
    }
}

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;

/// Boykov-Kolmogorov search-tree state.
struct Bk {
    first: Vec<u32>,
    // arcs grouped by tail node; sister of arc a is the reverse arc
    head: Vec<u32>,
    sister: Vec<u32>,
    cap: Vec<f64>,
    tr_cap: Vec<f64>,
    parent: Vec<u32>,
    is_sink: Vec<bool>,
    ts: Vec<u64>,
    dist: Vec<u32>,
    active: VecDeque<u32>,
    in_active: Vec<bool>,
    orphans: VecDeque<u32>,
    time: u64,
    flow: f64,
}

impl Bk {
    fn build(net: &FlowNetwork) -> Self {
        let n = net.len();
        let mut degree = vec![0u32; n + 1];
        for &(a, b, _, _) in &net.edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut first = vec![0u32; n + 1];
        for i in 0..n {
            first[i + 1] = first[i] + degree[i];
        }
        let m = first[n] as usize;
        let mut fill = first.clone();
        let (mut head, mut sister, mut cap) = (vec![0u32; m], vec![0u32; m], vec![0f64; m]);
        for &(a, b, c, r) in &net.edges {
            let (ia, ib) = (fill[a] as usize, fill[b] as usize);
            fill[a] += 1;
            fill[b] += 1;
            head[ia] = b as u32;
            cap[ia] = c;
            sister[ia] = ib as u32;
            head[ib] = a as u32;
            cap[ib] = r;
            sister[ib] = ia as u32;
        }
        let mut flow = 0.0;
        let tr_cap: Vec<f64> = (0..n)
            .map(|i| {
                let (s, t) = (net.source_cap[i], net.sink_cap[i]);
                flow += s.min(t);
                s - t
            })
            .collect();
        let mut bk = Self {
            first,
            head,
            sister,
            cap,
            parent: vec![NONE; n],
            is_sink: vec![false; n],
            ts: vec![0; n],
            dist: vec![0; n],
            active: VecDeque::new(),
            in_active: vec![false; n],
            orphans: VecDeque::new(),
            time: 0,
            flow,
            tr_cap,
        };
        for i in 0..n {
            if bk.tr_cap[i] != 0.0 {
                bk.parent[i] = TERMINAL;
                bk.is_sink[i] = bk.tr_cap[i] < 0.0;
                bk.dist[i] = 1;
                bk.set_active(i as u32);
            }
        }
        bk
    }

    fn set_active(&mut self, i: u32) {
        if !self.in_active[i as usize] {
            self.in_active[i as usize] = true;
            self.active.push_back(i);
        }
    }

    fn arcs(&self, i: u32) -> std::ops::Range<usize> {
        self.first[i as usize] as usize..self.first[i as usize + 1] as usize
    }

    /// Grows the trees from active node `i`; returns a source-to-sink arc.
    fn grow(&mut self, i: u32) -> Option<usize> {
        let iu = i as usize;
        for a in self.arcs(i) {
            let j = self.head[a] as usize;
            if !self.is_sink[iu] {
                if self.cap[a] <= 0.0 {
                    continue;
                }
                if self.parent[j] == NONE {
                    self.is_sink[j] = false;
                    self.parent[j] = self.sister[a];
                    self.ts[j] = self.ts[iu];
                    self.dist[j] = self.dist[iu] + 1;
                    self.set_active(j as u32);
                } else if self.is_sink[j] {
                    return Some(a);
                } else if self.ts[j] <= self.ts[iu] && self.dist[j] > self.dist[iu] {
                    self.parent[j] = self.sister[a];
                    self.ts[j] = self.ts[iu];
                    self.dist[j] = self.dist[iu] + 1;
                }
            } else {
                let s = self.sister[a] as usize;
                if self.cap[s] <= 0.0 {
                    continue;
                }
                if self.parent[j] == NONE {
                    self.is_sink[j] = true;
                    self.parent[j] = s as u32;
                    self.ts[j] = self.ts[iu];
                    self.dist[j] = self.dist[iu] + 1;
                    self.set_active(j as u32);
                } else if !self.is_sink[j] {
                    return Some(s);
                } else if self.ts[j] <= self.ts[iu] && self.dist[j] > self.dist[iu] {
                    self.parent[j] = s as u32;
                    self.ts[j] = self.ts[iu];
                    self.dist[j] = self.dist[iu] + 1;
                }
            }
        }
        None
    }

    fn make_orphan(&mut self, i: usize) {
        self.parent[i] = ORPHAN;
        self.orphans.push_front(i as u32);
    }

    /// Pushes the bottleneck along the path through the bridge arc `mid`
    /// (oriented source tree -> sink tree).
    fn augment(&mut self, mid: usize) {
        let mut b = self.cap[mid];
        let mut i = self.head[self.sister[mid] as usize] as usize;
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                break;
            }
            b = b.min(self.cap[self.sister[a as usize] as usize]);
            i = self.head[a as usize] as usize;
        }
        b = b.min(self.tr_cap[i]);
        let mut i = self.head[mid] as usize;
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                break;
            }
            b = b.min(self.cap[a as usize]);
            i = self.head[a as usize] as usize;
        }
        b = b.min(-self.tr_cap[i]);

        let s = self.sister[mid] as usize;
        self.cap[s] += b;
        self.cap[mid] -= b;
        let mut i = self.head[s] as usize;
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                self.tr_cap[i] -= b;
                if self.tr_cap[i] <= 0.0 {
                    self.tr_cap[i] = 0.0;
                    self.make_orphan(i);
                }
                break;
            }
            let (a, sa) = (a as usize, self.sister[a as usize] as usize);
            self.cap[a] += b;
            self.cap[sa] -= b;
            let next = self.head[a] as usize;
            if self.cap[sa] <= 0.0 {
                self.cap[sa] = 0.0;
                self.make_orphan(i);
            }
            i = next;
        }
        let mut i = self.head[mid] as usize;
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                self.tr_cap[i] += b;
                if self.tr_cap[i] >= 0.0 {
                    self.tr_cap[i] = 0.0;
                    self.make_orphan(i);
                }
                break;
            }
            let (a, sa) = (a as usize, self.sister[a as usize] as usize);
            self.cap[sa] += b;
            self.cap[a] -= b;
            let next = self.head[a] as usize;
            if self.cap[a] <= 0.0 {
                self.cap[a] = 0.0;
                self.make_orphan(i);
            }
            i = next;
        }
        self.flow += b;
    }

    /// Distance to the terminal through parents, `None` if the chain ends
    /// in an orphan or free node. Caches distances with the current stamp.
    fn origin_dist(&mut self, start: usize) -> Option<u32> {
        let mut j = start;
        let mut d = 0u32;
        loop {
            if self.ts[j] == self.time {
                d += self.dist[j];
                break;
            }
            let a = self.parent[j];
            d += 1;
            if a == TERMINAL {
                self.ts[j] = self.time;
                self.dist[j] = 1;
                break;
            }
            if a == ORPHAN || a == NONE {
                return None;
            }
            j = self.head[a as usize] as usize;
        }
        // stamp the walked chain
        let mut j = start;
        let mut dd = d;
        while self.ts[j] != self.time {
            self.ts[j] = self.time;
            self.dist[j] = dd;
            dd -= 1;
            j = self.head[self.parent[j] as usize] as usize;
        }
        Some(d)
    }

    fn adopt(&mut self, i: usize) {
        let sink = self.is_sink[i];
        let mut best: Option<(usize, u32)> = None;
        for a in self.arcs(i as u32) {
            let residual = if sink { self.cap[a] } else { self.cap[self.sister[a] as usize] };
            if residual <= 0.0 {
                continue;
            }
            let j = self.head[a] as usize;
            if self.is_sink[j] != sink || self.parent[j] == NONE {
                continue;
            }
            if let Some(d) = self.origin_dist(j) {
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((a, d));
                }
            }
        }
        if let Some((a, d)) = best {
            self.parent[i] = a as u32;
            self.ts[i] = self.time;
            self.dist[i] = d + 1;
            return;
        }
        // no valid parent: node becomes free, neighbors may need work
        for a in self.arcs(i as u32) {
            let j = self.head[a] as usize;
            if self.is_sink[j] != sink || self.parent[j] == NONE {
                continue;
            }
            let residual = if sink { self.cap[a] } else { self.cap[self.sister[a] as usize] };
            if residual > 0.0 {
                self.set_active(j as u32);
            }
            let pj = self.parent[j];
            if pj != TERMINAL && pj != ORPHAN && self.head[pj as usize] as usize == i {
                self.parent[j] = ORPHAN;
                self.orphans.push_back(j as u32);
            }
        }
        self.parent[i] = NONE;
    }

    fn run(&mut self) {
        while let Some(&i) = self.active.front() {
            if self.parent[i as usize] == NONE {
                self.active.pop_front();
                self.in_active[i as usize] = false;
                continue;
            }
            match self.grow(i) {
                Some(mid) => {
                    self.time += 1;
                    self.augment(mid);
                    while let Some(o) = self.orphans.pop_front() {
                        self.adopt(o as usize);
                    }
                }
                None => {
                    self.active.pop_front();
                    self.in_active[i as usize] = false;
                }
            }
        }
    }
}

/// Exact maximum flow by the Boykov-Kolmogorov augmenting-path method.
/// The returned source side is the set of nodes reachable from the source
/// in the final residual graph.
pub fn max_flow(net: &FlowNetwork) -> Result<MinCut> {
    net.validate()?;
    let mut bk = Bk::build(net);
    bk.run();
    let source_side = (0..net.len())
        .map(|i| bk.parent[i] != NONE && !bk.is_sink[i])
        .collect();
    Ok(MinCut {
        value: bk.flow,
        source_side,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(net: &FlowNetwork) -> f64 {
        let n = net.len();
        (0u32..1 << n)
            .map(|bits| {
                let side: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
                net.cut_value(&side)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn hand_network() {
        let mut net = FlowNetwork::new(2);
        net.add_terminal(0, 3.0, 0.0);
        net.add_terminal(1, 0.0, 3.0);
        net.add_edge(0, 1, 2.0, 0.0);
        let cut = max_flow(&net).unwrap();
        assert_eq!(cut.value, 2.0);
        assert_eq!(cut.source_side, vec![true, false]);
    }

    #[test]
    fn one_sided_data_terms() {
        let mut net = FlowNetwork::new(4);
        for i in 0..4 {
            net.add_terminal(i, 5.0, 1.0);
        }
        let cut = max_flow(&net).unwrap();
        assert_eq!(cut.value, 4.0);
        assert!(cut.source_side.iter().all(|&s| s));
    }

    #[test]
    fn random_networks_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..60 {
            let n = rng.random_range(2..=12);
            let mut net = FlowNetwork::new(n);
            for i in 0..n {
                net.add_terminal(i, rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
            }
            for _ in 0..rng.random_range(n..3 * n) {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                if a != b {
                    net.add_edge(a, b, rng.random_range(0.0..4.0), rng.random_range(0.0..4.0));
                }
            }
            let cut = max_flow(&net).unwrap();
            let bf = brute_force(&net);
            assert!((cut.value - bf).abs() < 1e-9, "{} vs {bf}", cut.value);
            assert!((net.cut_value(&cut.source_side) - bf).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_negative_capacity() {
        let mut net = FlowNetwork::new(2);
        net.add_edge(0, 1, -1.0, 0.0);
        assert!(max_flow(&net).is_err());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn returned_cut_has_the_flow_value(
            n in 2usize..30,
            terminals in prop::collection::vec((0.0..5.0f64, 0.0..5.0f64), 30),
            edges in prop::collection::vec((0usize..30, 0usize..30, 0.0..4.0f64, 0.0..4.0f64), 0..80),
        ) {
            let mut net = FlowNetwork::new(n);
            for (i, &(s, t)) in terminals.iter().take(n).enumerate() {
                net.add_terminal(i, s, t);
            }
            for &(a, b, c, r) in &edges {
                if a < n && b < n && a != b {
                    net.add_edge(a, b, c, r);
                }
            }
            let cut = max_flow(&net).unwrap();
            prop_assert!((net.cut_value(&cut.source_side) - cut.value).abs() < 1e-9);
            // no cut is cheaper than the trivial ones
            let all_sink = vec![false; n];
            let all_source = vec![true; n];
            prop_assert!(cut.value <= net.cut_value(&all_sink) + 1e-9);
            prop_assert!(cut.value <= net.cut_value(&all_source) + 1e-9);
        }
    }
}
