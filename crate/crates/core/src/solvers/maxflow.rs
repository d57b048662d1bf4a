//! Two-terminal maximum flow by shortest augmenting paths.
//!
//! Each phase builds a breadth-first level graph from the source and pushes
//! a blocking flow along shortest paths in it (Dinic's scheme); phases repeat
//! until the sink is unreachable in the residual graph.

use std::collections::VecDeque;

use crate::error::{contract, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
}

#[derive(Clone, Debug)]
pub struct FlowNetwork {
    num_nodes: usize,
    source: usize,
    sink: usize,
    arcs: Vec<FlowArc>,
}

impl FlowNetwork {
    pub fn new(num_nodes: usize, source: usize, sink: usize) -> Result<Self> {
        contract!(source < num_nodes && sink < num_nodes, "terminals outside 0..{num_nodes}");
        contract!(source != sink, "source and sink must differ");
        Ok(FlowNetwork { num_nodes, source, sink, arcs: Vec::new() })
    }

    pub fn with_capacity(num_nodes: usize, source: usize, sink: usize, arcs: usize) -> Result<Self> {
        let mut n = Self::new(num_nodes, source, sink)?;
        n.arcs.reserve(arcs);
        Ok(n)
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: f64) -> Result<()> {
        contract!(from < self.num_nodes && to < self.num_nodes, "arc ({from}, {to}) outside 0..{}", self.num_nodes);
        contract!(capacity.is_finite() && capacity >= 0.0, "arc capacity must be finite and non-negative");
        self.arcs.push(FlowArc { from, to, capacity });
        Ok(())
    }

    /// Unchecked push for callers that construct capacities themselves.
    pub(crate) fn push_arc(&mut self, from: usize, to: usize, capacity: f64) {
        debug_assert!(capacity.is_finite() && capacity >= 0.0);
        self.arcs.push(FlowArc { from, to, capacity });
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arcs(&self) -> &[FlowArc] {
        &self.arcs
    }

    /// Capacity of the cut whose source side is `source_side`.
    pub fn cut_capacity(&self, source_side: &[bool]) -> f64 {
        self.arcs
            .iter()
            .filter(|a| source_side[a.from] && !source_side[a.to])
            .map(|a| a.capacity)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxFlow {
    pub value: f64,
    /// Nodes reachable from the source in the final residual graph; this is a
    /// minimum cut's source side.
    pub source_side: Vec<bool>,
}

struct Residual {
    // Arc 2k is the k-th input arc, 2k + 1 its reverse.
    head: Vec<u32>,
    cap: Vec<f64>,
    start: Vec<usize>,
    order: Vec<u32>,
    eps: f64,
}

impl Residual {
    fn new(net: &FlowNetwork) -> Self {
        let n = net.num_nodes;
        let m = net.arcs.len();
        let mut head = Vec::with_capacity(2 * m);
        let mut cap = Vec::with_capacity(2 * m);
        let mut start = vec![0usize; n + 1];
        let mut max_cap: f64 = 0.0;
        for a in &net.arcs {
            head.push(a.to as u32);
            cap.push(a.capacity);
            head.push(a.from as u32);
            cap.push(0.0);
            start[a.from + 1] += 1;
            start[a.to + 1] += 1;
            max_cap = max_cap.max(a.capacity);
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut order = vec![0u32; 2 * m];
        for (k, a) in net.arcs.iter().enumerate() {
            order[fill[a.from]] = (2 * k) as u32;
            fill[a.from] += 1;
            order[fill[a.to]] = (2 * k + 1) as u32;
            fill[a.to] += 1;
        }
        // Residuals below this are rounding noise from repeated subtraction.
        let eps = 1e-12 * max_cap.max(1.0);
        Residual { head, cap, start, order, eps }
    }

    /// Breadth-first levels from the source, stopping once the sink's level
    /// is settled; nodes beyond it cannot lie on a shortest path.
    fn levels(&self, source: usize, sink: usize, level: &mut [i32], queue: &mut VecDeque<usize>) {
        level.fill(-1);
        level[source] = 0;
        queue.clear();
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            if level[sink] >= 0 && level[u] >= level[sink] {
                break;
            }
            for &a in &self.order[self.start[u]..self.start[u + 1]] {
                let v = self.head[a as usize] as usize;
                if level[v] < 0 && self.cap[a as usize] > self.eps {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }

    fn blocking_flow(&mut self, source: usize, sink: usize, level: &mut [i32], next: &mut [usize]) -> f64 {
        next.copy_from_slice(&self.start[..level.len()]);
        let mut path: Vec<u32> = Vec::new();
        let mut total = 0.0;
        let mut u = source;
        loop {
            if u == sink {
                let f = path.iter().map(|&a| self.cap[a as usize]).fold(f64::INFINITY, f64::min);
                for &a in &path {
                    self.cap[a as usize] -= f;
                    self.cap[(a ^ 1) as usize] += f;
                }
                total += f;
                let cut = path.iter().position(|&a| self.cap[a as usize] <= self.eps).unwrap_or(0);
                path.truncate(cut);
                u = match path.last() {
                    Some(&a) => self.head[a as usize] as usize,
                    None => source,
                };
                continue;
            }
            let end = self.start[u + 1];
            let mut advanced = false;
            while next[u] < end {
                let a = self.order[next[u]] as usize;
                let v = self.head[a] as usize;
                if self.cap[a] > self.eps && level[v] == level[u] + 1 {
                    path.push(a as u32);
                    u = v;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if !advanced {
                if u == source {
                    return total;
                }
                level[u] = -1;
                let a = path.pop().expect("non-source node has an incoming path arc");
                u = self.head[(a ^ 1) as usize] as usize;
                next[u] += 1;
            }
        }
    }
}

/// Maximum s-t flow and a minimum cut. Deterministic given arc order.
pub fn max_flow(net: &FlowNetwork) -> MaxFlow {
    let n = net.num_nodes;
    let mut r = Residual::new(net);
    let mut level = vec![-1i32; n];
    let mut next = vec![0usize; n];
    let mut queue = VecDeque::with_capacity(n);
    let mut value = 0.0;
    loop {
        r.levels(net.source, net.sink, &mut level, &mut queue);
        if level[net.sink] < 0 {
            break;
        }
        value += r.blocking_flow(net.source, net.sink, &mut level, &mut next);
    }
    // The last BFS marks exactly the residual-reachable set.
    let source_side = level.iter().map(|&l| l >= 0).collect();
    MaxFlow { value, source_side }
}
