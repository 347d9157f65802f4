//! Weighted q×q grid road network with all-pairs shortest-path distances.
//!
//! Distances and travel times are interchangeable: vehicles move at unit
//! speed, so one grid-length takes one time unit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A grid vertex, addressed by row and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub row: usize,
    pub col: usize,
}

impl NodeId {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.row, self.col)
    }
}

impl FromStr for NodeId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (r, c) = s.split_once(':').ok_or_else(|| format!("expected `row:col`, got `{s}`"))?;
        let row = r.trim().parse().map_err(|e| format!("bad row in `{s}`: {e}"))?;
        let col = c.trim().parse().map_err(|e| format!("bad col in `{s}`: {e}"))?;
        Ok(Self { row, col })
    }
}

/// How edge weights are assigned when building a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Uniform(f64),
    /// Every edge gets `default` unless listed in `edges`.
    PerEdge {
        default: f64,
        edges: Vec<(NodeId, NodeId, f64)>,
    },
}

impl WeightSpec {
    /// Reads a per-edge table, one `row1,col1,row2,col2,weight` line per edge.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn from_file(path: &Path, default: f64) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::EdgeFile { path: path.to_path_buf(), line: lineno + 1, msg };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(bad(format!("expected 5 fields, got {}", fields.len())));
            }
            let mut coords = [0usize; 4];
            for (slot, field) in coords.iter_mut().zip(&fields[..4]) {
                *slot = field.parse().map_err(|e| bad(format!("bad coordinate `{field}`: {e}")))?;
            }
            let weight: f64 = fields[4].parse().map_err(|e| bad(format!("bad weight `{}`: {e}", fields[4])))?;
            edges.push((NodeId::new(coords[0], coords[1]), NodeId::new(coords[2], coords[3]), weight));
        }
        Ok(Self::PerEdge { default, edges })
    }
}

/// Immutable grid network. All-pairs distances are computed once at build time.
#[derive(Debug, Clone)]
pub struct GridNetwork {
    q: usize,
    /// `horizontal[r * (q - 1) + c]` joins (r, c) and (r, c + 1).
    horizontal: Vec<f64>,
    /// `vertical[r * q + c]` joins (r, c) and (r + 1, c).
    vertical: Vec<f64>,
    dist: Vec<f64>,
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then on node index
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_weight(a: NodeId, b: NodeId, w: f64) -> Result<()> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        Err(Error::BadEdgeWeight { edge: format!("{a}-{b}"), weight: w })
    }
}

impl GridNetwork {
    pub fn build(q: usize, weights: &WeightSpec) -> Result<Self> {
        if q < 2 {
            return Err(Error::GridTooSmall(q));
        }
        let default = match weights {
            WeightSpec::Uniform(w) => *w,
            WeightSpec::PerEdge { default, .. } => *default,
        };
        check_weight(NodeId::new(0, 0), NodeId::new(0, 0), default)?;
        let mut net =
            Self { q, horizontal: vec![default; q * (q - 1)], vertical: vec![default; (q - 1) * q], dist: Vec::new() };
        if let WeightSpec::PerEdge { edges, .. } = weights {
            for &(a, b, w) in edges {
                check_weight(a, b, w)?;
                let slot = net.edge_slot(a, b).ok_or_else(|| Error::NotAnEdge(format!("{a}-{b}")))?;
                *slot = w;
            }
        }
        net.dist = net.all_pairs();
        Ok(net)
    }

    pub fn uniform(q: usize, weight: f64) -> Result<Self> {
        Self::build(q, &WeightSpec::Uniform(weight))
    }

    fn edge_slot(&mut self, a: NodeId, b: NodeId) -> Option<&mut f64> {
        if !self.contains(a) || !self.contains(b) {
            return None;
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let q = self.q;
        if a.row == b.row && a.col + 1 == b.col {
            Some(&mut self.horizontal[a.row * (q - 1) + a.col])
        } else if a.col == b.col && a.row + 1 == b.row {
            Some(&mut self.vertical[a.row * q + a.col])
        } else {
            None
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn node_count(&self) -> usize {
        self.q * self.q
    }

    pub fn edge_count(&self) -> usize {
        self.horizontal.len() + self.vertical.len()
    }

    pub fn contains(&self, n: NodeId) -> bool {
        n.row < self.q && n.col < self.q
    }

    pub fn index(&self, n: NodeId) -> usize {
        debug_assert!(self.contains(n), "node {n} outside {0}x{0} grid", self.q);
        n.row * self.q + n.col
    }

    pub fn node(&self, index: usize) -> NodeId {
        NodeId::new(index / self.q, index % self.q)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).map(move |i| self.node(i))
    }

    /// Weight of the edge between two adjacent nodes.
    pub fn edge_weight(&self, a: NodeId, b: NodeId) -> Option<f64> {
        if !self.contains(a) || !self.contains(b) {
            return None;
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a.row == b.row && a.col + 1 == b.col {
            Some(self.horizontal[a.row * (self.q - 1) + a.col])
        } else if a.col == b.col && a.row + 1 == b.row {
            Some(self.vertical[a.row * self.q + a.col])
        } else {
            None
        }
    }

    /// Neighbors in the fixed expansion order: up, down, left, right.
    pub fn neighbors(&self, n: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let up = (n.row > 0).then(|| NodeId::new(n.row - 1, n.col));
        let down = (n.row + 1 < self.q).then(|| NodeId::new(n.row + 1, n.col));
        let left = (n.col > 0).then(|| NodeId::new(n.row, n.col - 1));
        let right = (n.col + 1 < self.q).then(|| NodeId::new(n.row, n.col + 1));
        [up, down, left, right].into_iter().flatten().map(move |m| (m, self.edge_weight(n, m).expect("adjacent")))
    }

    fn all_pairs(&self) -> Vec<f64> {
        let n = self.node_count();
        let mut table = vec![f64::INFINITY; n * n];
        let mut heap = BinaryHeap::new();
        for src in 0..n {
            let row = &mut table[src * n..(src + 1) * n];
            row[src] = 0.0;
            heap.push(HeapEntry { dist: 0.0, node: src });
            while let Some(HeapEntry { dist, node }) = heap.pop() {
                if dist > row[node] {
                    continue;
                }
                for (m, w) in self.neighbors(self.node(node)) {
                    let mi = self.index(m);
                    let nd = dist + w;
                    if nd < row[mi] {
                        row[mi] = nd;
                        heap.push(HeapEntry { dist: nd, node: mi });
                    }
                }
            }
        }
        // Force exact symmetry; float sums along mirrored paths can differ in the last ulp.
        for a in 0..n {
            for b in (a + 1)..n {
                let d = table[a * n + b].min(table[b * n + a]);
                table[a * n + b] = d;
                table[b * n + a] = d;
            }
        }
        table
    }

    /// Shortest-path length between two nodes.
    #[inline]
    pub fn shortest_len(&self, a: NodeId, b: NodeId) -> f64 {
        assert!(self.contains(a) && self.contains(b), "node outside {0}x{0} grid", self.q);
        self.dist[self.index(a) * self.node_count() + self.index(b)]
    }

    /// Distance by flat node index; no bounds check beyond the slice's own.
    #[inline]
    pub fn dist_by_index(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.node_count() + b]
    }

    /// Shortest path as a node sequence. From each node the walk takes the
    /// first neighbor (up, down, left, right) that lies on a shortest path,
    /// so ties resolve toward changing the row before the column.
    pub fn shortest_path(&self, a: NodeId, b: NodeId) -> Vec<NodeId> {
        let total = self.shortest_len(a, b);
        let tol = 1e-9 * total.max(1.0);
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            let remaining = self.shortest_len(cur, b);
            let next = self
                .neighbors(cur)
                .find(|&(m, w)| (w + self.shortest_len(m, b) - remaining).abs() <= tol)
                .map(|(m, _)| m)
                .expect("distance table admits a next hop");
            path.push(next);
            cur = next;
        }
        path
    }

    /// Sum of edge weights along a node sequence, `None` if two consecutive
    /// nodes are not adjacent.
    pub fn path_weight(&self, path: &[NodeId]) -> Option<f64> {
        path.windows(2).map(|w| self.edge_weight(w[0], w[1])).sum::<Option<f64>>()
    }
}
