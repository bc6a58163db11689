//! Central PRB assignment: an AP interference graph whose APs are expanded
//! into one clique node per requested PRB, colored with DSATUR under a
//! budget of `N` colors. Color `i` is PRB `i`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::deployment::Point;
use crate::error::{ensure_positive, Error, Result};

/// PRBs requested by an AP with fractional load `load`.
pub fn requested_prbs(load: f64) -> usize {
    if load > 0.0 {
        load.ceil() as usize
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InterferenceGraph {
    /// Sorted neighbour list per AP.
    adjacency: Vec<Vec<usize>>,
    /// Expansion size `⌈N_l⌉` per AP.
    demand: Vec<usize>,
    /// First expanded node of each AP; nodes of AP l are contiguous.
    first_node: Vec<usize>,
    node_of: Vec<usize>,
}

impl InterferenceGraph {
    /// APs interfere iff they are at most `2 d_tilde` apart.
    pub fn build(aps: &[Point], d_tilde: f64, loads: &[f64]) -> Result<Self> {
        ensure_positive("d_tilde", d_tilde)?;
        if loads.len() != aps.len() {
            return Err(Error::param("loads", "one load per AP required"));
        }
        let reach = 2.0 * d_tilde;
        let mut edges = Vec::new();
        for i in 0..aps.len() {
            for j in i + 1..aps.len() {
                if aps[i].distance(aps[j]) <= reach {
                    edges.push((i, j));
                }
            }
        }
        Self::with_loads(aps.len(), &edges, loads)
    }

    pub fn with_loads(ap_count: usize, edges: &[(usize, usize)], loads: &[f64]) -> Result<Self> {
        if let Some(bad) = loads.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::param("loads", format!("must be finite and non-negative, got {bad}")));
        }
        let demand: Vec<usize> = loads.iter().map(|&x| requested_prbs(x)).collect();
        Self::from_edges(ap_count, edges, &demand)
    }

    /// Graph from an explicit AP edge list and integer node counts.
    pub fn from_edges(ap_count: usize, edges: &[(usize, usize)], demand: &[usize]) -> Result<Self> {
        if demand.len() != ap_count {
            return Err(Error::param("demand", "one node count per AP required"));
        }
        let mut adjacency = vec![Vec::new(); ap_count];
        for &(a, b) in edges {
            if a >= ap_count || b >= ap_count {
                return Err(Error::param("edges", format!("edge ({a}, {b}) names a missing AP")));
            }
            if a == b {
                return Err(Error::param("edges", format!("self edge on AP {a}")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        let mut first_node = Vec::with_capacity(ap_count);
        let mut node_of = Vec::new();
        for (l, &d) in demand.iter().enumerate() {
            first_node.push(node_of.len());
            node_of.extend(std::iter::repeat_n(l, d));
        }
        Ok(InterferenceGraph {
            adjacency,
            demand: demand.to_vec(),
            first_node,
            node_of,
        })
    }

    pub fn ap_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_of.len()
    }

    pub fn node_of(&self, node: usize) -> usize {
        self.node_of[node]
    }

    /// Expanded nodes of AP `ap`.
    pub fn nodes(&self, ap: usize) -> std::ops::Range<usize> {
        self.first_node[ap]..self.first_node[ap] + self.demand[ap]
    }

    pub fn demand(&self, ap: usize) -> usize {
        self.demand[ap]
    }

    pub fn ap_neighbors(&self, ap: usize) -> &[usize] {
        &self.adjacency[ap]
    }

    pub fn interferes(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// AP edges with `a < b`.
    pub fn ap_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, adj)| adj.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    /// Neighbours of an expanded node: the rest of its clique and every node
    /// of an interfering AP.
    pub fn node_neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let ap = self.node_of[node];
        self.nodes(ap)
            .filter(move |&v| v != node)
            .chain(self.adjacency[ap].iter().flat_map(move |&j| self.nodes(j)))
    }

    pub fn node_degree(&self, node: usize) -> usize {
        let ap = self.node_of[node];
        self.demand[ap] - 1 + self.adjacency[ap].iter().map(|&j| self.demand[j]).sum::<usize>()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.node_count()).map(|v| self.node_degree(v)).max().unwrap_or(0)
    }

    /// Expanded graph in DIMACS edge format, 1-based node ids. Comment lines
    /// record the owning AP of every node.
    pub fn to_dimacs(&self) -> String {
        let mut edges = Vec::new();
        for v in 0..self.node_count() {
            for u in self.node_neighbors(v) {
                if u > v {
                    edges.push((v, u));
                }
            }
        }
        let mut out = String::new();
        writeln!(out, "c expanded AP interference graph, {} APs", self.ap_count()).unwrap();
        for (v, ap) in self.node_of.iter().enumerate() {
            writeln!(out, "c node {} ap {}", v + 1, ap).unwrap();
        }
        writeln!(out, "p edge {} {}", self.node_count(), edges.len()).unwrap();
        for (a, b) in edges {
            writeln!(out, "e {} {}", a + 1, b + 1).unwrap();
        }
        out
    }
}

/// Color per expanded node; `None` when the budget ran out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Coloring {
    pub colors: Vec<Option<usize>>,
}

impl Coloring {
    pub fn colors_used(&self) -> usize {
        let mut seen: Vec<usize> = self.colors.iter().flatten().copied().collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    pub fn uncolored(&self) -> usize {
        self.colors.iter().filter(|c| c.is_none()).count()
    }

    /// No two adjacent nodes share a color.
    pub fn is_proper(&self, graph: &InterferenceGraph) -> bool {
        (0..graph.node_count()).all(|v| match self.colors[v] {
            None => true,
            Some(c) => graph.node_neighbors(v).all(|u| self.colors[u] != Some(c)),
        })
    }
}

struct ColorSet {
    words: Vec<u64>,
    count: usize,
}

impl ColorSet {
    fn new(colors: usize) -> Self {
        ColorSet {
            words: vec![0; colors.div_ceil(64)],
            count: 0,
        }
    }

    fn insert(&mut self, c: usize) {
        let (w, b) = (c / 64, 1u64 << (c % 64));
        if self.words[w] & b == 0 {
            self.words[w] |= b;
            self.count += 1;
        }
    }

    fn smallest_free(&self, limit: usize) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != u64::MAX)
            .map(|(i, w)| i * 64 + w.trailing_ones() as usize)
            .filter(|&c| c < limit)
    }
}

/// Brélaz DSATUR coloring with at most `max_colors` colors.
///
/// The next node is the one with the most distinct neighbour colors, then
/// the most not-yet-processed neighbours, then the lowest index. It takes
/// the smallest color free in its neighbourhood; when none is left it stays
/// uncolored and the sweep moves on.
pub fn dsatur_color(graph: &InterferenceGraph, max_colors: usize) -> Result<Coloring> {
    if max_colors == 0 {
        return Err(Error::param("max_colors", "need at least one color"));
    }
    let n = graph.node_count();
    let mut colors = vec![None; n];
    let mut done = vec![false; n];
    let mut sat: Vec<ColorSet> = (0..n).map(|_| ColorSet::new(max_colors)).collect();
    let mut open_degree: Vec<usize> = (0..n).map(|v| graph.node_degree(v)).collect();
    for _ in 0..n {
        let mut pick = usize::MAX;
        for v in 0..n {
            if done[v] {
                continue;
            }
            if pick == usize::MAX
                || (sat[v].count, open_degree[v]) > (sat[pick].count, open_degree[pick])
            {
                pick = v;
            }
        }
        done[pick] = true;
        let color = sat[pick].smallest_free(max_colors);
        colors[pick] = color;
        for u in graph.node_neighbors(pick) {
            if !done[u] {
                open_degree[u] -= 1;
                if let Some(c) = color {
                    sat[u].insert(c);
                }
            }
        }
    }
    Ok(Coloring { colors })
}

/// PRB sets granted to every AP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChannelAllocation {
    /// Sorted PRB indices per AP.
    pub prbs: Vec<Vec<usize>>,
    /// PRBs each AP asked for.
    pub requested: Vec<usize>,
}

impl ChannelAllocation {
    pub fn ap_count(&self) -> usize {
        self.prbs.len()
    }

    pub fn granted(&self, ap: usize) -> usize {
        self.prbs[ap].len()
    }

    pub fn satisfied(&self, ap: usize) -> bool {
        self.granted(ap) >= self.requested[ap]
    }

    /// Whether AP `ap` transmits on `prb`.
    pub fn uses(&self, ap: usize, prb: usize) -> bool {
        self.prbs[ap].binary_search(&prb).is_ok()
    }

    /// Interfering APs never share a PRB.
    pub fn is_orthogonal(&self, graph: &InterferenceGraph) -> bool {
        graph
            .ap_edges()
            .all(|(a, b)| self.prbs[a].iter().all(|p| !self.uses(b, *p)))
    }
}

/// AP `l` gets the colors of its colored nodes.
pub fn allocation_from_coloring(coloring: &Coloring, graph: &InterferenceGraph) -> ChannelAllocation {
    let prbs = (0..graph.ap_count())
        .map(|l| {
            let mut set: Vec<usize> = graph.nodes(l).filter_map(|v| coloring.colors[v]).collect();
            set.sort_unstable();
            set.dedup();
            set
        })
        .collect();
    ChannelAllocation {
        prbs,
        requested: (0..graph.ap_count()).map(|l| graph.demand(l)).collect(),
    }
}

/// Flag every AP granted fewer than `⌈N_l⌉` PRBs.
pub fn ap_outage_from_allocation(loads: &[f64], alloc: &ChannelAllocation) -> Vec<bool> {
    loads
        .iter()
        .zip(&alloc.prbs)
        .map(|(&load, prbs)| prbs.len() < requested_prbs(load))
        .collect()
}
