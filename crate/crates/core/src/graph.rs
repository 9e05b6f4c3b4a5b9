//! Directed communication graphs, strongly connected components and the
//! in-component based classification of satellites.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SwarmError};
use crate::geometry::{knn_all, PointSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub target: usize,
    pub length: f64,
}

/// Adjacency lists; each vertex's out-edges keep the order they were given
/// in (ascending length for k-NN graphs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedGraph {
    out_edges: Vec<Vec<Edge>>,
}

impl DirectedGraph {
    pub fn new(out_edges: Vec<Vec<Edge>>) -> Result<Self> {
        let n = out_edges.len();
        for (v, edges) in out_edges.iter().enumerate() {
            let mut seen: Vec<usize> = Vec::with_capacity(edges.len());
            for e in edges {
                if e.target >= n {
                    return Err(SwarmError::invalid(format!(
                        "edge {v} -> {} points outside the graph",
                        e.target
                    )));
                }
                if e.target == v {
                    return Err(SwarmError::invalid(format!("self-loop at vertex {v}")));
                }
                if seen.contains(&e.target) {
                    return Err(SwarmError::invalid(format!(
                        "duplicate edge {v} -> {}",
                        e.target
                    )));
                }
                seen.push(e.target);
            }
        }
        Ok(DirectedGraph { out_edges })
    }

    /// Unit-length edges from plain adjacency lists.
    pub fn from_adjacency(adj: &[Vec<usize>]) -> Result<Self> {
        Self::new(
            adj.iter()
                .map(|ts| {
                    ts.iter()
                        .map(|&target| Edge {
                            target,
                            length: 1.0,
                        })
                        .collect()
                })
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.out_edges.len()
    }

    pub fn out_edges(&self, v: usize) -> &[Edge] {
        &self.out_edges[v]
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn successors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_edges[v].iter().map(|e| e.target)
    }

    /// (source, target, length) triples in source order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.out_edges
            .iter()
            .enumerate()
            .flat_map(|(s, es)| es.iter().map(move |e| (s, e.target, e.length)))
    }

    pub(crate) fn reversed_adjacency(&self) -> Vec<Vec<usize>> {
        let mut rev = vec![Vec::new(); self.n()];
        for (s, t, _) in self.edges() {
            rev[t].push(s);
        }
        rev
    }
}

pub fn build_knn_graph(points: &PointSet, k: usize) -> Result<DirectedGraph> {
    let lists = knn_all(points, k)?;
    Ok(DirectedGraph {
        out_edges: lists
            .into_iter()
            .map(|nl| {
                nl.neighbours
                    .into_iter()
                    .map(|nb| Edge {
                        target: nb.index,
                        length: nb.distance,
                    })
                    .collect()
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SccDecomposition {
    pub component_id: Vec<usize>,
    pub component_sizes: Vec<usize>,
    pub lscc_id: usize,
}

impl SccDecomposition {
    pub fn component_count(&self) -> usize {
        self.component_sizes.len()
    }

    pub fn lscc_size(&self) -> usize {
        self.component_sizes.get(self.lscc_id).copied().unwrap_or(0)
    }

    /// Vertices of the largest component, ascending.
    pub fn lscc_members(&self) -> Vec<usize> {
        self.component_id
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == self.lscc_id)
            .map(|(v, _)| v)
            .collect()
    }
}

/// Tarjan's algorithm with an explicit stack. Components are labelled in the
/// order Tarjan completes them, which is a reverse topological order of the
/// condensation: every edge between components goes from a higher label to a
/// lower one.
pub fn scc(graph: &DirectedGraph) -> SccDecomposition {
    const UNSEEN: usize = usize::MAX;
    let n = graph.n();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut component_id = vec![UNSEEN; n];
    let mut component_sizes: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    // (vertex, position in its out-edge list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&(v, pos)) = call.last() {
            let edges = graph.out_edges(v);
            if pos < edges.len() {
                let w = edges[pos].target;
                if let Some(top) = call.last_mut() {
                    top.1 += 1;
                }
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let label = component_sizes.len();
                let mut size = 0;
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    component_id[w] = label;
                    size += 1;
                    if w == v {
                        break;
                    }
                }
                component_sizes.push(size);
            }
        }
    }

    // first maximum wins, i.e. the smallest label among equal sizes
    let lscc_id = component_sizes
        .iter()
        .enumerate()
        .fold((0, 0), |best, (c, &s)| if s > best.1 { (c, s) } else { best })
        .0;
    SccDecomposition {
        component_id,
        component_sizes,
        lscc_id,
    }
}

struct BitMatrix {
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    fn new(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        BitMatrix {
            words,
            data: vec![0; rows * words],
        }
    }

    fn set(&mut self, row: usize, col: usize) {
        self.data[row * self.words + col / 64] |= 1 << (col % 64);
    }

    fn or_row_into(&mut self, src: usize, dst: usize) {
        let w = self.words;
        for i in 0..w {
            let bits = self.data[src * w + i];
            self.data[dst * w + i] |= bits;
        }
    }

    fn row_ones(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        self.data[row * self.words..(row + 1) * self.words]
            .iter()
            .enumerate()
            .flat_map(|(wi, &word)| {
                let mut bits = word;
                std::iter::from_fn(move || {
                    if bits == 0 {
                        return None;
                    }
                    let tz = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * 64 + tz)
                })
            })
    }
}

/// For each vertex, the number of vertices with a directed path to it
/// (itself included). Computed on the condensation: each component collects
/// the set of components that reach it, in topological order.
pub fn in_component_sizes(graph: &DirectedGraph) -> Vec<usize> {
    let dec = scc(graph);
    in_component_sizes_with(graph, &dec)
}

pub(crate) fn in_component_sizes_with(graph: &DirectedGraph, dec: &SccDecomposition) -> Vec<usize> {
    let nc = dec.component_count();
    let mut dag: Vec<Vec<usize>> = vec![Vec::new(); nc];
    for (s, t, _) in graph.edges() {
        let (cs, ct) = (dec.component_id[s], dec.component_id[t]);
        if cs != ct {
            dag[cs].push(ct);
        }
    }
    let mut reach = BitMatrix::new(nc, nc);
    // Tarjan labels are reverse topological, so walk them high to low.
    for c in (0..nc).rev() {
        reach.set(c, c);
        dag[c].sort_unstable();
        dag[c].dedup();
        for &d in &dag[c] {
            reach.or_row_into(c, d);
        }
    }
    let comp_in: Vec<usize> = (0..nc)
        .map(|c| reach.row_ones(c).map(|src| dec.component_sizes[src]).sum())
        .collect();
    dec.component_id.iter().map(|&c| comp_in[c]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SatelliteType {
    /// In-component size equals the mode: member of the LSCC.
    Lscc = 1,
    /// Strictly larger in-component: downstream of the LSCC.
    OutComponent = 2,
    Other = 3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmClassification {
    pub in_size: Vec<usize>,
    pub mode_in_size: usize,
    pub types: Vec<SatelliteType>,
    /// Type-1 vertices, ascending.
    pub lscc: Vec<usize>,
    /// Vertices reaching the LSCC, LSCC included, ascending.
    pub in_comp: Vec<usize>,
    /// Vertices reachable from the LSCC, LSCC included, ascending.
    pub out_comp: Vec<usize>,
    pub eta_plus: f64,
    pub eta_minus: f64,
}

impl SwarmClassification {
    pub fn n(&self) -> usize {
        self.in_size.len()
    }

    pub fn is_lscc(&self, v: usize) -> bool {
        self.types[v] == SatelliteType::Lscc
    }
}

/// Most frequent value; among equally frequent values the larger wins.
pub fn mode_with_larger_ties(values: &[usize]) -> Option<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mut best: Option<(usize, usize)> = None; // (count, value)
    for run in sorted.chunk_by(|a, b| a == b) {
        let cand = (run.len(), run[0]);
        // ascending scan, so >= lets later (larger) values take ties
        if best.is_none_or(|b| cand.0 >= b.0) {
            best = Some(cand);
        }
    }
    best.map(|(_, v)| v)
}

fn flood(adj: impl Fn(usize) -> Vec<usize>, seeds: &[usize], n: usize) -> Vec<usize> {
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &s in seeds {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        for w in adj(v) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    (0..n).filter(|&v| seen[v]).collect()
}

pub fn classify(graph: &DirectedGraph) -> Result<SwarmClassification> {
    let n = graph.n();
    if n == 0 {
        return Err(SwarmError::invalid("cannot classify an empty graph"));
    }
    let in_size = in_component_sizes(graph);
    let mode = mode_with_larger_ties(&in_size).expect("nonempty");
    let types: Vec<SatelliteType> = in_size
        .iter()
        .map(|&s| match s.cmp(&mode) {
            std::cmp::Ordering::Equal => SatelliteType::Lscc,
            std::cmp::Ordering::Greater => SatelliteType::OutComponent,
            std::cmp::Ordering::Less => SatelliteType::Other,
        })
        .collect();
    let lscc: Vec<usize> = (0..n).filter(|&v| types[v] == SatelliteType::Lscc).collect();
    let rev = graph.reversed_adjacency();
    let in_comp = flood(|v| rev[v].clone(), &lscc, n);
    let out_comp = flood(|v| graph.successors(v).collect(), &lscc, n);
    Ok(SwarmClassification {
        eta_plus: out_comp.len() as f64 / n as f64,
        eta_minus: in_comp.len() as f64 / n as f64,
        in_size,
        mode_in_size: mode,
        types,
        lscc,
        in_comp,
        out_comp,
    })
}

pub fn lscc_fraction(graph: &DirectedGraph) -> f64 {
    if graph.n() == 0 {
        return 0.0;
    }
    scc(graph).lscc_size() as f64 / graph.n() as f64
}
