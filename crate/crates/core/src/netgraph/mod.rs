//! Simple, unweighted, undirected, connected graphs and their network
//! measures.
//!
//! Six global measures (density, diameter, average path length,
//! transitivity, average clustering, degree assortativity) and five node
//! measures (degree, closeness and betweenness centrality, eigenvector
//! centrality, average neighbour degree) are computed exactly from
//! breadth-first geodesic tables. Edges carry edge betweenness plus the
//! maximum of each node measure over their two endpoints.

mod centrality;
mod global;
mod network;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

pub use centrality::{edge_measures, node_measures, EdgeMeasure, EdgeMeasures, NodeMeasure, NodeMeasures};
pub use global::{global_measures, GlobalMeasures};
pub use network::{
    carrier_networks, read_edge_list, CarrierNetwork, MeasureIndex, NetworkMeasure, RouteMeasures,
    write_edge_measures_csv, write_global_measures_csv, write_node_measures_csv,
};

use crate::error::{Error, Result};

/// What to do when the edge list does not form a single component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ComponentPolicy {
    #[default]
    Strict,
    /// Keep the component with the most nodes (ties: most edges, then the
    /// one holding the smallest label).
    LargestComponent,
}

/// Immutable simple undirected graph. Nodes are indexed in lexicographic
/// label order; neighbour lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    labels: Vec<String>,
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

/// Build a connected simple graph from an edge list. Duplicate and reversed
/// edges collapse to one; self-loops and disconnected input are errors.
pub fn build_graph<I, A, B>(edges: I) -> Result<Graph>
where
    I: IntoIterator<Item = (A, B)>,
    A: Into<String>,
    B: Into<String>,
{
    build_graph_with(edges, ComponentPolicy::Strict)
}

pub fn build_graph_with<I, A, B>(edges: I, policy: ComponentPolicy) -> Result<Graph>
where
    I: IntoIterator<Item = (A, B)>,
    A: Into<String>,
    B: Into<String>,
{
    let mut pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for (a, b) in edges {
        let (a, b) = (a.into(), b.into());
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        pairs.insert(if a < b { (a, b) } else { (b, a) });
    }
    let labels: Vec<String> = pairs
        .iter()
        .flat_map(|(a, b)| [a.clone(), b.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if labels.len() < 2 {
        return Err(Error::TooFewNodes(labels.len()));
    }
    let graph = Graph::from_labelled(labels, &pairs);
    let components = graph.components();
    if components.len() == 1 {
        return Ok(graph);
    }
    match policy {
        ComponentPolicy::Strict => Err(Error::Disconnected {
            components: components.len(),
        }),
        ComponentPolicy::LargestComponent => {
            let edge_count = |c: &Vec<usize>| c.iter().map(|&v| graph.adj[v].len()).sum::<usize>();
            // Components are listed in order of their smallest node index, so
            // `max_by` with a reversed index tie-break keeps the earliest.
            let best = components
                .iter()
                .enumerate()
                .max_by(|(i, a), (j, b)| {
                    (a.len(), edge_count(a))
                        .cmp(&(b.len(), edge_count(b)))
                        .then(j.cmp(i))
                })
                .map(|(_, c)| c)
                .expect("at least two components");
            let keep: BTreeSet<&str> = best.iter().map(|&v| graph.labels[v].as_str()).collect();
            let kept: Vec<(String, String)> = pairs
                .into_iter()
                .filter(|(a, _)| keep.contains(a.as_str()))
                .collect();
            build_graph(kept)
        }
    }
}

impl Graph {
    fn from_labelled(labels: Vec<String>, pairs: &BTreeSet<(String, String)>) -> Graph {
        let index: BTreeMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut adj = vec![Vec::new(); labels.len()];
        let mut edges = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            let (i, j) = (index[a.as_str()], index[b.as_str()]);
            adj[i].push(j);
            adj[j].push(i);
            edges.push((i.min(j), i.max(j)));
        }
        for n in adj.iter_mut() {
            n.sort_unstable();
        }
        edges.sort_unstable();
        Graph { labels, adj, edges }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&(a.min(b), a.max(b))).ok()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut i = 0;
            while i < comp.len() {
                for &w in &self.adj[comp[i]] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// All-pairs geodesic lengths and counts.
    pub fn distances(&self) -> DistanceTable {
        let n = self.node_count();
        let mut dist = vec![u32::MAX; n * n];
        let mut count = vec![0u128; n * n];
        let mut queue = VecDeque::with_capacity(n);
        for s in 0..n {
            let row = s * n;
            dist[row + s] = 0;
            count[row + s] = 1;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                let dv = dist[row + v];
                for &w in &self.adj[v] {
                    if dist[row + w] == u32::MAX {
                        dist[row + w] = dv + 1;
                        queue.push_back(w);
                    }
                    if dist[row + w] == dv + 1 {
                        count[row + w] += count[row + v];
                    }
                }
            }
        }
        DistanceTable { n, dist, count }
    }
}

/// Geodesic lengths `ℓ(a, b)` and geodesic counts `P(a, b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceTable {
    n: usize,
    dist: Vec<u32>,
    count: Vec<u128>,
}

impl DistanceTable {
    pub fn len(&self, a: usize, b: usize) -> u32 {
        self.dist[a * self.n + b]
    }

    pub fn geodesics(&self, a: usize, b: usize) -> u128 {
        self.count[a * self.n + b]
    }

    pub fn node_count(&self) -> usize {
        self.n
    }
}
